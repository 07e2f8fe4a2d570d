#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scomp/errors.hpp"

// Dense helpers for the small matrices this project needs (d <= 16 or so).
// Matrices are row-major flat arrays.

namespace scomp::linalg {

template <class Real>
void matvec(std::span<const Real> a, std::span<const Real> x, std::span<Real> y) {
    const size_t m = y.size(), n = x.size();
    if (a.size() != m * n) throw ConfigError("matvec: shape mismatch");
    for (size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        const Real* row = a.data() + i * n;
        for (size_t j = 0; j < n; ++j) acc += double(row[j]) * double(x[j]);
        y[i] = Real(acc);
    }
}

// In-place lower Cholesky of a symmetric positive-definite matrix.
template <class Real>
std::vector<Real> cholesky(std::span<const Real> a, size_t d, const std::string& what = "matrix") {
    if (a.size() != d * d) throw ConfigError("cholesky: shape mismatch");
    std::vector<Real> l(d * d, Real(0));
    for (size_t i = 0; i < d; ++i) {
        for (size_t j = 0; j <= i; ++j) {
            double acc = double(a[i * d + j]);
            for (size_t k = 0; k < j; ++k) acc -= double(l[i * d + k]) * double(l[j * d + k]);
            if (i == j) {
                if (acc <= 0.0) throw ConfigError(what + ": not positive definite");
                l[i * d + i] = Real(std::sqrt(acc));
            } else {
                l[i * d + j] = Real(acc / double(l[j * d + j]));
            }
        }
    }
    return l;
}

// Solves (L L^T) x = b given the lower Cholesky factor.
template <class Real>
std::vector<Real> chol_solve(std::span<const Real> l, size_t d, std::span<const Real> b) {
    std::vector<Real> y(d);
    for (size_t i = 0; i < d; ++i) {
        double acc = double(b[i]);
        for (size_t k = 0; k < i; ++k) acc -= double(l[i * d + k]) * double(y[k]);
        y[i] = Real(acc / double(l[i * d + i]));
    }
    std::vector<Real> x(d);
    for (size_t ii = d; ii-- > 0;) {
        double acc = double(y[ii]);
        for (size_t k = ii + 1; k < d; ++k) acc -= double(l[k * d + ii]) * double(x[k]);
        x[ii] = Real(acc / double(l[ii * d + ii]));
    }
    return x;
}

template <class Real>
Real chol_logdet(std::span<const Real> l, size_t d) {
    double acc = 0.0;
    for (size_t i = 0; i < d; ++i) acc += std::log(double(l[i * d + i]));
    return Real(2.0 * acc);
}

template <class Real>
bool is_symmetric(std::span<const Real> a, size_t d, Real tol) {
    for (size_t i = 0; i < d; ++i)
        for (size_t j = i + 1; j < d; ++j)
            if (std::abs(a[i * d + j] - a[j * d + i]) > tol) return false;
    return true;
}

}  // namespace scomp::linalg
