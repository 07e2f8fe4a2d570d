#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

#include "scomp/errors.hpp"

namespace scomp {

namespace detail {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t rotl64(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// xoshiro256++ seeded via splitmix64. A stream id is mixed into the seed so
// substream k of a master seed is Rng(seed, k); parallel work derives one
// substream per unit of work and stays reproducible for any worker count.
//
// Gaussian draws use Box-Muller without a cached spare, so the full state is
// the four words below and serializes exactly.
class Rng {
public:
    explicit Rng(uint64_t seed, uint64_t stream = 0) {
        uint64_t sm = seed ^ (0x6a09e667f3bcc909ULL * (stream + 1));
        for (auto& w : s_) w = detail::splitmix64(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl64(s_[3], 45);
        return result;
    }

    // [0, 1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // (0, 1]
    double uniform_pos() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // n in [0, bound)
    uint64_t uniform_index(uint64_t bound) {
        // multiply-shift; bias is negligible for bound << 2^64
        return uint64_t((static_cast<__uint128_t>(next_u64()) * bound) >> 64);
    }

    double normal() {
        double u1 = uniform_pos();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::array<uint64_t, 4> state() const { return {s_[0], s_[1], s_[2], s_[3]}; }

    void set_state(const std::array<uint64_t, 4>& st) {
        for (int i = 0; i < 4; ++i) s_[i] = st[i];
    }

    std::string state_hex() const {
        char buf[65];
        std::snprintf(buf, sizeof(buf), "%016llx%016llx%016llx%016llx",
                      (unsigned long long)s_[0], (unsigned long long)s_[1],
                      (unsigned long long)s_[2], (unsigned long long)s_[3]);
        return buf;
    }

    static Rng from_state_hex(const std::string& hex) {
        if (hex.size() != 64) throw DataError("rng state: expected 64 hex chars, got " + std::to_string(hex.size()));
        Rng r(0);
        for (int i = 0; i < 4; ++i) {
            uint64_t w = 0;
            for (int j = 0; j < 16; ++j) {
                char c = hex[i * 16 + j];
                int v = (c >= '0' && c <= '9') ? c - '0'
                      : (c >= 'a' && c <= 'f') ? c - 'a' + 10
                      : (c >= 'A' && c <= 'F') ? c - 'A' + 10
                                               : -1;
                if (v < 0) throw DataError("rng state: bad hex char");
                w = (w << 4) | uint64_t(v);
            }
            r.s_[i] = w;
        }
        return r;
    }

private:
    uint64_t s_[4];
};

}  // namespace scomp
