#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "scomp/container.hpp"
#include "scomp/errors.hpp"

namespace scomp {

enum class DatasetKind { point_cloud, image };

enum class DatasetFormat { csv, tensor_bin, pgm_dir };

inline DatasetFormat parse_dataset_format(const std::string& s) {
    if (s == "csv") return DatasetFormat::csv;
    if (s == "tensor-bin") return DatasetFormat::tensor_bin;
    if (s == "pgm-dir") return DatasetFormat::pgm_dir;
    throw ConfigError("unknown dataset format '" + s + "' (csv|tensor-bin|pgm-dir)");
}

// N points of dimension d, row-major. Image data is flattened row-major and
// normalized to [-1, 1] at load (v / 127.5 - 1).
struct Dataset {
    std::vector<double> points;
    int64_t n = 0;
    int64_t d = 0;
    DatasetKind kind = DatasetKind::point_cloud;
    int image_height = 0;
    int image_width = 0;
    std::string normalization = "none";

    std::span<const double> row(int64_t i) const { return {points.data() + i * d, size_t(d)}; }

    void validate() const {
        if (n < 1 || d < 1) throw DataError("dataset: need at least one point of dimension >= 1");
        if (int64_t(points.size()) != n * d) throw DataError("dataset: storage size mismatch");
        for (double v : points)
            if (!std::isfinite(v)) throw DataError("dataset: non-finite value");
        if (kind == DatasetKind::image && int64_t(image_height) * image_width != d)
            throw DataError("dataset: image shape does not match dimension");
    }
};

namespace detail {

inline Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("csv: cannot open '" + path.string() + "'");
    Dataset ds;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                size_t used = 0;
                double v = std::stod(cell, &used);
                while (used < cell.size() && (cell[used] == ' ' || cell[used] == '\t' || cell[used] == '\r')) ++used;
                if (used != cell.size()) throw std::invalid_argument("trailing junk");
                row.push_back(v);
            } catch (const std::exception&) {
                throw DataError("csv: " + path.string() + ":" + std::to_string(lineno) +
                                ": cannot parse value '" + cell + "'");
            }
        }
        if (row.empty())
            throw DataError("csv: " + path.string() + ":" + std::to_string(lineno) + ": empty row");
        if (ds.d == 0) ds.d = int64_t(row.size());
        if (int64_t(row.size()) != ds.d)
            throw DataError("csv: " + path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(ds.d) + " columns, got " + std::to_string(row.size()));
        ds.points.insert(ds.points.end(), row.begin(), row.end());
        ++ds.n;
    }
    if (ds.n == 0) throw DataError("csv: '" + path.string() + "' contains no data rows");
    ds.validate();
    return ds;
}

struct PgmImage {
    int width = 0, height = 0;
    std::vector<unsigned char> pixels;
};

inline PgmImage read_pgm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("pgm: cannot open '" + path.string() + "'");
    auto next_token = [&]() -> std::string {
        std::string tok;
        int c;
        while ((c = f.get()) != EOF) {
            if (c == '#') {
                while ((c = f.get()) != EOF && c != '\n') {
                }
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(char(c));
        }
        return tok;
    };
    if (next_token() != "P5") throw DataError("pgm: '" + path.string() + "' is not binary PGM (P5)");
    PgmImage img;
    try {
        img.width = std::stoi(next_token());
        img.height = std::stoi(next_token());
        const int maxval = std::stoi(next_token());
        if (maxval != 255) throw DataError("pgm: '" + path.string() + "' must have maxval 255");
    } catch (const DataError&) {
        throw;
    } catch (const std::exception&) {
        throw DataError("pgm: malformed header in '" + path.string() + "'");
    }
    if (img.width < 1 || img.height < 1) throw DataError("pgm: bad dimensions in '" + path.string() + "'");
    img.pixels.resize(size_t(img.width) * size_t(img.height));
    f.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
    if (size_t(f.gcount()) != img.pixels.size())
        throw DataError("pgm: truncated pixel data in '" + path.string() + "'");
    return img;
}

inline Dataset load_pgm_dir(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    if (!std::filesystem::is_directory(dir)) throw DataError("pgm-dir: '" + dir.string() + "' is not a directory");
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("pgm-dir: no .pgm files in '" + dir.string() + "'");
    Dataset ds;
    ds.kind = DatasetKind::image;
    ds.normalization = "v/127.5-1";
    for (const auto& p : files) {
        PgmImage img = read_pgm(p);
        if (img.width > 16 || img.height > 16)
            throw DataError("pgm-dir: '" + p.string() + "' is " + std::to_string(img.width) + "x" +
                            std::to_string(img.height) + "; images are capped at 16x16");
        if (ds.n == 0) {
            ds.image_width = img.width;
            ds.image_height = img.height;
            ds.d = int64_t(img.width) * img.height;
        } else if (img.width != ds.image_width || img.height != ds.image_height) {
            throw DataError("pgm-dir: '" + p.string() + "' has shape " + std::to_string(img.width) + "x" +
                            std::to_string(img.height) + ", expected " + std::to_string(ds.image_width) +
                            "x" + std::to_string(ds.image_height));
        }
        for (unsigned char v : img.pixels) ds.points.push_back(double(v) / 127.5 - 1.0);
        ++ds.n;
    }
    ds.validate();
    return ds;
}

inline Dataset load_tensor_bin(const std::filesystem::path& path) {
    Container c = read_container(path);
    const std::string* kind = c.find_meta("kind");
    if (!kind || *kind != "dataset")
        throw DataError("tensor-bin: '" + path.string() + "' is not a dataset container");
    const TensorEntry* t = c.find_tensor("points");
    if (!t || t->shape.size() != 2)
        throw DataError("tensor-bin: '" + path.string() + "' lacks a 2-d 'points' tensor");
    Dataset ds;
    ds.n = t->shape[0];
    ds.d = t->shape[1];
    ds.points.assign(t->data.begin(), t->data.end());
    if (const std::string* k = c.find_meta("data.kind"); k && *k == "image") {
        ds.kind = DatasetKind::image;
        ds.image_height = std::stoi(c.meta_or_throw("data.image_height"));
        ds.image_width = std::stoi(c.meta_or_throw("data.image_width"));
    }
    if (const std::string* nrm = c.find_meta("data.normalization")) ds.normalization = *nrm;
    ds.validate();
    return ds;
}

}  // namespace detail

inline Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    switch (format) {
        case DatasetFormat::csv: return detail::load_csv(path);
        case DatasetFormat::tensor_bin: return detail::load_tensor_bin(path);
        case DatasetFormat::pgm_dir: return detail::load_pgm_dir(path);
    }
    throw ConfigError("load_dataset: bad format");
}

inline void save_dataset_csv(const std::filesystem::path& path, const Dataset& ds) {
    std::string out;
    char buf[64];
    for (int64_t i = 0; i < ds.n; ++i) {
        for (int64_t j = 0; j < ds.d; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.points[i * ds.d + j]);
            if (j) out += ',';
            out += buf;
        }
        out += '\n';
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("csv: cannot open '" + tmp.string() + "' for writing");
        f.write(out.data(), std::streamsize(out.size()));
    }
    std::filesystem::rename(tmp, path);
}

inline void save_dataset_tensor_bin(const std::filesystem::path& path, const Dataset& ds) {
    Container c;
    c.meta.emplace_back("kind", "dataset");
    c.meta.emplace_back("data.kind", ds.kind == DatasetKind::image ? "image" : "point-cloud");
    if (ds.kind == DatasetKind::image) {
        c.meta.emplace_back("data.image_height", std::to_string(ds.image_height));
        c.meta.emplace_back("data.image_width", std::to_string(ds.image_width));
    }
    c.meta.emplace_back("data.normalization", ds.normalization);
    TensorEntry t;
    t.name = "points";
    t.shape = {ds.n, ds.d};
    t.data.assign(ds.points.begin(), ds.points.end());
    c.tensors.push_back(std::move(t));
    write_container(path, c);
}

// Writes a tiled grid of [-1,1] images as one binary PGM, one-pixel black
// separators between tiles.
inline void write_pgm_grid(const std::filesystem::path& path, const std::vector<std::vector<double>>& images,
                           int height, int width) {
    if (images.empty()) throw DataError("pgm grid: no images");
    const int n = int(images.size());
    const int cols = std::max(1, int(std::ceil(std::sqrt(double(n)))));
    const int rows = (n + cols - 1) / cols;
    const int gw = cols * width + (cols - 1);
    const int gh = rows * height + (rows - 1);
    std::vector<unsigned char> canvas(size_t(gw) * gh, 0);
    for (int i = 0; i < n; ++i) {
        if (int(images[i].size()) != height * width) throw DataError("pgm grid: image size mismatch");
        const int r0 = (i / cols) * (height + 1);
        const int c0 = (i % cols) * (width + 1);
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c) {
                double v = (images[i][size_t(r) * width + c] + 1.0) * 127.5;
                v = std::min(255.0, std::max(0.0, std::round(v)));
                canvas[size_t(r0 + r) * gw + (c0 + c)] = (unsigned char)(v);
            }
    }
    std::string out = "P5\n" + std::to_string(gw) + " " + std::to_string(gh) + "\n255\n";
    out.append(reinterpret_cast<const char*>(canvas.data()), canvas.size());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("pgm grid: cannot open '" + tmp.string() + "' for writing");
        f.write(out.data(), std::streamsize(out.size()));
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace scomp
