#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "scomp/errors.hpp"

// SCMP tensor container. Layout:
//
//   bytes 0..3   magic "SCMP"
//   byte  4      format version
//   bytes 5..8   u32 LE header length
//   header       UTF-8 key=value lines: meta entries, then one
//                "tensor.<i>=<name>;<d0>x<d1>...;<offset>;<count>" per tensor
//   payload      raw little-endian float32 tensor data, in directory order
//   trailer      u32 LE CRC32 of the payload
//
// Used for checkpoints (kind=checkpoint) and tensor-bin datasets (kind=dataset).

namespace scomp {

inline constexpr uint8_t kContainerVersion = 1;

struct TensorEntry {
    std::string name;
    std::vector<int64_t> shape;
    std::vector<float> data;
};

struct Container {
    uint8_t version = kContainerVersion;
    std::vector<std::pair<std::string, std::string>> meta;  // ordered
    std::vector<TensorEntry> tensors;

    const std::string* find_meta(const std::string& key) const {
        for (const auto& [k, v] : meta)
            if (k == key) return &v;
        return nullptr;
    }
    std::string meta_or_throw(const std::string& key) const {
        const std::string* v = find_meta(key);
        if (!v) throw DataError("container: missing meta key '" + key + "'");
        return *v;
    }
    const TensorEntry* find_tensor(const std::string& name) const {
        for (const auto& t : tensors)
            if (t.name == name) return &t;
        return nullptr;
    }
};

namespace detail {

inline uint32_t crc32(std::span<const unsigned char> bytes) {
    static const auto table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    uint32_t crc = 0xffffffffu;
    for (unsigned char b : bytes) crc = table[(crc ^ b) & 0xffu] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

inline void put_u32le(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xffu));
}

inline uint32_t get_u32le(const unsigned char* p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

}  // namespace detail

// Serializes and writes atomically (temp file + rename).
inline void write_container(const std::filesystem::path& path, const Container& c) {
    std::string header;
    for (const auto& [k, v] : c.meta) {
        if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos)
            throw ConfigError("container: bad meta key '" + k + "'");
        if (v.find('\n') != std::string::npos)
            throw ConfigError("container: meta value may not contain newlines");
        header += k;
        header += '=';
        header += v;
        header += '\n';
    }
    std::string payload;
    int64_t offset = 0;
    for (size_t i = 0; i < c.tensors.size(); ++i) {
        const TensorEntry& t = c.tensors[i];
        if (t.name.find(';') != std::string::npos || t.name.find('\n') != std::string::npos)
            throw ConfigError("container: bad tensor name '" + t.name + "'");
        int64_t count = 1;
        std::string shape_str;
        for (size_t j = 0; j < t.shape.size(); ++j) {
            count *= t.shape[j];
            if (j) shape_str += 'x';
            shape_str += std::to_string(t.shape[j]);
        }
        if (t.shape.empty()) shape_str = "1";
        if (count != int64_t(t.data.size()))
            throw ConfigError("container: tensor '" + t.name + "' shape/count mismatch");
        header += "tensor." + std::to_string(i) + "=" + t.name + ";" + shape_str + ";" +
                  std::to_string(offset) + ";" + std::to_string(count) + "\n";
        const size_t bytes = t.data.size() * sizeof(float);
        const size_t pos = payload.size();
        payload.resize(pos + bytes);
        std::memcpy(payload.data() + pos, t.data.data(), bytes);
        offset += int64_t(bytes);
    }
    std::string blob = "SCMP";
    blob.push_back(char(c.version));
    detail::put_u32le(blob, uint32_t(header.size()));
    blob += header;
    blob += payload;
    detail::put_u32le(blob, detail::crc32(
        std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(payload.data()), payload.size())));

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("container: cannot open '" + tmp.string() + "' for writing");
        f.write(blob.data(), std::streamsize(blob.size()));
        if (!f) throw DataError("container: write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline Container read_container(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("container: cannot open '" + path.string() + "'");
    std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(blob.data());
    if (blob.size() < 9 || std::memcmp(blob.data(), "SCMP", 4) != 0)
        throw DataError("container: bad magic in '" + path.string() + "'");
    Container c;
    c.version = uint8_t(blob[4]);
    if (c.version != kContainerVersion)
        throw DataError("container: unsupported version " + std::to_string(int(c.version)) + " in '" +
                        path.string() + "'");
    const uint32_t header_len = detail::get_u32le(p + 5);
    if (blob.size() < 9 + size_t(header_len) + 4)
        throw DataError("container: truncated file '" + path.string() + "'");
    const std::string header = blob.substr(9, header_len);
    const size_t payload_begin = 9 + header_len;
    const size_t payload_len = blob.size() - payload_begin - 4;
    const uint32_t stored_crc = detail::get_u32le(p + blob.size() - 4);
    const uint32_t actual_crc = detail::crc32(std::span<const unsigned char>(p + payload_begin, payload_len));
    if (stored_crc != actual_crc)
        throw DataError("container: payload CRC mismatch in '" + path.string() + "'");

    std::istringstream hs(header);
    std::string line;
    struct DirEntry {
        std::string name;
        std::vector<int64_t> shape;
        int64_t offset, count;
    };
    std::vector<DirEntry> dir;
    while (std::getline(hs, line)) {
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) throw DataError("container: malformed header line '" + line + "'");
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        if (key.rfind("tensor.", 0) == 0) {
            DirEntry e;
            std::istringstream vs(value);
            std::string name, shape_str, off_str, cnt_str;
            if (!std::getline(vs, name, ';') || !std::getline(vs, shape_str, ';') ||
                !std::getline(vs, off_str, ';') || !std::getline(vs, cnt_str))
                throw DataError("container: malformed tensor entry '" + value + "'");
            e.name = name;
            std::istringstream ss(shape_str);
            std::string dim_str;
            while (std::getline(ss, dim_str, 'x')) e.shape.push_back(std::stoll(dim_str));
            e.offset = std::stoll(off_str);
            e.count = std::stoll(cnt_str);
            dir.push_back(std::move(e));
        } else {
            c.meta.emplace_back(std::move(key), std::move(value));
        }
    }
    for (auto& e : dir) {
        if (e.offset < 0 || e.count < 0 ||
            size_t(e.offset) + size_t(e.count) * sizeof(float) > payload_len)
            throw DataError("container: tensor '" + e.name + "' exceeds payload in '" + path.string() + "'");
        TensorEntry t;
        t.name = std::move(e.name);
        t.shape = std::move(e.shape);
        t.data.resize(size_t(e.count));
        std::memcpy(t.data.data(), blob.data() + payload_begin + e.offset, size_t(e.count) * sizeof(float));
        c.tensors.push_back(std::move(t));
    }
    return c;
}

}  // namespace scomp
