#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "scomp/errors.hpp"

// Flat structured-text files: one "key=value" per line, '#' comments, dotted
// keys. Used for run configs and the manifests written next to every sample
// artifact.

namespace scomp {

class KvFile {
public:
    void set(const std::string& key, const std::string& value) {
        for (auto& [k, v] : entries_)
            if (k == key) {
                v = value;
                return;
            }
        entries_.emplace_back(key, value);
    }

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return &v;
        return nullptr;
    }

    std::string get(const std::string& key) const {
        const std::string* v = find(key);
        if (!v) throw ConfigError("missing key '" + key + "'");
        return *v;
    }

    std::string get_or(const std::string& key, const std::string& fallback) const {
        const std::string* v = find(key);
        return v ? *v : fallback;
    }

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    std::string serialize() const {
        std::string out;
        for (const auto& [k, v] : entries_) {
            out += k;
            out += '=';
            out += v;
            out += '\n';
        }
        return out;
    }

    static KvFile parse(const std::string& text, const std::string& origin = "<string>") {
        KvFile kv;
        std::istringstream is(text);
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const size_t start = line.find_first_not_of(" \t");
            if (start == std::string::npos || line[start] == '#') continue;
            const size_t eq = line.find('=');
            if (eq == std::string::npos || eq == start)
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
            std::string key = line.substr(start, eq - start);
            while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
            std::string value = line.substr(eq + 1);
            if (kv.find(key)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
            kv.entries_.emplace_back(std::move(key), std::move(value));
        }
        return kv;
    }

    static KvFile parse_file(const std::filesystem::path& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open '" + path.string() + "'");
        std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        return parse(text, path.string());
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

inline void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot open '" + tmp.string() + "' for writing");
        f.write(text.data(), std::streamsize(text.size()));
        if (!f) throw DataError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline uint64_t fnv1a64(std::span<const unsigned char> bytes) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x00000100000001b3ULL;
    }
    return h;
}

inline std::string fnv1a64_hex(const std::string& s) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  (unsigned long long)fnv1a64({reinterpret_cast<const unsigned char*>(s.data()), s.size()}));
    return buf;
}

inline std::string file_fnv_hex(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open '" + path.string() + "' for hashing");
    std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return fnv1a64_hex(blob);
}

}  // namespace scomp
