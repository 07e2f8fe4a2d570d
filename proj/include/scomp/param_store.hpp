#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "scomp/errors.hpp"

namespace scomp {

// Named, flat, typed parameter arrays. Entry order is insertion order and is
// the deterministic iteration/serialization order.
template <class Real>
class ParamStore {
public:
    struct Entry {
        std::string name;
        std::vector<int64_t> shape;
        std::vector<Real> values;
        int64_t count() const { return int64_t(values.size()); }
    };

    std::span<Real> add(const std::string& name, std::vector<int64_t> shape) {
        if (index_.count(name)) throw ConfigError("param store: duplicate name '" + name + "'");
        int64_t count = 1;
        for (int64_t s : shape) {
            if (s < 1) throw ConfigError("param store: bad shape for '" + name + "'");
            count *= s;
        }
        index_[name] = entries_.size();
        entries_.push_back(Entry{name, std::move(shape), std::vector<Real>(size_t(count), Real(0))});
        return entries_.back().values;
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    size_t index_of(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("param store: unknown name '" + name + "'");
        return it->second;
    }

    Entry& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("param store: unknown name '" + name + "'");
        return entries_[it->second];
    }
    const Entry& at(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("param store: unknown name '" + name + "'");
        return entries_[it->second];
    }

    std::span<Real> values(const std::string& name) { return at(name).values; }
    std::span<const Real> values(const std::string& name) const { return at(name).values; }

    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }
    size_t size() const { return entries_.size(); }

    int64_t total_count() const {
        int64_t n = 0;
        for (const auto& e : entries_) n += e.count();
        return n;
    }

    bool same_shapes(const ParamStore& other) const {
        if (entries_.size() != other.entries_.size()) return false;
        for (size_t i = 0; i < entries_.size(); ++i)
            if (entries_[i].name != other.entries_[i].name || entries_[i].shape != other.entries_[i].shape)
                return false;
        return true;
    }

    // zero-filled store with identical names and shapes
    static ParamStore like(const ParamStore& other) {
        ParamStore out;
        for (const auto& e : other.entries_) out.add(e.name, e.shape);
        return out;
    }

    template <class OtherReal>
    static ParamStore cast_from(const ParamStore<OtherReal>& other) {
        ParamStore out;
        for (const auto& e : other.entries()) {
            auto dst = out.add(e.name, e.shape);
            for (size_t i = 0; i < dst.size(); ++i) dst[i] = Real(e.values[i]);
        }
        return out;
    }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, size_t> index_;
};

}  // namespace scomp
