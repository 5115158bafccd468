#pragma once

#include "lfsr/tensor.hpp"

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace lfsr {

struct ParamEntry {
    std::string name;
    Tensor value;
    bool weight_decay = true;
};

/// Named parameters in insertion order. Shapes are fixed once added.
class ParamStore {
public:
    void add(std::string name, Tensor value, bool weight_decay);

    bool contains(const std::string& name) const { return index_.contains(name); }
    const Tensor& get(const std::string& name) const;
    Tensor& get(const std::string& name);
    const ParamEntry& entry(const std::string& name) const;

    /// Replaces a value; the shape must match.
    void set(const std::string& name, Tensor value);

    const std::vector<ParamEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    Index parameter_count() const;

    /// Sets every value to zero.
    void zero();

    friend bool operator==(const ParamStore& a, const ParamStore& b);

private:
    std::vector<ParamEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

using GradMap = std::map<std::string, Tensor>;

} // namespace lfsr
