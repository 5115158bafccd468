#include "lfsr/params.hpp"

#include "lfsr/error.hpp"

namespace lfsr {

void ParamStore::add(std::string name, Tensor value, bool weight_decay) {
    require(!name.empty(), "parameter name must not be empty");
    require(!index_.contains(name), "duplicate parameter name '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.push_back(ParamEntry{std::move(name), std::move(value), weight_decay});
}

const ParamEntry& ParamStore::entry(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
    return entries_[it->second];
}

const Tensor& ParamStore::get(const std::string& name) const { return entry(name).value; }

Tensor& ParamStore::get(const std::string& name) {
    return const_cast<Tensor&>(static_cast<const ParamStore&>(*this).get(name));
}

void ParamStore::set(const std::string& name, Tensor value) {
    Tensor& slot = get(name);
    require(slot.shape() == value.shape(), "parameter '" + name + "' shape is fixed at " +
                                               shape_string(slot.shape()) + ", got " + shape_string(value.shape()));
    slot = std::move(value);
}

Index ParamStore::parameter_count() const {
    Index n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

void ParamStore::zero() {
    for (auto& e : entries_) e.value.fill(0.0f);
}

bool operator==(const ParamStore& a, const ParamStore& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i) {
        const auto& x = a.entries_[i];
        const auto& y = b.entries_[i];
        if (x.name != y.name || x.weight_decay != y.weight_decay || !(x.value == y.value)) return false;
    }
    return true;
}

} // namespace lfsr
