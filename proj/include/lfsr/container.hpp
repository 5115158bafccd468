#pragma once

#include "lfsr/params.hpp"
#include "lfsr/tensor.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace lfsr {

/// Binary tensor container.
///
/// Layout: the 8-byte magic `LFVW0001`, a little-endian u64 header length,
/// a UTF-8 JSON header `{"entries": [{name, shape, dtype, offset, nbytes}],
/// "metadata": {...}}`, then the raw little-endian payloads. Offsets are
/// relative to the first payload byte.
class WeightContainer {
public:
    enum class DType { F32, F64 };

    struct Entry {
        std::string name;
        Shape shape;
        DType dtype = DType::F32;
        std::vector<float> f32;
        std::vector<double> f64;
        /// Optional per-entry flags (e.g. weight decay) carried in the header.
        nlohmann::json attributes = nlohmann::json::object();
    };

    nlohmann::json metadata = nlohmann::json::object();

    void put(const std::string& name, const Tensor& value, nlohmann::json attributes = nlohmann::json::object());
    void put_f64(const std::string& name, Shape shape, std::vector<double> values);

    bool contains(const std::string& name) const;
    const Entry& entry(const std::string& name) const;
    Tensor tensor(const std::string& name) const;
    const std::vector<double>& f64(const std::string& name) const;
    const std::vector<Entry>& entries() const noexcept { return entries_; }

    std::vector<char> serialize() const;
    static WeightContainer deserialize(const std::vector<char>& bytes);

    void save(const std::filesystem::path& path) const;
    static WeightContainer load(const std::filesystem::path& path);

    /// Reads only the JSON header (for inspection).
    static nlohmann::json read_header(const std::filesystem::path& path);

private:
    std::vector<Entry> entries_;
};

/// Writes every parameter (with its weight-decay flag) into a container.
void put_params(WeightContainer& container, const ParamStore& params, const std::string& prefix = "");
/// Rebuilds a ParamStore from entries carrying the given prefix.
ParamStore take_params(const WeightContainer& container, const std::string& prefix = "");

/// 64-bit FNV-1a hash of the canonical JSON dump, as a hex string.
std::string config_hash(const nlohmann::json& config);

} // namespace lfsr
