#include "lfsr/container.hpp"

#include "lfsr/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace lfsr {
namespace {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

constexpr char kMagic[8] = {'L', 'F', 'V', 'W', '0', '0', '0', '1'};

const char* dtype_name(WeightContainer::DType d) { return d == WeightContainer::DType::F32 ? "f32" : "f64"; }

std::size_t payload_bytes(const WeightContainer::Entry& e) {
    return e.dtype == WeightContainer::DType::F32 ? e.f32.size() * sizeof(float) : e.f64.size() * sizeof(double);
}

std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

} // namespace

void WeightContainer::put(const std::string& name, const Tensor& value, nlohmann::json attributes) {
    require(!contains(name), "duplicate container entry '" + name + "'");
    Entry e;
    e.name = name;
    e.shape = value.shape();
    e.dtype = DType::F32;
    e.f32 = value.storage();
    e.attributes = std::move(attributes);
    entries_.push_back(std::move(e));
}

void WeightContainer::put_f64(const std::string& name, Shape shape, std::vector<double> values) {
    require(!contains(name), "duplicate container entry '" + name + "'");
    require(numel(shape) == static_cast<Index>(values.size()), "f64 entry length does not match shape");
    Entry e;
    e.name = name;
    e.shape = std::move(shape);
    e.dtype = DType::F64;
    e.f64 = std::move(values);
    entries_.push_back(std::move(e));
}

bool WeightContainer::contains(const std::string& name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return true;
    }
    return false;
}

const WeightContainer::Entry& WeightContainer::entry(const std::string& name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return e;
    }
    throw ContractError("container has no entry '" + name + "'");
}

Tensor WeightContainer::tensor(const std::string& name) const {
    const Entry& e = entry(name);
    require(e.dtype == DType::F32, "entry '" + name + "' is not f32");
    return Tensor(e.shape, e.f32);
}

const std::vector<double>& WeightContainer::f64(const std::string& name) const {
    const Entry& e = entry(name);
    require(e.dtype == DType::F64, "entry '" + name + "' is not f64");
    return e.f64;
}

std::vector<char> WeightContainer::serialize() const {
    nlohmann::json header;
    header["entries"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& e : entries_) {
        nlohmann::json j{{"name", e.name},   {"shape", e.shape},          {"dtype", dtype_name(e.dtype)},
                         {"offset", offset}, {"nbytes", payload_bytes(e)}};
        if (!e.attributes.empty()) j["attributes"] = e.attributes;
        header["entries"].push_back(std::move(j));
        offset += payload_bytes(e);
    }
    header["metadata"] = metadata;
    const std::string text = header.dump();
    const std::uint64_t length = text.size();

    std::vector<char> out(sizeof(kMagic) + sizeof(length) + text.size() + offset);
    char* p = out.data();
    std::memcpy(p, kMagic, sizeof(kMagic));
    p += sizeof(kMagic);
    std::memcpy(p, &length, sizeof(length));
    p += sizeof(length);
    std::memcpy(p, text.data(), text.size());
    p += text.size();
    for (const auto& e : entries_) {
        const std::size_t n = payload_bytes(e);
        if (n == 0) continue;
        std::memcpy(p, e.dtype == DType::F32 ? static_cast<const void*>(e.f32.data()) : e.f64.data(), n);
        p += n;
    }
    return out;
}

WeightContainer WeightContainer::deserialize(const std::vector<char>& bytes) {
    constexpr std::size_t prefix = sizeof(kMagic) + sizeof(std::uint64_t);
    if (bytes.size() < prefix || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw IoError("not an LFVW0001 container");
    }
    std::uint64_t length = 0;
    std::memcpy(&length, bytes.data() + sizeof(kMagic), sizeof(length));
    if (bytes.size() < prefix + length) throw IoError("truncated container header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + prefix, bytes.begin() + static_cast<std::ptrdiff_t>(prefix + length));
    } catch (const nlohmann::json::exception& ex) {
        throw IoError(std::string("malformed container header: ") + ex.what());
    }
    const std::size_t base = prefix + length;

    WeightContainer c;
    c.metadata = header.value("metadata", nlohmann::json::object());
    for (const auto& j : header.at("entries")) {
        Entry e;
        e.name = j.at("name").get<std::string>();
        e.shape = j.at("shape").get<Shape>();
        const std::string dtype = j.at("dtype").get<std::string>();
        if (dtype != "f32" && dtype != "f64") throw IoError("unsupported dtype '" + dtype + "'");
        e.dtype = dtype == "f32" ? DType::F32 : DType::F64;
        e.attributes = j.value("attributes", nlohmann::json::object());
        const auto offset = j.at("offset").get<std::uint64_t>();
        const auto count = static_cast<std::size_t>(numel(e.shape));
        const std::size_t n = count * (e.dtype == DType::F32 ? sizeof(float) : sizeof(double));
        if (j.contains("nbytes") && j["nbytes"].get<std::size_t>() != n) throw IoError("entry size mismatch for " + e.name);
        if (base + offset + n > bytes.size()) throw IoError("truncated payload for " + e.name);
        const char* src = bytes.data() + base + offset;
        if (e.dtype == DType::F32) {
            e.f32.resize(count);
            std::memcpy(e.f32.data(), src, n);
        } else {
            e.f64.resize(count);
            std::memcpy(e.f64.data(), src, n);
        }
        c.entries_.push_back(std::move(e));
    }
    return c;
}

void WeightContainer::save(const std::filesystem::path& path) const {
    const std::vector<char> bytes = serialize();
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

WeightContainer WeightContainer::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

nlohmann::json WeightContainer::read_header(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    std::uint64_t length = 0;
    in.read(magic, sizeof(magic));
    in.read(reinterpret_cast<char*>(&length), sizeof(length));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw IoError("not an LFVW0001 container");
    std::string text(length, '\0');
    in.read(text.data(), static_cast<std::streamsize>(length));
    if (!in) throw IoError("truncated container header");
    return nlohmann::json::parse(text);
}

void put_params(WeightContainer& container, const ParamStore& params, const std::string& prefix) {
    for (const auto& e : params.entries()) {
        container.put(prefix + e.name, e.value, nlohmann::json{{"weight_decay", e.weight_decay}});
    }
}

ParamStore take_params(const WeightContainer& container, const std::string& prefix) {
    ParamStore params;
    for (const auto& e : container.entries()) {
        if (e.dtype != WeightContainer::DType::F32 || e.name.rfind(prefix, 0) != 0) continue;
        params.add(e.name.substr(prefix.size()), Tensor(e.shape, e.f32), e.attributes.value("weight_decay", true));
    }
    return params;
}

std::string config_hash(const nlohmann::json& config) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : config.dump()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

} // namespace lfsr
