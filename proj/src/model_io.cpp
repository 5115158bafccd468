#include "lfsr/model_io.hpp"

#include "lfsr/error.hpp"

#include <fstream>

namespace lfsr {

std::filesystem::path sidecar_path(const std::filesystem::path& weights) {
    return std::filesystem::path(weights.string() + ".json");
}

void save_model(const std::filesystem::path& path, const StoredModel& model) {
    const std::string hash = config_hash(model.config);
    WeightContainer c;
    c.metadata = {{"model", model.model}, {"config", model.config}, {"config_hash", hash}};
    put_params(c, model.params);
    c.save(path);
    std::ofstream out(sidecar_path(path));
    if (!out) throw IoError("cannot write sidecar for " + path.string());
    out << nlohmann::json{{"model", model.model}, {"config", model.config}, {"config_hash", hash}}.dump(2) << '\n';
}

StoredModel load_model(const std::filesystem::path& path) {
    const WeightContainer c = WeightContainer::load(path);
    StoredModel m;
    m.model = c.metadata.value("model", std::string());
    m.config = c.metadata.value("config", nlohmann::json::object());
    const std::string embedded = c.metadata.value("config_hash", std::string());
    if (embedded != config_hash(m.config)) throw IoError(path.string() + ": embedded config hash does not match config");
    if (const auto side = sidecar_path(path); std::filesystem::exists(side)) {
        std::ifstream in(side);
        nlohmann::json j;
        in >> j;
        if (j.value("config_hash", std::string()) != embedded || j.value("config", nlohmann::json()) != m.config) {
            throw IoError(path.string() + ": sidecar config does not match the weight container");
        }
    }
    m.params = take_params(c);
    return m;
}

void check_same_layout(const ParamStore& expected, const ParamStore& actual, const std::string& what) {
    if (expected.size() != actual.size()) {
        throw ContractError(what + ": expected " + std::to_string(expected.size()) + " tensors, found " +
                            std::to_string(actual.size()));
    }
    for (const auto& e : expected.entries()) {
        if (!actual.contains(e.name)) throw ContractError(what + ": missing tensor '" + e.name + "'");
        if (actual.get(e.name).shape() != e.value.shape()) {
            throw ContractError(what + ": tensor '" + e.name + "' has shape " + shape_string(actual.get(e.name).shape()) +
                                ", expected " + shape_string(e.value.shape()));
        }
    }
}

} // namespace lfsr
