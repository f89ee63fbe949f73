#include "softlabel/checkpoint.hpp"

#include <fstream>

#include "softlabel/error.hpp"

namespace softlabel {

nlohmann::json to_json(const ModelConfig& c) {
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& t : c.tasks)
        tasks.push_back({{"task", std::string(to_string(t.attribute))}, {"num_categories", t.num_categories}});
    return {{"encoder_dim", c.encoder_dim},
            {"hidden_dim", c.hidden_dim},
            {"intermediate_dim", c.intermediate_dim},
            {"dropout_p", c.dropout_p},
            {"leaky_relu_slope", c.leaky_relu_slope},
            {"tasks", tasks}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    try {
        ModelConfig c;
        c.encoder_dim = j.at("encoder_dim").get<std::size_t>();
        c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
        c.intermediate_dim = j.at("intermediate_dim").get<std::size_t>();
        c.dropout_p = j.at("dropout_p").get<double>();
        c.leaky_relu_slope = j.at("leaky_relu_slope").get<double>();
        for (const auto& t : j.at("tasks"))
            c.tasks.push_back({parse_attribute(t.at("task").get<std::string>()),
                               t.at("num_categories").get<std::size_t>()});
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model config: ") + e.what());
    }
}

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt) {
    nlohmann::json tensors = nlohmann::json::array();
    ckpt.params.for_each_tensor([&](std::string_view name, int head, const Tensor& t) {
        tensors.push_back({{"name", std::string(name)},
                           {"head", head},
                           {"rows", t.rows},
                           {"cols", t.cols},
                           {"values", t.values}});
    });
    return {{"format", "softlabel-checkpoint"},
            {"version", kCheckpointVersion},
            {"config", to_json(ckpt.config)},
            {"tensors", tensors}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "softlabel-checkpoint") throw DataError("checkpoint: unexpected format tag");
        if (j.at("version").get<int>() != kCheckpointVersion)
            throw DataError("checkpoint: unsupported version " + j.at("version").dump());
        Checkpoint ckpt;
        ckpt.config = model_config_from_json(j.at("config"));
        ckpt.params = ModelParams::zeros(ckpt.config);
        const auto& tensors = j.at("tensors");
        std::size_t i = 0;
        ckpt.params.for_each_tensor([&](std::string_view name, int head, Tensor& t) {
            if (i >= tensors.size()) throw DataError("checkpoint: missing tensor " + std::string(name));
            const auto& e = tensors[i++];
            if (e.at("name").get<std::string>() != name || e.at("head").get<int>() != head ||
                e.at("rows").get<std::size_t>() != t.rows || e.at("cols").get<std::size_t>() != t.cols)
                throw DataError("checkpoint: tensor " + std::to_string(i - 1) + " does not match " +
                                std::string(name));
            auto values = e.at("values").get<std::vector<double>>();
            if (values.size() != t.size()) throw DataError("checkpoint: wrong value count for " + std::string(name));
            t.values = std::move(values);
        });
        if (i != tensors.size()) throw DataError("checkpoint: unexpected extra tensors");
        return ckpt;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << checkpoint_to_json(ckpt).dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace softlabel
