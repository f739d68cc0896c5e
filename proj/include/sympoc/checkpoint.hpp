#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "sympoc/losses.hpp"
#include "sympoc/sympnet.hpp"
#include "sympoc/vec.hpp"

namespace sympoc {

inline nlohmann::json net_to_json(const SympNetParams& net) {
    nlohmann::json j;
    j["version"] = 1;
    j["half_dim"] = net.half_dim;
    j["layer_count"] = net.layers.size();
    auto layers = nlohmann::json::array();
    for (const GLayer& l : net.layers) {
        nlohmann::json lj;
        lj["kind"] = l.kind == LayerKind::Up ? "up" : "low";
        lj["width"] = l.width;
        lj["activation"] = l.activation == Activation::Relu ? "relu" : "sigmoid";
        lj["K"] = l.K;  // row-major
        lj["a"] = l.a;
        lj["b"] = l.b;
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    return j;
}

inline SympNetParams net_from_json(const nlohmann::json& j) {
    require(j.value("version", 0) == 1, "checkpoint: unsupported version");
    SympNetParams net;
    net.half_dim = j.at("half_dim").get<int>();
    for (const auto& lj : j.at("layers")) {
        GLayer l;
        const std::string kind = lj.at("kind").get<std::string>();
        require(kind == "up" || kind == "low", "checkpoint: layer kind must be up or low");
        l.kind = kind == "up" ? LayerKind::Up : LayerKind::Low;
        const std::string act = lj.at("activation").get<std::string>();
        require(act == "relu" || act == "sigmoid", "checkpoint: unknown activation");
        l.activation = act == "relu" ? Activation::Relu : Activation::Sigmoid;
        l.width = lj.at("width").get<int>();
        l.half_dim = net.half_dim;
        l.K = lj.at("K").get<Vec>();
        l.a = lj.at("a").get<Vec>();
        l.b = lj.at("b").get<Vec>();
        require(l.K.size() == static_cast<std::size_t>(l.width) * net.half_dim &&
                    l.a.size() == static_cast<std::size_t>(l.width) &&
                    l.b.size() == static_cast<std::size_t>(l.width),
                "checkpoint: layer array lengths inconsistent");
        net.layers.push_back(std::move(l));
    }
    require(static_cast<std::size_t>(j.at("layer_count").get<int>()) == net.layers.size(),
            "checkpoint: layer count mismatch");
    return net;
}

inline void save_checkpoint(const SympNetParams& net, const std::string& path) {
    std::ofstream f(path);
    require(f.good(), "checkpoint: cannot open '" + path + "'");
    f << net_to_json(net).dump(2) << "\n";
}

inline SympNetParams load_checkpoint(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "checkpoint: cannot open '" + path + "'");
    nlohmann::json j;
    f >> j;
    return net_from_json(j);
}

inline nlohmann::json line_to_json(const LatentLine& line) {
    return {{"y0", line.y0}, {"u", line.u}, {"q0", line.q0}};
}

inline LatentLine line_from_json(const nlohmann::json& j) {
    return {j.at("y0").get<Vec>(), j.at("u").get<Vec>(), j.at("q0").get<Vec>()};
}

// Sidecar with the latent lines and multiplier state next to a checkpoint.
inline void save_train_state(const std::vector<LatentLine>& lines, const MultiplierState& mult,
                             const std::string& path) {
    nlohmann::json j;
    auto lj = nlohmann::json::array();
    for (const LatentLine& l : lines) lj.push_back(line_to_json(l));
    j["lines"] = std::move(lj);
    j["multipliers"] = {{"mu", mult.mu},
                        {"lam1", mult.lam1},
                        {"lam2", mult.lam2},
                        {"rho1", mult.rho1},
                        {"rho2", mult.rho2}};
    std::ofstream f(path);
    require(f.good(), "train state: cannot open '" + path + "'");
    f << j.dump(2) << "\n";
}

inline std::pair<std::vector<LatentLine>, MultiplierState> load_train_state(
    const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "train state: cannot open '" + path + "'");
    nlohmann::json j;
    f >> j;
    std::vector<LatentLine> lines;
    for (const auto& lj : j.at("lines")) lines.push_back(line_from_json(lj));
    MultiplierState m;
    const auto& mj = j.at("multipliers");
    m.mu = mj.at("mu").get<std::vector<Vec>>();
    m.lam1 = mj.at("lam1").get<Vec>();
    m.lam2 = mj.at("lam2").get<Vec>();
    m.rho1 = mj.at("rho1").get<double>();
    m.rho2 = mj.at("rho2").get<double>();
    return {std::move(lines), std::move(m)};
}

}  // namespace sympoc
