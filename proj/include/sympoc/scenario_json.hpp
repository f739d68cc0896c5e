#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "sympoc/scenario.hpp"

namespace sympoc {

namespace detail {

template <typename T>
T field(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key))
        throw std::invalid_argument("scenario: missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument("scenario: field '" + key + "' has the wrong type");
    }
}

template <typename T>
T field_or(const nlohmann::json& j, const std::string& key, T def) {
    if (!j.contains(key)) return def;
    return field<T>(j, key);
}

inline Obstacle obstacle_from_json(const nlohmann::json& j, std::size_t index) {
    const std::string where = "obstacles[" + std::to_string(index) + "]";
    if (!j.contains("type"))
        throw std::invalid_argument("scenario: missing field '" + where + ".type'");
    const std::string type = j.at("type").get<std::string>();
    try {
        if (type == "capsule")
            return Capsule{j.at("a").get<Vec>(), j.at("b").get<Vec>(), j.at("radius").get<double>()};
        if (type == "ball") return Ball{j.at("center").get<Vec>(), j.at("radius").get<double>()};
        if (type == "box3d") {
            const Vec lo = j.at("lo").get<Vec>();
            const Vec hi = j.at("hi").get<Vec>();
            require(lo.size() == 3 && hi.size() == 3,
                    "scenario: field '" + where + "' box corners need three coordinates");
            return Box3d{{lo[0], lo[1], lo[2]}, {hi[0], hi[1], hi[2]}};
        }
        if (type == "room2d") return Room2d{j.at("half_width").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("scenario: field '" + where + "' is malformed: " + e.what());
    }
    throw std::invalid_argument("scenario: field '" + where + ".type' has unknown value '" + type +
                                "'");
}

inline LossKind loss_kind_from_string(const std::string& s) {
    if (s == "base") return LossKind::Base;
    if (s == "log") return LossKind::LogPenalty;
    if (s == "quad") return LossKind::QuadPenalty;
    if (s == "aug") return LossKind::AugLagrangian;
    throw std::invalid_argument("scenario: field 'loss.kind' has unknown value '" + s + "'");
}

inline std::string loss_kind_to_string(LossKind k) {
    switch (k) {
        case LossKind::Base: return "base";
        case LossKind::LogPenalty: return "log";
        case LossKind::QuadPenalty: return "quad";
        case LossKind::AugLagrangian: return "aug";
    }
    return "aug";
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
    Scenario s;
    s.name = detail::field_or<std::string>(j, "name", "scenario");
    const auto agents = detail::field<nlohmann::json>(j, "agents");
    s.agent_count = detail::field<int>(agents, "count");
    s.space_dim = detail::field<int>(agents, "space_dim");
    s.agent_radius = detail::field<double>(agents, "radius");
    s.constraint_radius = detail::field_or<double>(agents, "constraint_radius", s.agent_radius);
    s.speed_cap = detail::field_or<double>(j, "speed_cap", 25.0);
    s.horizon = detail::field_or<double>(j, "horizon", 1.0);
    s.x0 = detail::field<Vec>(j, "x0");
    if (detail::field_or<bool>(j, "xT_mirror", false)) {
        s.xT.resize(s.x0.size());
        for (std::size_t i = 0; i < s.x0.size(); ++i) s.xT[i] = -s.x0[i];
    } else {
        s.xT = detail::field<Vec>(j, "xT");
    }
    if (j.contains("obstacles")) {
        const auto& obs = j.at("obstacles");
        for (std::size_t i = 0; i < obs.size(); ++i)
            s.obstacles.push_back(detail::obstacle_from_json(obs[i], i));
    }
    if (j.contains("room_half_width"))
        s.room_half_width = detail::field<double>(j, "room_half_width");
    if (j.contains("loss")) {
        const auto& lj = j.at("loss");
        s.loss_kind = detail::loss_kind_from_string(detail::field_or<std::string>(lj, "kind", "aug"));
        s.lambda = detail::field_or<double>(lj, "lambda", 600.0);
        s.lambda_tilde = detail::field_or<double>(lj, "lambda_tilde", 200.0);
        s.barrier.eps = detail::field_or<double>(lj, "barrier_eps", 4e-4);
        s.barrier.a = detail::field_or<double>(lj, "barrier_a", 0.004);
        s.rho1 = detail::field_or<double>(lj, "rho1", 1.0);
        s.rho2 = detail::field_or<double>(lj, "rho2", 1.0);
        s.num_samples = detail::field_or<int>(lj, "samples", 40);
    }
    if (j.contains("net")) {
        const auto& nj = j.at("net");
        s.net_layers = detail::field_or<int>(nj, "layers", 6);
        s.net_width = detail::field_or<int>(nj, "width", 60);
        const std::string act = detail::field_or<std::string>(nj, "activation", "relu");
        if (act == "relu")
            s.activation = Activation::Relu;
        else if (act == "sigmoid")
            s.activation = Activation::Sigmoid;
        else
            throw std::invalid_argument("scenario: field 'net.activation' has unknown value '" +
                                        act + "'");
    }
    if (j.contains("latent")) {
        const auto& lj = j.at("latent");
        s.latent_augment = detail::field_or<bool>(lj, "enabled", false);
        s.latent_dim = detail::field_or<int>(lj, "dim", 0);
    }
    if (j.contains("refine")) s.collocation_order = detail::field_or<int>(j.at("refine"), "order", 30);
    s.seed = detail::field_or<std::uint64_t>(j, "seed", 1);
    s.repeats = detail::field_or<int>(j, "repeats", 1);
    s.note = detail::field_or<std::string>(j, "note", "");
    s.validate();
    return s;
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
    nlohmann::json j;
    j["name"] = s.name;
    j["agents"] = {{"count", s.agent_count},
                   {"space_dim", s.space_dim},
                   {"radius", s.agent_radius},
                   {"constraint_radius", s.constraint_radius}};
    j["speed_cap"] = s.speed_cap;
    j["horizon"] = s.horizon;
    j["x0"] = s.x0;
    j["xT"] = s.xT;
    auto obs = nlohmann::json::array();
    for (const Obstacle& o : s.obstacles) {
        if (const auto* c = std::get_if<Capsule>(&o))
            obs.push_back({{"type", "capsule"}, {"a", c->a}, {"b", c->b}, {"radius", c->radius}});
        else if (const auto* bl = std::get_if<Ball>(&o))
            obs.push_back({{"type", "ball"}, {"center", bl->center}, {"radius", bl->radius}});
        else if (const auto* bx = std::get_if<Box3d>(&o))
            obs.push_back({{"type", "box3d"},
                           {"lo", Vec(bx->lo.begin(), bx->lo.end())},
                           {"hi", Vec(bx->hi.begin(), bx->hi.end())}});
        else
            obs.push_back({{"type", "room2d"}, {"half_width", std::get<Room2d>(o).half_width}});
    }
    j["obstacles"] = std::move(obs);
    if (s.room_half_width) j["room_half_width"] = *s.room_half_width;
    j["loss"] = {{"kind", detail::loss_kind_to_string(s.loss_kind)},
                 {"lambda", s.lambda},
                 {"lambda_tilde", s.lambda_tilde},
                 {"barrier_eps", s.barrier.eps},
                 {"barrier_a", s.barrier.a},
                 {"rho1", s.rho1},
                 {"rho2", s.rho2},
                 {"samples", s.num_samples}};
    j["net"] = {{"layers", s.net_layers},
                {"width", s.net_width},
                {"activation", s.activation == Activation::Relu ? "relu" : "sigmoid"}};
    j["latent"] = {{"enabled", s.latent_augment}, {"dim", s.latent_dim}};
    j["refine"] = {{"order", s.collocation_order}};
    j["seed"] = s.seed;
    j["repeats"] = s.repeats;
    if (!s.note.empty()) j["note"] = s.note;
    return j;
}

// Accepts a builtin name or a path to a scenario JSON file.
inline Scenario load_scenario(const std::string& name_or_path) {
    if (is_builtin_scenario(name_or_path)) {
        Scenario s = builtin_scenario(name_or_path);
        s.validate();
        return s;
    }
    std::ifstream f(name_or_path);
    require(f.good(), "scenario: no builtin named '" + name_or_path +
                          "' and no readable file at that path");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("scenario: invalid JSON in '" + name_or_path + "': " + e.what());
    }
    return scenario_from_json(j);
}

}  // namespace sympoc
