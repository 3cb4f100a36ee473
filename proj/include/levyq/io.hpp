#pragma once

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "levyq/error.hpp"
#include "levyq/jump_distribution.hpp"
#include "levyq/model.hpp"

namespace levyq {

using Json = nlohmann::json;

namespace detail {

inline void require_object(const Json& j, std::string_view what) {
    if (!j.is_object()) fail(Errc::invalid_parameter, std::string(what) + " must be a JSON object");
}

inline void reject_unknown_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (auto a : allowed) known = known || key == a;
        if (!known) fail(Errc::invalid_parameter, "unknown key \"" + key + "\" in " + std::string(what));
    }
}

inline double number_at(const Json& j, std::string_view key, std::string_view what) {
    const auto it = j.find(key);
    if (it == j.end()) fail(Errc::invalid_parameter, std::string(what) + " needs \"" + std::string(key) + "\"");
    if (!it->is_number()) fail(Errc::invalid_parameter, std::string(what) + "." + std::string(key) + " must be a number");
    return it->get<double>();
}

inline std::vector<double> numbers_at(const Json& j, std::string_view key, std::string_view what) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_array()) {
        fail(Errc::invalid_parameter, std::string(what) + "." + std::string(key) + " must be an array of numbers");
    }
    std::vector<double> out;
    for (const auto& x : *it) {
        if (!x.is_number()) fail(Errc::invalid_parameter, std::string(what) + "." + std::string(key) + " must hold numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

}  // namespace detail

inline JumpDistribution parse_distribution(const Json& j) {
    detail::require_object(j, "dist");
    const auto kind_it = j.find("kind");
    if (kind_it == j.end() || !kind_it->is_string()) fail(Errc::invalid_parameter, "dist needs a string \"kind\"");
    const auto kind = kind_it->get<std::string>();
    if (kind == "exponential") {
        detail::reject_unknown_keys(j, {"kind", "rate"}, "exponential dist");
        return Exponential{detail::number_at(j, "rate", "dist")};
    }
    if (kind == "hyperexponential") {
        detail::reject_unknown_keys(j, {"kind", "weights", "rates"}, "hyperexponential dist");
        return HyperExponential{detail::numbers_at(j, "weights", "dist"), detail::numbers_at(j, "rates", "dist")};
    }
    if (kind == "erlang") {
        detail::reject_unknown_keys(j, {"kind", "shape", "rate"}, "erlang dist");
        const auto shape_it = j.find("shape");
        if (shape_it == j.end() || !shape_it->is_number_integer()) {
            fail(Errc::invalid_parameter, "erlang shape must be an integer");
        }
        return Erlang{shape_it->get<int>(), detail::number_at(j, "rate", "dist")};
    }
    if (kind == "deterministic") {
        detail::reject_unknown_keys(j, {"kind", "size"}, "deterministic dist");
        return Deterministic{detail::number_at(j, "size", "dist")};
    }
    if (kind == "pareto") {
        detail::reject_unknown_keys(j, {"kind", "scale", "index"}, "pareto dist");
        return Pareto{detail::number_at(j, "scale", "dist"), detail::number_at(j, "index", "dist")};
    }
    fail(Errc::invalid_parameter, "unknown dist kind \"" + kind + "\"");
}

inline Json to_json(const JumpDistribution& dist) {
    return std::visit(
        [](const auto& d) -> Json {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return {{"kind", "exponential"}, {"rate", d.rate}};
            } else if constexpr (std::is_same_v<T, HyperExponential>) {
                return {{"kind", "hyperexponential"}, {"weights", d.weights}, {"rates", d.rates}};
            } else if constexpr (std::is_same_v<T, Erlang>) {
                return {{"kind", "erlang"}, {"shape", d.shape}, {"rate", d.rate}};
            } else if constexpr (std::is_same_v<T, Deterministic>) {
                return {{"kind", "deterministic"}, {"size", d.size}};
            } else {
                return {{"kind", "pareto"}, {"scale", d.scale}, {"index", d.index}};
            }
        },
        dist.law());
}

namespace detail {

inline std::optional<JumpComponent> parse_component(const Json& j, std::string_view what) {
    if (j.is_null()) return std::nullopt;
    require_object(j, what);
    reject_unknown_keys(j, {"rate", "dist"}, what);
    const double rate = number_at(j, "rate", what);
    const auto it = j.find("dist");
    if (it == j.end()) fail(Errc::invalid_parameter, std::string(what) + " needs \"dist\"");
    return JumpComponent{rate, parse_distribution(*it)};
}

inline Json component_json(const std::optional<JumpComponent>& c) {
    if (!c) return nullptr;
    return {{"rate", c->rate}, {"dist", to_json(c->dist)}};
}

}  // namespace detail

/// Parses and validates {"drift", "up", "down", "u0"}; unknown keys are rejected.
/// "drift" defaults to -1, "down" and "u0" may be omitted.
inline LevyModel parse_model(const Json& j) {
    detail::require_object(j, "model");
    detail::reject_unknown_keys(j, {"drift", "up", "down", "u0"}, "model");
    LevyModel m;
    if (j.contains("drift")) m.drift = detail::number_at(j, "drift", "model");
    m.up = j.contains("up") ? detail::parse_component(j.at("up"), "up") : std::nullopt;
    m.down = j.contains("down") ? detail::parse_component(j.at("down"), "down") : std::nullopt;
    if (j.contains("u0")) m.u0 = detail::number_at(j, "u0", "model");
    return validate(m);
}

inline Json to_json(const LevyModel& m) {
    Json j;
    j["drift"] = m.drift;
    j["up"] = detail::component_json(m.up);
    j["down"] = detail::component_json(m.down);
    j["u0"] = m.u0;
    return j;
}

inline Json parse_json_text(const std::string& text, std::string_view what) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        fail(Errc::invalid_parameter, std::string(what) + " is not valid JSON: " + e.what());
    }
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::invalid_parameter, "cannot read file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline LevyModel load_model(const std::string& path) {
    return parse_model(parse_json_text(read_text_file(path), path));
}

}  // namespace levyq
