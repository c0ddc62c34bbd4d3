#include "core/serialize.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"

namespace drcut {

namespace {

using nlohmann::json;

json to_json_impl(const HazardModel& hazard) {
    json j;
    j["active_state"] = hazard.active_state();
    if (dynamic_cast<const ZeroHazard*>(&hazard)) {
        j["kind"] = "zero";
    } else if (auto* c = dynamic_cast<const ConstantHazard*>(&hazard)) {
        j["kind"] = "constant";
        j["rate"] = c->level();
    } else if (auto* g = dynamic_cast<const OracleGammaHazard*>(&hazard)) {
        j["kind"] = "oracle-gamma";
        const auto& p = g->params();
        j["params"] = {{"log_level", p.log_level}, {"band_coef", p.band_coef},
                       {"band_lo", p.band_lo},     {"band_hi", p.band_hi},
                       {"scale", p.scale}};
    } else if (auto* m12 = dynamic_cast<const OracleMu12Hazard*>(&hazard)) {
        j["kind"] = "oracle-mu12";
        const auto& p = m12->params();
        j["params"] = {{"log_level", p.log_level}, {"cos_coef", p.cos_coef},
                       {"late_coef", p.late_coef}, {"late_time", p.late_time},
                       {"w_coef", p.w_coef},       {"scale", p.scale}};
    } else if (auto* m13 = dynamic_cast<const OracleMu13Hazard*>(&hazard)) {
        j["kind"] = "oracle-mu13";
        const auto& p = m13->params();
        j["params"] = {{"log_level", p.log_level},
                       {"sin_coef", p.sin_coef},
                       {"t_coef", p.t_coef},
                       {"scale", p.scale}};
    } else if (auto* m23 = dynamic_cast<const OracleMu23Hazard*>(&hazard)) {
        j["kind"] = "oracle-mu23";
        const auto& p = m23->params();
        j["params"] = {{"dur_factor", p.dur_factor},
                       {"dur_cap", p.dur_cap},
                       {"wbar_cap", p.wbar_cap},
                       {"poly", p.poly},
                       {"scale", p.scale}};
    } else if (auto* pc = dynamic_cast<const ParametricCensoringHazard*>(&hazard)) {
        j["kind"] = "parametric-censoring";
        j["beta"] = {pc->b0(), pc->b1(), pc->b2()};
    } else if (auto* pw = dynamic_cast<const PiecewiseHazard*>(&hazard)) {
        j["kind"] = "piecewise";
        j["t_knots"] = pw->t_knots();
        j["dur_knots"] = pw->dur_knots();
        j["w_knots"] = pw->w_knots();
        j["log_rates"] = pw->log_rates();
    } else {
        throw InvalidArgument("hazard json: unserializable hazard model");
    }
    return j;
}

void check_state(const json& j, int expected, const std::string& kind) {
    if (j.at("active_state").get<int>() != expected)
        throw ParseError("hazard json: kind '" + kind + "' must have active_state " +
                         std::to_string(expected));
}

HazardPtr from_json_impl(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero") {
        return std::make_shared<ZeroHazard>(j.at("active_state").get<int>());
    }
    if (kind == "constant") {
        return std::make_shared<ConstantHazard>(j.at("rate").get<double>(),
                                                j.at("active_state").get<int>());
    }
    if (kind == "oracle-gamma") {
        const auto& p = j.at("params");
        GammaParams g{p.at("log_level").get<double>(), p.at("band_coef").get<double>(),
                      p.at("band_lo").get<double>(), p.at("band_hi").get<double>(),
                      p.at("scale").get<double>()};
        check_state(j, 1, kind);
        return std::make_shared<OracleGammaHazard>(g);
    }
    if (kind == "oracle-mu12") {
        const auto& p = j.at("params");
        Mu12Params m{p.at("log_level").get<double>(), p.at("cos_coef").get<double>(),
                     p.at("late_coef").get<double>(), p.at("late_time").get<double>(),
                     p.at("w_coef").get<double>(),    p.at("scale").get<double>()};
        check_state(j, 1, kind);
        return std::make_shared<OracleMu12Hazard>(m);
    }
    if (kind == "oracle-mu13") {
        const auto& p = j.at("params");
        Mu13Params m{p.at("log_level").get<double>(), p.at("sin_coef").get<double>(),
                     p.at("t_coef").get<double>(), p.at("scale").get<double>()};
        check_state(j, 1, kind);
        return std::make_shared<OracleMu13Hazard>(m);
    }
    if (kind == "oracle-mu23") {
        const auto& p = j.at("params");
        Mu23Params m;
        m.dur_factor = p.at("dur_factor").get<double>();
        m.dur_cap = p.at("dur_cap").get<double>();
        m.wbar_cap = p.at("wbar_cap").get<double>();
        auto poly = p.at("poly").get<std::vector<double>>();
        if (poly.size() != m.poly.size())
            throw ParseError("hazard json: oracle-mu23 poly must have 6 coefficients");
        std::copy(poly.begin(), poly.end(), m.poly.begin());
        m.scale = p.at("scale").get<double>();
        check_state(j, 2, kind);
        return std::make_shared<OracleMu23Hazard>(m);
    }
    if (kind == "parametric-censoring") {
        auto beta = j.at("beta").get<std::vector<double>>();
        if (beta.size() != 3)
            throw ParseError("hazard json: parametric-censoring beta must have 3 entries");
        check_state(j, 1, kind);
        return std::make_shared<ParametricCensoringHazard>(beta[0], beta[1], beta[2]);
    }
    if (kind == "piecewise") {
        return std::make_shared<PiecewiseHazard>(
            j.at("t_knots").get<std::vector<double>>(),
            j.at("dur_knots").get<std::vector<double>>(),
            j.at("w_knots").get<std::vector<double>>(),
            j.at("log_rates").get<std::vector<double>>(), j.at("active_state").get<int>());
    }
    throw ParseError("hazard json: unknown kind '" + kind + "'");
}

json parse_document(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(what + ": " + e.what());
    }
}

// Missing/ill-typed fields surface as nlohmann exceptions; translate them.
template <typename Fn>
auto guarded(const std::string& what, Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw ParseError(what + ": " + e.what());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << text << '\n';
}

}  // namespace

std::string hazard_to_json(const HazardModel& hazard) { return to_json_impl(hazard).dump(); }

HazardPtr hazard_from_json(const std::string& text) {
    auto j = parse_document(text, "hazard json");
    return guarded("hazard json", [&] { return from_json_impl(j); });
}

void save_hazard(const std::string& path, const HazardModel& hazard) {
    write_file(path, to_json_impl(hazard).dump(1));
}

HazardPtr load_hazard(const std::string& path) { return hazard_from_json(read_file(path)); }

std::string transitions_to_json(const TransitionModels& transitions) {
    if (!transitions.m12 || !transitions.m13 || !transitions.m23)
        throw InvalidArgument("transitions json: null model in bundle");
    json j{{"m12", to_json_impl(*transitions.m12)},
           {"m13", to_json_impl(*transitions.m13)},
           {"m23", to_json_impl(*transitions.m23)}};
    return j.dump();
}

TransitionModels transitions_from_json(const std::string& text) {
    auto j = parse_document(text, "transitions json");
    return guarded("transitions json", [&] {
        TransitionModels t;
        t.m12 = from_json_impl(j.at("m12"));
        t.m13 = from_json_impl(j.at("m13"));
        t.m23 = from_json_impl(j.at("m23"));
        return t;
    });
}

void save_transitions(const std::string& path, const TransitionModels& transitions) {
    json j{{"m12", to_json_impl(*transitions.m12)},
           {"m13", to_json_impl(*transitions.m13)},
           {"m23", to_json_impl(*transitions.m23)}};
    write_file(path, j.dump(1));
}

TransitionModels load_transitions(const std::string& path) {
    return transitions_from_json(read_file(path));
}

}  // namespace drcut
