#pragma once

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vaffine/affine_model.hpp"
#include "vaffine/contract.hpp"
#include "vaffine/errors.hpp"
#include "vaffine/pricing.hpp"
#include "vaffine/stopping_times.hpp"

namespace vaffine::io {

using nlohmann::json;

/// A parsed model file: the factor process plus the stock specification.
struct ModelConfig {
    AffineModel model;
    MarketSpec market;
};

namespace detail {

inline const json& field(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    const auto it = j.find(key);
    if (it == j.end()) throw ConfigError(where + ": missing field '" + key + "'");
    return *it;
}

template <class T>
T as(const json& j, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
    return as<T>(field(j, key, where), where + "." + key);
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    return as<T>(j.at(key), where + "." + key);
}

inline FactorCoordinate parse_coordinate(const json& j, const std::string& where) {
    const auto kind = get<std::string>(j, "kind", where);
    if (kind == "constant_one") return FactorCoordinate::constant_one();
    if (kind == "gaussian_ar1")
        return FactorCoordinate::gaussian_ar1(get_or(j, "mu", 0.0, where), get<double>(j, "rho", where),
                                              get<double>(j, "sigma", where));
    if (kind == "autoregressive_gamma") {
        std::optional<YLoading> loading;
        if (j.contains("y_loading") && !j.at("y_loading").is_null()) {
            const auto& l = j.at("y_loading");
            loading = YLoading{get<std::size_t>(l, "index", where + ".y_loading"),
                               get<double>(l, "eta", where + ".y_loading")};
        }
        return FactorCoordinate::autoregressive_gamma(get<double>(j, "shape", where), get<double>(j, "scale", where),
                                                      get<double>(j, "rho", where), loading);
    }
    throw ConfigError(where + ".kind: unknown coordinate kind '" + kind + "'");
}

inline json coordinate_to_json(const FactorCoordinate& c) {
    json j{{"kind", to_string(c.kind)}};
    switch (c.kind) {
        case CoordinateKind::constant_one: break;
        case CoordinateKind::gaussian_ar1:
            j["mu"] = c.mu;
            j["rho"] = c.rho;
            j["sigma"] = c.sigma;
            break;
        case CoordinateKind::autoregressive_gamma:
            j["shape"] = c.shape;
            j["scale"] = c.scale;
            j["rho"] = c.rho;
            if (c.y_loading) j["y_loading"] = {{"index", c.y_loading->index}, {"eta", c.y_loading->eta}};
            break;
    }
    return j;
}

inline IntensityLoading parse_loading(const json& j, const std::string& where) {
    return {get<std::vector<double>>(j, "b", where), get<std::vector<double>>(j, "c", where)};
}

}  // namespace detail

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline ModelConfig parse_model(const json& j) {
    std::vector<FactorCoordinate> xs, ys;
    const auto& xj = detail::field(j, "x_coords", "model");
    const auto& yj = detail::field(j, "y_coords", "model");
    if (!xj.is_array() || !yj.is_array()) throw ConfigError("model: x_coords and y_coords must be arrays");
    for (std::size_t i = 0; i < xj.size(); ++i)
        xs.push_back(detail::parse_coordinate(xj[i], "model.x_coords[" + std::to_string(i) + "]"));
    for (std::size_t i = 0; i < yj.size(); ++i)
        ys.push_back(detail::parse_coordinate(yj[i], "model.y_coords[" + std::to_string(i) + "]"));
    AffineModel model(std::move(xs), std::move(ys), detail::get<RVector>(j, "z0", "model"));
    const auto& mj = detail::field(j, "market", "model");
    auto a = detail::get<RVector>(mj, "a", "model.market");
    MarketSpec market;
    if (detail::get_or(mj, "enforce_martingale", false, "model.market")) {
        market = MarketSpec::martingale(model, std::move(a));
    } else {
        if (a.size() != model.d2()) throw ConfigError("model.market.a must have length d2");
        market = MarketSpec{detail::get<double>(mj, "a0", "model.market"), std::move(a)};
    }
    return {std::move(model), std::move(market)};
}

inline json model_to_json(const ModelConfig& m, bool enforce_martingale) {
    json xs = json::array(), ys = json::array();
    for (const auto& c : m.model.x_coords()) xs.push_back(detail::coordinate_to_json(c));
    for (const auto& c : m.model.y_coords()) ys.push_back(detail::coordinate_to_json(c));
    return {{"x_coords", xs},
            {"y_coords", ys},
            {"z0", m.model.z0()},
            {"market", {{"a0", m.market.a0}, {"a", m.market.a}, {"enforce_martingale", enforce_martingale}}}};
}

inline Loadings parse_loadings(const json& j, const AffineModel& model) {
    Loadings l;
    l.mortality = detail::parse_loading(detail::field(j, "mortality", "loadings"), "loadings.mortality");
    l.surrender = detail::parse_loading(detail::field(j, "surrender", "loadings"), "loadings.surrender");
    if (j.contains("copula")) {
        const auto& cj = j.at("copula");
        const auto kind = detail::get<std::string>(cj, "kind", "loadings.copula");
        if (kind == "independence")
            l.copula = SurvivalCopula::independence();
        else if (kind == "clayton")
            l.copula = SurvivalCopula::clayton(detail::get<double>(cj, "theta", "loadings.copula"));
        else
            throw ConfigError("loadings.copula.kind: unknown copula '" + kind + "'");
    }
    l.validate(model);
    return l;
}

inline json loadings_to_json(const Loadings& l) {
    json cj{{"kind", to_string(l.copula.kind)}};
    if (l.copula.kind == CopulaKind::clayton) cj["theta"] = l.copula.theta;
    return {{"mortality", {{"b", l.mortality.b}, {"c", l.mortality.c}}},
            {"surrender", {{"b", l.surrender.b}, {"c", l.surrender.c}}},
            {"copula", cj}};
}

inline VAContract parse_contract(const json& j) {
    VAContract c;
    c.grid = detail::get<std::vector<int>>(j, "grid", "contract");
    c.payments = detail::get<std::vector<double>>(j, "payments", "contract");
    c.premium_at_zero = detail::get_or(j, "premium_at_zero", 0.0, "contract");
    c.delta = detail::get<double>(j, "delta", "contract");
    c.maturity = detail::get<int>(j, "maturity", "contract");
    c.discount_factors = detail::get<std::vector<double>>(j, "discount_factors", "contract");
    c.guarantee_factor = detail::get_or(j, "guarantee_factor", 1.0, "contract");
    const auto& pj = detail::field(j, "penalty", "contract");
    if (!pj.is_object()) throw ConfigError("contract.penalty must map grid dates to factors");
    for (const auto& [key, value] : pj.items()) {
        int date = 0;
        try {
            std::size_t used = 0;
            date = std::stoi(key, &used);
            if (used != key.size()) throw std::invalid_argument(key);
        } catch (const std::exception&) {
            throw ConfigError("contract.penalty: key '" + key + "' is not an integer date");
        }
        c.penalty[date] = detail::as<double>(value, "contract.penalty." + key);
    }
    c.validate();
    return c;
}

inline json contract_to_json(const VAContract& c) {
    json pen = json::object();
    for (const auto& [d, p] : c.penalty) pen[std::to_string(d)] = p;
    return {{"grid", c.grid},
            {"payments", c.payments},
            {"premium_at_zero", c.premium_at_zero},
            {"delta", c.delta},
            {"penalty", pen},
            {"maturity", c.maturity},
            {"discount_factors", c.discount_factors},
            {"guarantee_factor", c.guarantee_factor}};
}

inline json report_to_json(const PriceReport& r) {
    json terms = json::array();
    for (const auto& t : r.diagnostics.terms)
        terms.push_back({{"leg", t.leg}, {"k", t.k}, {"i", t.i}, {"t", t.t}, {"value", t.value}});
    json mc = json::object();
    for (const auto& [leg, se] : r.diagnostics.mc_stderr) mc[leg] = se;
    return {{"premium_leg", r.premium_leg},
            {"gmab", r.gmab},
            {"sb", r.sb},
            {"db", r.db},
            {"va_total", r.va_total},
            {"diagnostics",
             {{"fourier_tail_max", r.diagnostics.fourier_tail_max},
              {"max_imag_residual", r.diagnostics.max_imag_residual},
              {"truncation_warning", r.diagnostics.truncation_warning},
              {"martingale", r.diagnostics.martingale},
              {"terms", terms},
              {"notes", r.diagnostics.notes},
              {"mc_stderr", mc}}}};
}

inline PriceReport report_from_json(const json& j) {
    PriceReport r;
    r.premium_leg = detail::get<double>(j, "premium_leg", "report");
    r.gmab = detail::get<double>(j, "gmab", "report");
    r.sb = detail::get<double>(j, "sb", "report");
    r.db = detail::get<double>(j, "db", "report");
    r.va_total = detail::get<double>(j, "va_total", "report");
    const auto& d = detail::field(j, "diagnostics", "report");
    auto& out = r.diagnostics;
    out.fourier_tail_max = detail::get<double>(d, "fourier_tail_max", "report.diagnostics");
    out.max_imag_residual = detail::get<double>(d, "max_imag_residual", "report.diagnostics");
    out.truncation_warning = detail::get<bool>(d, "truncation_warning", "report.diagnostics");
    out.martingale = detail::get<bool>(d, "martingale", "report.diagnostics");
    for (const auto& t : detail::field(d, "terms", "report.diagnostics"))
        out.terms.push_back({detail::get<std::string>(t, "leg", "term"), detail::get<int>(t, "k", "term"),
                             detail::get<int>(t, "i", "term"), detail::get<int>(t, "t", "term"),
                             detail::get<double>(t, "value", "term")});
    out.notes = detail::get<std::vector<std::string>>(d, "notes", "report.diagnostics");
    for (const auto& [leg, se] : detail::field(d, "mc_stderr", "report.diagnostics").items())
        out.mc_stderr[leg] = detail::as<double>(se, "report.diagnostics.mc_stderr");
    return r;
}

inline bool same_report(const PriceReport& a, const PriceReport& b) {
    const auto& x = a.diagnostics;
    const auto& y = b.diagnostics;
    return a.premium_leg == b.premium_leg && a.gmab == b.gmab && a.sb == b.sb && a.db == b.db &&
           a.va_total == b.va_total && x.fourier_tail_max == y.fourier_tail_max &&
           x.max_imag_residual == y.max_imag_residual && x.truncation_warning == y.truncation_warning &&
           x.martingale == y.martingale && x.terms == y.terms && x.notes == y.notes && x.mc_stderr == y.mc_stderr;
}

/// Flat "section,key,value" rows: one per leg, then one per diagnostic and term.
inline void write_report_csv(std::ostream& os, const PriceReport& r) {
    os << std::setprecision(17) << "section,key,value\n";
    os << "leg,premium_leg," << r.premium_leg << "\nleg,gmab," << r.gmab << "\nleg,sb," << r.sb << "\nleg,db," << r.db
       << "\nleg,va_total," << r.va_total << '\n';
    const auto& d = r.diagnostics;
    os << "diagnostic,fourier_tail_max," << d.fourier_tail_max << "\ndiagnostic,max_imag_residual,"
       << d.max_imag_residual << "\ndiagnostic,truncation_warning," << d.truncation_warning
       << "\ndiagnostic,martingale," << d.martingale << '\n';
    for (const auto& [leg, se] : d.mc_stderr) os << "mc_stderr," << leg << ',' << se << '\n';
    for (const auto& t : d.terms)
        os << "term," << t.leg << "[k=" << t.k << ";i=" << t.i << ";t=" << t.t << "]," << t.value << '\n';
}

}  // namespace vaffine::io
