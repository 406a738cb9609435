#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "vaffine/affine_model.hpp"
#include "vaffine/contract.hpp"
#include "vaffine/errors.hpp"
#include "vaffine/pricing.hpp"
#include "vaffine/rng.hpp"
#include "vaffine/stopping_times.hpp"

namespace vaffine {

enum class McMode { g_weighted, sampled_taus };

inline std::string to_string(McMode m) { return m == McMode::g_weighted ? "g_weighted" : "sampled_taus"; }

inline McMode mc_mode_from_string(const std::string& s) {
    if (s == "g_weighted") return McMode::g_weighted;
    if (s == "sampled_taus") return McMode::sampled_taus;
    throw ModeError("unknown Monte Carlo mode '" + s + "'");
}

enum class VaLeg { premium, gmab, sb, db };

inline std::string to_string(VaLeg l) {
    switch (l) {
        case VaLeg::premium: return "premium_leg";
        case VaLeg::gmab: return "gmab";
        case VaLeg::sb: return "sb";
        case VaLeg::db: return "db";
    }
    return "unknown";
}

struct McConfig {
    std::size_t n_paths = 100000;
    std::uint64_t seed = 20240601;
    /// Pairs paths with flipped gaussian noise; n_paths must then be even.
    bool antithetic = true;
    unsigned threads = 1;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    McMode mode = McMode::g_weighted;
};

/// Stored factor paths; path p occupies states[p*(T+1)*d .. ) in (X, Y) order per date.
/// With antithetic sampling paths 2u and 2u+1 form a pair.
struct PathEnsemble {
    std::size_t n_paths = 0;
    int T = 0;
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    bool antithetic = false;
    std::vector<double> states;

    [[nodiscard]] std::span<const double> path(std::size_t p) const {
        const std::size_t len = static_cast<std::size_t>(T + 1) * dim;
        return {states.data() + p * len, len};
    }
    [[nodiscard]] std::span<const double> state(std::size_t p, int t) const {
        return path(p).subspan(static_cast<std::size_t>(t) * dim, dim);
    }
};

/// Cancellation-resistant sum.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 16) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

inline McEstimate summarize(std::span<const double> unit_values, std::size_t n_paths, McMode mode) {
    McEstimate e;
    e.n_paths = n_paths;
    e.mode = mode;
    const auto n = static_cast<double>(unit_values.size());
    if (unit_values.empty()) return e;
    e.mean = pairwise_sum(unit_values) / n;
    if (unit_values.size() > 1) {
        std::vector<double> sq(unit_values.size());
        for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = (unit_values[i] - e.mean) * (unit_values[i] - e.mean);
        e.std_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
    }
    return e;
}

namespace detail {

/// Writes Z_0..Z_T for one path: Y steps under Q first, then X steps under P given Y_t.
template <class Rng>
void generate_path(const AffineModel& model, int T, Rng& rng, double sign, std::span<double> out) {
    const std::size_t d1 = model.d1(), d2 = model.d2(), d = d1 + d2;
    std::copy(model.z0().begin(), model.z0().end(), out.begin());
    for (int t = 1; t <= T; ++t) {
        const auto prev = out.subspan(static_cast<std::size_t>(t - 1) * d, d);
        const auto cur = out.subspan(static_cast<std::size_t>(t) * d, d);
        model.step_Y_Q(prev.subspan(d1), cur.subspan(d1), rng, sign);
        model.step_X_P(prev.first(d1), cur.subspan(d1), cur.first(d1), rng, sign);
    }
}

inline std::size_t unit_count(const McConfig& cfg) {
    if (cfg.n_paths == 0) throw ConfigError("Monte Carlo: n_paths must be positive");
    if (cfg.antithetic && cfg.n_paths % 2 != 0) throw ConfigError("Monte Carlo: antithetic sampling needs even n_paths");
    return cfg.antithetic ? cfg.n_paths / 2 : cfg.n_paths;
}

/// Runs fn(unit, member, states, tau_rng) over all paths, split into contiguous unit blocks per thread.
template <class Fn>
void for_each_path(const AffineModel& model, int T, const McConfig& cfg, Fn&& fn) {
    const std::size_t units = unit_count(cfg);
    const int members = cfg.antithetic ? 2 : 1;
    const std::size_t len = static_cast<std::size_t>(T + 1) * (model.d1() + model.d2());
    auto work = [&](std::size_t begin, std::size_t end) {
        std::vector<double> buf(len);
        for (std::size_t u = begin; u < end; ++u) {
            for (int m = 0; m < members; ++m) {
                StreamRng rng(cfg.seed, u, 0);
                generate_path(model, T, rng, m == 0 ? 1.0 : -1.0, std::span<double>(buf));
                StreamRng tau_rng(cfg.seed, u, static_cast<std::uint64_t>(1 + m));
                fn(u, m, std::span<const double>(buf), tau_rng);
            }
        }
    };
    const unsigned nt = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(units)));
    if (nt == 1) {
        work(0, units);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (units + nt - 1) / nt;
    for (unsigned k = 0; k < nt; ++k) {
        const std::size_t b = k * chunk, e = std::min(units, b + chunk);
        if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
}

struct PathLegValues {
    double premium = 0.0, gmab = 0.0, sb = 0.0, db = 0.0;
};

/// Per-path leg values: exact conditional values given the factor path (g_weighted)
/// and literal cashflows for one draw of (tau^m, tau^s) (sampled).
struct PathEvaluator {
    const AffineModel& model;
    const MarketSpec& market;
    const VAContract& contract;
    const Loadings& loadings;

    template <class Rng>
    void operator()(std::span<const double> states, Rng& tau_rng, PathLegValues& gw, PathLegValues& st) const {
        const VAContract& c = contract;
        const int T = c.maturity;
        const std::size_t d1 = model.d1(), d = d1 + model.d2();
        HazardPath lm, ls;
        lm.values.assign(static_cast<std::size_t>(T + 1), 0.0);
        ls.values.assign(static_cast<std::size_t>(T + 1), 0.0);
        std::vector<double> S(static_cast<std::size_t>(T + 1));
        for (int t = 0; t <= T; ++t) {
            const auto z = states.subspan(static_cast<std::size_t>(t) * d, d);
            const auto i = static_cast<std::size_t>(t);
            S[i] = std::exp(market.log_price(t, z.subspan(d1)));
            if (t > 0) {
                const double im = loadings.mortality.rate(z.first(d1), z.subspan(d1));
                const double is = loadings.surrender.rate(z.first(d1), z.subspan(d1));
                if (im < 0.0 || is < 0.0)
                    throw NegativeIncrementError("Monte Carlo path produced a negative hazard increment");
                lm.values[i] = lm.values[i - 1] + im;
                ls.values[i] = ls.values[i - 1] + is;
            }
        }
        auto G = [&](int a, int b) { return gamma_surface(a, b, lm, ls, loadings.copula); };
        auto F = [&](int t) { return fund_value(c, S, t); };
        auto payout = [&](int date) { return std::max(F(date), guarantee_value(c, date)); };

        gw = {};
        gw.premium = -c.premium_at_zero;
        for (std::size_t i = 0; i < c.n(); ++i)
            gw.premium -= c.discount(0, c.grid[i]) * c.payments[i] * G(c.grid[i], c.grid[i]);
        gw.gmab = c.discount(0, T) * G(T, T) * payout(T);
        for (std::size_t k = 0; k < c.n(); ++k) {
            const int Tk = c.grid[k], Tprev = k == 0 ? 0 : c.grid[k - 1];
            double mass = 0.0;
            for (int t = Tprev + 1; t <= Tk; ++t) mass += G(t, t - 1) - G(t, t);
            gw.sb += c.discount(0, Tk) * c.penalty_at(Tk) * F(Tk) * mass;
        }
        for (int t = 1; t <= T; ++t) {
            const int sd = settle_date(c, t);
            gw.db += c.discount(0, sd) * payout(sd) * (G(t - 1, t) - G(t, t));
        }

        const auto [tm, ts] = sample_times(lm, ls, loadings.copula, tau_rng);
        st = {};
        st.premium = -c.premium_at_zero;
        for (std::size_t i = 0; i < c.n(); ++i)
            if (tm > c.grid[i] && ts > c.grid[i]) st.premium -= c.discount(0, c.grid[i]) * c.payments[i];
        if (tm > T && ts > T) st.gmab = c.discount(0, T) * payout(T);
        if (ts < tm && ts <= c.grid.back()) {
            const int sd = settle_date(c, ts);
            st.sb = c.discount(0, sd) * c.penalty_at(sd) * F(sd);
        }
        if (tm < ts && tm <= T) {
            const int sd = settle_date(c, tm);
            st.db = c.discount(0, sd) * payout(sd);
        }
    }
};

}  // namespace detail

/// Generates and stores paths (intended for tests and small ensembles).
inline PathEnsemble simulate(const AffineModel& model, int T, std::size_t n_paths, std::uint64_t seed,
                             bool antithetic = false) {
    McConfig cfg{n_paths, seed, antithetic, 1};
    PathEnsemble e{n_paths, T, model.d1() + model.d2(), seed, antithetic, {}};
    const std::size_t len = static_cast<std::size_t>(T + 1) * e.dim;
    e.states.resize(n_paths * len);
    const int members = antithetic ? 2 : 1;
    detail::for_each_path(model, T, cfg, [&](std::size_t u, int m, std::span<const double> s, StreamRng&) {
        const std::size_t p = u * static_cast<std::size_t>(members) + static_cast<std::size_t>(m);
        std::copy(s.begin(), s.end(), e.states.begin() + static_cast<std::ptrdiff_t>(p * len));
    });
    return e;
}

/// All four legs plus their total, from one streamed path set.
struct McReport {
    McEstimate premium, gmab, sb, db, total;

    [[nodiscard]] const McEstimate& leg(VaLeg l) const {
        switch (l) {
            case VaLeg::premium: return premium;
            case VaLeg::gmab: return gmab;
            case VaLeg::sb: return sb;
            case VaLeg::db: return db;
        }
        return total;
    }
};

struct McPriceResult {
    McReport g_weighted;
    McReport sampled_taus;
};

namespace detail {

struct UnitAccumulator {
    std::vector<double> gw[5];
    std::vector<double> st[5];

    explicit UnitAccumulator(std::size_t units) {
        for (auto& v : gw) v.assign(units, 0.0);
        for (auto& v : st) v.assign(units, 0.0);
    }

    void add(std::size_t u, const PathLegValues& g, const PathLegValues& s, double weight) {
        const double gv[5] = {g.premium, g.gmab, g.sb, g.db, g.premium + g.gmab + g.sb + g.db};
        const double sv[5] = {s.premium, s.gmab, s.sb, s.db, s.premium + s.gmab + s.sb + s.db};
        for (int j = 0; j < 5; ++j) {
            gw[j][u] += weight * gv[j];
            st[j][u] += weight * sv[j];
        }
    }

    McPriceResult finish(std::size_t n_paths) const {
        auto report = [&](const std::vector<double>(&v)[5], McMode mode) {
            return McReport{summarize(v[0], n_paths, mode), summarize(v[1], n_paths, mode),
                            summarize(v[2], n_paths, mode), summarize(v[3], n_paths, mode),
                            summarize(v[4], n_paths, mode)};
        };
        return {report(gw, McMode::g_weighted), report(st, McMode::sampled_taus)};
    }
};

}  // namespace detail

/// Streams cfg.n_paths paths and estimates every leg in both modes. Works for any n and copula.
inline McPriceResult mc_price(const AffineModel& model, const MarketSpec& market, const VAContract& contract,
                              const Loadings& loadings, const McConfig& cfg) {
    contract.validate();
    loadings.validate(model);
    const std::size_t units = detail::unit_count(cfg);
    const double weight = cfg.antithetic ? 0.5 : 1.0;
    detail::UnitAccumulator acc(units);
    const detail::PathEvaluator eval{model, market, contract, loadings};
    detail::for_each_path(model, contract.maturity, cfg,
                          [&](std::size_t u, int, std::span<const double> s, StreamRng& tau_rng) {
                              detail::PathLegValues g, st;
                              eval(s, tau_rng, g, st);
                              acc.add(u, g, st, weight);
                          });
    return acc.finish(cfg.n_paths);
}

/// One leg from a stored ensemble. Sampled stopping times use the same substreams as mc_price.
inline McEstimate mc_leg(VaLeg leg, const AffineModel& model, const MarketSpec& market, const VAContract& contract,
                         const Loadings& loadings, const PathEnsemble& ensemble, McMode mode) {
    contract.validate();
    loadings.validate(model);
    if (ensemble.T < contract.maturity) throw DimensionError("mc_leg: ensemble horizon shorter than maturity");
    if (ensemble.dim != model.d1() + model.d2()) throw DimensionError("mc_leg: ensemble dimension mismatch");
    const std::size_t members = ensemble.antithetic ? 2 : 1;
    const std::size_t units = ensemble.n_paths / members;
    std::vector<double> vals(units, 0.0);
    const detail::PathEvaluator eval{model, market, contract, loadings};
    const std::size_t keep = static_cast<std::size_t>(contract.maturity + 1) * ensemble.dim;
    for (std::size_t u = 0; u < units; ++u) {
        for (std::size_t m = 0; m < members; ++m) {
            StreamRng tau_rng(ensemble.seed, u, 1 + m);
            detail::PathLegValues g, st;
            eval(ensemble.path(u * members + m).first(keep), tau_rng, g, st);
            const auto& src = mode == McMode::g_weighted ? g : st;
            double v = 0.0;
            switch (leg) {
                case VaLeg::premium: v = src.premium; break;
                case VaLeg::gmab: v = src.gmab; break;
                case VaLeg::sb: v = src.sb; break;
                case VaLeg::db: v = src.db; break;
            }
            vals[u] += v / static_cast<double>(members);
        }
    }
    return summarize(vals, units * members, mode);
}

struct Verdict {
    bool pass = false;
    double gap = 0.0;
    double sigmas = 0.0;
};

/// Pass iff |closed - mc.mean| <= k * stderr, with a relative floor of 1e-10 so that
/// zero-variance estimates of exact quantities are not failed by rounding.
inline Verdict compare(double closed_form, const McEstimate& mc, double k_sigma = 4.0) {
    Verdict v;
    v.gap = std::abs(closed_form - mc.mean);
    const double floor = 1e-10 * (1.0 + std::abs(closed_form));
    v.sigmas = mc.std_error > 0.0 ? v.gap / mc.std_error : (v.gap > floor ? std::numeric_limits<double>::infinity() : 0.0);
    v.pass = v.gap <= k_sigma * mc.std_error + floor;
    return v;
}

/// Agreement of two independent estimates within k combined standard errors.
inline Verdict compare(const McEstimate& a, const McEstimate& b, double k_sigma = 4.0) {
    McEstimate combined = b;
    combined.std_error = std::hypot(a.std_error, b.std_error);
    return compare(a.mean, combined, k_sigma);
}

/// Closed form where available; Monte Carlo (g_weighted) for legs outside its reach
/// (n > 1 option legs, non-independence copulas) unless closed_form_only is set.
inline PriceReport price_va_auto(const AffineModel& model, const MarketSpec& market, const VAContract& c,
                                 const Loadings& l, const PricingOptions& opts, const McConfig& mc,
                                 bool closed_form_only) {
    const bool indep = l.copula.kind == CopulaKind::independence;
    const bool single = c.n() == 1;
    if ((indep && single) || closed_form_only) return price_va(model, market, c, l, opts);

    PriceReport r;
    r.diagnostics.martingale = market.is_martingale(model, 1e-10);
    const auto est = mc_price(model, market, c, l, mc).g_weighted;
    auto take = [&](const char* name, const McEstimate& e) {
        r.diagnostics.mc_stderr[name] = e.std_error;
        return e.mean;
    };
    r.premium_leg = indep ? price_premium_leg(model, c, l, opts, &r.diagnostics) : take("premium_leg", est.premium);
    r.sb = indep ? price_sb(model, market, c, l, opts, &r.diagnostics) : take("sb", est.sb);
    r.gmab = take("gmab", est.gmab);
    r.db = take("db", est.db);
    r.finalize();
    r.diagnostics.notes.emplace_back("legs listed in mc_stderr were estimated by Monte Carlo (g_weighted)");
    return r;
}

}  // namespace vaffine
