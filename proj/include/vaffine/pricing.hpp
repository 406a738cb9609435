#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "vaffine/affine_model.hpp"
#include "vaffine/contract.hpp"
#include "vaffine/errors.hpp"
#include "vaffine/quadrature.hpp"
#include "vaffine/recursion.hpp"
#include "vaffine/stopping_times.hpp"

namespace vaffine {

struct PricingOptions {
    QuadratureSpec quad;
    EngineOptions engine;
    /// Multiplies the Fourier normalization; 1 is correct. Verification hook only.
    double fourier_scale = 1.0;
    /// Tail estimates above this are reported as truncation warnings.
    double tail_tolerance = 1e-8;
};

struct FourierResult {
    double value = 0.0;
    /// |integrand(lambda_max)| * lambda_max, a crude bound on the truncated tail.
    double tail = 0.0;
};

/// E[(R - K)^+ H] for R = e^{Abar} e^{a.(Y_T - Y_T')}, where
/// transform(lambda) = E[e^{z a.(Y_T - Y_T')} H] with z = w + i lambda:
///   (1/pi) int_0^{lambda_max} Re[ transform(lambda) e^{z Abar} K^{1-z} / (z (z-1)) ] dlambda.
template <class Transform>
FourierResult fourier_damped_call(Transform&& transform, double K, double Abar, const QuadratureSpec& quad,
                                  double scale = 1.0) {
    if (!(K > 0.0)) throw ConfigError("fourier_damped_call: strike must be > 0");
    const auto rule = lambda_rule(quad);
    const double logK = std::log(K);
    auto integrand = [&](double lambda) {
        const Complex z{quad.w, lambda};
        const Complex f = transform(lambda);
        return (f * std::exp(z * Abar + (1.0 - z) * logK) / (z * (z - 1.0))).real();
    };
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) acc += rule.w[i] * integrand(rule.x[i]);
    FourierResult r;
    r.value = scale * acc / std::numbers::pi;
    r.tail = std::abs(integrand(quad.lambda_max)) * quad.lambda_max / std::numbers::pi;
    return r;
}

/// One contribution to a leg, kept for the report.
struct TermRow {
    std::string leg;
    int k = 0;
    int i = 0;
    int t = 0;
    double value = 0.0;

    bool operator==(const TermRow&) const = default;
};

struct PriceDiagnostics {
    double fourier_tail_max = 0.0;
    double max_imag_residual = 0.0;
    bool truncation_warning = false;
    bool martingale = false;
    std::vector<TermRow> terms;
    std::vector<std::string> notes;
    /// Legs priced by Monte Carlo instead of closed form, with their standard errors.
    std::map<std::string, double> mc_stderr;
};

struct PriceReport {
    double premium_leg = 0.0;
    double gmab = 0.0;
    double sb = 0.0;
    double db = 0.0;
    double va_total = 0.0;
    PriceDiagnostics diagnostics;

    void finalize() { va_total = premium_leg + gmab + sb + db; }
};

namespace detail {

inline void require_independence(const Loadings& l, const char* leg) {
    if (l.copula.kind != CopulaKind::independence)
        throw UnsupportedCopulaError(std::string(leg) +
                                     ": closed form needs the independence copula; use the Monte Carlo oracle");
}

inline void require_single_payment(const VAContract& c) {
    if (c.n() != 1) throw UnsupportedContractError("GMAB/DB closed form requires n=1");
}

/// Real-valued kernel: both hazards, the first running to r_m and the second to r_s, no stock.
inline double survival_kernel(const AffineModel& model, const Loadings& l, int r_m, int r_s,
                              const PricingOptions& opts, PriceDiagnostics* diag) {
    LegSpec leg;
    leg.a = CVector(model.d2(), Complex{0.0});
    leg.loading_m = l.mortality;
    leg.loading_s = l.surrender;
    leg.T = std::max(r_m, r_s);
    leg.hazard_end = leg.T;
    leg.primed = r_m < r_s;
    leg.s = std::min(r_m, r_s);
    const Complex k = expectation_kernel(model, leg, 0.0, 0.0, opts.engine);
    if (diag) diag->max_imag_residual = std::max(diag->max_imag_residual, std::abs(k.imag()));
    return k.real();
}

/// Leg spec for E[(S_T/S_T')^z e^{-Lambda^m_{r_m} - Lambda^s_{r_s}}] without the e^{z a0 (T-T')} factor.
inline LegSpec ratio_leg(const AffineModel& model, const MarketSpec& market, const Loadings& l, Complex z, int T,
                         int T_prime, int r_m, int r_s) {
    LegSpec leg;
    leg.a.resize(model.d2());
    for (std::size_t j = 0; j < model.d2(); ++j) leg.a[j] = z * market.a[j];
    leg.loading_m = l.mortality;
    leg.loading_s = l.surrender;
    leg.T = T;
    leg.hazard_end = std::max(r_m, r_s);
    leg.primed = r_m < r_s;
    leg.s = std::min(r_m, r_s);
    leg.ratio = RatioSpec{T_prime, leg.a};
    return leg;
}

inline void check_inputs(const AffineModel& model, const MarketSpec& market, const VAContract& c, const Loadings& l) {
    c.validate();
    l.validate(model);
    if (market.a.size() != model.d2()) throw DimensionError("market loading a must have length d2");
}

}  // namespace detail

/// Pi_0 = -sum_{i=0}^{n} beta(0, T_i) pi_i P(tau^m > T_i, tau^s > T_i).
inline double price_premium_leg(const AffineModel& model, const VAContract& c, const Loadings& l,
                                const PricingOptions& opts = {}, PriceDiagnostics* diag = nullptr) {
    c.validate();
    l.validate(model);
    detail::require_independence(l, "premium leg");
    double total = -c.premium_at_zero;
    for (std::size_t i = 0; i < c.n(); ++i) {
        const int Ti = c.grid[i];
        const double v =
            -c.discount(0, Ti) * c.payments[i] * detail::survival_kernel(model, l, Ti, Ti, opts, diag);
        if (diag) diag->terms.push_back({"premium_leg", 0, static_cast<int>(i + 1), Ti, v});
        total += v;
    }
    return total;
}

/// SB_0 = sum_k beta(0,T_k) p(T_k) sum_{i<=k} pi_i sum_{t in (T_{k-1}, T_k]}
///        E[(S_{T_k}/S_{T_i}) e^{-Lambda^m_t} (e^{-Lambda^s_{t-1}} - e^{-Lambda^s_t})].
inline double price_sb(const AffineModel& model, const MarketSpec& market, const VAContract& c, const Loadings& l,
                       const PricingOptions& opts = {}, PriceDiagnostics* diag = nullptr) {
    detail::check_inputs(model, market, c, l);
    detail::require_independence(l, "surrender benefit");
    double total = 0.0;
    for (std::size_t k = 0; k < c.n(); ++k) {
        const int Tk = c.grid[k];
        const int Tprev = k == 0 ? 0 : c.grid[k - 1];
        const double outer = c.discount(0, Tk) * c.penalty_at(Tk);
        for (std::size_t i = 0; i <= k; ++i) {
            const int Ti = c.grid[i];
            double sum = 0.0;
            for (int t = Tprev + 1; t <= Tk; ++t) {
                auto leg_hi = detail::ratio_leg(model, market, l, 1.0, Tk, Ti, t, t - 1);
                auto leg_lo = detail::ratio_leg(model, market, l, 1.0, Tk, Ti, t, t);
                leg_hi.a0 = leg_lo.a0 = market.a0;
                const Complex d = expectation_kernel(model, leg_hi, 0.0, 0.0, opts.engine) -
                                  expectation_kernel(model, leg_lo, 0.0, 0.0, opts.engine);
                if (diag) diag->max_imag_residual = std::max(diag->max_imag_residual, std::abs(d.imag()));
                sum += d.real();
            }
            const double v = outer * c.payments[i] * sum;
            if (diag) diag->terms.push_back({"sb", static_cast<int>(k + 1), static_cast<int>(i + 1), Tk, v});
            total += v;
        }
    }
    return total;
}

namespace detail {

/// pi_1 E[(S_T/S_{T_1} - K/pi_1)^+ D] where D is the difference of two hazard factors
/// (or a single one when r_lo is empty); K = 0 reduces to the forward.
inline double option_term(const AffineModel& model, const MarketSpec& market, const Loadings& l, const VAContract& c,
                          int T, std::pair<int, int> r_hi, std::optional<std::pair<int, int>> r_lo, double K,
                          const PricingOptions& opts, PriceDiagnostics* diag) {
    const int T1 = c.grid[0];
    const double pi1 = c.payments[0];
    if (pi1 == 0.0) return 0.0;
    auto transform = [&](Complex z) {
        Complex v = expectation_kernel(model, ratio_leg(model, market, l, z, T, T1, r_hi.first, r_hi.second), 0.0,
                                       0.0, opts.engine);
        if (r_lo)
            v -= expectation_kernel(model, ratio_leg(model, market, l, z, T, T1, r_lo->first, r_lo->second), 0.0,
                                    0.0, opts.engine);
        return v;
    };
    const double Abar = market.a0 * (T - T1);
    if (K <= 0.0) {
        const Complex f = std::exp(Abar) * transform(Complex{1.0});
        if (diag) diag->max_imag_residual = std::max(diag->max_imag_residual, std::abs(f.imag()));
        return pi1 * f.real();
    }
    const auto fr = fourier_damped_call([&](double lambda) { return transform(Complex{opts.quad.w, lambda}); },
                                        K / pi1, Abar, opts.quad, opts.fourier_scale);
    if (diag) {
        diag->fourier_tail_max = std::max(diag->fourier_tail_max, fr.tail);
        if (fr.tail > opts.tail_tolerance) diag->truncation_warning = true;
    }
    return pi1 * fr.value;
}

}  // namespace detail

/// GMAB_0 = beta(0,T) [ K_T P(both alive at T) + pi_1 E[(S_T/S_{T_1} - K_T/pi_1)^+ e^{-Lambda^m_T - Lambda^s_T}] ].
inline double price_gmab(const AffineModel& model, const MarketSpec& market, const VAContract& c, const Loadings& l,
                         const PricingOptions& opts = {}, PriceDiagnostics* diag = nullptr) {
    detail::check_inputs(model, market, c, l);
    detail::require_independence(l, "GMAB");
    detail::require_single_payment(c);
    const int T = c.maturity;
    const double K = guarantee_value(c, T);
    const double guarantee = K == 0.0 ? 0.0 : K * detail::survival_kernel(model, l, T, T, opts, diag);
    const double call = detail::option_term(model, market, l, c, T, {T, T}, std::nullopt, K, opts, diag);
    const double beta = c.discount(0, T);
    if (diag) {
        diag->terms.push_back({"gmab_guarantee", 1, 1, T, beta * guarantee});
        diag->terms.push_back({"gmab_call", 1, 1, T, beta * call});
    }
    return beta * (guarantee + call);
}

/// DB_0 = sum_{t=1}^{T} beta(0, settle(t)) E[max(F, K)_{settle(t)} 1{tau^m = t, tau^s > t}].
/// Deaths up to T_1 settle at T_1 where F = pi_1; later deaths settle at T through a call.
inline double price_db(const AffineModel& model, const MarketSpec& market, const VAContract& c, const Loadings& l,
                       const PricingOptions& opts = {}, PriceDiagnostics* diag = nullptr) {
    detail::check_inputs(model, market, c, l);
    detail::require_independence(l, "death benefit");
    detail::require_single_payment(c);
    const int T = c.maturity;
    const int T1 = c.grid[0];
    const double pi1 = c.payments[0];
    if (l.mortality.is_zero()) return 0.0;
    double total = 0.0;
    for (int t = 1; t <= T; ++t) {
        const int st = settle_date(c, t);
        const double K = guarantee_value(c, st);
        double v = 0.0;
        if (t <= T1) {
            const double p = detail::survival_kernel(model, l, t - 1, t, opts, diag) -
                             detail::survival_kernel(model, l, t, t, opts, diag);
            v = c.discount(0, st) * std::max(pi1, K) * p;
        } else {
            const double p = K == 0.0 ? 0.0
                                      : detail::survival_kernel(model, l, t - 1, t, opts, diag) -
                                            detail::survival_kernel(model, l, t, t, opts, diag);
            const double call = detail::option_term(model, market, l, c, st, {t - 1, t}, std::pair{t, t}, K, opts, diag);
            v = c.discount(0, st) * (K * p + call);
        }
        if (diag) diag->terms.push_back({"db", 1, 1, t, v});
        total += v;
    }
    return total;
}

/// All four legs in closed form (n = 1 for GMAB and DB).
inline PriceReport price_va(const AffineModel& model, const MarketSpec& market, const VAContract& c,
                            const Loadings& l, const PricingOptions& opts = {}) {
    PriceReport r;
    r.diagnostics.martingale = market.is_martingale(model, 1e-10);
    r.premium_leg = price_premium_leg(model, c, l, opts, &r.diagnostics);
    r.sb = price_sb(model, market, c, l, opts, &r.diagnostics);
    r.gmab = price_gmab(model, market, c, l, opts, &r.diagnostics);
    r.db = price_db(model, market, c, l, opts, &r.diagnostics);
    r.finalize();
    if (r.diagnostics.truncation_warning) r.diagnostics.notes.emplace_back("TruncationWarning: Fourier tail estimate above tolerance");
    return r;
}

/// Guarantee rate delta* in [lo, hi] with va_total(delta*) = target, by bisection.
inline double solve_fair_guarantee(const AffineModel& model, const MarketSpec& market, const VAContract& c,
                                   const Loadings& l, double lo, double hi, const PricingOptions& opts = {},
                                   double target = 0.0) {
    if (!(lo < hi)) throw BracketError("solve_fair_guarantee: need lo < hi");
    auto f = [&](double delta) {
        VAContract cc = c;
        cc.delta = delta;
        return price_va(model, market, cc, l, opts).va_total - target;
    };
    const double flo = f(lo);
    if (flo == 0.0) return lo;
    const double fhi = f(hi);
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0))
        throw BracketError("solve_fair_guarantee: no sign change on [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
    std::uintmax_t max_iter = 200;
    const auto [a, b] = boost::math::tools::bisect(
        f, lo, hi, [](double x0, double x1) { return std::abs(x1 - x0) <= 4e-16 * (1.0 + std::abs(x0)); },
        max_iter);
    return 0.5 * (a + b);
}

}  // namespace vaffine
