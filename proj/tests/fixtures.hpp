#pragma once

#include <cmath>
#include <vector>

#include "vaffine/affine_model.hpp"
#include "vaffine/contract.hpp"
#include "vaffine/stopping_times.hpp"

namespace fixtures {

using namespace vaffine;

/// Stochastic ARG mortality and surrender loading on an ARG market factor, gaussian
/// random-walk stock component, martingale-calibrated stock.
inline AffineModel reference_model() {
    return AffineModel(
        {FactorCoordinate::constant_one(),
         FactorCoordinate::autoregressive_gamma(0.5, 0.01, 0.5, YLoading{1, 0.005}),
         FactorCoordinate::autoregressive_gamma(1.0, 0.02, 0.6, YLoading{1, 0.01})},
        {FactorCoordinate::gaussian_ar1(0.0, 1.0, 0.15), FactorCoordinate::autoregressive_gamma(1.0, 0.05, 1.02)},
        {1.0, 0.02, 0.05, 0.0, 1.0});
}

inline MarketSpec reference_market(const AffineModel& m) { return MarketSpec::martingale(m, {1.0, -0.4}); }

inline Loadings reference_loadings() {
    return {{{0.005, 1.0, 0.0}, {0.0, 0.002}}, {{0.02, 0.0, 1.0}, {0.0, 0.0}}, SurvivalCopula::independence()};
}

inline VAContract reference_contract() {
    VAContract c;
    c.grid = {2};
    c.payments = {100.0};
    c.delta = 0.01;
    c.penalty = {{2, 0.9}};
    c.maturity = 12;
    c.discount_factors.assign(12, 0.98);
    return c;
}

/// Gaussian Y, constant_one + ARG X, no cross loadings.
inline AffineModel small_model() {
    return AffineModel({FactorCoordinate::constant_one(), FactorCoordinate::autoregressive_gamma(1.5, 0.02, 0.7)},
                       {FactorCoordinate::gaussian_ar1(0.01, 0.9, 0.2)}, {1.0, 0.03, 0.1});
}

inline Loadings small_loadings() {
    return {{{0.01, 1.0}, {0.0}}, {{0.03, 0.5}, {0.0}}, SurvivalCopula::independence()};
}

/// Only deterministic hazards h_m, h_s per period and a gaussian random-walk stock.
inline AffineModel deterministic_hazard_model(double sigma) {
    return AffineModel({FactorCoordinate::constant_one()}, {FactorCoordinate::gaussian_ar1(0.0, 1.0, sigma)}, {1.0, 0.0});
}

inline Loadings deterministic_loadings(double hm, double hs) {
    return {{{hm}, {0.0}}, {{hs}, {0.0}}, SurvivalCopula::independence()};
}

inline VAContract simple_contract(int T, int T1, double pi1, double delta, double penalty, double beta) {
    VAContract c;
    c.grid = {T1};
    c.payments = {pi1};
    c.delta = delta;
    c.penalty = {{T1, penalty}};
    c.maturity = T;
    c.discount_factors.assign(static_cast<std::size_t>(T), beta);
    return c;
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// E[(R - K)^+] for log R ~ N(-v/2, v).
inline double lognormal_call(double K, double v) {
    const double sd = std::sqrt(v);
    const double d1 = (-std::log(K) + 0.5 * v) / sd;
    return norm_cdf(d1) - K * norm_cdf(d1 - sd);
}

}  // namespace fixtures
