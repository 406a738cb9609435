#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vaffine/errors.hpp"

namespace vaffine {

/// Variable annuity with premiums pi_i paid at grid dates T_1 < ... < T_n < T.
///
/// Guarantee  K_t = g sum_{T_i <= t} e^{delta (t - T_i)} pi_i   (g = guarantee_factor, default 1)
/// Fund       F_t = (sum_{T_i <= t} pi_i / S_{T_i}) S_t
/// Discount   beta(t, u) = prod_{r=t}^{u-1} discount_factors[r]
struct VAContract {
    std::vector<int> grid;
    std::vector<double> payments;
    double premium_at_zero = 0.0;
    double delta = 0.0;
    std::map<int, double> penalty;
    int maturity = 0;
    std::vector<double> discount_factors;
    double guarantee_factor = 1.0;

    [[nodiscard]] std::size_t n() const noexcept { return grid.size(); }

    void validate() const {
        if (maturity < 1) throw ConfigError("contract: maturity must be >= 1");
        if (grid.empty()) throw ConfigError("contract: grid must contain at least one payment date");
        if (payments.size() != grid.size())
            throw ConfigError("contract: payments has " + std::to_string(payments.size()) + " entries, grid has " +
                              std::to_string(grid.size()));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] < 1 || grid[i] > maturity - 1)
                throw ConfigError("contract: grid date " + std::to_string(grid[i]) + " outside 1..maturity-1");
            if (i > 0 && grid[i] <= grid[i - 1]) throw ConfigError("contract: grid must be strictly increasing");
            if (!(payments[i] >= 0.0) || !std::isfinite(payments[i]))
                throw ConfigError("contract: payments must be finite and nonnegative");
        }
        if (!(premium_at_zero >= 0.0)) throw ConfigError("contract: premium_at_zero must be >= 0");
        if (!std::isfinite(delta)) throw ConfigError("contract: delta must be finite");
        if (!(guarantee_factor >= 0.0)) throw ConfigError("contract: guarantee_factor must be >= 0");
        for (int d : grid) {
            const auto it = penalty.find(d);
            if (it == penalty.end())
                throw ConfigError("contract: penalty missing for grid date " + std::to_string(d));
        }
        for (const auto& [d, p] : penalty) {
            if (std::find(grid.begin(), grid.end(), d) == grid.end())
                throw ConfigError("contract: penalty given for non-grid date " + std::to_string(d));
            if (!(p > 0.0 && p <= 1.0)) throw ConfigError("contract: penalty values must lie in (0, 1]");
        }
        if (static_cast<int>(discount_factors.size()) != maturity)
            throw ConfigError("contract: discount_factors needs one factor per period (" + std::to_string(maturity) +
                              ")");
        for (double f : discount_factors)
            if (!(f > 0.0) || !std::isfinite(f)) throw ConfigError("contract: discount factors must be positive");
    }

    [[nodiscard]] double discount(int t, int u) const {
        if (t < 0 || u > maturity || t > u) throw IndexError("discount: need 0 <= t <= u <= T");
        double b = 1.0;
        for (int r = t; r < u; ++r) b *= discount_factors[static_cast<std::size_t>(r)];
        return b;
    }

    [[nodiscard]] double penalty_at(int date) const {
        const auto it = penalty.find(date);
        if (it == penalty.end()) throw IndexError("penalty: no entry for date " + std::to_string(date));
        return it->second;
    }

    [[nodiscard]] double total_premium() const noexcept {
        double s = premium_at_zero;
        for (double p : payments) s += p;
        return s;
    }
};

inline double guarantee_value(const VAContract& c, int t) {
    double k = 0.0;
    for (std::size_t i = 0; i < c.grid.size(); ++i)
        if (c.grid[i] <= t) k += std::exp(c.delta * (t - c.grid[i])) * c.payments[i];
    return c.guarantee_factor * k;
}

/// s_path[t] = S_t for t = 0..; must cover 0..t.
inline double fund_value(const VAContract& c, std::span<const double> s_path, int t) {
    if (t < 0 || static_cast<std::size_t>(t) >= s_path.size())
        throw IndexError("fund_value: price path does not cover t=" + std::to_string(t));
    double units = 0.0;
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
        if (c.grid[i] > t) break;
        const double s = s_path[static_cast<std::size_t>(c.grid[i])];
        if (!(s > 0.0)) throw NonpositivePriceError("fund_value: S at grid date is not positive");
        units += c.payments[i] / s;
    }
    const double st = s_path[static_cast<std::size_t>(t)];
    if (!(st > 0.0)) throw NonpositivePriceError("fund_value: S_t is not positive");
    return units * st;
}

/// Smallest element of grid u {T} that is >= t.
inline int settle_date(const VAContract& c, int t) {
    if (t < 1 || t > c.maturity) throw IndexError("settle_date: need 1 <= t <= T");
    for (int d : c.grid)
        if (d >= t) return d;
    return c.maturity;
}

}  // namespace vaffine
