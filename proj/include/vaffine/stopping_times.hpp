#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vaffine/affine_model.hpp"
#include "vaffine/errors.hpp"

namespace vaffine {

/// Affine cumulative hazard Lambda_t = b0 + sum_{s=0}^{t} (b.X_s + c.Y_s) with b0
/// fixed so that Lambda_0 = 0. Loadings are nonnegative and vanish on gaussian
/// coordinates, which makes every reachable path nondecreasing.
struct IntensityLoading {
    RVector b;
    RVector c;

    static IntensityLoading zero(const AffineModel& model) {
        return {RVector(model.d1(), 0.0), RVector(model.d2(), 0.0)};
    }

    void validate(const AffineModel& model, const std::string& name = "loading") const {
        if (b.size() != model.d1())
            throw DimensionError(name + ".b has length " + std::to_string(b.size()) + ", expected " +
                                 std::to_string(model.d1()));
        if (c.size() != model.d2())
            throw DimensionError(name + ".c has length " + std::to_string(c.size()) + ", expected " +
                                 std::to_string(model.d2()));
        auto check = [&](const RVector& v, const std::vector<FactorCoordinate>& coords, const char* tag) {
            for (std::size_t j = 0; j < v.size(); ++j) {
                if (!(v[j] >= 0.0) || !std::isfinite(v[j]))
                    throw ConfigError(name + "." + tag + "[" + std::to_string(j) + "] must be finite and >= 0");
                if (v[j] != 0.0 && !coords[j].nonnegative())
                    throw ConfigError(name + "." + tag + "[" + std::to_string(j) +
                                      "] loads a gaussian coordinate; only nonnegative coordinates may carry hazard");
            }
        };
        check(b, model.x_coords(), "b");
        check(c, model.y_coords(), "c");
    }

    [[nodiscard]] bool is_zero() const noexcept {
        for (double v : b)
            if (v != 0.0) return false;
        for (double v : c)
            if (v != 0.0) return false;
        return true;
    }

    /// b.x + c.y for one state.
    [[nodiscard]] double rate(std::span<const double> x, std::span<const double> y) const noexcept {
        double r = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) r += b[j] * x[j];
        for (std::size_t j = 0; j < c.size(); ++j) r += c[j] * y[j];
        return r;
    }

    [[nodiscard]] double b0(const AffineModel& model) const { return -rate(model.x0(), model.y0()); }

    [[nodiscard]] IntensityLoading scaled(double factor) const {
        IntensityLoading out = *this;
        for (double& v : out.b) v *= factor;
        for (double& v : out.c) v *= factor;
        return out;
    }
};

/// Lambda_0..Lambda_T along one factor path.
struct HazardPath {
    RVector values;

    [[nodiscard]] int horizon() const noexcept { return static_cast<int>(values.size()) - 1; }

    /// Lambda_t with the convention Lambda_{-1} = 0.
    [[nodiscard]] double at(int t) const {
        if (t < 0) return 0.0;
        if (t > horizon()) throw IndexError("hazard path index " + std::to_string(t) + " beyond horizon");
        return values[static_cast<std::size_t>(t)];
    }
};

/// Factor path Z_0..Z_T, each state ordered (X, Y).
using StatePath = std::vector<RVector>;

inline HazardPath cum_hazard(const StatePath& z_path, const IntensityLoading& loading) {
    const std::size_t d1 = loading.b.size();
    const std::size_t d2 = loading.c.size();
    HazardPath out;
    out.values.reserve(z_path.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < z_path.size(); ++t) {
        const auto& z = z_path[t];
        if (z.size() != d1 + d2)
            throw DimensionError("cum_hazard: state at t=" + std::to_string(t) + " has length " +
                                 std::to_string(z.size()));
        const std::span<const double> zs(z);
        if (t > 0) {
            const double inc = loading.rate(zs.first(d1), zs.subspan(d1));
            if (inc < 0.0)
                throw NegativeIncrementError("cum_hazard: increment " + std::to_string(inc) + " < 0 at t=" +
                                             std::to_string(t));
            acc += inc;
        }
        out.values.push_back(acc);
    }
    return out;
}

enum class CopulaKind { independence, clayton };

/// Survival copula C(u,v) = P(exp(-E^m) < u, exp(-E^s) < v) of the two exponential thresholds.
struct SurvivalCopula {
    CopulaKind kind = CopulaKind::independence;
    double theta = 0.0;

    static SurvivalCopula independence() { return {}; }
    static SurvivalCopula clayton(double theta) {
        if (!(theta > 0.0)) throw ConfigError("clayton copula needs theta > 0");
        return {CopulaKind::clayton, theta};
    }

    [[nodiscard]] double operator()(double u, double v) const {
        if (kind == CopulaKind::independence) return u * v;
        if (u <= 0.0 || v <= 0.0) return 0.0;
        return std::pow(std::pow(u, -theta) + std::pow(v, -theta) - 1.0, -1.0 / theta);
    }

    /// Draws (U, V) with this copula (Marshall-Olkin frailty for clayton).
    template <class Rng>
    [[nodiscard]] std::pair<double, double> sample(Rng& rng) const {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        auto open01 = [&] {
            double x = 0.0;
            while (x <= 0.0) x = unif(rng);
            return x;
        };
        if (kind == CopulaKind::independence) return {open01(), open01()};
        std::gamma_distribution<double> frailty(1.0 / theta, 1.0);
        const double w = frailty(rng);
        const double e1 = -std::log(open01());
        const double e2 = -std::log(open01());
        return {std::pow(1.0 + e1 / w, -1.0 / theta), std::pow(1.0 + e2 / w, -1.0 / theta)};
    }
};

inline std::string to_string(CopulaKind k) { return k == CopulaKind::independence ? "independence" : "clayton"; }

/// Mortality and surrender hazard loadings with their threshold copula.
struct Loadings {
    IntensityLoading mortality;
    IntensityLoading surrender;
    SurvivalCopula copula;

    void validate(const AffineModel& model) const {
        mortality.validate(model, "mortality");
        surrender.validate(model, "surrender");
    }
};

/// Gamma(t1, t2) = C(exp(-Lambda^m_{t1}), exp(-Lambda^s_{t2})), with index -1 meaning time "before 0".
inline double gamma_surface(int t1, int t2, const HazardPath& lm, const HazardPath& ls, const SurvivalCopula& copula) {
    if (copula.kind == CopulaKind::independence) return std::exp(-lm.at(t1) - ls.at(t2));
    return copula(std::exp(-lm.at(t1)), std::exp(-ls.at(t2)));
}

/// Atoms of the two-time partition at time t, keyed by event:
///   joint_survival  {tau^m > t, tau^s > t}
///   surrender_at    {tau^m > t, tau^s = u}
///   death_at        {tau^m = u, tau^s > t}
///   both_at         {tau^m = u, tau^s = v}
/// u, v range over 0..T; u = t is allowed.
enum class AtomKind { joint_survival, surrender_at, death_at, both_at };

inline double atom_prob(AtomKind kind, int t, int u, int v, const HazardPath& lm, const HazardPath& ls,
                        const SurvivalCopula& copula) {
    const int horizon = std::min(lm.horizon(), ls.horizon());
    auto check = [&](int i, const char* name) {
        if (i < 0 || i > horizon)
            throw IndexError(std::string("atom_prob: ") + name + "=" + std::to_string(i) + " outside 0.." +
                             std::to_string(horizon));
    };
    check(t, "t");
    auto g = [&](int a, int b) { return gamma_surface(a, b, lm, ls, copula); };
    switch (kind) {
        case AtomKind::joint_survival:
            return g(t, t);
        case AtomKind::surrender_at:
            check(u, "u");
            return g(t, u - 1) - g(t, u);
        case AtomKind::death_at:
            check(u, "u");
            return g(u - 1, t) - g(u, t);
        case AtomKind::both_at:
            check(u, "u");
            check(v, "v");
            return g(u - 1, v - 1) - g(u, v - 1) - g(u - 1, v) + g(u, v);
    }
    return 0.0;
}

/// First grid time at which a nondecreasing hazard reaches `threshold`; horizon+1 if never.
inline int first_passage(const HazardPath& path, double threshold) {
    for (int t = 1; t <= path.horizon(); ++t)
        if (path.values[static_cast<std::size_t>(t)] >= threshold) return t;
    return path.horizon() + 1;
}

/// Draws (tau^m, tau^s) given both hazard paths; each lies in {1..T, T+1}.
template <class Rng>
std::pair<int, int> sample_times(const HazardPath& lm, const HazardPath& ls, const SurvivalCopula& copula, Rng& rng) {
    const auto [u, v] = copula.sample(rng);
    return {first_passage(lm, -std::log(u)), first_passage(ls, -std::log(v))};
}

/// e^{Lambda_t} sum_{s=t+1}^{T} A_s (e^{-Lambda_{s-1}} - e^{-Lambda_s}): the value of A_tau on
/// {tau > t} for a single doubly stochastic time, given the hazard path. A is indexed 0..T.
inline double single_time_payoff_formula(std::span<const double> A, const HazardPath& L, int t) {
    const int T = L.horizon();
    if (t < 0 || t >= T) throw IndexError("single_time_payoff_formula: need 0 <= t < T");
    if (static_cast<int>(A.size()) != T + 1) throw DimensionError("single_time_payoff_formula: A must cover 0..T");
    double acc = 0.0;
    for (int s = t + 1; s <= T; ++s) acc += A[static_cast<std::size_t>(s)] * (std::exp(-L.at(s - 1)) - std::exp(-L.at(s)));
    return std::exp(L.at(t)) * acc;
}

/// Conditional value on {tau^m > t, tau^s > t} of the payoff that pays A^m at death
/// strictly before surrender and A^s at surrender no later than death, both before T:
///   (G^{1,1}_t)^{-1} sum_{u=t+1}^{T-1} (A^m_u P(tau^m=u, tau^s>u) + A^s_u P(tau^m>u-1, tau^s=u)).
inline double two_time_payoff_formula(std::span<const double> Am, std::span<const double> As, const HazardPath& lm,
                                      const HazardPath& ls, const SurvivalCopula& copula, int t) {
    const int T = std::min(lm.horizon(), ls.horizon());
    if (t < 0 || t >= T) throw IndexError("two_time_payoff_formula: need 0 <= t < T");
    if (static_cast<int>(Am.size()) != T + 1 || static_cast<int>(As.size()) != T + 1)
        throw DimensionError("two_time_payoff_formula: payment arrays must cover 0..T");
    double acc = 0.0;
    for (int u = t + 1; u <= T - 1; ++u) {
        const auto i = static_cast<std::size_t>(u);
        acc += Am[i] * atom_prob(AtomKind::death_at, u, u, 0, lm, ls, copula) +
               As[i] * atom_prob(AtomKind::surrender_at, u - 1, u, 0, lm, ls, copula);
    }
    return acc / atom_prob(AtomKind::joint_survival, t, 0, 0, lm, ls, copula);
}

}  // namespace vaffine
