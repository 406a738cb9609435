#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vaffine/errors.hpp"

namespace vaffine {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;
using RVector = std::vector<double>;

inline CVector to_complex(std::span<const double> v) { return CVector(v.begin(), v.end()); }

enum class CoordinateKind { constant_one, gaussian_ar1, autoregressive_gamma };

inline std::string to_string(CoordinateKind k) {
    switch (k) {
        case CoordinateKind::constant_one: return "constant_one";
        case CoordinateKind::gaussian_ar1: return "gaussian_ar1";
        case CoordinateKind::autoregressive_gamma: return "autoregressive_gamma";
    }
    return "unknown";
}

/// Deterministic shift X += eta * Y[index] applied after the coordinate's own draw.
struct YLoading {
    std::size_t index = 0;
    double eta = 0.0;
};

/// One scalar coordinate of the factor process together with its one-step law.
///
/// The own-dynamics log-MGF is E[exp(u x') | x] = exp(A(u) + B(u) x):
///   constant_one          A = 0,                     B = u
///   gaussian_ar1          A = mu u + sigma^2 u^2/2,  B = rho u
///   autoregressive_gamma  A = -k log(1 - u eps),     B = rho u / (1 - u eps),  Re u < 1/eps
/// The ARG law is the Poisson mixture Gamma(k + N, eps), N ~ Poisson(rho x / eps).
struct FactorCoordinate {
    CoordinateKind kind = CoordinateKind::constant_one;
    double mu = 0.0;
    double rho = 0.0;
    double sigma = 0.0;
    double shape = 0.0;
    double scale = 0.0;
    std::optional<YLoading> y_loading;

    static FactorCoordinate constant_one() { return {}; }

    static FactorCoordinate gaussian_ar1(double mu, double rho, double sigma) {
        FactorCoordinate c;
        c.kind = CoordinateKind::gaussian_ar1;
        c.mu = mu;
        c.rho = rho;
        c.sigma = sigma;
        return c;
    }

    static FactorCoordinate autoregressive_gamma(double shape, double scale, double rho,
                                                 std::optional<YLoading> loading = std::nullopt) {
        FactorCoordinate c;
        c.kind = CoordinateKind::autoregressive_gamma;
        c.shape = shape;
        c.scale = scale;
        c.rho = rho;
        c.y_loading = loading;
        return c;
    }

    [[nodiscard]] bool nonnegative() const noexcept { return kind != CoordinateKind::gaussian_ar1; }

    void validate(const std::string& where) const {
        switch (kind) {
            case CoordinateKind::constant_one:
                break;
            case CoordinateKind::gaussian_ar1:
                if (!(sigma >= 0.0) || !std::isfinite(mu) || !std::isfinite(rho))
                    throw ConfigError(where + ": gaussian_ar1 needs finite mu, rho and sigma >= 0");
                break;
            case CoordinateKind::autoregressive_gamma:
                if (!(shape > 0.0) || !(scale > 0.0) || !(rho >= 0.0))
                    throw ConfigError(where + ": autoregressive_gamma needs shape > 0, scale > 0, rho >= 0");
                break;
        }
        if (y_loading && !(y_loading->eta >= 0.0))
            throw ConfigError(where + ": y_loading eta must be >= 0");
    }

    /// Own-dynamics coefficients (A, B). Throws DomainError outside the convergence strip.
    [[nodiscard]] std::pair<Complex, Complex> logmgf(Complex u) const {
        switch (kind) {
            case CoordinateKind::constant_one:
                return {Complex{0.0}, u};
            case CoordinateKind::gaussian_ar1:
                return {mu * u + 0.5 * sigma * sigma * u * u, rho * u};
            case CoordinateKind::autoregressive_gamma: {
                if (!(u.real() * scale < 1.0))
                    throw DomainError("autoregressive_gamma log-MGF: Re(u) = " + std::to_string(u.real()) +
                                      " >= 1/scale = " + std::to_string(1.0 / scale));
                const Complex d = 1.0 - u * scale;
                return {-shape * std::log(d), rho * u / d};
            }
        }
        return {};
    }

    /// Draws the next value from the own dynamics; gaussian noise is multiplied
    /// by `normal_sign` (antithetic partner paths use -1).
    template <class Rng>
    [[nodiscard]] double sample_own(double x, Rng& rng, double normal_sign = 1.0) const {
        switch (kind) {
            case CoordinateKind::constant_one:
                return 1.0;
            case CoordinateKind::gaussian_ar1: {
                if (sigma == 0.0) return mu + rho * x;
                std::normal_distribution<double> n(0.0, 1.0);
                return mu + rho * x + sigma * normal_sign * n(rng);
            }
            case CoordinateKind::autoregressive_gamma: {
                const double intensity = rho * x / scale;
                long extra = 0;
                if (intensity > 0.0) {
                    std::poisson_distribution<long> p(intensity);
                    extra = p(rng);
                }
                std::gamma_distribution<double> g(shape + static_cast<double>(extra), scale);
                return g(rng);
            }
        }
        return 0.0;
    }
};

/// Coefficients of E_Q[exp(u.Y_{t+1}) | Y_t] = exp(A + B.Y_t).
struct QLogMgf {
    Complex A;
    CVector B;
};

/// Coefficients of E_P[exp(u.X_t) | Y_t, X_{t-1}] = exp(alpha + beta.X_{t-1} + gamma.Y_t).
struct PLogMgf {
    Complex alpha;
    CVector beta;
    CVector gamma;
};

/// The factor process Z = (X, Y): X evolves under P conditionally on Y, Y is
/// autonomous under Q. Coordinates are conditionally independent given their
/// own past and (for X) the current Y.
class AffineModel {
public:
    AffineModel(std::vector<FactorCoordinate> x_coords, std::vector<FactorCoordinate> y_coords, RVector z0)
        : x_(std::move(x_coords)), y_(std::move(y_coords)), z0_(std::move(z0)) {
        if (x_.empty() || y_.empty()) throw ConfigError("model needs at least one X and one Y coordinate");
        if (z0_.size() != x_.size() + y_.size())
            throw ConfigError("z0 has length " + std::to_string(z0_.size()) + ", expected " +
                              std::to_string(x_.size() + y_.size()));
        for (std::size_t j = 0; j < y_.size(); ++j) {
            const auto where = "y_coords[" + std::to_string(j) + "]";
            y_[j].validate(where);
            if (y_[j].y_loading) throw ConfigError(where + ": Y coordinates cannot carry a y_loading");
        }
        for (std::size_t j = 0; j < x_.size(); ++j) {
            const auto where = "x_coords[" + std::to_string(j) + "]";
            x_[j].validate(where);
            if (const auto& l = x_[j].y_loading) {
                if (l->index >= y_.size())
                    throw ConfigError(where + ": y_loading index " + std::to_string(l->index) + " out of range");
                if (!y_[l->index].nonnegative())
                    throw ConfigError(where + ": y_loading must reference a nonnegative Y coordinate");
            }
        }
        for (std::size_t j = 0; j < z0_.size(); ++j) {
            const auto& c = j < x_.size() ? x_[j] : y_[j - x_.size()];
            if (!std::isfinite(z0_[j])) throw ConfigError("z0[" + std::to_string(j) + "] is not finite");
            if (c.kind == CoordinateKind::constant_one && z0_[j] != 1.0)
                throw ConfigError("z0[" + std::to_string(j) + "]: constant_one coordinates start at 1");
            if (c.nonnegative() && z0_[j] < 0.0)
                throw ConfigError("z0[" + std::to_string(j) + "] must be nonnegative");
        }
    }

    [[nodiscard]] std::size_t d1() const noexcept { return x_.size(); }
    [[nodiscard]] std::size_t d2() const noexcept { return y_.size(); }
    [[nodiscard]] const std::vector<FactorCoordinate>& x_coords() const noexcept { return x_; }
    [[nodiscard]] const std::vector<FactorCoordinate>& y_coords() const noexcept { return y_; }
    [[nodiscard]] const RVector& z0() const noexcept { return z0_; }
    [[nodiscard]] std::span<const double> x0() const noexcept { return {z0_.data(), x_.size()}; }
    [[nodiscard]] std::span<const double> y0() const noexcept { return {z0_.data() + x_.size(), y_.size()}; }

    [[nodiscard]] QLogMgf logmgf_Y_Q(std::span<const Complex> u) const {
        if (u.size() != y_.size())
            throw DimensionError("logmgf_Y_Q: argument has length " + std::to_string(u.size()) +
                                 ", expected " + std::to_string(y_.size()));
        QLogMgf out{Complex{0.0}, CVector(y_.size())};
        for (std::size_t j = 0; j < y_.size(); ++j) {
            const auto [a, b] = y_[j].logmgf(u[j]);
            out.A += a;
            out.B[j] = b;
        }
        return out;
    }

    [[nodiscard]] PLogMgf logmgf_X_P(std::span<const Complex> u) const {
        if (u.size() != x_.size())
            throw DimensionError("logmgf_X_P: argument has length " + std::to_string(u.size()) +
                                 ", expected " + std::to_string(x_.size()));
        PLogMgf out{Complex{0.0}, CVector(x_.size()), CVector(y_.size())};
        for (std::size_t j = 0; j < x_.size(); ++j) {
            const auto [a, b] = x_[j].logmgf(u[j]);
            out.alpha += a;
            out.beta[j] = b;
            if (const auto& l = x_[j].y_loading) out.gamma[l->index] += l->eta * u[j];
        }
        return out;
    }

    template <class Rng>
    void step_Y_Q(std::span<const double> y, std::span<double> out, Rng& rng, double normal_sign = 1.0) const {
        for (std::size_t j = 0; j < y_.size(); ++j) out[j] = y_[j].sample_own(y[j], rng, normal_sign);
    }

    template <class Rng>
    [[nodiscard]] RVector step_Y_Q(std::span<const double> y, Rng& rng) const {
        check_size(y.size(), y_.size(), "step_Y_Q");
        RVector out(y_.size());
        step_Y_Q(y, std::span<double>(out), rng);
        return out;
    }

    template <class Rng>
    void step_X_P(std::span<const double> x, std::span<const double> y_next, std::span<double> out, Rng& rng,
                  double normal_sign = 1.0) const {
        for (std::size_t j = 0; j < x_.size(); ++j) {
            double v = x_[j].sample_own(x[j], rng, normal_sign);
            if (const auto& l = x_[j].y_loading) v += l->eta * y_next[l->index];
            out[j] = v;
        }
    }

    template <class Rng>
    [[nodiscard]] RVector step_X_P(std::span<const double> x, std::span<const double> y_next, Rng& rng) const {
        check_size(x.size(), x_.size(), "step_X_P");
        check_size(y_next.size(), y_.size(), "step_X_P");
        RVector out(x_.size());
        step_X_P(x, y_next, std::span<double>(out), rng);
        return out;
    }

private:
    static void check_size(std::size_t got, std::size_t want, const char* where) {
        if (got != want)
            throw DimensionError(std::string(where) + ": length " + std::to_string(got) + ", expected " +
                                 std::to_string(want));
    }

    std::vector<FactorCoordinate> x_;
    std::vector<FactorCoordinate> y_;
    RVector z0_;
};

/// Discounted stock S_t = exp(a0 t + a.Y_t).
struct MarketSpec {
    double a0 = 0.0;
    RVector a;

    /// Chooses a0 so that S is a Q-martingale: a0 = -A_Q(a). Requires B_Q(a) = a,
    /// otherwise no drift makes S a martingale and ConfigError is raised.
    static MarketSpec martingale(const AffineModel& model, RVector a, double tol = 1e-12) {
        if (a.size() != model.d2()) throw DimensionError("market loading a must have length d2");
        const auto q = model.logmgf_Y_Q(to_complex(a));
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (std::abs(q.B[j] - a[j]) > tol * (1.0 + std::abs(a[j])))
                throw ConfigError("enforce_martingale: B_Q(a) != a in component " + std::to_string(j) +
                                  " (B_Q(a)=" + std::to_string(q.B[j].real()) + ", a=" + std::to_string(a[j]) +
                                  ")");
        }
        return MarketSpec{-q.A.real(), std::move(a)};
    }

    [[nodiscard]] bool is_martingale(const AffineModel& model, double tol = 1e-12) const {
        const auto q = model.logmgf_Y_Q(to_complex(a));
        if (std::abs(q.A.real() + a0) > tol) return false;
        for (std::size_t j = 0; j < a.size(); ++j)
            if (std::abs(q.B[j] - a[j]) > tol * (1.0 + std::abs(a[j]))) return false;
        return true;
    }

    [[nodiscard]] double log_price(int t, std::span<const double> y) const {
        double v = a0 * t;
        for (std::size_t j = 0; j < a.size(); ++j) v += a[j] * y[j];
        return v;
    }
};

}  // namespace vaffine
