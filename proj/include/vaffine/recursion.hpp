#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vaffine/affine_model.hpp"
#include "vaffine/errors.hpp"
#include "vaffine/stopping_times.hpp"

namespace vaffine {

/// Which part of the coefficient schedule a time index belongs to.
///   terminal: t = T with at most one hazard still running
///   single:   only one hazard running, t < T
///   joint:    both hazards running (includes t = s = T)
enum class KappaBranch { none, terminal, single, joint };

/// Engine-wide knobs. `flip_branch` negates the coefficient vector on one branch;
/// it exists only so the verification suite can prove that the oracles notice.
struct EngineOptions {
    double overflow_bound = 700.0;
    KappaBranch flip_branch = KappaBranch::none;
};

/// Stock ratio S_T / S_{T'}: the Y loading `abar` is removed at date T'.
/// An empty `abar` means "same as the leg's a".
struct RatioSpec {
    int T_prime = 0;
    CVector abar;
};

/// One closed-form expectation
///   E[ e^{a0 (T - T')} e^{a.Y_T - abar.Y_T'} e^{-Lambda^m_{r_m} - Lambda^s_{r_s}} | Z_0 ]
/// with T' = 0 and no abar term when `ratio` is empty.
/// Unprimed: (r_m, r_s) = (H, s). Primed: (r_m, r_s) = (s, H). H defaults to T.
struct LegSpec {
    double a0 = 0.0;
    CVector a;
    IntensityLoading loading_m;
    std::optional<IntensityLoading> loading_s;
    int s = 0;
    int T = 0;
    std::optional<int> hazard_end;
    bool primed = false;
    std::optional<RatioSpec> ratio;

    [[nodiscard]] int H() const noexcept { return hazard_end.value_or(T); }
    [[nodiscard]] int r_m() const noexcept { return primed ? s : H(); }
    [[nodiscard]] int r_s() const noexcept {
        if (!loading_s) return 0;
        return primed ? H() : s;
    }
    [[nodiscard]] int T_prime() const noexcept { return ratio ? ratio->T_prime : 0; }
    [[nodiscard]] const CVector& abar() const noexcept {
        return ratio && !ratio->abar.empty() ? ratio->abar : a;
    }

    void validate(const AffineModel& model) const {
        if (T < 0) throw IndexError("leg: T must be >= 0");
        if (s < 0 || s > H()) throw IndexError("leg: need 0 <= s <= H (s=" + std::to_string(s) + ")");
        if (H() < 0 || H() > T) throw IndexError("leg: hazard_end must lie in 0..T");
        if (a.size() != model.d2()) throw DimensionError("leg: stock loading a must have length d2");
        loading_m.validate(model, "loading_m");
        if (loading_s) loading_s->validate(model, "loading_s");
        if (ratio) {
            if (ratio->T_prime <= 0 || ratio->T_prime > T)
                throw IndexError("leg: ratio date must satisfy 0 < T' <= T");
            if (!ratio->abar.empty() && ratio->abar.size() != model.d2())
                throw DimensionError("leg: ratio loading must have length d2");
        }
    }
};

/// Case-split selector for a leg whose hazards run to T:
///   t = T, s < T   -> (-b^m, a - c^m)
///   s < t < T      -> (-b^m, -c^m)
///   t <= s         -> (-b^m - b^s, -c^m - c^s), plus a when t = s = T
inline std::pair<CVector, CVector> kappa(std::span<const Complex> a, const IntensityLoading& lm,
                                         const IntensityLoading& ls, int t, int s, int T) {
    if (t < 0 || t > T) throw IndexError("kappa: t=" + std::to_string(t) + " outside 0..T");
    if (s < 0 || s > T) throw IndexError("kappa: s=" + std::to_string(s) + " outside 0..T");
    CVector k1(lm.b.size()), k2(lm.c.size());
    for (std::size_t j = 0; j < k1.size(); ++j) k1[j] = -lm.b[j];
    for (std::size_t j = 0; j < k2.size(); ++j) k2[j] = -lm.c[j];
    if (t <= s) {
        for (std::size_t j = 0; j < k1.size(); ++j) k1[j] -= ls.b[j];
        for (std::size_t j = 0; j < k2.size(); ++j) k2[j] -= ls.c[j];
    }
    if (t == T)
        for (std::size_t j = 0; j < k2.size(); ++j) k2[j] += a[j];
    return {std::move(k1), std::move(k2)};
}

inline KappaBranch branch_of(const LegSpec& leg, int t) {
    const int joint_end = leg.loading_s ? std::min(leg.r_m(), leg.r_s()) : leg.r_m();
    if (leg.loading_s && t <= joint_end) return KappaBranch::joint;
    if (t == leg.T) return KappaBranch::terminal;
    return KappaBranch::single;
}

/// Coefficient (kappa1_t, kappa2_t) multiplying Z_t inside the exponent, t = 1..T.
inline std::pair<CVector, CVector> coefficient_schedule(const LegSpec& leg, int t,
                                                        const EngineOptions& opts = {}) {
    const std::size_t d1 = leg.loading_m.b.size();
    const std::size_t d2 = leg.loading_m.c.size();
    CVector k1(d1, Complex{0.0}), k2(d2, Complex{0.0});
    auto add_hazard = [&](const IntensityLoading& l) {
        for (std::size_t j = 0; j < d1; ++j) k1[j] -= l.b[j];
        for (std::size_t j = 0; j < d2; ++j) k2[j] -= l.c[j];
    };
    if (t <= leg.r_m()) add_hazard(leg.loading_m);
    if (leg.loading_s && t <= leg.r_s()) add_hazard(*leg.loading_s);
    if (t == leg.T)
        for (std::size_t j = 0; j < d2; ++j) k2[j] += leg.a[j];
    if (leg.ratio && t == leg.ratio->T_prime) {
        const auto& ab = leg.abar();
        for (std::size_t j = 0; j < d2; ++j) k2[j] -= ab[j];
    }
    if (opts.flip_branch != KappaBranch::none && branch_of(leg, t) == opts.flip_branch) {
        for (auto& v : k1) v = -v;
        for (auto& v : k2) v = -v;
    }
    return {std::move(k1), std::move(k2)};
}

/// Backward recursion output. Index conventions:
///   phi[t], t = 1..T (phi[0] = 0 unused); Phi[t] = sum_{t' > t} phi[t'], t = 0..T;
///   psi1[t], psi2[t], t = 1..T+1 with psi(T+1) = 0.
/// E[exp(sum_{t' > t} kappa_t'.Z_t') | F_t] = exp(Phi[t] + psi1[t+1].X_t + psi2[t+1].Y_t).
struct CoefficientTable {
    int T = 0;
    CVector phi;
    std::vector<CVector> psi1;
    std::vector<CVector> psi2;
    CVector Phi;
    LegSpec leg;

    [[nodiscard]] Complex exponent(int t, std::span<const double> x, std::span<const double> y) const {
        if (t < 0 || t > T) throw IndexError("table exponent: t outside 0..T");
        Complex e = Phi[static_cast<std::size_t>(t)];
        const auto& p1 = psi1[static_cast<std::size_t>(t + 1)];
        const auto& p2 = psi2[static_cast<std::size_t>(t + 1)];
        for (std::size_t j = 0; j < x.size(); ++j) e += p1[j] * x[j];
        for (std::size_t j = 0; j < y.size(); ++j) e += p2[j] * y[j];
        return e;
    }

    /// One row per t: t, Re/Im phi, Re/Im Phi, then Re/Im of psi1(t), psi2(t).
    void dump(std::ostream& os) const {
        os << "t,phi_re,phi_im,Phi_re,Phi_im";
        for (std::size_t j = 0; j < psi1[0].size(); ++j) os << ",psi1_" << j << "_re,psi1_" << j << "_im";
        for (std::size_t j = 0; j < psi2[0].size(); ++j) os << ",psi2_" << j << "_re,psi2_" << j << "_im";
        os << '\n' << std::setprecision(17);
        for (int t = 0; t <= T + 1; ++t) {
            const auto i = static_cast<std::size_t>(t);
            const Complex ph = t <= T ? phi[i] : Complex{0.0};
            const Complex Ph = t <= T ? Phi[i] : Complex{0.0};
            os << t << ',' << ph.real() << ',' << ph.imag() << ',' << Ph.real() << ',' << Ph.imag();
            for (const auto& v : psi1[i]) os << ',' << v.real() << ',' << v.imag();
            for (const auto& v : psi2[i]) os << ',' << v.real() << ',' << v.imag();
            os << '\n';
        }
    }
};

inline CoefficientTable build_table(const AffineModel& model, const LegSpec& leg, const EngineOptions& opts = {}) {
    leg.validate(model);
    const int T = leg.T;
    const std::size_t d1 = model.d1(), d2 = model.d2();
    CoefficientTable tab;
    tab.T = T;
    tab.leg = leg;
    tab.phi.assign(static_cast<std::size_t>(T + 1), Complex{0.0});
    tab.Phi.assign(static_cast<std::size_t>(T + 1), Complex{0.0});
    tab.psi1.assign(static_cast<std::size_t>(T + 2), CVector(d1, Complex{0.0}));
    tab.psi2.assign(static_cast<std::size_t>(T + 2), CVector(d2, Complex{0.0}));

    CVector u(d1), v(d2);
    for (int t = T; t >= 1; --t) {
        const auto i = static_cast<std::size_t>(t);
        const auto [k1, k2] = coefficient_schedule(leg, t, opts);
        for (std::size_t j = 0; j < d1; ++j) u[j] = tab.psi1[i + 1][j] + k1[j];
        for (std::size_t j = 0; j < d2; ++j) v[j] = tab.psi2[i + 1][j] + k2[j];
        try {
            const PLogMgf p = model.logmgf_X_P(u);
            for (std::size_t j = 0; j < d2; ++j) v[j] += p.gamma[j];
            const QLogMgf q = model.logmgf_Y_Q(v);
            tab.phi[i] = p.alpha + q.A;
            tab.psi1[i] = p.beta;
            tab.psi2[i] = q.B;
        } catch (const DomainError& e) {
            throw DomainError(e.what(), t);
        }
        tab.Phi[i - 1] = tab.Phi[i] + tab.phi[i];
        if (!std::isfinite(tab.Phi[i - 1].real()) || tab.Phi[i - 1].real() > opts.overflow_bound)
            throw OverflowError("coefficient recursion: Re Phi exceeds bound at t=" + std::to_string(t - 1));
    }
    return tab;
}

/// Q-capitalization coefficients: E_Q[exp(a0 T + a.Y_T) | Y_t] = exp(A + B.Y_t).
struct QCapCoefficients {
    Complex A;
    CVector B;
    int t = 0;
    int T = 0;
};

inline QCapCoefficients q_cap(const AffineModel& model, int t, int T, double a0, std::span<const Complex> a) {
    if (t < 0 || t > T) throw IndexError("q_cap: need 0 <= t <= T");
    if (a.size() != model.d2()) throw DimensionError("q_cap: a must have length d2");
    QCapCoefficients out{Complex{a0 * T}, CVector(a.begin(), a.end()), t, T};
    for (int r = T - 1; r >= t; --r) {
        try {
            const QLogMgf q = model.logmgf_Y_Q(out.B);
            out.A += q.A;
            out.B = q.B;
        } catch (const DomainError& e) {
            throw DomainError(e.what(), r);
        }
    }
    return out;
}

enum class KernelRoute { automatic, direct, composed };

namespace detail {

inline Complex finish_kernel(Complex exponent, const EngineOptions& opts) {
    if (!std::isfinite(exponent.real()) || exponent.real() > opts.overflow_bound)
        throw OverflowError("kernel exponent real part " + std::to_string(exponent.real()) + " exceeds bound");
    return std::exp(exponent);
}

inline Complex table_exponent_at_zero(const AffineModel& model, const CoefficientTable& tab) {
    return tab.exponent(0, model.x0(), model.y0());
}

}  // namespace detail

/// Single backward recursion over the full horizon.
inline Complex kernel_direct(const AffineModel& model, const LegSpec& leg, const EngineOptions& opts = {}) {
    const auto tab = build_table(model, leg, opts);
    const double shift = leg.a0 * (leg.T - leg.T_prime());
    return detail::finish_kernel(shift + detail::table_exponent_at_zero(model, tab), opts);
}

/// Hazard-bearing recursion up to H, composed with Q-capitalization beyond H.
inline Complex kernel_composed(const AffineModel& model, const LegSpec& leg, const EngineOptions& opts = {}) {
    leg.validate(model);
    const int H = leg.H();
    if (H == leg.T) return kernel_direct(model, leg, opts);

    LegSpec inner = leg;
    inner.a0 = 0.0;
    inner.T = H;
    inner.hazard_end.reset();
    inner.ratio.reset();

    Complex outer{0.0};
    if (!leg.ratio) {
        const auto cap = q_cap(model, H, leg.T, leg.a0, leg.a);
        outer = cap.A;
        inner.a = cap.B;
    } else if (leg.ratio->T_prime <= H) {
        const auto cap = q_cap(model, H, leg.T, leg.a0, leg.a);
        outer = cap.A - leg.a0 * leg.ratio->T_prime;
        inner.a = cap.B;
        inner.ratio = RatioSpec{leg.ratio->T_prime, leg.abar()};
    } else {
        const int Tp = leg.ratio->T_prime;
        const auto cap1 = q_cap(model, Tp, leg.T, leg.a0, leg.a);
        CVector c = cap1.B;
        const auto& ab = leg.abar();
        for (std::size_t j = 0; j < c.size(); ++j) c[j] -= ab[j];
        const auto cap2 = q_cap(model, H, Tp, 0.0, c);
        outer = cap1.A - leg.a0 * Tp + cap2.A;
        inner.a = cap2.B;
    }
    const auto tab = build_table(model, inner, opts);
    return detail::finish_kernel(outer + detail::table_exponent_at_zero(model, tab), opts);
}

/// E[(S_T/S_T' or S_T or 1) e^{-Lambda^m_{r_m} - Lambda^s_{r_s}} | Z_0], scaled by
/// e^{-Lambda^m_0 - Lambda^s_0} for nonzero starting hazards. The automatic route is the
/// direct recursion, which runs every kappa branch; the composed route is kept as a cross-check.
inline Complex expectation_kernel(const AffineModel& model, const LegSpec& leg, double Lambda_m_0 = 0.0,
                                  double Lambda_s_0 = 0.0, const EngineOptions& opts = {},
                                  KernelRoute route = KernelRoute::automatic) {
    Complex k;
    switch (route) {
        case KernelRoute::automatic:
        case KernelRoute::direct:
            k = kernel_direct(model, leg, opts);
            break;
        case KernelRoute::composed:
            k = kernel_composed(model, leg, opts);
            break;
    }
    return k * std::exp(-Lambda_m_0 - Lambda_s_0);
}

}  // namespace vaffine
