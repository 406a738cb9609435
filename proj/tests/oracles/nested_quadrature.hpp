#pragma once

// Brute-force expectations of exp(sum_t c_t . Z_t) by nested quadrature over the
// one-step transition laws. Node sets come from Golub-Welsch on the Jacobi matrices
// of the Hermite and generalized Laguerre weights; the autoregressive gamma law is
// integrated through its Poisson mixture of gamma densities. Nothing here touches
// the log-MGF coefficients of the library.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vaffine/affine_model.hpp"

namespace oracle {

using Complex = std::complex<double>;

struct Rule {
    std::vector<double> x;
    std::vector<double> w;
};

/// Probabilists' normal rule: E[f(N(0,1))] ~ sum w_i f(x_i).
inline Rule normal_rule(int n) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(i / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    Rule r;
    for (int i = 0; i < n; ++i) {
        r.x.push_back(std::sqrt(2.0) * es.eigenvalues()(i));
        const double v = es.eigenvectors()(0, i);
        r.w.push_back(v * v);
    }
    return r;
}

/// Gamma(alpha + 1, 1) rule: E[f(G)] ~ sum w_i f(x_i).
inline Rule gamma_rule_uncached(int n, double alpha) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) J(i, i) = 2.0 * i + alpha + 1.0;
    for (int i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(i * (i + alpha));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    Rule r;
    for (int i = 0; i < n; ++i) {
        r.x.push_back(es.eigenvalues()(i));
        const double v = es.eigenvectors()(0, i);
        r.w.push_back(v * v);
    }
    return r;
}

inline const Rule& gamma_rule(int n, double alpha) {
    static std::map<std::pair<int, double>, Rule> cache;
    auto it = cache.find({n, alpha});
    if (it == cache.end()) it = cache.emplace(std::pair{n, alpha}, gamma_rule_uncached(n, alpha)).first;
    return it->second;
}

struct Settings {
    int normal_nodes = 40;
    int gamma_nodes = 16;
    /// Poisson terms below this mass (past the mode) are dropped.
    double poisson_tail = 1e-18;
    int poisson_max = 240;
};

/// Node sets for one scalar coordinate's one-step transition law.
class TransitionNodes {
public:
    TransitionNodes(const vaffine::FactorCoordinate& c, const Settings& s) : c_(c), s_(s) {
        if (c.kind == vaffine::CoordinateKind::gaussian_ar1) normal_ = normal_rule(s.normal_nodes);
    }

    [[nodiscard]] const vaffine::FactorCoordinate& coordinate() const { return c_; }
    [[nodiscard]] const Rule& normal() const { return normal_; }

    /// P(N = j), N ~ Poisson(rho x / scale), for j = 0.. until the tail is negligible.
    [[nodiscard]] std::vector<double> poisson_weights(double x) const {
        const double lam = c_.rho * x / c_.scale;
        std::vector<double> p;
        double pj = std::exp(-lam);
        for (int j = 0; j <= s_.poisson_max; ++j) {
            if (j > 0) pj *= lam / j;
            p.push_back(pj);
            if (lam == 0.0 || (j > lam && pj < s_.poisson_tail)) break;
        }
        return p;
    }

    /// Gamma(shape + j, scale) nodes: values scale * x_i with weights w_i.
    const Rule& gamma(int j) {
        auto it = gamma_.find(j);
        if (it == gamma_.end()) it = gamma_.emplace(j, gamma_rule(s_.gamma_nodes, c_.shape + j - 1.0)).first;
        return it->second;
    }

    /// E[exp(c * (next value without shift)) | x] by quadrature.
    Complex one_step(double x, Complex c) {
        switch (c_.kind) {
            case vaffine::CoordinateKind::constant_one: return std::exp(c);
            case vaffine::CoordinateKind::gaussian_ar1: {
                Complex acc = 0.0;
                for (std::size_t i = 0; i < normal_.x.size(); ++i)
                    acc += normal_.w[i] * std::exp(c * (c_.mu + c_.rho * x + c_.sigma * normal_.x[i]));
                return acc;
            }
            case vaffine::CoordinateKind::autoregressive_gamma: {
                const auto p = poisson_weights(x);
                Complex acc = 0.0;
                for (std::size_t j = 0; j < p.size(); ++j) acc += p[j] * gamma_sum(static_cast<int>(j), c);
                return acc;
            }
        }
        return 0.0;
    }

    /// Calls f(value, weight) for every node of the law of the next value given x (and shift).
    void for_each(double x, double shift, const std::function<void(double, double)>& f) {
        switch (c_.kind) {
            case vaffine::CoordinateKind::constant_one:
                f(1.0, 1.0);
                return;
            case vaffine::CoordinateKind::gaussian_ar1:
                for (std::size_t i = 0; i < normal_.x.size(); ++i)
                    f(c_.mu + c_.rho * x + c_.sigma * normal_.x[i] + shift, normal_.w[i]);
                return;
            case vaffine::CoordinateKind::autoregressive_gamma: {
                const auto p = poisson_weights(x);
                for (std::size_t j = 0; j < p.size(); ++j) {
                    const Rule& g = gamma(static_cast<int>(j));
                    for (std::size_t i = 0; i < g.x.size(); ++i) f(c_.scale * g.x[i] + shift, p[j] * g.w[i]);
                }
                return;
            }
        }
    }

private:
    Complex gamma_sum(int j, Complex c) {
        if (c != cached_c_) {
            cached_c_ = c;
            sums_.clear();
        }
        auto it = sums_.find(j);
        if (it != sums_.end()) return it->second;
        const Rule& g = gamma(j);
        Complex acc = 0.0;
        for (std::size_t i = 0; i < g.x.size(); ++i) acc += g.w[i] * std::exp(c * c_.scale * g.x[i]);
        sums_.emplace(j, acc);
        return acc;
    }

    vaffine::FactorCoordinate c_;
    Settings s_;
    Rule normal_;
    std::map<int, Rule> gamma_;
    Complex cached_c_{std::nan(""), 0.0};
    std::map<int, Complex> sums_;
};

/// E[exp(sum_{t=1}^{T} coef[t] . Z_t) | Z_0 = z0] over the joint law (Y under Q, X given Y_t).
/// coef[t] has length d1 + d2 in (X, Y) order; coef[0] is ignored. Dates 1..T-1 are integrated
/// node by node; the final date uses conditional independence of the coordinates given Z_{T-1}.
inline Complex nested_expectation(const vaffine::AffineModel& model, const std::vector<std::vector<Complex>>& coef,
                                  const Settings& s = {}) {
    const std::size_t d1 = model.d1(), d2 = model.d2(), d = d1 + d2;
    const int T = static_cast<int>(coef.size()) - 1;
    if (T == 0) return 1.0;
    std::vector<TransitionNodes> nodes;
    for (const auto& c : model.x_coords()) nodes.emplace_back(c, s);
    for (const auto& c : model.y_coords()) nodes.emplace_back(c, s);

    // Last step: X_T = eta * Y_T[idx] + innovation, so X loadings fold into the Y exponents.
    std::vector<Complex> last = coef[static_cast<std::size_t>(T)];
    for (std::size_t j = 0; j < d1; ++j)
        if (const auto& l = model.x_coords()[j].y_loading) last[d1 + l->index] += last[j] * l->eta;
    auto final_step = [&](const std::vector<double>& z) {
        Complex v = 1.0;
        for (std::size_t j = 0; j < d; ++j) v *= nodes[j].one_step(z[j], last[j]);
        return v;
    };

    std::function<Complex(int, const std::vector<double>&)> value_from;
    value_from = [&](int t, const std::vector<double>& z) -> Complex {
        if (t == T - 1) return final_step(z);
        std::vector<double> next(d);
        Complex total = 0.0;
        // coordinates are drawn in the order Y..., then X... (X may load on Y_{t+1})
        std::function<void(std::size_t, double)> draw = [&](std::size_t k, double w) {
            if (k == d) {
                Complex e = 0.0;
                for (std::size_t j = 0; j < d; ++j) e += coef[static_cast<std::size_t>(t + 1)][j] * next[j];
                total += w * std::exp(e) * value_from(t + 1, next);
                return;
            }
            const std::size_t j = k < d2 ? d1 + k : k - d2;
            double shift = 0.0;
            if (j < d1) {
                if (const auto& l = model.x_coords()[j].y_loading) shift = l->eta * next[d1 + l->index];
            }
            nodes[j].for_each(z[j], shift, [&](double v, double wv) {
                next[j] = v;
                draw(k + 1, w * wv);
            });
        };
        draw(0, 1.0);
        return total;
    };
    return value_from(0, model.z0());
}

namespace detail {

/// Scalar gaussian chain by direct nesting (node count normal_nodes^T).
inline Complex gaussian_chain(TransitionNodes& tn, const std::vector<Complex>& c, int t, int T, double x) {
    if (t == T) return 1.0;
    Complex acc = 0.0;
    tn.for_each(x, 0.0, [&](double v, double w) {
        acc += w * std::exp(c[static_cast<std::size_t>(t + 1)] * v) * gaussian_chain(tn, c, t + 1, T, v);
    });
    return acc;
}

/// Scalar ARG chain by backward induction on the Poisson index. Given N = j the next value
/// has nodes that do not depend on the current state, so
///   V_t(x) = sum_j P(N = j | x) S_t(j),  S_t(j) = sum_i w_ji e^{c_{t+1} v_ji} V_{t+1}(v_ji).
/// S_t(j) is filled on demand, only for indices some reachable node actually needs.
inline Complex gamma_chain(TransitionNodes& tn, const std::vector<Complex>& c, int T, double x0) {
    const double scale = tn.coordinate().scale;
    std::vector<std::vector<std::optional<Complex>>> memo(static_cast<std::size_t>(T));
    std::function<Complex(int, double)> V;
    std::function<Complex(int, int)> S = [&](int t, int j) -> Complex {
        auto& row = memo[static_cast<std::size_t>(t)];
        if (row.size() <= static_cast<std::size_t>(j)) row.resize(static_cast<std::size_t>(j) + 1);
        if (row[static_cast<std::size_t>(j)]) return *row[static_cast<std::size_t>(j)];
        const Rule& g = tn.gamma(j);
        Complex acc = 0.0;
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            const double v = scale * g.x[i];
            acc += g.w[i] * std::exp(c[static_cast<std::size_t>(t + 1)] * v) * V(t + 1, v);
        }
        memo[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] = acc;
        return acc;
    };
    V = [&](int t, double x) -> Complex {
        if (t == T) return 1.0;
        const auto p = tn.poisson_weights(x);
        Complex acc = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) acc += p[j] * S(t, static_cast<int>(j));
        return acc;
    };
    return V(0, x0);
}

}  // namespace detail

/// Same expectation for a model without X-on-Y loadings, as a product of per-coordinate chains.
inline Complex factorized_expectation(const vaffine::AffineModel& model, const std::vector<std::vector<Complex>>& coef,
                                      const Settings& s = {}) {
    const std::size_t d1 = model.d1(), d = d1 + model.d2();
    const int T = static_cast<int>(coef.size()) - 1;
    Complex prod = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
        const auto& c = j < d1 ? model.x_coords()[j] : model.y_coords()[j - d1];
        std::vector<Complex> cj(static_cast<std::size_t>(T + 1));
        for (int t = 0; t <= T; ++t) cj[static_cast<std::size_t>(t)] = coef[static_cast<std::size_t>(t)][j];
        TransitionNodes tn(c, s);
        switch (c.kind) {
            case vaffine::CoordinateKind::constant_one:
                for (int t = 1; t <= T; ++t) prod *= std::exp(cj[static_cast<std::size_t>(t)]);
                break;
            case vaffine::CoordinateKind::gaussian_ar1:
                prod *= detail::gaussian_chain(tn, cj, 0, T, model.z0()[j]);
                break;
            case vaffine::CoordinateKind::autoregressive_gamma:
                prod *= detail::gamma_chain(tn, cj, T, model.z0()[j]);
                break;
        }
    }
    return prod;
}

/// Per-date exponent coefficients of
///   e^{a.Y_T - abar.Y_Tp} e^{-sum_{t<=r_m} rate_m(Z_t) - sum_{t<=r_s} rate_s(Z_t)},
/// built directly from the event description (Tp = 0 means no ratio).
inline std::vector<std::vector<Complex>> path_coefficients(std::size_t d1, std::size_t d2, int T,
                                                           const std::vector<Complex>& a, int Tp,
                                                           const std::vector<Complex>& abar,
                                                           const std::vector<double>& bm, const std::vector<double>& cm,
                                                           int r_m, const std::vector<double>& bs,
                                                           const std::vector<double>& cs, int r_s) {
    std::vector<std::vector<Complex>> coef(static_cast<std::size_t>(T + 1), std::vector<Complex>(d1 + d2, 0.0));
    for (int t = 1; t <= T; ++t) {
        auto& c = coef[static_cast<std::size_t>(t)];
        if (t <= r_m) {
            for (std::size_t j = 0; j < d1; ++j) c[j] -= bm[j];
            for (std::size_t j = 0; j < d2; ++j) c[d1 + j] -= cm[j];
        }
        if (t <= r_s) {
            for (std::size_t j = 0; j < d1; ++j) c[j] -= bs[j];
            for (std::size_t j = 0; j < d2; ++j) c[d1 + j] -= cs[j];
        }
        if (t == T)
            for (std::size_t j = 0; j < d2; ++j) c[d1 + j] += a[j];
        if (Tp > 0 && t == Tp)
            for (std::size_t j = 0; j < d2; ++j) c[d1 + j] -= abar[j];
    }
    return coef;
}

}  // namespace oracle
