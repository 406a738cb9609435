#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "vaffine/errors.hpp"

namespace vaffine {

enum class QuadratureRule { trapezoid, gauss_legendre };

inline std::string to_string(QuadratureRule r) { return r == QuadratureRule::trapezoid ? "trapezoid" : "gauss_legendre"; }

/// Damped Fourier integration settings over lambda in [0, lambda_max].
struct QuadratureSpec {
    double w = 2.0;
    double lambda_max = 200.0;
    int n_nodes = 400;
    QuadratureRule rule = QuadratureRule::gauss_legendre;

    void validate() const {
        if (!(w > 1.0)) throw ConfigError("quadrature: damping w must be > 1");
        if (!(lambda_max > 0.0)) throw ConfigError("quadrature: lambda_max must be > 0");
        if (n_nodes < 2) throw ConfigError("quadrature: n_nodes must be >= 2");
    }
};

struct NodesWeights {
    std::vector<double> x;
    std::vector<double> w;
};

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n from Chebyshev guesses).
inline NodesWeights gauss_legendre(int n) {
    if (n < 1) throw ConfigError("gauss_legendre: n must be >= 1");
    NodesWeights out{std::vector<double>(static_cast<std::size_t>(n)), std::vector<double>(static_cast<std::size_t>(n))};
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        // one more derivative evaluation at the converged root
        double p0 = 1.0, p1 = 0.0;
        for (int j = 1; j <= n; ++j) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        const double wt = 2.0 / ((1.0 - z * z) * dp * dp);
        out.x[static_cast<std::size_t>(i)] = -z;
        out.x[static_cast<std::size_t>(n - 1 - i)] = z;
        out.w[static_cast<std::size_t>(i)] = wt;
        out.w[static_cast<std::size_t>(n - 1 - i)] = wt;
    }
    return out;
}

/// Nodes and weights for integrating over [0, spec.lambda_max].
inline NodesWeights lambda_rule(const QuadratureSpec& spec) {
    spec.validate();
    const double L = spec.lambda_max;
    NodesWeights r;
    if (spec.rule == QuadratureRule::gauss_legendre) {
        r = gauss_legendre(spec.n_nodes);
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            r.x[i] = 0.5 * L * (r.x[i] + 1.0);
            r.w[i] *= 0.5 * L;
        }
    } else {
        const auto n = static_cast<std::size_t>(spec.n_nodes);
        const double h = L / static_cast<double>(n - 1);
        r.x.resize(n);
        r.w.assign(n, h);
        for (std::size_t i = 0; i < n; ++i) r.x[i] = h * static_cast<double>(i);
        r.w.front() = r.w.back() = 0.5 * h;
    }
    return r;
}

}  // namespace vaffine
