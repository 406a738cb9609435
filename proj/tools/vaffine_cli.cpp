// Command-line front end: price, verify, sweep, check-martingale.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vaffine/io.hpp"
#include "vaffine/mc_oracle.hpp"
#include "vaffine/pricing.hpp"

namespace {

using namespace vaffine;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDomain = 3;

struct CommonArgs {
    std::string model_file, contract_file, loadings_file, out;
    double w = 2.0;
    int nodes = 400;
    double lambda_max = 200.0;
    std::string rule = "gauss_legendre";
    std::size_t paths = 200000;
    std::uint64_t seed = 20240601;
    unsigned threads = 1;
    bool closed_form_only = false;
};

struct Inputs {
    io::ModelConfig model;
    VAContract contract;
    Loadings loadings;
    PricingOptions pricing;
    McConfig mc;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool needs_contract = true) {
    cmd->add_option("--model", a.model_file, "model JSON")->required();
    if (needs_contract) {
        cmd->add_option("--contract", a.contract_file, "contract JSON")->required();
        cmd->add_option("--loadings", a.loadings_file, "hazard loadings JSON")->required();
    }
    cmd->add_option("--out", a.out, "output file (default: stdout)");
    cmd->add_option("--w", a.w, "Fourier damping w > 1");
    cmd->add_option("--nodes", a.nodes, "Fourier quadrature nodes");
    cmd->add_option("--lambda-max", a.lambda_max, "Fourier truncation bound");
    cmd->add_option("--rule", a.rule, "gauss_legendre or trapezoid");
    cmd->add_option("--paths", a.paths, "Monte Carlo paths");
    cmd->add_option("--seed", a.seed, "Monte Carlo seed");
    cmd->add_option("--threads", a.threads, "Monte Carlo worker threads");
}

Inputs load(const CommonArgs& a) {
    Inputs in{io::parse_model(io::read_json_file(a.model_file)), {}, {}, {}, {}};
    in.contract = io::parse_contract(io::read_json_file(a.contract_file));
    in.loadings = io::parse_loadings(io::read_json_file(a.loadings_file), in.model.model);
    in.pricing.quad.w = a.w;
    in.pricing.quad.n_nodes = a.nodes;
    in.pricing.quad.lambda_max = a.lambda_max;
    if (a.rule == "gauss_legendre")
        in.pricing.quad.rule = QuadratureRule::gauss_legendre;
    else if (a.rule == "trapezoid")
        in.pricing.quad.rule = QuadratureRule::trapezoid;
    else
        throw ConfigError("--rule must be gauss_legendre or trapezoid");
    in.pricing.quad.validate();
    in.mc.n_paths = a.paths;
    in.mc.seed = a.seed;
    in.mc.threads = a.threads;
    return in;
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
}

int cmd_price(const CommonArgs& a, const std::string& csv_path) {
    const auto in = load(a);
    const auto report =
        price_va_auto(in.model.model, in.model.market, in.contract, in.loadings, in.pricing, in.mc, a.closed_form_only);
    emit(a.out, io::report_to_json(report).dump(2) + "\n");
    if (!csv_path.empty()) {
        std::ostringstream os;
        io::write_report_csv(os, report);
        emit(csv_path, os.str());
    }
    return kExitOk;
}

int cmd_verify(const CommonArgs& a, double k_sigma) {
    const auto in = load(a);
    const auto& m = in.model.model;
    const auto& mk = in.model.market;
    const auto mc = mc_price(m, mk, in.contract, in.loadings, in.mc);

    std::ostringstream os;
    os << std::setprecision(10);
    os << "leg,closed_form,mc_mean,mc_stderr,sigma_distance,pass\n";
    bool all = true;
    const bool indep = in.loadings.copula.kind == CopulaKind::independence;
    const bool single = in.contract.n() == 1;
    auto row = [&](VaLeg leg, bool available, auto price) {
        const auto& est = mc.g_weighted.leg(leg);
        if (!available) {
            os << to_string(leg) << ",n/a," << est.mean << ',' << est.std_error << ",n/a,skipped\n";
            return;
        }
        const double cf = price();
        const auto v = compare(cf, est, k_sigma);
        all = all && v.pass;
        os << to_string(leg) << ',' << cf << ',' << est.mean << ',' << est.std_error << ',' << v.sigmas << ','
           << (v.pass ? "pass" : "FAIL") << '\n';
    };
    row(VaLeg::premium, indep, [&] { return price_premium_leg(m, in.contract, in.loadings, in.pricing); });
    row(VaLeg::gmab, indep && single, [&] { return price_gmab(m, mk, in.contract, in.loadings, in.pricing); });
    row(VaLeg::sb, indep, [&] { return price_sb(m, mk, in.contract, in.loadings, in.pricing); });
    row(VaLeg::db, indep && single, [&] { return price_db(m, mk, in.contract, in.loadings, in.pricing); });
    os << "\nmode consistency (g_weighted vs sampled_taus)\nleg,g_weighted,sampled_taus,sigma_distance,pass\n";
    for (VaLeg leg : {VaLeg::premium, VaLeg::gmab, VaLeg::sb, VaLeg::db}) {
        const auto& g = mc.g_weighted.leg(leg);
        const auto& s = mc.sampled_taus.leg(leg);
        const auto v = compare(g, s, k_sigma);
        all = all && v.pass;
        os << to_string(leg) << ',' << g.mean << ',' << s.mean << ',' << v.sigmas << ',' << (v.pass ? "pass" : "FAIL")
           << '\n';
    }
    os << "\nresult," << (all ? "pass" : "FAIL") << '\n';
    emit(a.out, os.str());
    return all ? kExitOk : kExitVerifyFailed;
}

std::vector<double> parse_values(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("--values: '" + tok + "' is not a number");
        }
    }
    if (out.empty()) throw ConfigError("--values: empty range");
    return out;
}

int cmd_sweep(const CommonArgs& a, const std::string& param, const std::string& values_text) {
    const auto values = parse_values(values_text);
    const auto base = load(a);
    static const std::vector<std::string> params = {"delta", "penalty_scale", "hazard_scale_m", "hazard_scale_s", "w"};
    if (std::find(params.begin(), params.end(), param) == params.end())
        throw ConfigError("--param must be one of delta, penalty_scale, hazard_scale_m, hazard_scale_s, w");

    std::vector<std::vector<double>> rows;
    for (double v : values) {
        Inputs in = base;
        if (param == "delta") {
            in.contract.delta = v;
        } else if (param == "penalty_scale") {
            for (auto& [d, p] : in.contract.penalty) p *= v;
            in.contract.validate();
        } else if (param == "hazard_scale_m") {
            in.loadings.mortality = base.loadings.mortality.scaled(v);
        } else if (param == "hazard_scale_s") {
            in.loadings.surrender = base.loadings.surrender.scaled(v);
        } else {
            in.pricing.quad.w = v;
            in.pricing.quad.validate();
        }
        const auto r = price_va_auto(in.model.model, in.model.market, in.contract, in.loadings, in.pricing, in.mc,
                                     a.closed_form_only);
        rows.push_back({v, r.premium_leg, r.gmab, r.sb, r.db, r.va_total});
    }

    std::ostringstream os;
    os << std::setprecision(17) << param << ",premium_leg,gmab,sb,db,va_total\n";
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < r.size(); ++j) os << (j ? "," : "") << r[j];
        os << '\n';
    }
    emit(a.out, os.str());

    static const char* names[] = {"premium_leg", "gmab", "sb", "db", "va_total"};
    for (std::size_t j = 1; j < 6; ++j) {
        bool up = true, down = true;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            up = up && rows[i][j] >= rows[i - 1][j];
            down = down && rows[i][j] <= rows[i - 1][j];
        }
        std::cerr << "monotonicity," << names[j - 1] << ",nondecreasing=" << up << ",nonincreasing=" << down << '\n';
    }
    return kExitOk;
}

int cmd_check_martingale(const CommonArgs& a) {
    const auto cfg = io::parse_model(io::read_json_file(a.model_file));
    const auto& m = cfg.model;
    const auto& mk = cfg.market;
    const auto q = m.logmgf_Y_Q(to_complex(mk.a));
    double b_gap = 0.0;
    for (std::size_t j = 0; j < mk.a.size(); ++j) b_gap = std::max(b_gap, std::abs(q.B[j] - mk.a[j]));
    const double a_gap = std::abs(q.A.real() + mk.a0);

    McConfig mc;
    mc.n_paths = a.paths;
    mc.seed = a.seed;
    mc.threads = a.threads;
    const std::size_t units = mc.antithetic ? mc.n_paths / 2 : mc.n_paths;
    std::vector<double> vals(units, 0.0);
    const std::size_t d1 = m.d1();
    detail::for_each_path(m, 1, mc, [&](std::size_t u, int, std::span<const double> s, StreamRng&) {
        const std::size_t d = s.size() / 2;
        const double r = std::exp(mk.log_price(1, s.subspan(d + d1, d - d1)) - mk.log_price(0, s.subspan(d1, d - d1)));
        vals[u] += 0.5 * r;
    });
    const auto est = summarize(vals, mc.n_paths, McMode::g_weighted);
    const auto v = compare(1.0, est, 4.0);
    const bool ok = a_gap < 1e-10 && b_gap < 1e-10 && v.pass;

    std::ostringstream os;
    os << std::setprecision(12) << "check,value,pass\n"
       << "A_Q(a)+a0," << a_gap << ',' << (a_gap < 1e-10 ? "pass" : "FAIL") << '\n'
       << "max|B_Q(a)-a|," << b_gap << ',' << (b_gap < 1e-10 ? "pass" : "FAIL") << '\n'
       << "mc_mean_S1_over_S0," << est.mean << " (stderr " << est.std_error << ")," << (v.pass ? "pass" : "FAIL")
       << '\n'
       << "result," << (ok ? "pass" : "FAIL") << '\n';
    emit(a.out, os.str());
    return ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-form and Monte Carlo valuation of variable annuities in discrete-time affine models"};
    app.require_subcommand(1);

    CommonArgs price_args, verify_args, sweep_args, mart_args;
    std::string csv_path, sweep_param, sweep_values;
    double k_sigma = 4.0;

    auto* price = app.add_subcommand("price", "closed-form prices of all legs");
    add_common(price, price_args);
    price->add_option("--csv", csv_path, "also write the flat CSV report here");
    price->add_flag("--closed-form-only", price_args.closed_form_only, "never fall back to Monte Carlo");

    auto* verify = app.add_subcommand("verify", "compare closed forms with the Monte Carlo oracle");
    add_common(verify, verify_args);
    verify->add_option("--k-sigma", k_sigma, "pass threshold in standard errors");

    auto* sweep = app.add_subcommand("sweep", "price over a range of one parameter, CSV output");
    add_common(sweep, sweep_args);
    sweep->add_option("--param", sweep_param, "delta, penalty_scale, hazard_scale_m, hazard_scale_s or w")->required();
    sweep->add_option("--values", sweep_values, "comma-separated values")->required();
    sweep->add_flag("--closed-form-only", sweep_args.closed_form_only, "never fall back to Monte Carlo");

    auto* mart = app.add_subcommand("check-martingale", "check that the discounted stock is a Q-martingale");
    add_common(mart, mart_args, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*price) return cmd_price(price_args, csv_path);
        if (*verify) return cmd_verify(verify_args, k_sigma);
        if (*sweep) return cmd_sweep(sweep_args, sweep_param, sweep_values);
        if (*mart) return cmd_check_martingale(mart_args);
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const UnsupportedContractError& e) {
        std::cerr << "unsupported: " << e.what() << '\n';
        return kExitDomain;
    } catch (const UnsupportedCopulaError& e) {
        std::cerr << "unsupported: " << e.what() << '\n';
        return kExitDomain;
    } catch (const OverflowError& e) {
        std::cerr << "overflow: " << e.what() << '\n';
        return kExitDomain;
    } catch (const NegativeIncrementError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
