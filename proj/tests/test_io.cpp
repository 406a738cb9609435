#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "vaffine/io.hpp"

using namespace vaffine;
using nlohmann::json;

namespace {

std::string config_path(const std::string& name) { return std::string(VAFFINE_CONFIG_DIR) + "/" + name; }

}  // namespace

TEST(ModelFile, ReferenceMatchesFixture) {
    const auto cfg = io::parse_model(io::read_json_file(config_path("reference_model.json")));
    const auto fx = fixtures::reference_model();
    EXPECT_EQ(cfg.model.d1(), fx.d1());
    EXPECT_EQ(cfg.model.d2(), fx.d2());
    EXPECT_EQ(cfg.model.z0(), fx.z0());
    const auto m = fixtures::reference_market(fx);
    EXPECT_DOUBLE_EQ(cfg.market.a0, m.a0);
    EXPECT_EQ(cfg.market.a, m.a);
}

TEST(ModelFile, RoundTrip) {
    const auto cfg = io::parse_model(io::read_json_file(config_path("reference_model.json")));
    const auto again = io::parse_model(json::parse(io::model_to_json(cfg, false).dump()));
    EXPECT_EQ(io::model_to_json(cfg, false), io::model_to_json(again, false));
    EXPECT_EQ(again.market.a0, cfg.market.a0);
}

TEST(ModelFile, Errors) {
    EXPECT_THROW(io::parse_model(json::parse(R"({"x_coords": []})")), ConfigError);
    EXPECT_THROW(io::parse_model(json::parse(
                     R"({"x_coords": [{"kind": "weird"}], "y_coords": [], "z0": [1], "market": {"a": []}})")),
                 ConfigError);
    EXPECT_THROW(io::parse_model(json::parse(
                     R"({"x_coords": [{"kind": "constant_one"}], "y_coords": [{"kind": "gaussian_ar1", "rho": "x", "sigma": 1}],
                         "z0": [1, 0], "market": {"a": [1], "a0": 0}})")),
                 ConfigError);
    EXPECT_THROW(io::read_json_file(config_path("does_not_exist.json")), ConfigError);
}

TEST(LoadingsFile, ParseAndRoundTrip) {
    const auto model = fixtures::reference_model();
    const auto l = io::parse_loadings(io::read_json_file(config_path("reference_loadings.json")), model);
    EXPECT_EQ(l.mortality.b, fixtures::reference_loadings().mortality.b);
    EXPECT_EQ(l.surrender.c, fixtures::reference_loadings().surrender.c);
    const auto c = io::parse_loadings(io::read_json_file(config_path("clayton_loadings.json")), model);
    EXPECT_EQ(c.copula.kind, CopulaKind::clayton);
    const auto back = io::parse_loadings(io::loadings_to_json(c), model);
    EXPECT_EQ(back.copula.theta, c.copula.theta);
    EXPECT_THROW(io::parse_loadings(json::parse(R"({"mortality": {"b": [1], "c": [0]}, "surrender": {"b": [1], "c": [0]}})"),
                                    model),
                 Error);
    EXPECT_THROW(io::parse_loadings(json::parse(R"({"mortality": {"b": [0.01, 0, 0], "c": [0, 0]},
                                                  "surrender": {"b": [0.01, 0, 0], "c": [0, 0]},
                                                  "copula": {"kind": "gumbel"}})"),
                                    model),
                 ConfigError);
}

TEST(ContractFile, ParseAndRoundTrip) {
    const auto c = io::parse_contract(io::read_json_file(config_path("reference_contract.json")));
    const auto fx = fixtures::reference_contract();
    EXPECT_EQ(c.grid, fx.grid);
    EXPECT_EQ(c.payments, fx.payments);
    EXPECT_EQ(c.penalty, fx.penalty);
    EXPECT_EQ(c.maturity, fx.maturity);
    const auto back = io::parse_contract(io::contract_to_json(c));
    EXPECT_EQ(io::contract_to_json(back), io::contract_to_json(c));
    const auto two = io::parse_contract(io::read_json_file(config_path("two_payment_contract.json")));
    EXPECT_EQ(two.n(), 2u);
}

TEST(ContractFile, Errors) {
    auto j = io::contract_to_json(fixtures::reference_contract());
    j["penalty"] = {{"two", 0.9}};
    EXPECT_THROW(io::parse_contract(j), ConfigError);
    j = io::contract_to_json(fixtures::reference_contract());
    j["grid"] = json::array();
    j["payments"] = json::array();
    EXPECT_THROW(io::parse_contract(j), ConfigError);
    j = io::contract_to_json(fixtures::reference_contract());
    j.erase("maturity");
    EXPECT_THROW(io::parse_contract(j), ConfigError);
}

TEST(Report, JsonRoundTripIsExact) {
    const auto model = fixtures::reference_model();
    const auto r = price_va(model, fixtures::reference_market(model), fixtures::reference_contract(),
                            fixtures::reference_loadings());
    const auto back = io::report_from_json(json::parse(io::report_to_json(r).dump()));
    EXPECT_TRUE(io::same_report(r, back));
    auto changed = back;
    changed.gmab += 1e-13;
    EXPECT_FALSE(io::same_report(r, changed));
}

TEST(Report, CsvLayout) {
    PriceReport r;
    r.premium_leg = -1.0;
    r.gmab = 2.0;
    r.finalize();
    r.diagnostics.terms.push_back({"gmab_call", 1, 1, 12, 0.5});
    std::ostringstream os;
    io::write_report_csv(os, r);
    const auto s = os.str();
    EXPECT_EQ(s.rfind("section,key,value\nleg,premium_leg,-1\n", 0), 0u);
    EXPECT_NE(s.find("leg,va_total,1\n"), std::string::npos);
    EXPECT_NE(s.find("term,gmab_call[k=1;i=1;t=12],0.5\n"), std::string::npos);
}
