#include <gtest/gtest.h>

#include <cmath>

#include "horizon/diagnostics.hpp"
#include "oracles.hpp"

using namespace horizon;

namespace {

struct Fixture {
  TimeGrid grid;
  PathEnsemble ens;
  Context ctx;
  Fixture(std::size_t steps, std::size_t paths, std::uint64_t seed, unsigned threads = 1)
      : grid(1.0, steps), ens(simulate(grid, 1, paths, seed)), ctx{ens, {}, {}, Executor(threads)} {}
  RandomField claim(const std::string& spec, std::size_t m) const {
    return evaluate_claim(parse_claim(spec, m), ens);
  }
  RiskMeasure measure(const std::string& spec) const { return parse_measure(spec, grid); }
  RandomField constant(double c) const { return RandomField::constant(ens.paths(), c); }
};

}  // namespace

TEST(Gamma, Examples) {
  Fixture f(20, 20000, 1);
  const auto x = f.claim("brownian", 10);
  const auto g0 = gamma(f.measure("driver:quad_z"), f.ctx, x, 0, 10, 20);
  EXPECT_LE(std::abs(g0.mean), 2.0 * g0.std_error + 1e-12);
  const auto g1 = gamma(f.measure("driver:quad_z:0.1"), f.ctx, x, 0, 10, 20);
  EXPECT_NEAR(g1.mean, 0.05, 0.01);
  const auto g2 = gamma(f.measure("driver:abs_z"), f.ctx, x, 0, 10, 20);
  EXPECT_GE(g2.gamma.min(), -2.0 * g2.std_error - 1e-12);
  EXPECT_THROW(gamma(f.measure("mean"), f.ctx, f.claim("brownian", 20), 0, 10, 20),
               std::invalid_argument);
}

TEST(PremiumMeasure, Examples) {
  Fixture f(20, 20000, 2);
  const auto x = f.claim("brownian", 10);
  const auto d = drivers::z_shift(0.1);
  const auto prem = gamma_via_premium_measure(d, f.ctx, x, 0, 10, 20);
  const auto direct = gamma(RiskMeasure::from_driver(d), f.ctx, x, 0, 10, 20);
  ASSERT_TRUE(prem.premium_value.has_value());
  EXPECT_NEAR(*prem.premium_value, 0.1 * 0.5, 0.05 * 0.05 + 1e-12);
  EXPECT_NEAR(*prem.premium_value, direct.mean, 0.05 * std::abs(direct.mean));
  EXPECT_GT(prem.weight_min, 0.0);
  EXPECT_NEAR(prem.weight_mean, 1.0, 0.1);

  const auto zero = gamma_via_premium_measure(drivers::abs_z(), f.ctx, x, 0, 10, 20);
  EXPECT_EQ(*zero.premium_value, 0.0);

  const auto csa = check_premium_identity(drivers::csa_example(0.1, 0.1), f.ctx, x, 0, 10, 20);
  EXPECT_TRUE(csa.pass) << csa.metrics.at("premium") << " vs " << csa.metrics.at("gamma");
  EXPECT_THROW(gamma_via_premium_measure(d, f.ctx, x, 0, 10, 10), std::invalid_argument);
}

TEST(CashAdditivity, Examples) {
  Fixture f(10, 5000, 3);
  const auto x = f.claim("sin", 10);
  const std::vector<RandomField> shifts{f.constant(0.5), tanh_shift(f.ens, 5)};
  EXPECT_TRUE(check_cash_additivity(f.measure("driver:abs_z"), f.ctx, x, 5, 10, shifts).pass);
  EXPECT_TRUE(
      check_cash_additivity(f.measure("entropic"), f.ctx, x, 5, 10, {f.constant(0.5)}).pass);

  const auto q = check_cash_additivity(f.measure("qent:0.5,0"), f.ctx, x, 5, 10, shifts);
  EXPECT_FALSE(q.pass);
  ASSERT_TRUE(q.witness.has_value());
  EXPECT_GT(q.max_violation, 0.0);

  const auto d = check_cash_additivity(f.measure("discounted:mean,0.1"), f.ctx, x, 0, 10,
                                       {f.constant(1.0)});
  EXPECT_FALSE(d.pass);
  EXPECT_NEAR(d.metrics.at("gap_mean_0"), 1.0 - oracle::kDiscount01, 1e-9);
}

TEST(CashSubadditivity, Examples) {
  Fixture f(10, 5000, 4);
  const auto x = f.claim("sin", 10);
  std::vector<RandomField> shifts{f.constant(0.0), f.constant(0.1), f.constant(0.5),
                                  f.constant(1.0), tanh_shift(f.ens, 5)};
  for (const char* spec : {"discounted:mean,0.1", "driver:csa_example", "qent:0.5,0"}) {
    const auto r = check_cash_subadditivity(f.measure(spec), f.ctx, x, 5, 10, shifts);
    EXPECT_TRUE(r.pass) << spec;
  }
  const auto eq = check_cash_subadditivity(f.measure("driver:csa_example"), f.ctx, x, 5, 10,
                                           {f.constant(0.0)});
  EXPECT_NEAR(eq.metrics.at("gap_mean_0"), 0.0, 1e-15);
  EXPECT_THROW(check_cash_subadditivity(f.measure("mean"), f.ctx, x, 5, 10, {f.constant(-1.0)}),
               std::invalid_argument);
  EXPECT_THROW(check_cash_subadditivity(f.measure("mean"), f.ctx, x, 5, 10, {f.claim("sin", 8)}),
               std::invalid_argument);
}

TEST(Normalization, Examples) {
  Fixture f(10, 2000, 5);
  const std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 10}, {5, 10}};
  EXPECT_TRUE(check_normalization(f.measure("driver:quad_z"), f.ctx, pairs).pass);
  EXPECT_TRUE(check_normalization(f.measure("driver:zero"), f.ctx, pairs).pass);
  const auto r = check_normalization(f.measure("driver:csa_example_shift"), f.ctx, pairs);
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.metrics.at("max_rho0"), 1.0, 1e-12);
}

TEST(Restriction, Examples) {
  Fixture f(20, 10000, 6);
  const auto x = f.claim("brownian", 10);
  EXPECT_TRUE(check_restriction(f.measure("driver:quad_z"), f.ctx, x, 0, 10, {15, 20}).pass);
  const auto r = check_restriction(f.measure("qent_tr:0.5,0,0.1"), f.ctx, x, 0, 10, {20});
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.metrics.at("gap_mean_v1"), 0.05, 0.01);
  const auto same = check_restriction(f.measure("qent_tr:0.5,0,0.1"), f.ctx, x, 0, 10, {10});
  EXPECT_TRUE(same.pass);
  EXPECT_EQ(same.max_violation, 0.0);
}

TEST(TimeConsistency, YFreeDriverIsStrong) {
  Fixture f(20, 10000, 7);
  const auto x = f.claim("sin", 20);
  for (const char* spec : {"driver:quad_z", "driver:abs_z"}) {
    const auto r = check_time_consistency(f.measure(spec), f.ctx, TimeConsistency::strong, x, 0,
                                          10, 20);
    EXPECT_TRUE(r.pass) << spec << " max " << r.max_violation << " tol " << r.tolerance;
  }
}

TEST(TimeConsistency, LinearMeasureWeakRatio) {
  Fixture f(20, 10000, 8);
  const auto x = f.claim("brownian:2", 20);
  const auto m = f.measure("driver:linear_y:0.1");
  const auto weak = check_time_consistency(m, f.ctx, TimeConsistency::weak, x, 0, 10, 20);
  EXPECT_FALSE(weak.pass);
  EXPECT_NEAR(weak.metrics.at("ratio"), oracle::kDiscount005, 0.01 * oracle::kDiscount005);
  EXPECT_TRUE(check_time_consistency(m, f.ctx, TimeConsistency::strong, x, 0, 10, 20).pass);
}

TEST(TimeConsistency, IncreasingFamilyIsSub) {
  Fixture f(20, 10000, 9);
  const auto r = check_time_consistency(f.measure("family:translated_family:0.5,0.1"), f.ctx,
                                        TimeConsistency::sub, f.claim("sin", 20), 0, 10, 20);
  EXPECT_TRUE(r.pass);
}

TEST(TimeConsistency, OrderOnCashAdditiveInner) {
  Fixture f(20, 10000, 10);
  const auto r = check_time_consistency(f.measure("entropic"), f.ctx, TimeConsistency::order,
                                        f.claim("sin", 20), 0, 10, 20);
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(r.inconclusive);
  EXPECT_LE(r.metrics.at("inner_rms_residual"), 0.5 * r.tolerance + 1e-9);
}

TEST(TimeConsistency, Errors) {
  Fixture f(10, 100, 1);
  EXPECT_THROW(check_time_consistency(f.measure("mean"), f.ctx, TimeConsistency::weak,
                                      f.claim("sin", 10), 6, 4, 10),
               std::invalid_argument);
  EXPECT_THROW(parse_time_consistency("strongish"), UnknownLabel);
  EXPECT_EQ(parse_time_consistency("order"), TimeConsistency::order);
}

TEST(HLongevity, SignLaw) {
  Fixture f(20, 10000, 11);
  const auto x = f.claim("sin", 10);
  for (const char* spec : {"driver:abs_z", "driver:quad_z:0.1", "driver:csa_example",
                           "driver:z_shift:0.1", "driver:q_entropic_translated:0.5,0.1"}) {
    EXPECT_TRUE(check_h_longevity(f.measure(spec), f.ctx, x, 0, {{10, 15}, {10, 20}}).pass)
        << spec;
  }
  EXPECT_FALSE(check_h_longevity(f.measure("discounted:mean,0.1"), f.ctx,
                                 f.claim("const:-1", 10), 0, {{10, 20}})
                   .pass);
}

TEST(Reports, VerdictSemantics) {
  Fixture f(10, 1000, 12);
  const auto x = f.claim("sin", 10);
  const auto m = f.measure("discounted:mean,0.1");
  // A gap of (1 - e^{-0.1}) * 0.01 on every path.
  const auto tight = check_cash_additivity(m, f.ctx, x, 0, 10, {f.constant(0.01)},
                                           {.violation_cap = 0.0, .tolerance = 1e-3});
  EXPECT_TRUE(tight.pass);
  const auto strict = check_cash_additivity(m, f.ctx, x, 0, 10, {f.constant(0.01)},
                                            {.violation_cap = 0.5, .tolerance = 1e-5});
  EXPECT_FALSE(strict.pass);
  EXPECT_DOUBLE_EQ(strict.violation_fraction, 1.0);
  EXPECT_EQ(strict.seed, 12u);
  EXPECT_EQ(strict.n_paths, 1000u);
  EXPECT_EQ(strict.n_steps, 10u);
}

TEST(Reports, IdenticalAcrossThreads) {
  auto run = [](unsigned threads) {
    Fixture f(10, 6000, 13, threads);
    const auto x = f.claim("brownian", 10);
    return check_time_consistency(f.measure("driver:q_entropic:0.5"), f.ctx,
                                  TimeConsistency::sub, f.claim("sin", 10), 0, 5, 10);
  };
  const auto a = run(1);
  for (unsigned w : {2u, 8u}) {
    const auto b = run(w);
    EXPECT_EQ(a.max_violation, b.max_violation);
    EXPECT_EQ(a.metrics, b.metrics);
  }
}

TEST(Taxonomy, SubsetIsConsistent) {
  Fixture f(10, 4000, 14);
  const auto tax = taxonomy_matrix(f.ctx, {"driver:linear_y:0.1", "entropic", "discounted:mean,0.1",
                                           "driver:csa_example"});
  EXPECT_TRUE(tax.consistent());
  ASSERT_EQ(tax.rows.size(), 4u);
  EXPECT_FALSE(tax.rows[0].holds.at("weak"));
  EXPECT_TRUE(tax.rows[1].holds.at("strong"));
  EXPECT_TRUE(tax.rows[1].holds.at("weak"));
}
