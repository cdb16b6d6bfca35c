#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "horizon/claim.hpp"
#include "horizon/ensemble.hpp"
#include "horizon/grid.hpp"
#include "horizon/regression.hpp"
#include "oracles.hpp"

using namespace horizon;

namespace {

RandomField terminal_level(const PathEnsemble& ens, std::size_t node) {
  return evaluate_claim(claims::brownian(node), ens);
}

}  // namespace

TEST(TimeGrid, NodesAreUniform) {
  const TimeGrid g(2.0, 8);
  EXPECT_DOUBLE_EQ(g.time(0), 0.0);
  EXPECT_DOUBLE_EQ(g.time(8), 2.0);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(g.time(i + 1) - g.time(i), 0.25, 1e-15);
  EXPECT_EQ(g.index_of(0.5), 2u);
  EXPECT_THROW(g.index_of(0.3), std::out_of_range);
  EXPECT_THROW(g.time(9), std::out_of_range);
}

TEST(TimeGrid, RejectsBadArguments) {
  EXPECT_THROW(TimeGrid(0.0, 4), std::invalid_argument);
  EXPECT_THROW(TimeGrid(1.0, 0), std::invalid_argument);
}

TEST(DiscountCurve, Examples) {
  const TimeGrid g(1.0, 10);
  EXPECT_DOUBLE_EQ(DiscountCurve::flat(g, 0.0).factor(0, 10), 1.0);
  EXPECT_DOUBLE_EQ(DiscountCurve::flat(g, 0.1).factor(4, 4), 1.0);
  EXPECT_NEAR(DiscountCurve::flat(g, 0.1).factor(0, 10), oracle::kDiscount01, 1e-12);
  EXPECT_THROW(DiscountCurve::flat(g, 0.1).factor(5, 2), std::invalid_argument);
  EXPECT_THROW(DiscountCurve(g, {0.1}), std::invalid_argument);
}

TEST(DiscountCurve, Telescopes) {
  const TimeGrid g(1.0, 10);
  const DiscountCurve c(g, {0.0, 0.1, 0.2, 0.05, 0.0, 0.3, 0.1, 0.1, 0.4, 0.0});
  for (std::size_t i = 0; i <= 10; ++i) {
    for (std::size_t j = i; j <= 10; ++j) {
      EXPECT_GT(c.factor(i, j), 0.0);
      EXPECT_LE(c.factor(i, j), 1.0);
      for (std::size_t k = j; k <= 10; ++k) {
        EXPECT_NEAR(c.factor(i, k), c.factor(i, j) * c.factor(j, k), 1e-14);
      }
    }
  }
}

TEST(Simulate, SmallExample) {
  const TimeGrid g(1.0, 1);
  const auto ens = simulate(g, 1, 4, 7);
  for (std::size_t p = 0; p < 4; ++p) EXPECT_EQ(ens.level(0, p, 0), 0.0);
  EXPECT_TRUE(ens == simulate(g, 1, 4, 7));
  EXPECT_FALSE(ens == simulate(g, 1, 4, 8));
}

TEST(Simulate, TerminalVariance) {
  const TimeGrid g(1.0, 4);
  const auto ens = simulate(g, 1, 100000, 11);
  const auto b1 = terminal_level(ens, 4);
  EXPECT_GE(b1.stddev() * b1.stddev(), 0.98);
  EXPECT_LE(b1.stddev() * b1.stddev(), 1.02);
}

TEST(Simulate, IncrementMoments) {
  const TimeGrid g(1.0, 10);
  const std::size_t n = 20000;
  const auto ens = simulate(g, 2, n, 5);
  const double dt = g.dt();
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      double s = 0.0, s2 = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        const double v = ens.increment(i, p, k);
        s += v;
        s2 += v * v;
      }
      const double mean = s / n;
      const double var = s2 / n - mean * mean;
      EXPECT_LE(std::abs(mean), 4.0 * std::sqrt(dt / n));
      EXPECT_NEAR(var, dt, 0.1 * dt);
    }
  }
}

TEST(Simulate, IndependentOfWorkerCount) {
  const TimeGrid g(1.0, 8);
  const auto a = simulate(g, 2, 5000, 99, Executor(1));
  for (unsigned w : {2u, 8u}) EXPECT_TRUE(a == simulate(g, 2, 5000, 99, Executor(w)));
}

TEST(EnsembleIO, CsvAndBinaryRoundTrip) {
  const TimeGrid g(1.0, 3);
  const auto ens = simulate(g, 2, 10, 1);
  std::stringstream csv;
  write_csv(ens, csv);
  const auto back = read_csv(csv);
  EXPECT_EQ(back.paths(), 10u);
  EXPECT_EQ(back.seed(), 1u);
  std::stringstream bin;
  write_binary(ens, bin);
  EXPECT_TRUE(read_binary(bin) == ens);
  std::stringstream junk("not an ensemble");
  EXPECT_ANY_THROW(read_binary(junk));
}

TEST(Claims, Examples) {
  const TimeGrid g(1.0, 2);
  auto ens = simulate(g, 1, 3, 1);
  ens.level(2, 0, 0) = 0.3;
  ens.level(2, 1, 0) = -0.4;
  const auto c = evaluate_claim(parse_claim("const:2", 2), ens);
  for (std::size_t p = 0; p < 3; ++p) EXPECT_EQ(c[p], 2.0);
  EXPECT_EQ(evaluate_claim(parse_claim("brownian", 2), ens)[0], 0.3);
  EXPECT_DOUBLE_EQ(evaluate_claim(parse_claim("neg_part:0", 2), ens)[1], 0.4);
  EXPECT_THROW(parse_claim("bogus", 2), UnknownLabel);
  EXPECT_THROW(evaluate_claim(parse_claim("sin", 5), ens), std::out_of_range);
}

// Changing increments after node i must not change a claim read at i.
TEST(Claims, Adapted) {
  const TimeGrid g(1.0, 4);
  auto ens = simulate(g, 1, 50, 3);
  const auto before = evaluate_claim(parse_claim("call:0.1", 2), ens);
  for (std::size_t p = 0; p < 50; ++p) {
    ens.level(3, p, 0) += 1.0;
    ens.level(4, p, 0) -= 2.0;
  }
  const auto after = evaluate_claim(parse_claim("call:0.1", 2), ens);
  EXPECT_EQ(before.values(), after.values());
}

TEST(CondExpect, ConstantIsReproduced) {
  const TimeGrid g(1.0, 10);
  const auto ens = simulate(g, 1, 5000, 2);
  const RandomField c(10, std::vector<double>(5000, 3.5), {10});
  for (std::size_t i : {0u, 3u, 9u}) {
    const auto e = cond_expect(c, i, ens);
    for (std::size_t p = 0; p < 5000; p += 97) EXPECT_NEAR(e[p], 3.5, 1e-10);
  }
}

TEST(CondExpect, AtZeroIsSampleMean) {
  const TimeGrid g(1.0, 10);
  const auto ens = simulate(g, 1, 5000, 2);
  const auto b1 = terminal_level(ens, 10);
  const auto e = cond_expect(b1, 0, ens);
  EXPECT_NEAR(e[0], b1.mean(), 1e-12);
  EXPECT_NEAR(e[0], 0.0, 0.06);
}

TEST(CondExpect, MartingaleOracle) {
  const TimeGrid g(1.0, 10);
  const auto ens = simulate(g, 1, 100000, 4);
  const auto b1 = terminal_level(ens, 10);
  const auto e1 = cond_expect(b1, 5, ens, {.degree = 1});
  const auto e4 = cond_expect(b1, 5, ens, {.degree = 4});
  double worst = 0.0, sq = 0.0;
  for (std::size_t p = 0; p < ens.paths(); ++p) {
    worst = std::max(worst, std::abs(e1[p] - ens.level(5, p, 0)));
    sq += std::pow(e4[p] - ens.level(5, p, 0), 2);
  }
  EXPECT_LE(worst, 0.05);
  // Degree 4 extrapolates in the tails; its error is small in mean square.
  EXPECT_LE(std::sqrt(sq / ens.paths()), 0.01);
}

// Tower property and linearity at 1e-8.
TEST(CondExpectProperty, TowerAndLinearity) {
  const TimeGrid g(1.0, 10);
  const auto ens = simulate(g, 1, 20000, 8);
  const auto f = evaluate_claim(parse_claim("sin", 10), ens);
  const auto h = evaluate_claim(parse_claim("call:0.2", 10), ens);
  const auto direct = cond_expect(f, 0, ens);
  const auto tower = cond_expect(cond_expect(f, 6, ens), 0, ens);
  EXPECT_NEAR(direct[0], tower[0], 1e-8);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 5; ++k) {
    const double a = u(rng), b = u(rng);
    const auto lhs = cond_expect(a * f + b * h, 5, ens);
    const auto rf = cond_expect(f, 5, ens), rh = cond_expect(h, 5, ens);
    double worst = 0.0;
    for (std::size_t p = 0; p < ens.paths(); ++p) {
      worst = std::max(worst, std::abs(lhs[p] - (a * rf[p] + b * rh[p])));
    }
    EXPECT_LE(worst, 1e-8);
  }
}

TEST(CondExpectProperty, MonotoneInTheMean) {
  const TimeGrid g(1.0, 10);
  const auto ens = simulate(g, 1, 5000, 8);
  const auto f = evaluate_claim(parse_claim("sin", 10), ens);
  const auto h = f + 0.01;
  EXPECT_LE(cond_expect(f, 4, ens).mean(), cond_expect(h, 4, ens).mean() + 1e-10);
}

TEST(CondExpectProperty, BitIdenticalAcrossThreads) {
  const TimeGrid g(1.0, 10);
  const auto ens = simulate(g, 2, 9000, 8);
  const auto f = evaluate_claim(parse_claim("sin", 10), ens);
  const auto a = cond_expect(f, 5, ens, {}, Executor(1));
  for (unsigned w : {2u, 8u}) {
    EXPECT_EQ(a.values(), cond_expect(f, 5, ens, {}, Executor(w)).values());
  }
}

TEST(CondExpect, CollinearFeatureFallsBackToRidge) {
  const TimeGrid g(1.0, 4);
  const auto ens = simulate(g, 1, 2000, 8);
  // A feature equal to B_2 duplicates a basis column.
  const auto b2 = terminal_level(ens, 2).as_regressor("dup");
  const auto f = evaluate_claim(parse_claim("sin", 4), ens).with_state_of(b2);
  const auto proj = project(f, 2, ens, {});
  EXPECT_TRUE(proj.ridge_fallback);
  for (double v : proj.field.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(CondExpect, Errors) {
  const TimeGrid g(1.0, 4);
  const auto ens = simulate(g, 1, 100, 8);
  EXPECT_THROW(cond_expect(RandomField(4, std::vector<double>(7, 1.0)), 2, ens),
               std::invalid_argument);
  EXPECT_THROW(cond_expect(terminal_level(ens, 4), 5, ens), std::out_of_range);
  EXPECT_THROW(cond_expect(terminal_level(ens, 4), 2, ens, {.degree = -1}),
               std::invalid_argument);
}
