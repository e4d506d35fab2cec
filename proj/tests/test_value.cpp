#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "lostsales/demand.hpp"
#include "lostsales/ladder.hpp"
#include "lostsales/value.hpp"
#include "oracles.hpp"

using namespace lostsales;

namespace {

struct Fixture {
  DemandModel demand;
  IncrementModel inc;
  LadderSummary ladder;
  RenewalTable renewal;
  double ej = 0.0;
  ValueTable table;

  Fixture(DemandModel d, double r, int refine, CostParams costs,
          double x_max, Convention conv = Convention::Derived)
      : demand(std::move(d)),
        inc(increment_model(demand, r, refine)),
        ladder(ladder_moments_kappa(ascending_ladder_exact(inc), true,
                                    inc.span)),
        renewal(renewal_measure(ladder, x_max)),
        ej([&] {
          StationaryOptions so;
          so.refine = refine;
          so.tv_tol = 1e-13;
          return stationary_inventory(demand, r, so).mean;
        }()),
        table(inc, ladder, renewal, costs, ej, conv) {}
};

std::vector<double> grid_points(const Fixture& f, int count) {
  std::vector<double> xs;
  for (int k = 0; k < count; ++k)
    xs.push_back(f.inc.span * static_cast<double>(k));
  return xs;
}

}  // namespace

TEST(ValueFunction, ARZeroAtOriginWhenNoOrder) {
  Fixture f(make_geometric_demand(0.5), 0.0, 1, {1.0, 2.0}, 60.0);
  EXPECT_NEAR(f.ej, 0.0, 1e-12);
  EXPECT_NEAR(f.table.a(0.0), 0.0, 1e-12);
}

TEST(ValueFunction, ARSlopeApproachesH) {
  Fixture f(make_geometric_demand(0.9), 5.0, 1, {1.0, 1.0}, 300.0);
  const double d = f.inc.span;
  const double x = 280.0;
  const double slope = (f.table.a(x + d) - f.table.a(x)) / d;
  EXPECT_NEAR(slope, f.table.costs().h, 1e-9);
}

TEST(ValueFunction, ARMatchesDirectExpectation) {
  Fixture f(make_geometric_demand(0.9), 5.0, 1, {1.0, 1.0}, 80.0);
  RngStream rng(13);
  for (int i = 0; i < 20; ++i) {
    const double x = std::floor(rng.next_uniform() * 60.0);
    const double direct = oracles::a_r_direct(f.inc, x, 1.0, 1.0, f.ej);
    EXPECT_NEAR(f.table.a(x), direct, 1e-10) << "x=" << x;
  }
}

TEST(ValueFunction, ValueZeroAtOrigin) {
  Fixture f(make_geometric_demand(0.9), 5.0, 1, {1.0, 1.0}, 60.0);
  EXPECT_DOUBLE_EQ(f.table.value(0.0), 0.0);
  const ValueTable e = ValueTable::exponential(1.0, 0.9, {1.0, 9.0});
  EXPECT_DOUBLE_EQ(e.value(0.0), 0.0);
}

TEST(ValueFunction, ExponentialClosedFormQuadratic) {
  const ValueTable t = ValueTable::exponential(1.0, 0.9, {1.0, 9.0});
  EXPECT_NEAR(t.b(), 5.0, 1e-12);
  EXPECT_NEAR(t.xi_tilde(), 0.0, 1e-12);
  EXPECT_NEAR(t.xi(), 0.9, 1e-12);
  EXPECT_NEAR(t.xi_tilde(Convention::AsPrinted), 0.0, 1e-12);
  for (double x : {0.0, 0.25, 1.0, 3.7, 10.0, 55.5}) {
    EXPECT_NEAR(t.value(x), 5.0 * x * x, 1e-12 * (1.0 + 5.0 * x * x));
    const auto [quad, corr] = t.decomposition(x);
    EXPECT_DOUBLE_EQ(corr, 0.0);
    EXPECT_NEAR(quad, t.value(x), 1e-12 * (1.0 + std::abs(t.value(x))));
    EXPECT_DOUBLE_EQ(t.integral_g(x), 0.0);
  }
  // M/D/1 stationary mean behind the cost rate
  EXPECT_NEAR(t.ej_inf(), 4.05, 1e-12);
  EXPECT_NEAR(t.cost_rate(), 4.05 + 9.0 * 0.1, 1e-12);
}

TEST(ValueFunction, GeometricGoldenValueAtFour) {
  Fixture f(make_geometric_demand(0.9), 5.0, 1, {1.0, 1.0}, 60.0);
  EXPECT_NEAR(f.table.value(4.0), 3.5, 1e-8);
}

TEST(ValueFunction, DecompositionIdentityDerived) {
  std::vector<Fixture> fixtures;
  fixtures.emplace_back(make_geometric_demand(0.9), 5.0, 1,
                        CostParams{1.0, 1.0}, 220.0);
  fixtures.emplace_back(make_geometric_demand(0.5), 0.5, 2,
                        CostParams{1.0, 4.0}, 120.0);
  fixtures.emplace_back(make_lattice_demand({0.5, 0.5}, 2.0), 0.5, 8,
                        CostParams{2.0, 3.0}, 60.0);
  for (const auto& f : fixtures) {
    for (double x : grid_points(f, 200)) {
      const double v = f.table.value(x);
      const auto [quad, corr] = f.table.decomposition(x);
      EXPECT_NEAR(quad + corr, v, 1e-9 * (1.0 + std::abs(v)))
          << "x=" << x;
    }
  }
}

TEST(ValueFunction, DecompositionAsPrintedFailsOnGeometric) {
  Fixture f(make_geometric_demand(0.9), 5.0, 1, {1.0, 1.0}, 220.0,
            Convention::AsPrinted);
  EXPECT_NEAR(f.table.xi_tilde(), 62.0 / 9.0, 1e-7);
  EXPECT_NEAR(f.table.xi_tilde(Convention::Derived), -2.0, 1e-7);
  double worst = 0.0, scale = 1.0;
  for (double x : grid_points(f, 200)) {
    const double v = f.table.value(x);
    const auto [quad, corr] = f.table.decomposition(x);
    worst = std::max(worst, std::abs(quad + corr - v));
    scale = std::max(scale, std::abs(v));
  }
  EXPECT_GE(worst, 1e-3 * scale);
}

TEST(ValueFunction, DecompositionPartsVanishAtZero) {
  Fixture f(make_lattice_demand({0.5, 0.5}, 2.0), 0.5, 8, {1.0, 5.0}, 40.0);
  const auto [quad, corr] = f.table.decomposition(0.0);
  EXPECT_DOUBLE_EQ(quad, 0.0);
  EXPECT_DOUBLE_EQ(corr, 0.0);
}

TEST(ValueFunction, WienerHopfMasterOracle) {
  struct Spec {
    DemandModel m;
    double r;
    int refine;
  };
  std::vector<Spec> specs;
  specs.push_back({make_geometric_demand(0.9), 5.0, 1});
  specs.push_back({make_geometric_demand(0.5), 0.5, 2});
  specs.push_back({make_lattice_demand({0.5, 0.5}, 2.0), 0.5, 8});
  for (auto& s : specs) {
    const double x_top =
        200.0 * s.m.span / s.refine + s.r + 2.0 * s.m.span;
    Fixture f(s.m, s.r, s.refine, {1.0, 4.0}, x_top);
    const std::vector<double> xs = grid_points(f, 200);
    double scale = 1.0;
    for (double x : xs) scale = std::max(scale, std::abs(f.table.value(x)));
    const double res = wiener_hopf_residual(f.table, f.inc, xs);
    EXPECT_LE(res, 1e-8 * scale) << "fixture r=" << s.r;
  }
}

TEST(ValueFunction, PerturbedKappaBreaksTheEquation) {
  Fixture f(make_geometric_demand(0.9), 5.0, 1, {1.0, 1.0}, 220.0);
  const double b = f.table.b();
  const double mu_plus = f.ladder.mu_plus;
  const double mu_y = f.inc.mu_y;
  const double kappa = f.ladder.kappa + 0.1;  // deliberate perturbation
  const double xt = mu_y * (1.0 + 1.0) - mu_plus * kappa;
  auto v_bad = [&](double x) {
    return b * ((x - xt) * (x - xt) - xt * xt) +
           2.0 * b * mu_plus * f.table.integral_g(x);
  };
  const auto& q = f.demand.pmf;
  double worst = 0.0, scale = 1.0;
  for (int k = 0; k < 60; ++k) {
    const double x = static_cast<double>(k);
    double conv = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      const double arg = x + 5.0 - static_cast<double>(j);
      if (arg >= 0.0) conv += q[j] * v_bad(arg);
    }
    worst = std::max(worst, std::abs(f.table.a(x) + conv - v_bad(x)));
    scale = std::max(scale, std::abs(v_bad(x)));
  }
  EXPECT_GE(worst, 1e-3 * scale);
}

TEST(ValueFunction, PilTargets) {
  // exponential: mu+ = 1 makes both conventions coincide
  const ValueTable e = ValueTable::exponential(1.0, 0.9, {1.0, 9.0});
  EXPECT_NEAR(e.xi(), 0.9, 1e-12);

  Fixture f(make_geometric_demand(0.9), 5.0, 1, {1.0, 1.0}, 60.0);
  const double derived =
      pil_target(9.0, 5.0, {1.0, 1.0}, f.ladder, Convention::Derived);
  EXPECT_NEAR(derived, 3.0, 1e-6);
  const double printed =
      pil_target(9.0, 5.0, {1.0, 1.0}, f.ladder, Convention::AsPrinted);
  EXPECT_NEAR(printed, 4.0 + 9.0 - 10.0 / 9.0, 1e-6);
  EXPECT_NEAR(f.table.xi(), 3.0, 1e-6);

  // p = 0 with kappa mu+ > mu_D drives the target negative
  const double neg =
      pil_target(9.0, 5.0, {1.0, 0.0}, f.ladder, Convention::Derived);
  EXPECT_LE(neg, 0.0);
}

TEST(ValueFunction, FinitenessSandwichForFiniteSupportZ) {
  Fixture f(make_geometric_demand(0.9), 5.0, 1, {1.0, 1.0}, 220.0);
  // empirical Z on a handful of grid points
  const std::vector<double> z = {0.0, 3.0, 7.0, 12.0, 30.0, 55.0};
  const std::vector<double> w = {0.1, 0.25, 0.2, 0.25, 0.15, 0.05};
  double ev = 0.0, ez = 0.0, ez2 = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    ev += w[i] * f.table.value(z[i]);
    ez += w[i] * z[i];
    ez2 += w[i] * z[i] * z[i];
  }
  EXPECT_TRUE(std::isfinite(ev));
  const double var = ez2 - ez * ez;
  const double xt = f.table.xi_tilde();
  const double core = var + (ez - xt) * (ez - xt) - xt * xt;
  const double slack = 2.0 * f.ladder.mu_plus * f.ladder.kappa * ez;
  const double b = f.table.b();
  EXPECT_LE(ev, b * (core + slack) + 1e-9);
  EXPECT_GE(ev, b * (core - slack) - 1e-9);
}

TEST(ValueFunction, OffGridAndBeyondTableErrors) {
  Fixture f(make_geometric_demand(0.9), 5.0, 1, {1.0, 1.0}, 40.0);
  EXPECT_THROW(f.table.value(0.5), Error);
  EXPECT_THROW(f.table.value(1e6), Error);
  try {
    f.table.value(0.5);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OffGrid);
  }
  try {
    f.table.value(1e6);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BeyondTable);
  }
  EXPECT_THROW(ValueTable::exponential(1.0, 0.9, {0.0, 9.0}), Error);
}
