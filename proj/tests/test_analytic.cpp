#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "collapse/analytic.hpp"

using namespace collapse;

namespace {

const DensityParams rho6{0.75, std::sqrt(3.0) / 4.0, 0.0};
constexpr double two_pi = 2.0 * std::numbers::pi;

// exp(A t) applied to (x, y, z, 1) for the affine system, evaluated at 40 digits.
struct Frozen {
  double gamma, t, x, y, z;
};
const std::vector<Frozen> frozen = {
    {5.0, 0.1, 0.74633258379569122, 0.15929647079224599, 0.031399162528847328},
    {5.0, 0.5, 0.71205403455382101, 0.0029176166352805691, 0.043825084500109793},
    {5.0, 1.0, 0.67218510215644541, 1.9658746252170549e-5, 0.03593352723444799},
    {5.0, two_pi, 0.5189773217784098, 2.2334362421717223e-28, 0.0039607976774760566},
    {2.0, 0.1, 0.74561922592339456, 0.29025709426640901, 0.040936537653899093},
    {2.0, 0.5, 0.68393972058572116, 0.058601896655634439, 0.09196986029286058},
    {2.0, 1.0, 0.60150146242745952, 0.0079309042820929928, 0.067667641618306346},
    {2.0, two_pi, 0.50001182764471587, 5.2661085299567726e-12, 1.09558091268187e-5},
    {0.05, 0.1, 0.74503320313811819, 0.42870415351966981, 0.049419822310017714},
    {0.05, 0.5, 0.63693458639956684, 0.41189442322243502, 0.20519669665524927},
    {0.05, 1.0, 0.40658158653677621, 0.3918060951569304, 0.21636706143270624},
    {0.05, two_pi, 0.68258132921729733, 0.23100711975068104, -0.00071740562292085169},
    {100.0, 0.1, 0.74952540728918921, 8.9250569906705522e-10, 0.0024955036430530249},
    {100.0, 1.0, 0.74507369040153776, 0.0, 0.0024509820267327744},
    {100.0, two_pi, 0.72049712755519306, 0.0, 0.0022051918167899392},
    {0.0, 0.5, 0.63507557646703493, 0.43301270189221932, 0.21036774620197413},
    {0.0, 1.0, 0.3959632908632144, 0.43301270189221932, 0.22732435670642042},
    {0.0, two_pi, 0.75, 0.43301270189221932, 0.0},
};

double max_gap(const DensityParams& a, const DensityParams& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
}

}  // namespace

TEST(ClassifyDamping, Examples) {
  EXPECT_EQ(classify_damping({1.0, 5.0}), DampingRegime::over_damped);
  EXPECT_EQ(classify_damping({1.0, 2.0}), DampingRegime::critically_damped);
  EXPECT_EQ(classify_damping({1.0, 0.05}), DampingRegime::under_damped);
  EXPECT_EQ(classify_damping({1.0, 2.0 * (1.0 + 5e-10)}), DampingRegime::critically_damped);
  EXPECT_EQ(classify_damping({1.0, 2.0 * (1.0 + 1e-6)}), DampingRegime::over_damped);
  EXPECT_THROW(classify_damping({0.0, 1.0}), DomainError);
}

TEST(DensityRhs, Examples) {
  auto r = density_ode_rhs({3.0, 7.0}, {0.5, 0.0, 0.0});
  EXPECT_EQ(r.dx, 0.0);
  EXPECT_EQ(r.dy, 0.0);
  EXPECT_EQ(r.dz, 0.0);
  r = density_ode_rhs({1.0, 5.0}, rho6);
  EXPECT_EQ(r.dx, 0.0);
  EXPECT_NEAR(r.dy, -4.330127018922193, 1e-14);
  EXPECT_NEAR(r.dz, 0.5, 1e-15);
  r = density_ode_rhs({1.0, 0.0}, {1.0, 0.0, 0.0});
  EXPECT_EQ(r.dx, 0.0);
  EXPECT_EQ(r.dz, 1.0);
}

TEST(SolveDensity, MatchesFrozenMatrixExponential) {
  for (const auto& f : frozen) {
    const DensityParams d = solve_density({1.0, f.gamma}, rho6, f.t);
    EXPECT_NEAR(d.x, f.x, 1e-12) << "gamma " << f.gamma << " t " << f.t;
    EXPECT_NEAR(d.y, f.y, 1e-12) << "gamma " << f.gamma << " t " << f.t;
    EXPECT_NEAR(d.z, f.z, 1e-12) << "gamma " << f.gamma << " t " << f.t;
  }
}

TEST(SolveDensity, InitialConditionExact) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (double g : {0.0, 0.05, 1.0, 2.0, 5.0, 100.0}) {
    for (int i = 0; i < 50; ++i) {
      const DensityParams init{0.5 + u(rng) * 0.5, u(rng) * 0.5, u(rng) * 0.5};
      const DensityParams d = solve_density({1.0, g}, init, 0.0);
      EXPECT_NEAR(d.x, init.x, 1e-15);
      EXPECT_EQ(d.y, init.y);
      EXPECT_NEAR(d.z, init.z, 1e-15);
    }
  }
}

TEST(SolveDensity, SteadyState) {
  const DensityParams d = solve_density({1.0, 1.0}, rho6, 30.0);
  EXPECT_LE(std::abs(d.x - 0.5), 1e-6);
  EXPECT_LE(std::abs(d.y), 1e-6);
  EXPECT_LE(std::abs(d.z), 1e-6);
}

TEST(SolveDensity, AgreesWithRk4InEveryRegime) {
  for (double g : {5.0, 2.0, 0.05}) {
    const ModelParams p{1.0, g};
    double worst = 0.0;
    for (const auto& s : integrate_density_reference(p, rho6, two_pi, 1e-6, 1000)) {
      worst = std::max(worst, max_gap(s.rho, solve_density(p, rho6, s.t)));
    }
    EXPECT_LE(worst, 1e-8) << "gamma " << g;
  }
}

TEST(SolveDensity, DerivativeMatchesRhs) {
  const double h = 1e-7;
  for (double g : {5.0, 2.0, 0.5}) {
    const ModelParams p{1.0, g};
    // Central difference around a small positive time; the rhs there is the reference.
    const double t = 0.3;
    const DensityParams lo = solve_density(p, rho6, t - h);
    const DensityParams hi = solve_density(p, rho6, t + h);
    const DensityRate r = density_ode_rhs(p, solve_density(p, rho6, t));
    auto rel = [](double fd, double exact) { return std::abs(fd - exact) / std::max(1e-3, std::abs(exact)); };
    EXPECT_LE(rel((hi.x - lo.x) / (2 * h), r.dx), 1e-5) << g;
    EXPECT_LE(rel((hi.y - lo.y) / (2 * h), r.dy), 1e-5) << g;
    EXPECT_LE(rel((hi.z - lo.z) / (2 * h), r.dz), 1e-5) << g;
  }
  // At t = 0 a one-sided difference of the same order.
  for (double g : {5.0, 2.0, 0.5}) {
    const ModelParams p{1.0, g};
    const DensityParams a = solve_density(p, rho6, h);
    const DensityParams b = solve_density(p, rho6, 2 * h);
    const DensityRate r = density_ode_rhs(p, rho6);
    EXPECT_NEAR((4 * a.x - b.x - 3 * rho6.x) / (2 * h), r.dx, 1e-5 * std::max(1.0, std::abs(r.dx)));
    EXPECT_NEAR((4 * a.y - b.y - 3 * rho6.y) / (2 * h), r.dy, 1e-5 * std::max(1.0, std::abs(r.dy)));
    EXPECT_NEAR((4 * a.z - b.z - 3 * rho6.z) / (2 * h), r.dz, 1e-5 * std::max(1.0, std::abs(r.dz)));
  }
}

TEST(SolveDensity, CoherenceDecaysExactly) {
  for (double g : {0.05, 2.0, 7.0}) {
    for (double t : {0.0, 0.3, 1.7, 5.0}) {
      EXPECT_DOUBLE_EQ(solve_density({1.0, g}, rho6, t).y, rho6.y * std::exp(-2.0 * g * t));
    }
  }
}

TEST(SolveDensity, ContinuityAcrossCriticalPoint) {
  const DensityParams c = solve_density({1.0, 2.0}, rho6, 1.0);
  for (double rel : {-1e-6, 1e-6}) {
    EXPECT_LE(max_gap(solve_density({1.0, 2.0 * (1.0 + rel)}, rho6, 1.0), c), 1e-4);
  }
}

TEST(SolveDensity, PositivityPreserved) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double g : {0.05, 1.0, 2.0, 5.0, 50.0}) {
    for (int i = 0; i < 40; ++i) {
      // Random point inside the Bloch ball.
      DensityParams init{0.5 + 0.5 * u(rng), 0.5 * u(rng), 0.5 * u(rng)};
      if (init.purity_radius2() > 0.25) continue;
      for (int k = 0; k <= 100; ++k) {
        EXPECT_TRUE(solve_density({1.0, g}, init, 0.1 * k).is_physical(1e-12));
      }
    }
  }
}

TEST(SolveDensity, ApproachesHalfForLargeTimes) {
  for (double g : {0.5, 2.0, 5.0}) {
    const DensityParams d = solve_density({1.0, g}, rho6, 200.0);
    EXPECT_NEAR(d.x, 0.5, 1e-6) << g;
    EXPECT_NEAR(d.z, 0.0, 1e-6) << g;
  }
}

TEST(SolveDensity, RejectsBadInput) {
  EXPECT_THROW(solve_density({0.0, 1.0}, rho6, 1.0), DomainError);
  EXPECT_THROW(solve_density({1.0, 1.0}, rho6, -1.0), DomainError);
}

TEST(ReferenceIntegration, Basics) {
  const auto only = integrate_density_reference({1.0, 1.0}, rho6, 0.0, 1e-3);
  ASSERT_EQ(only.size(), 1u);
  EXPECT_EQ(only[0].t, 0.0);

  const auto s = integrate_density_reference({1.0, 0.1}, rho6, 1.0005, 1e-3, 100);
  EXPECT_DOUBLE_EQ(s.back().t, 1.0005);
  EXPECT_EQ(s[1].t, 0.1);

  // omega = 0 is fine here: x is constant and z decays.
  const auto w0 = integrate_density_reference({0.0, 1.0}, rho6, 1.0, 1e-3);
  EXPECT_NEAR(w0.back().rho.x, 0.75, 1e-15);

  EXPECT_THROW(integrate_density_reference({1.0, 1e9}, rho6, 1.0, 1e-3), Error);
}

TEST(ReferenceIntegration, UnderDampedOscillationFromPlus) {
  const auto s = integrate_density_reference({1.0, 0.05}, {1.0, 0.0, 0.0}, two_pi, 1e-4, 10);
  int sign_changes = 0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if ((s[i].rho.x - 0.5) * (s[i - 1].rho.x - 0.5) < 0.0) ++sign_changes;
  }
  // Angular frequency close to 2: two full periods, four crossings of 1/2.
  EXPECT_EQ(sign_changes, 4);
  EXPECT_LT(std::abs(s.back().rho.x - 0.5), 0.5);
}

TEST(SpaceCollapse, Scalars) {
  const double tp = spread_characteristic_time(proton_mass_g, 1e-5);
  EXPECT_GT(tp, 1e-8);
  EXPECT_LT(tp, 1e-6);
  const double tg = spread_characteristic_time(1.0, 1e-5);
  EXPECT_GT(tg, 1e16);
  EXPECT_LT(tg, 1e18);
  EXPECT_NEAR(spread_characteristic_time(1.0, 2e-5) / tg, 4.0, 1e-12);
  EXPECT_THROW(spread_characteristic_time(0.0, 1e-5), DomainError);
  EXPECT_THROW(spread_characteristic_time(1.0, -1.0), DomainError);

  EXPECT_DOUBLE_EQ(amplification_rate(1.0), 1e-17);
  EXPECT_NEAR(amplification_rate(6.022e23), 6.0e6, 0.05e6);
  EXPECT_DOUBLE_EQ(amplification_rate(2e10), 2.0 * amplification_rate(1e10));
  EXPECT_NEAR(1.0 / std::sqrt(SpaceCollapseConstants{}.alpha_loc), 1e-5, 1e-20);
}
