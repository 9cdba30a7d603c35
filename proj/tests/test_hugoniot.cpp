#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "detona/hugoniot.hpp"

using namespace detona;

namespace {

std::mt19937_64 rng(7);
double rnd(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Oracle: classical ideal-gas normal-shock relations in the shock frame.
struct ShockOracle {
  double rho_ratio, p_ratio;
};
ShockOracle ideal_shock_oracle(double gamma, double mach_plus) {
  double M2 = mach_plus * mach_plus;
  ShockOracle o;
  o.rho_ratio = (gamma + 1) * M2 / ((gamma - 1) * M2 + 2);
  o.p_ratio = (2 * gamma * M2 - (gamma - 1)) / (gamma + 1);
  return o;
}

}  // namespace

TEST_CASE("q = 0 endstates match the classical shock relations") {
  IdealPolytropic ig(0.4, 1.0);
  for (double Mp : {1.3, 1.8, 2.5, 3.5}) {
    GasState plus = make_state(ig, 1.0, -Mp * sound_speed(1.0, 1.0, ig), 1.0);
    EndstateRoots roots = solve_endstates(plus, plus.rho * plus.u, 0.0, ig);
    REQUIRE(roots.strong.has_value());
    ShockOracle o = ideal_shock_oracle(ig.gamma(), Mp);
    CHECK(roots.strong->rho == doctest::Approx(o.rho_ratio).epsilon(1e-9));
    CHECK(roots.strong->p / plus.p == doctest::Approx(o.p_ratio).epsilon(1e-9));
    REQUIRE(roots.weak.has_value());  // trivial intersection at the base point
    CHECK(roots.weak->rho == doctest::Approx(plus.rho));
  }
}

TEST_CASE("rayleigh residual") {
  IdealPolytropic ig(0.4, 1.0);
  GasState plus = make_state(ig, 1.0, -2.0, 1.0);
  CHECK(rayleigh_residual(plus, plus, plus.m) == 0.0);

  // direct substitution: rho+=1, p+=1, m^2=2, rho=2 -> residual = p - 2
  GasState base = make_state(ig, 1.0, -std::sqrt(2.0), 1.0 / 0.4);  // p = 1
  CHECK(base.p == doctest::Approx(1.0));
  GasState cand = make_state(ig, 2.0, -std::sqrt(2.0) / 2, rnd(0.5, 2.0));
  CHECK(rayleigh_residual(cand, base, -std::sqrt(2.0)) ==
        doctest::Approx(cand.p - 2.0).epsilon(1e-12));

  // affine in 1/rho with slope -m^2 (two-point slope oracle)
  double m = -1.7;
  GasState c1 = make_state(ig, 1.4, m / 1.4, 0.9);
  GasState c2 = make_state(ig, 2.9, m / 2.9, 0.9);
  double r1 = rayleigh_residual(c1, plus, m) - (c1.p - plus.p);
  double r2 = rayleigh_residual(c2, plus, m) - (c2.p - plus.p);
  double slope = (r1 - r2) / (1.0 / c1.rho - 1.0 / c2.rho);
  CHECK(slope == doctest::Approx(m * m).epsilon(1e-12));
}

TEST_CASE("hugoniot residual") {
  IdealPolytropic ig(0.4, 1.0);
  GasState plus = make_state(ig, 1.0, -2.0, 1.0);
  CHECK(hugoniot_residual(plus, plus, 0.0) == 0.0);
  // unburned trial state evaluated at burned composition: residual = -q
  double q = 0.37;
  CHECK(hugoniot_residual(plus, plus, q) == doctest::Approx(-q).epsilon(1e-14));
}

TEST_CASE("two intersections above the CJ flux, none below, tangency at it") {
  IdealPolytropic ig(0.4, 1.0);
  GasState plus = make_state(ig, 1.0, -2.4, 1.0);
  double q = 0.3;
  double m_cj = chapman_jouguet_flux(plus, q, ig);
  REQUIRE(m_cj < 0);

  EndstateRoots above = solve_endstates(plus, 1.25 * m_cj, q, ig);
  CHECK(above.strong.has_value());
  CHECK(above.weak.has_value());
  CHECK(above.strong->rho > above.weak->rho);

  EndstateRoots below = solve_endstates(plus, 0.8 * m_cj, q, ig);
  CHECK(!below.strong.has_value());
  CHECK(!below.weak.has_value());

  EndstateRoots at = solve_endstates(plus, m_cj * (1.0 + 1e-9), q, ig);
  if (at.strong && at.weak)
    CHECK(std::abs(at.strong->rho - at.weak->rho) < 2e-3 * at.strong->rho);

  // tangency: the Hugoniot residual along the Rayleigh line is stationary there
  if (at.strong) {
    double rho0 = at.strong->rho;
    auto H_of_rho = [&](double rho) {
      double p = plus.p - m_cj * m_cj * (1.0 / rho - 1.0 / plus.rho);
      GasState c = make_state(ig, rho, m_cj / rho, p / (ig.gruneisen() * rho));
      return hugoniot_residual(c, plus, q);
    };
    double h = 1e-5 * rho0;
    double dH = (H_of_rho(rho0 + h) - H_of_rho(rho0 - h)) / (2 * h);
    CHECK(std::abs(dH) < 2e-3);
  }
}

TEST_CASE("CJ flux tends to the sonic flux as q -> 0") {
  IdealPolytropic ig(0.4, 1.0);
  GasState plus = make_state(ig, 1.0, -2.4, 1.0);
  double sonic = plus.rho * plus.c;
  double prev_err = 1e300;
  for (double q : {0.1, 0.02, 0.004}) {
    double err = std::abs(std::abs(chapman_jouguet_flux(plus, q, ig)) - sonic);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 0.02 * sonic);
}

TEST_CASE("classification") {
  IdealPolytropic ig(0.4, 1.0);
  GasState plus = make_state(ig, 1.0, -2.4, 1.0);
  double q = 0.3;
  WavePair strong = make_pair(ig, plus, -2.4, q, DetonationKind::strong);
  DetonationClass dcs = classify(strong, ig);
  CHECK(dcs.kind == DetonationKind::strong);
  CHECK(dcs.mach_plus > 1.0);
  CHECK(dcs.mach_minus > 0.0);
  CHECK(dcs.mach_minus < 1.0);  // Mach at the burned state (the index-side M)
  auto tm = eigen_triples(strong.minus, ig);
  auto tp = eigen_triples(strong.plus, ig);
  CHECK(tm[1].a < 0);
  CHECK(tm[2].a > 0);
  CHECK(tp[2].a < 0);

  WavePair weak = make_pair(ig, plus, -2.4, q, DetonationKind::weak);
  CHECK(classify(weak, ig).kind == DetonationKind::weak);
  CHECK(eigen_triples(weak.minus, ig)[2].a < 0);  // fails at the -inf side

  WavePair bad = strong;
  bad.plus.u = 0.5;
  CHECK_THROWS_AS(classify(bad, ig), NumericalError);
}

TEST_CASE("claim 2: [e] + <p>[1/rho] = -q") {
  IdealPolytropic ig(0.4, 1.0);
  GasState plus = make_state(ig, 1.0, -2.0, 1.0);
  WavePair shock = make_pair(ig, plus, -2.0, 0.0, DetonationKind::strong);
  CHECK(claim2_check(shock) < 1e-12);

  GasState plus2 = make_state(ig, 1.0, -2.4, 1.0);
  WavePair det = make_pair(ig, plus2, -2.4, 0.25, DetonationKind::strong);
  CHECK(claim2_check(det) < 1e-10);

  // a violated RH3 shows up as exactly the claim-2 defect
  WavePair busted = det;
  busted.minus = make_state(ig, det.minus.rho, det.minus.u, det.minus.e * 1.01);
  double lhs = (busted.plus.e - busted.minus.e) +
               0.5 * (busted.plus.p + busted.minus.p) *
                   (1.0 / busted.plus.rho - 1.0 / busted.minus.rho) +
               busted.q;
  CHECK(claim2_check(busted) == doctest::Approx(std::abs(lhs)).epsilon(1e-12));
  CHECK(std::abs(lhs) > 1e-4);
}

TEST_CASE("compression ratio bounds") {
  IdealPolytropic ig(0.4, 1.0);
  GasState plus = make_state(ig, 1.0, -2.4, 1.0);
  WavePair det = make_pair(ig, plus, -2.4, 0.3, DetonationKind::strong);
  auto [r, bound] = compression_bounds(det, ig);
  CHECK(bound == doctest::Approx(6.0));  // gamma = 1.4 -> 1 + 2/Gamma
  CHECK(r > 1.0);
  CHECK(r < bound);

  WavePair weak = pair_from_compression(ig, make_state(ig, 1.0, -1.0, 1.0), 1.001, 0.0);
  auto [rw, bw] = compression_bounds(weak, ig);
  CHECK(rw == doctest::Approx(1.001));

  for (double Mp : {1.5, 2.0, 3.0, 4.0}) {
    GasState pl = make_state(ig, 1.0, -Mp * sound_speed(1.0, 1.0, ig), 1.0);
    for (double q : {0.0, 0.1, 0.3}) {
      EndstateRoots roots = solve_endstates(pl, pl.m, q, ig);
      if (!roots.strong) continue;
      WavePair pr{pl, *roots.strong, pl.m, q};
      auto [rr, bb] = compression_bounds(pr, ig);
      CHECK(rr < bb);
    }
  }
}

TEST_CASE("property: RH residuals and claim 2 on random solver pairs") {
  IdealPolytropic ig(0.4, 1.0);
  int built = 0;
  for (int t = 0; t < 300; ++t) {
    double e = rnd(0.5, 2.0);
    double Mp = rnd(1.2, 3.5);
    GasState plus = make_state(ig, 1.0, -Mp * sound_speed(1.0, e, ig), e);
    double q = rnd(0.0, 0.4) * e;
    EndstateRoots roots = solve_endstates(plus, plus.m, q, ig);
    if (!roots.strong) continue;
    ++built;
    WavePair pair{plus, *roots.strong, plus.m, q};
    Vec3 rh = rh_residuals(pair);
    CHECK(rh.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(claim2_check(pair) <= 1e-10);
  }
  CHECK(built > 150);
}

TEST_CASE("root count monotone through the CJ value") {
  IdealPolytropic ig(0.4, 1.0);
  GasState plus = make_state(ig, 1.0, -2.4, 1.0);
  double q = 0.3;
  double m_cj = chapman_jouguet_flux(plus, q, ig);
  int prev = 2;
  for (double f = 1.6; f > 0.5; f -= 0.05) {
    EndstateRoots roots = solve_endstates(plus, f * m_cj, q, ig);
    int n = (roots.strong ? 1 : 0) + (roots.weak ? 1 : 0);
    CHECK(n <= prev);
    prev = n;
  }
  CHECK(prev == 0);
}
