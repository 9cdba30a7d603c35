#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "detona/profile.hpp"

using namespace detona;

namespace {

std::mt19937_64 rng(11);
double rnd(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

auto ig = std::make_shared<IdealPolytropic>(0.4, 1.0);

WavePair znd_pair(double M, double qhat) {
  double gamma = ig->gamma();
  double e_m = 1.0;
  double u_m = -M * std::sqrt(gamma * ig->gruneisen() * e_m);
  CBranchPoints at1 = znd_branch_points(gamma, M, qhat, 1.0);
  GasState plus = make_state(*ig, 1.0, at1.u_weak * u_m, at1.T_weak * e_m);
  GasState minus = make_state(*ig, at1.u_weak, u_m, e_m);
  return WavePair{plus, minus, at1.u_weak * u_m, qhat * gamma * e_m};
}

// Independent residual oracle: substitute the interpolated profile into the ODE.
double residual_oracle(const Profile& p, int n_samples) {
  double worst = 0;
  for (int i = 0; i < n_samples; ++i) {
    double x = p.x_min() + (p.x_max() - p.x_min()) * rnd(0.02, 0.98);
    Vec y = p.state_at(x);
    Vec f = p.rhs(y);
    Vec d = p.deriv_at(x);
    for (Eigen::Index c = 0; c < y.size(); ++c)
      worst = std::max(worst, std::abs(d[c] - f[c]) / std::max(1.0, std::abs(f[c])));
  }
  return worst;
}

}  // namespace

TEST_CASE("weak NS shock: existence, monotonicity, tails at linearization rates") {
  WavePair pair = pair_from_compression(*ig, make_state(*ig, 1.0, -1.0, 1.0), 1.01, 0.0);
  Profile p = ns_shock_profile(pair, 0.5, 0.5, ig);
  CHECK(residual_oracle(p, 200) < 1e-8);
  for (size_t i = 1; i < p.xs.size(); ++i) CHECK(p.ys[i][0] <= p.ys[i - 1][0] + 1e-12);

  RestPointSpectrum sp = rest_point_spectrum(p);
  double mu_unstable = 0, mu_slow_stable = -1e300;
  for (int i = 0; i < 2; ++i) {
    if (sp.minus[i].real() > 0) mu_unstable = sp.minus[i].real();
    if (sp.plus[i].real() < 0) mu_slow_stable = std::max(mu_slow_stable, sp.plus[i].real());
  }
  auto [am, ap] = tail_decay_fit(p);
  CHECK(am == doctest::Approx(mu_unstable).epsilon(0.05));
  CHECK(ap == doctest::Approx(-mu_slow_stable).epsilon(0.05));
}

TEST_CASE("zero-amplitude pair gives the constant profile; tail fit rejected") {
  GasState s = make_state(*ig, 1.3, -1.1, 0.9);
  WavePair pair{s, s, s.m, 0.0};
  Profile p = ns_shock_profile(pair, 0.3, 0.3, ig);
  CHECK(p.state_at(0.5)[0] == doctest::Approx(s.u));
  CHECK(p.alpha_minus == 0.0);
  CHECK(p.alpha_plus == 0.0);
}

TEST_CASE("midpoint momentum residual of the integrated momentum equation") {
  GasState plus = make_state(*ig, 1.0, -2.0, 1.0);
  WavePair pair = make_pair(*ig, plus, -2.0, 0.0, DetonationKind::strong);
  Profile p = ns_shock_profile(pair, 0.3, 0.3, ig);
  double C_mom = pair.m * pair.minus.u + pair.minus.p;
  double worst = 0;
  for (int i = 0; i < 300; ++i) {
    double x = p.x_min() + (p.x_max() - p.x_min()) * rnd(0.0, 1.0);
    Vec y = p.state_at(x);
    double u = y[0], e = y[1];
    double rho = pair.m / u;
    double lhs = p.nu * p.deriv_at(x)[0];  // nu (m/rho)_x = nu u_x
    double rhs = pair.m * u + ig->p(rho, e) - C_mom;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("detonation with q = 0 reduces to the gas shock in (u, T)") {
  GasState plus = make_state(*ig, 1.0, -2.0 * sound_speed(1.0, 1.0, *ig), 1.0);
  WavePair pair = make_pair(*ig, plus, plus.m, 0.0, DetonationKind::strong);
  DissipationParams par{0.25, 0.25, 0.25, 1.0, 0.0, 1.0};
  IgnitionFunction ign{1.2, 1.45};
  Profile det = detonation_profile(pair, par, ign, ig);
  Profile shock = ns_shock_profile(pair, par.nu_eff(), par.theta_eff(), ig);
  // compare u(T-crossing-centered coordinates); both profiles are centered consistently
  double worst = 0;
  for (double x = -4.0; x <= 4.0; x += 0.25) {
    // align by temperature parameterization: find the shock x with the same u
    double u_det = det.state_at(x)[0];
    double lo = shock.x_min(), hi = shock.x_max();
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (shock.state_at(mid)[0] > u_det)
        lo = mid;
      else
        hi = mid;
    }
    double e_shock = shock.state_at(0.5 * (lo + hi))[1];
    worst = std::max(worst, std::abs(det.state_at(x)[1] - e_shock));
  }
  CHECK(worst < 1e-7);
  CHECK(residual_oracle(det, 200) < 1e-8);
}

TEST_CASE("detonation profile: residuals, flux constancy, Z structure, reactive tail") {
  WavePair pair = znd_pair(0.8, 0.3);
  IgnitionFunction ign{0.5, 0.7};
  DissipationParams par{1.0, 1.0, 1.0, 1.0, pair.q, 0.1};
  Profile p = detonation_profile(pair, par, ign, ig);

  CHECK(residual_oracle(p, 300) < 1e-8);
  CHECK(p.max_ode_residual() < 1e-8);

  // mass flux constant along the profile
  double worst_m = 0;
  for (int i = 0; i < 100; ++i) {
    double x = p.x_min() + (p.x_max() - p.x_min()) * rnd(0.0, 1.0);
    worst_m = std::max(worst_m, std::abs(p.conserved_at(x)[1] - pair.m));
  }
  CHECK(worst_m < 1e-12);

  // Z = Y - d Y_x / u pointwise
  double worst_z = 0;
  for (int i = 0; i < 100; ++i) {
    double x = p.x_min() + (p.x_max() - p.x_min()) * rnd(0.0, 1.0);
    Vec y = p.state_at(x), d = p.deriv_at(x);
    worst_z = std::max(worst_z, std::abs(y[3] - (y[2] - p.d * d[2] / y[0])));
  }
  CHECK(worst_z < 1e-8);

  // Z monotone increasing
  for (size_t i = 1; i < p.xs.size(); ++i) CHECK(p.ys[i][3] >= p.ys[i - 1][3] - 1e-10);

  // reactive tail rate at -inf matches the unstable quadratic root
  double u_m = pair.minus.u, d_eff = par.d_eff();
  double mu_react = (u_m + std::sqrt(u_m * u_m + 4 * d_eff * par.k)) / (2 * d_eff);
  CHECK(p.alpha_minus == doctest::Approx(mu_react).epsilon(0.05));

  // rest points hyperbolic except the ignition-degenerate reactive mode at +inf
  RestPointSpectrum sp = rest_point_spectrum(p);
  int zeros = 0;
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(sp.minus[i].real()) > 1e-6);
    if (std::abs(sp.plus[i].real()) < 1e-9)
      ++zeros;
    else
      CHECK(std::abs(sp.plus[i].real()) > 1e-6);
  }
  CHECK(zeros == 1);

  // the connection leaves the burned state parallel to the reactive mode (asserted
  // per-run rather than assumed)
  CHECK(std::abs(std::sin(p.shoot_angle)) > 0.5);
}

TEST_CASE("ZND composite: manifold equations, layer conservation, endpoint") {
  double gamma = ig->gamma(), M = 0.8, qhat = 0.3;
  // points of C satisfy both defining equations to 1e-12
  for (double Z : {0.0, 0.3, 0.7, 1.0}) {
    CBranchPoints bp = znd_branch_points(gamma, M, qhat, Z);
    REQUIRE(bp.real);
    for (double u : {bp.u_strong, bp.u_weak}) {
      double T = znd_trough_T(gamma, M, u);
      double trough = u - 1 + (T / u - 1) / (gamma * M * M);
      CHECK(std::abs(trough) < 1e-12);
      CHECK(std::abs(znd_plane_residual(gamma, M, qhat, u, T, Z)) < 1e-12);
    }
  }
  CHECK(znd_branch_points(gamma, M, qhat, 0.0).u_strong == doctest::Approx(1.0));
  CHECK(znd_vertex_z(gamma, M, qhat) < 0.0);

  WavePair pair = znd_pair(M, qhat);
  IgnitionFunction ign{0.5, 0.7};
  DissipationParams par{1.0, 1.0, 1.0, 1.0, pair.q, 1.0};
  ZndCorner corner;
  Profile comp = znd_singular_composite(pair, par, ign, ig, 1e-3, &corner);
  CHECK(corner.z_vertex < 0);

  // layer conserves Z exactly
  double zmin = 2, zmax = 0;
  for (size_t i = 0; i < comp.xs.size(); ++i) {
    if (comp.xs[i] > 0.0 && comp.ys[i][1] < corner.T_neumann * 1.001) {
      zmin = std::min(zmin, comp.ys[i][3]);
      zmax = std::max(zmax, comp.ys[i][3]);
    }
  }
  CHECK(zmax - zmin == doctest::Approx(0.0).epsilon(1e-14));

  // slow-flow endpoint at Z -> 0 equals the burned rest state
  CHECK(comp.ys.front()[0] == doctest::Approx(pair.minus.u).epsilon(1e-6));
  CHECK(comp.ys.front()[1] == doctest::Approx(pair.minus.e).epsilon(1e-6));
}

TEST_CASE("epsilon continuation reaches 1e-2 with the Neumann spike resolved") {
  WavePair pair = znd_pair(0.8, 0.3);
  IgnitionFunction ign{0.5, 0.7};
  DissipationParams par{1.0, 1.0, 1.0, 1.0, pair.q, 0.05};
  Profile p = detonation_profile_continued(pair, par, ign, ig);
  CHECK(residual_oracle(p, 200) < 1e-8);
  double pmax = 0;
  for (double x = -3; x < 3; x += 0.005) pmax = std::max(pmax, p.gas_at(x).p);
  CHECK(pmax > pair.minus.p * 1.1);  // pressure spike above the burned value
}

TEST_CASE("isentropic 2-shock profile") {
  IsentropicLaw law{1.0, 1.4};
  Profile p = isentropic_profile(law, 1.0, 2.0, 0.5);
  CHECK(p.max_ode_residual() < 1e-8);
  // [rho] and rho_x(-inf) both negative
  CHECK(p.pair.plus.rho - p.pair.minus.rho < 0);
  CHECK(p.conserved_deriv_at(p.x_min())[0] < 0);
  auto [am, ap] = tail_decay_fit(p);
  RestPointSpectrum sp = rest_point_spectrum(p);
  CHECK(am == doctest::Approx(sp.minus[0].real()).epsilon(0.05));
}

TEST_CASE("ignition window violations and wrong pairs are rejected") {
  WavePair pair = znd_pair(0.8, 0.3);
  DissipationParams par{1.0, 1.0, 1.0, 1.0, pair.q, 0.3};
  CHECK_THROWS_AS(detonation_profile(pair, par, IgnitionFunction{0.1, 0.2}, ig),
                  NumericalError);  // T+ above T_i
  WavePair weak = make_pair(*ig, pair.plus, pair.m, pair.q, DetonationKind::weak);
  CHECK_THROWS_AS(detonation_profile(weak, par, IgnitionFunction{0.5, 0.7}, ig),
                  NumericalError);
}
