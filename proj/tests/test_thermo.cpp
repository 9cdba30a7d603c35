#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "detona/thermo.hpp"

using namespace detona;

namespace {

std::mt19937_64 rng(42);
double rnd(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Test-only nonideal EOS: p = G rho e (1 + b rho), T = e/cv (1 + s e).
struct Virial final : Eos {
  double G = 0.4, cv = 1.0, b = 0.06, s = 0.04;
  double p(double rho, double e) const override { return G * rho * e * (1 + b * rho); }
  double T(double, double e) const override { return e / cv * (1 + s * e); }
  std::string name() const override { return "virial-test"; }
};

}  // namespace

TEST_CASE("ideal sound speed is gamma Gamma e exactly") {
  IdealPolytropic ig(0.4, 1.0);
  for (int t = 0; t < 10000; ++t) {
    double e = rnd(1e-3, 50.0);
    double c = sound_speed(1.7, e, ig);
    CHECK(c * c == doctest::Approx(1.4 * 0.4 * e).epsilon(1e-14));
  }
  CHECK(sound_speed(1.0, 1e-12, ig) == doctest::Approx(0.0).epsilon(1e-5));
}

TEST_CASE("nonideal sound speed matches its finite-difference definition") {
  Virial v;
  double rho = 1.3, e = 0.9;
  double h = 1e-6;
  double prho = (v.p(rho + h, e) - v.p(rho - h, e)) / (2 * h);
  double pe = (v.p(rho, e + h) - v.p(rho, e - h)) / (2 * h);
  double oracle = std::sqrt(prho + v.p(rho, e) * pe / (rho * rho));
  CHECK(sound_speed(rho, e, v) == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("mach number") {
  IdealPolytropic ig(0.4, 1.0);
  GasState sonic = make_state(ig, 1.0, -sound_speed(1.0, 1.0, ig), 1.0);
  CHECK(mach_number(sonic) == doctest::Approx(1.0).epsilon(1e-13));
  for (int t = 0; t < 20; ++t) {
    GasState s = make_state(ig, rnd(0.2, 3.0), -rnd(0.1, 4.0), rnd(0.2, 3.0));
    CHECK(mach_number(s) == doctest::Approx(std::abs(s.u) / s.c).epsilon(1e-13));
  }
}

TEST_CASE("flux jacobian: row one, eigen identity, and directional differences") {
  IdealPolytropic ig(0.4, 1.0);
  Virial v;
  for (const Eos* eos : {static_cast<const Eos*>(&ig), static_cast<const Eos*>(&v)}) {
    for (int t = 0; t < 40; ++t) {
      GasState s = make_state(*eos, rnd(0.3, 3.0), rnd(-3.0, -0.2), rnd(0.3, 3.0));
      Mat3 A = flux_jacobian(s, *eos);
      CHECK(A(0, 0) == 0.0);
      CHECK(A(0, 1) == 1.0);
      CHECK(A(0, 2) == 0.0);
      Vec3 U = conserved(s);
      // directional finite difference of the flux
      Vec3 dir = Vec3(rnd(-1, 1), rnd(-1, 1), rnd(-1, 1)).normalized();
      double h = 1e-6 * U.norm();
      Vec3 fd = (euler_flux(*eos, Vec3(U + h * dir)) - euler_flux(*eos, Vec3(U - h * dir))) /
                (2 * h);
      CHECK((A * dir - fd).norm() <= 1e-6 * (A.norm() + 1));
    }
  }
}

TEST_CASE("eigen triples: paper scalings, ordering, biorthogonality vs dense solver") {
  IdealPolytropic ig(0.4, 1.0);
  for (int t = 0; t < 50; ++t) {
    GasState s = make_state(ig, rnd(0.3, 3.0), rnd(-3.0, -0.2), rnd(0.3, 3.0));
    auto tr = eigen_triples(s, ig);
    CHECK(tr[0].a == doctest::Approx(s.u - s.c));
    CHECK(tr[1].a == doctest::Approx(s.u));
    CHECK(tr[2].a == doctest::Approx(s.u + s.c));
    CHECK(tr[1].r[0] == 1.0);
    CHECK(tr[1].r[1] == doctest::Approx(s.u));
    CHECK(tr[1].r[2] == doctest::Approx(s.u * s.u / 2));
    Mat3 A = flux_jacobian(s, ig);
    for (int j = 0; j < 3; ++j)
      CHECK((A * tr[j].r - tr[j].a * tr[j].r).norm() <= 1e-12 * (1 + A.norm()));
    // biorthogonality cross-checked against a general-purpose eigendecomposition
    EigPairs ep = eig(Mat(A));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double dot = tr[i].l.dot(tr[j].r);
        if (i == j)
          CHECK(std::abs(dot) > 1e-10);
        else
          CHECK(std::abs(dot) <= 1e-10 * (tr[i].l.norm() * tr[j].r.norm()));
      }
    for (int j = 0; j < 3; ++j) {
      double best = 1e300;
      for (int i = 0; i < 3; ++i) best = std::min(best, std::abs(ep.values[i] - Cplx(tr[j].a, 0)));
      CHECK(best <= 1e-10 * (1 + std::abs(tr[j].a)));
    }
  }
}

TEST_CASE("viscosity matrix rows are gradients of the viscous flux potentials") {
  // d B_ik / d U_j symmetric in (k, j); this is what collapses alpha + B' to the flux
  // Jacobian in the eigenvalue systems.
  IdealPolytropic ig(0.4, 1.0);
  Virial v;
  for (const Eos* eos : {static_cast<const Eos*>(&ig), static_cast<const Eos*>(&v)}) {
    GasState s = make_state(*eos, 1.4, -1.1, 0.8);
    Vec3 U = conserved(s);
    Tensor333 dB = ns_viscosity_jacobian(*eos, U, 0.3, 0.2);
    for (int i = 1; i < 3; ++i)
      for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j)
          CHECK(dB[j](i, k) == doctest::Approx(dB[k](i, j)).epsilon(1e-4).scale(1.0));
  }
}

TEST_CASE("table EOS round trip against its generator") {
  Virial v;
  std::vector<double> rg, eg;
  for (int i = 0; i <= 240; ++i) rg.push_back(0.2 + 5.0 * i / 240.0);
  for (int j = 0; j <= 240; ++j) eg.push_back(0.1 + 6.0 * j / 240.0);
  Mat pt(rg.size(), eg.size()), Tt(rg.size(), eg.size());
  for (size_t i = 0; i < rg.size(); ++i)
    for (size_t j = 0; j < eg.size(); ++j) {
      pt(i, j) = v.p(rg[i], eg[j]);
      Tt(i, j) = v.T(rg[i], eg[j]);
    }
  TableEos tab(rg, eg, pt, Tt);
  double c_tab = sound_speed(1.31, 0.93, tab);
  double h = 1e-6;
  double prho = (tab.p(1.31 + h, 0.93) - tab.p(1.31 - h, 0.93)) / (2 * h);
  double pe = (tab.p(1.31, 0.93 + h) - tab.p(1.31, 0.93 - h)) / (2 * h);
  double oracle = std::sqrt(prho + tab.p(1.31, 0.93) * pe / (1.31 * 1.31));
  CHECK(c_tab == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("admissibility guards") {
  IdealPolytropic ig(0.4, 1.0);
  CHECK_THROWS_AS(make_state(ig, 1e-14, -1.0, 1.0), NumericalError);
  CHECK_THROWS_AS(make_state(ig, 1.0, -1.0, -1.0), NumericalError);
}
