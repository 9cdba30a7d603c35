#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "detona/linalg.hpp"

namespace detona {

// Admissible-region guard for density and internal energy.
constexpr double kAdmissibleFloor = 1e-12;

// Centered finite-difference step for equation-of-state partials.
inline double fd_step(double x) { return 1e-6 * std::max(1.0, std::abs(x)); }

// Equation of state p(rho,e), T(rho,e). Pressure and temperature are independent of the
// reaction progress Y throughout. Partials default to centered differences; analytic
// forms override them.
class Eos {
 public:
  virtual ~Eos() = default;
  virtual double p(double rho, double e) const = 0;
  virtual double T(double rho, double e) const = 0;

  virtual double p_rho(double rho, double e) const;
  virtual double p_e(double rho, double e) const;
  virtual double T_rho(double rho, double e) const;
  virtual double T_e(double rho, double e) const;

  // Inverse of T(rho,.) used when ingesting temperature-specified states.
  virtual double e_from_T(double rho, double T_target) const;

  virtual bool is_ideal() const { return false; }
  virtual std::string name() const = 0;
};

// p = Gamma rho e, T = e / c_v, gamma = 1 + Gamma, c^2 = gamma Gamma e.
class IdealPolytropic final : public Eos {
 public:
  IdealPolytropic(double gruneisen, double cv) : Gamma_(gruneisen), cv_(cv) {
    if (Gamma_ <= 0 || cv_ <= 0) throw ConfigError("ideal EOS requires Gamma>0, c_v>0");
  }
  double p(double rho, double e) const override { return Gamma_ * rho * e; }
  double T(double /*rho*/, double e) const override { return e / cv_; }
  double p_rho(double /*rho*/, double e) const override { return Gamma_ * e; }
  double p_e(double rho, double /*e*/) const override { return Gamma_ * rho; }
  double T_rho(double, double) const override { return 0.0; }
  double T_e(double, double) const override { return 1.0 / cv_; }
  double e_from_T(double /*rho*/, double T_target) const override { return cv_ * T_target; }
  bool is_ideal() const override { return true; }
  std::string name() const override { return "ideal"; }

  double gruneisen() const { return Gamma_; }
  double cv() const { return cv_; }
  double gamma() const { return 1.0 + Gamma_; }
  double gas_constant() const { return Gamma_ * cv_; }  // R = c_v Gamma

 private:
  double Gamma_, cv_;
};

// Sampled (rho, e) -> (p, T) table with bilinear interpolation, loaded from CSV rows
// "rho,e,p,T" on a rectangular grid.
class TableEos final : public Eos {
 public:
  TableEos(std::vector<double> rho_grid, std::vector<double> e_grid, Mat p_tab, Mat T_tab);
  static TableEos from_csv(const std::string& path);

  double p(double rho, double e) const override { return interp_(p_, rho, e); }
  double T(double rho, double e) const override { return interp_(T_, rho, e); }
  double e_from_T(double rho, double T_target) const override;
  std::string name() const override { return "table"; }

 private:
  double interp_(const Mat& tab, double rho, double e) const;
  std::vector<double> rho_, e_;
  Mat p_, T_;
};

// Gas state with cached derived quantities. m = rho u, E = u^2/2 + e, En = rho E.
struct GasState {
  double rho = 0, u = 0, e = 0;
  double m = 0, p = 0, T = 0, c = 0, E = 0, En = 0;
};

GasState make_state(const Eos& eos, double rho, double u, double e);

// c = sqrt(p_rho + rho^-2 p p_e); throws NumericalError on a negative radicand.
double sound_speed(double rho, double e, const Eos& eos);
inline double sound_speed(const GasState& s, const Eos& eos) { return sound_speed(s.rho, s.e, eos); }

// M = -m/(rho c); requires c > 0.
double mach_number(const GasState& s);

// Conserved variables U = (rho, m, En) and the Euler flux.
Vec3 conserved(const GasState& s);
GasState state_from_conserved(const Eos& eos, const Vec3& U);
Vec3 euler_flux(const Eos& eos, const Vec3& U);

// Exact flux Jacobian in conserved variables (rows rho, m, En).
Mat3 flux_jacobian(const GasState& s, const Eos& eos);

struct EigenTriple {
  double a;        // characteristic speed
  Vec3 r;          // right eigenvector, paper scaling (first component 1)
  Eigen::RowVector3d l;  // left eigenvector, paper scaling
};

// a_j = u-c, u, u+c with the printed eigenvectors; requires c > 0 (strict hyperbolicity).
std::array<EigenTriple, 3> eigen_triples(const GasState& s, const Eos& eos);

// Navier-Stokes viscosity matrix B(U) in conserved variables (first row zero).
Mat3 ns_viscosity_matrix(const Eos& eos, const Vec3& U, double nu, double theta);

// dB[i][k][j] = d B_ik / d U_j, centered differences on ns_viscosity_matrix.
using Tensor333 = std::array<Mat3, 3>;  // indexed [j] -> dB/dU_j as a 3x3 matrix
Tensor333 ns_viscosity_jacobian(const Eos& eos, const Vec3& U, double nu, double theta);

// Convex entropy eta(U) = -rho s for the ideal gas and its Hessian (the Kawashima
// symmetrizer A0 used by the Serre-lemma instantiation).
double ideal_entropy(const IdealPolytropic& eos, const Vec3& U);
Mat3 ideal_entropy_hessian(const IdealPolytropic& eos, const Vec3& U);

// Isentropic gamma-law p = K rho^g with c^2 = p'(rho) > 0 (2x2 model of Section "Isentropic
// Gas Dynamics").
struct IsentropicLaw {
  double K = 1.0;
  double g = 1.4;
  double p(double rho) const { return K * std::pow(rho, g); }
  double dp(double rho) const { return K * g * std::pow(rho, g - 1); }
  double c(double rho) const { return std::sqrt(dp(rho)); }
};

}  // namespace detona
