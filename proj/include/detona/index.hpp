#pragma once

#include <string>
#include <vector>

#include "detona/evans.hpp"

namespace detona {

struct IndeterminateSign : NumericalError {
  using NumericalError::NumericalError;
};

// Sign with a dead zone: |v| < 1e-9 * scale is indeterminate (the Delta = 0 locus is the
// stability transition; never round through it).
int sign_dz(double v, double scale);

// det(r1-, r2-, [U]) with the paper's eigenvector scalings; [U] = ([rho], [m], [En]).
double delta_ns(const WavePair& pair, const Eos& eos);

// Delta = det(r1-, r2-, [U] + q_vec); asserts agreement with the reduced closed form
// [rho](-p_e m^2 [1/rho]/(2 rho^2) + p_rho - c m/rho + p_e <p>/rho^2) to 1e-10 relative.
double delta_detonation(const WavePair& pair, const Eos& eos);
double delta_detonation_reduced(const WavePair& pair, const Eos& eos);

// M^2 [1/rho] p_e - M - 1 at the burned state (Majda's inviscid instability function).
double majda_condition(const WavePair& pair, const Eos& eos);

// Transversality determinants from the lambda = 0 Evans frames.
double gamma_ns(const EvansSystem& sys);
double gamma_d(const EvansSystem& sys);

struct IndexFactor {
  std::string name;
  double value = 0;
  int sign = 0;
};

struct IndexReport {
  std::string model;
  double delta = 0;        // det(r1-,r2-,[U](+q)) (gas models: the [U] determinant)
  double majda_value = 0;  // detonation only
  double gamma_ns = 0;
  double gamma_d = 0;
  double z3_plus = 0;
  double z7_minus = 0;
  double det_u6 = 0;
  int gamma_tilde = 0;  // composed stability index, +1 or -1
  bool parity_even = false;
  std::vector<IndexFactor> factors;
  std::string orientation_note;
  int recompose() const {  // bookkeeping closure: product of recorded factor signs
    int s = 1;
    for (const auto& f : factors) s *= f.sign;
    return s;
  }
};

// sgn det(r1-,r2-,[U]) det(r1-,r2-,Ubar_x|-inf): gamma_NS cancels for extreme shocks.
IndexReport index_ns(const Profile& prof);

// sgn det(r1-,[U]) det(r1-,Ubar_x|-inf) = sgn [rho] rho_x (u- - c-)^2.
IndexReport index_isentropic(const Profile& prof);

// Gamma = -sgn gamma_d Delta gamma_NS z3+ z7- det(r1-,r2-,U6-).
IndexReport index_detonation(const EvansSystem& sys);

struct SmallQReport {
  bool applicable = false;       // base shock index-stable (winding 0)
  int base_winding = -1;
  double reaction_max_re = 0;    // largest real part of the q = 0 reaction spectrum
  double rayleigh_max_re = 0;    // largest sampled Rayleigh-quotient real part
  bool d0_unstable_growth = false;  // zero-diffusion variant: no stable modes for Re l > 0
  std::vector<double> qs;
  std::vector<int> windings;
  std::string verdict;
};

// Small-q spectral stability check: q = 0 base-shock winding, the reaction-operator
// energy identity, and reacting winding numbers at the requested q values.
SmallQReport small_q_verdict(const GasState& plus, double m, const DissipationParams& par,
                             const IgnitionFunction& ign, std::shared_ptr<const Eos> eos,
                             std::vector<double> qs = {1e-3, 1e-2},
                             const ContourSpec& contour = {10.0, 1e-3, 256}, int threads = 0);

struct DimensionCheck {
  bool skipped = false;  // equal endstates
  int n = 0, r = 0;
  int i_plus = 0, i_minus = 0;
  int d_plus = 0, d_minus = 0;
  int dim_u_tilde_plus = 0, dim_s_tilde_minus = 0;
  bool plus_ok = false, minus_ok = false, sum_ok = false;
  bool extreme = false;  // d+ = r and dim U(A~) = 0
  bool ok() const { return skipped || (plus_ok && minus_ok && sum_ok); }
};

// Majda-Pego style dimension bookkeeping n - i = r - d on a computed connection.
DimensionCheck dimension_check(const Profile& prof);

// Minimum principal angle between S(A^-1 B) + N_kerB(A) and U(A); A symmetric invertible,
// B positive semidefinite.
double serre_transversality_check(const Mat& A, const Mat& B);

// The gas-dynamics instantiation at a state: entropy-symmetrized flux and viscosity.
// Also verifies the Kawashima structure (A0 A symmetric, A0 B symmetric psd).
double serre_ns_instance(const GasState& s, const IdealPolytropic& eos, double nu,
                         double theta);

}  // namespace detona
