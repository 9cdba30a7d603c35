#pragma once

#include <memory>
#include <vector>

#include "detona/hugoniot.hpp"
#include "detona/ode.hpp"

namespace detona {

constexpr double kTolBc = 1e-7;  // endpoint mismatch tolerance for profiles

// Smooth ignition cutoff: 0 below T_i, 1 above T_on, quintic smoothstep (C^2) between.
struct IgnitionFunction {
  double T_i = 0.5;
  double T_on = 0.7;
  double phi(double T) const {
    if (T <= T_i) return 0.0;
    if (T >= T_on) return 1.0;
    double t = (T - T_i) / (T_on - T_i);
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
  }
  double dphi(double T) const {
    if (T <= T_i || T >= T_on) return 0.0;
    double w = T_on - T_i;
    double t = (T - T_i) / w;
    return 30.0 * t * t * (1.0 - t) * (1.0 - t) / w;
  }
};

struct DissipationParams {
  double nu = 0.1;
  double theta = 0.1;
  double d = 0.1;
  double k = 1.0;
  double q = 0.0;
  double epsilon = 1.0;  // scale factor applied to (nu, theta, d) for ZND-limit runs

  double nu_eff() const { return epsilon * nu; }
  double theta_eff() const { return epsilon * theta; }
  double d_eff() const { return epsilon * d; }

  void validate() const {
    if (nu_eff() <= 0 || theta_eff() <= 0 || d_eff() <= 0 || k <= 0 || q < 0)
      throw ConfigError("dissipation parameters must be positive (q >= 0)");
  }
};

enum class ProfileKind { ns_shock, detonation, isentropic };

// Sampled traveling-wave trajectory. Core state layout per node:
//   ns_shock:    (u, e)
//   detonation:  (u, e, Y, Z)
//   isentropic:  (rho)
// Interpolation is cubic Hermite on the adaptive nodes; queries outside the grid use the
// rest-point linearization tails, so the profile can be evaluated on any truncation [-L, L].
class Profile {
 public:
  ProfileKind kind = ProfileKind::ns_shock;
  std::shared_ptr<const Eos> eos;
  IsentropicLaw law;  // kind == isentropic only
  WavePair pair;
  double nu = 0, theta = 0, d = 0, k = 0, q = 0;
  IgnitionFunction ign;
  bool znd_composite = false;

  std::vector<double> xs;
  std::vector<Vec> ys;
  std::vector<Vec> dys;

  double alpha_minus = 0;  // fitted tail decay rates
  double alpha_plus = 0;

  Vec end_minus, end_plus;             // rest-point core states
  Vec tail_dir_minus, tail_dir_plus;   // unit leaving/arrival directions (core coords)
  double shoot_angle = 0;              // detonation: converged angle in the unstable plane

  struct TailData {
    CVec mu;   // rest-point linearization eigenvalues
    CMat V;    // eigenvectors (columns)
    CVec coef; // modal coefficients of the edge deviation (wrong-side modes zeroed)
  };
  TailData tail_minus, tail_plus;

  int dim() const { return static_cast<int>(end_minus.size()); }
  double x_min() const { return xs.front(); }
  double x_max() const { return xs.back(); }

  Vec state_at(double x) const;
  Vec deriv_at(double x) const;

  // Conserved variables and their x-derivative:
  //   ns_shock: (rho, m, En); detonation: (rho, m, En, z); isentropic: (rho, m).
  Vec conserved_at(double x) const;
  Vec conserved_deriv_at(double x) const;

  GasState gas_at(double x) const;  // gas systems only

  // Max interpolated ODE residual sampled between nodes (scaled).
  double max_ode_residual() const;

  Vec rhs(const Vec& y) const;  // traveling-wave RHS for this profile's parameters

 private:
  Vec hermite_(double x, bool deriv) const;
  Vec tail_state_(double x, bool minus, bool deriv) const;
  Vec core_to_conserved_(const Vec& y, const Vec& dy, bool deriv) const;
};

// Right-hand sides of the traveling-wave ODEs (core layouts above).
Vec ns_shock_rhs(const Eos& eos, const WavePair& pair, double nu, double theta, const Vec& y);
Vec detonation_rhs(const Eos& eos, const WavePair& pair, const DissipationParams& par,
                   const IgnitionFunction& ign, const Vec& y);
double isentropic_rhs(const IsentropicLaw& law, double m, double C_mom, double nu, double u);

// Viscous gas-dynamical shock profile by shooting along the 1-D unstable manifold of the
// -infinity state. Accepts any Lax 3-shock pair (q plays no role; pass the q=0 pair).
Profile ns_shock_profile(const WavePair& pair, double nu, double theta,
                         std::shared_ptr<const Eos> eos, double tail_target = 1e-8);

// Full reacting detonation profile: the 4-D heteroclinic connection from the burned
// state's 2-D unstable manifold (one kinematic + one reactive direction) into the
// unburned state's center-stable set, computed by multiple shooting with projection
// boundary conditions and Newton, seeded by the singular ZND composite.
Profile detonation_profile(const WavePair& pair, const DissipationParams& par,
                           const IgnitionFunction& ign, std::shared_ptr<const Eos> eos,
                           double tail_target = 1e-8);

// Same solve seeded from a previous profile (epsilon continuation) instead of the
// singular composite.
Profile detonation_profile_seeded(const WavePair& pair, const DissipationParams& par,
                                  const IgnitionFunction& ign, std::shared_ptr<const Eos> eos,
                                  const Profile* seed, double tail_target = 1e-8);

// Geometric epsilon-continuation down to par.epsilon, each solve seeded with the previous
// shooting angle.
Profile detonation_profile_continued(const WavePair& pair, const DissipationParams& par,
                                     const IgnitionFunction& ign,
                                     std::shared_ptr<const Eos> eos);

// Isentropic 2-shock with compression ratio r (scalar phase space).
Profile isentropic_profile(const IsentropicLaw& law, double rho_plus, double r, double nu,
                           double tail_target = 1e-8);

// Slow-manifold algebra in burned-scaled coordinates (u_hat = u/u_-, T_hat = T/T_-,
// q_hat = q/(gamma c_v T_-)). The manifold C is the intersection of the trough (momentum
// rest relation) with the plane K; per Z it reduces to one quadratic in u_hat.
struct CBranchPoints {
  bool real = false;
  double u_strong = 0, T_strong = 0;  // branch through the burned state (u_hat = 1 at Z = 0)
  double u_weak = 0, T_weak = 0;
};
CBranchPoints znd_branch_points(double gamma, double M_minus, double q_hat, double Z);
double znd_vertex_z(double gamma, double M_minus, double q_hat);
double znd_trough_T(double gamma, double M_minus, double u_hat);
double znd_plane_residual(double gamma, double M_minus, double q_hat, double u_hat,
                          double T_hat, double Z);

// Singular ZND composite at epsilon = 0: slow reactive flow on C glued to the gas-dynamic
// shock layer at Z = 1, the layer rendered with dissipation scale layer_scale.
struct ZndCorner {
  double u_neumann = 0, T_neumann = 0;  // physical values at the layer's hot end
  double u_unburned = 0, T_unburned = 0;
  double z_vertex = 0;  // vertex of the branch intersection; < 0 for strong detonations
};
Profile znd_singular_composite(const WavePair& pair, const DissipationParams& par,
                               const IgnitionFunction& ign, std::shared_ptr<const Eos> eos,
                               double layer_scale = 1e-3, ZndCorner* corner = nullptr);

// Least-squares log-linear tail fit on the outer 20% of each end; (alpha_minus, alpha_plus).
std::pair<double, double> tail_decay_fit(const Profile& p);

struct RestPointSpectrum {
  CVec minus;
  CVec plus;
};
RestPointSpectrum rest_point_spectrum(const Profile& p);

}  // namespace detona
