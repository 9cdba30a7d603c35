#pragma once

#include <memory>
#include <vector>

#include "detona/profile.hpp"

namespace detona {

constexpr double kLambdaSmall = 1e-4;  // switch to slow-mode expansions below this

enum class ModelKind { ns, reacting, isentropic };
enum class Side { minus, plus };

// Exterior power of C^N in the lexicographic basis of k-subsets, with the additive
// compound ("lifted") action precomputed as a sparsity pattern.
class WedgeSpace {
 public:
  WedgeSpace(int N, int k);
  int N() const { return N_; }
  int k() const { return k_; }
  int dim() const { return static_cast<int>(subsets_.size()); }

  // y = lift(A) x without forming the lifted matrix.
  void apply_lift(const CMat& A, const CVec& x, CVec& y) const;
  CMat lift(const CMat& A) const;

  // Coordinates of v1 ^ ... ^ vk (minors of the N x k matrix).
  CVec wedge_of_columns(const CMat& V) const;

  // <a ^ b> against e_1^...^e_N, a in this space (k-forms), b in the complementary
  // (N-k)-space with matching lexicographic convention.
  static Cplx pair_full(const WedgeSpace& wk, const CVec& a, const CVec& b);

  const std::vector<std::vector<int>>& subsets() const { return subsets_; }

 private:
  int N_, k_;
  std::vector<std::vector<int>> subsets_;
  struct Entry {
    int tgt, src, ai, aj;
    double sign;
  };
  std::vector<Entry> pattern_;
  std::vector<double> comp_sign_;  // sign(I, I^c) per subset
};

// Coefficient bundle of the eigenvalue ODE in flux coordinates at one x.
struct EvansCoeffs {
  double b21 = 0, b22 = 0, b31 = 0, b32 = 0, b33 = 0;
  Eigen::RowVector3d beta = Eigen::RowVector3d::Zero();  // momentum row  (z1,z2,z3)
  Eigen::RowVector3d eta = Eigen::RowVector3d::Zero();   // energy row
  Eigen::RowVector3d g = Eigen::RowVector3d::Zero();     // En in z-coordinates
  // reacting extension
  double d = 0, dt = 0, dtp = 0;  // species diffusion, tilde-d, tilde-d'
  Eigen::RowVector4d theta = Eigen::RowVector4d::Zero();  // z-flux row (zeta1..zeta4)
  Eigen::RowVector4d L = Eigen::RowVector4d::Zero();      // linearized reaction row
  Eigen::RowVector4d h = Eigen::RowVector4d::Zero();      // z in zeta-coordinates
  double kq = 0, kk = 0;                                  // q*k and k
};

// First-order eigenvalue ODE Z' = A(x,lambda) Z sampled through a profile.
// Unknowns (flux form, unimodularly equivalent to the paper's (z, z')):
//   isentropic (N=3): (z1, z2, z2'-beta.z)
//   ns         (N=5): (z1, z2, z3, z2'-beta.z, z3'-eta.z)
//   reacting   (N=7): (zeta1..zeta4, zeta2'-beta.zeta, zeta3'-eta.zeta, zeta4'-theta.zeta)
class EvansSystem {
 public:
  EvansSystem(std::shared_ptr<const Profile> prof, ModelKind model);

  int N() const { return N_; }
  int k_plus() const { return k_plus_; }  // stable dimension at +inf for Re lambda > 0
  ModelKind model() const { return model_; }
  const Profile& profile() const { return *prof_; }

  EvansCoeffs coeffs_at(double x) const;
  const EvansCoeffs& coeffs_limit(Side s) const { return s == Side::plus ? cp_ : cm_; }

  void fill_A(const EvansCoeffs& c, Cplx lambda, CMat& A) const;
  CMat A(double x, Cplx lambda) const;
  CMat A_limit(Side s, Cplx lambda) const;

  // Translation mode C Ubar_x in flux coordinates (exact lambda = 0 solution).
  Vec translation_mode(double x) const;

  double x_lo() const { return prof_->x_min(); }
  double x_hi() const { return prof_->x_max(); }

  // Characteristic speeds a_j at the endstates (slow-mode data; gas block).
  const std::vector<double>& slow_speeds(Side s) const {
    return s == Side::plus ? a_plus_ : a_minus_;
  }

 private:
  std::shared_ptr<const Profile> prof_;
  ModelKind model_;
  int N_, k_plus_;
  EvansCoeffs cm_, cp_;
  std::vector<double> a_minus_, a_plus_;
};

EvansSystem assemble(std::shared_ptr<const Profile> prof, ModelKind model);

// ---------------------------------------------------------------------------

struct SplitCounts {
  SplitCount plus, minus;
};

// Stable/unstable counts of A_pm(lambda); throws when an eigenvalue sits on the
// imaginary axis (consistent-splitting violation).
SplitCounts splitting_counts(const EvansSystem& sys, Cplx lambda);

struct ModeExpansion {
  Cplx mu;
  CVec v;        // flux-coordinate eigenvector approximation
  bool slow;     // bifurcates from mu = 0
  bool reactive; // reaction-block mode
};
// Analytic expansions of the mu_j(lambda) near lambda = 0: slow gas modes to first order,
// reactive modes by the exact quadratic, fast gas modes frozen at lambda = 0.
std::vector<ModeExpansion> slow_mode_expansion(const EvansSystem& sys, Side side, Cplx lambda);

// ---------------------------------------------------------------------------

struct ScaledComplex {
  Cplx mant;       // O(1) mantissa
  double log10 = 0;  // accumulated scale
  Cplx value() const { return mant * std::pow(10.0, log10); }
};

// Ratio a/b as a plain complex number (log scales subtracted).
inline Cplx scaled_ratio(const ScaledComplex& a, const ScaledComplex& b) {
  return a.mant / b.mant * std::pow(10.0, a.log10 - b.log10);
}

struct EvansOptions {
  double ode_tol = 1e-10;
  double renorm_every = 1.0;
  double L_plus = -1;   // truncation; < 0 means the profile extent
  double L_minus = -1;
};

struct FrameInit {
  Cplx tau;      // group trace removed during integration
  CVec wedge;    // unit init vector in the lifted space at the endstate
  CVec mu_group; // selected eigenvalues (sorted)
};

// Initial frame at lambda. align = phase/continuation anchor (defaults to the lambda = 0
// paper-normalized basis wedge kept by the evaluator functions).
FrameInit frame_init(const EvansSystem& sys, Side side, Cplx lambda,
                     const CVec* align = nullptr);

// Paper-normalized lambda = 0 anchor wedge at the endstate (translation mode, oriented
// fast modes, C(r_j,0) slow modes).
CVec anchor_wedge(const EvansSystem& sys, Side side);

ScaledComplex evans_eval_with(const EvansSystem& sys, Cplx lambda, const FrameInit& plus,
                              const FrameInit& minus, const EvansOptions& opt = {});

// D(lambda) with frames phase-anchored to the lambda = 0 normalization.
ScaledComplex evans_eval(const EvansSystem& sys, Cplx lambda, const EvansOptions& opt = {});

// ---------------------------------------------------------------------------

struct ContourSpec {
  double R = 10.0;
  double delta = 1e-3;  // offset of the vertical segment from the imaginary axis
  int n = 256;          // initial sample count
};

struct WindingResult {
  int winding = 0;
  int n_points = 0;
  int rounds = 0;
  std::vector<Cplx> lambdas;
  std::vector<Cplx> d_mant;       // mantissas (phases are what matter)
  std::vector<double> d_log10;
};

// Argument-principle zero count inside the right-half-disk contour; samples are refined
// until adjacent phase steps are < pi/2. threads > 1 parallelizes the x-integrations.
WindingResult winding_number(const EvansSystem& sys, const ContourSpec& contour,
                             const EvansOptions& opt = {}, int threads = 0);

// ---------------------------------------------------------------------------

// lambda = 0 normalized frames and every sign factor read off them.
struct ZeroFrames {
  Mat plus_cols;    // N x k_plus: [translation, fast kinematic(, fast reactive)] at x = 0
  Vec minus_fast;   // fast kinematic mode at x = 0 (reacting; empty otherwise)
  double gamma_ns = 0;
  double gamma_d = 0;   // reacting only
  double z3_plus = 0;   // z-component of Z3+ at x = 0 (reacting)
  double z7_minus = 0;  // z-component of the translation mode in the -inf tail (reacting)
  Vec3 U6_minus = Vec3::Zero();  // w-part of the oriented fast kinematic eigvec at -inf
  double u6 = 0, T6 = 0;         // its velocity/temperature variations at -inf
};
ZeroFrames zero_frames(const EvansSystem& sys);

struct DPrimeReport {
  double formula = 0;     // paper's simplified determinant value (model-specific scaling)
  double fd = 0;          // Richardson-extrapolated centered difference of D
  double fd_h = 1e-5;
  bool signs_agree = false;
};
DPrimeReport d_prime_zero(const EvansSystem& sys, const EvansOptions& opt = {});

}  // namespace detona
