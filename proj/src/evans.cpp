#include "detona/evans.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "detona/parallel.hpp"

namespace detona {

// ---------------------------------------------------------------------------
// WedgeSpace

WedgeSpace::WedgeSpace(int N, int k) : N_(N), k_(k) {
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  // lexicographic k-subsets
  while (true) {
    subsets_.push_back(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == N - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  // index map from sorted subset to position
  auto position = [&](const std::vector<int>& s) {
    return int(std::lower_bound(subsets_.begin(), subsets_.end(), s) - subsets_.begin());
  };
  // additive compound pattern: replacing element a (slot p) of J by row index b
  for (int jIdx = 0; jIdx < dim(); ++jIdx) {
    const auto& J = subsets_[jIdx];
    for (int p = 0; p < k; ++p) {
      int a = J[p];
      pattern_.push_back({jIdx, jIdx, a, a, 1.0});  // diagonal A(a,a)
      for (int b = 0; b < N; ++b) {
        if (b == a) continue;
        if (std::find(J.begin(), J.end(), b) != J.end()) continue;
        std::vector<int> I = J;
        I[p] = b;
        // sort I, tracking the permutation parity of moving b into place
        int q = p;
        double sign = 1.0;
        while (q > 0 && I[q - 1] > I[q]) {
          std::swap(I[q - 1], I[q]);
          --q;
          sign = -sign;
        }
        while (q + 1 < k && I[q + 1] < I[q]) {
          std::swap(I[q + 1], I[q]);
          ++q;
          sign = -sign;
        }
        pattern_.push_back({position(I), jIdx, b, a, sign});
      }
    }
  }
  // sign(I, I^c): parity of the shuffle (I, I^c) relative to (0..N-1)
  comp_sign_.resize(dim());
  for (int i = 0; i < dim(); ++i) {
    const auto& I = subsets_[i];
    int inv = 0;
    for (int a : I) {
      int smaller_outside = 0;
      for (int b = 0; b < a; ++b)
        if (std::find(I.begin(), I.end(), b) == I.end()) ++smaller_outside;
      inv += smaller_outside;
    }
    comp_sign_[i] = (inv % 2 == 0) ? 1.0 : -1.0;
  }
}

void WedgeSpace::apply_lift(const CMat& A, const CVec& x, CVec& y) const {
  y.setZero(dim());
  for (const auto& e : pattern_) y[e.tgt] += e.sign * A(e.ai, e.aj) * x[e.src];
}

CMat WedgeSpace::lift(const CMat& A) const {
  CMat M = CMat::Zero(dim(), dim());
  for (const auto& e : pattern_) M(e.tgt, e.src) += e.sign * A(e.ai, e.aj);
  return M;
}

CVec WedgeSpace::wedge_of_columns(const CMat& V) const {
  CVec w(dim());
  CMat sub(k_, k_);
  for (int i = 0; i < dim(); ++i) {
    const auto& I = subsets_[i];
    for (int r = 0; r < k_; ++r)
      for (int c = 0; c < k_; ++c) sub(r, c) = V(I[r], c);
    w[i] = sub.determinant();
  }
  return w;
}

Cplx WedgeSpace::pair_full(const WedgeSpace& wk, const CVec& a, const CVec& b) {
  // b lives in the complementary space with subsets in lexicographic order; the
  // complement of wk.subsets()[i] appears at the mirrored index.
  int dim = wk.dim();
  Cplx s = 0;
  for (int i = 0; i < dim; ++i) s += wk.comp_sign_[i] * a[i] * b[dim - 1 - i];
  return s;
}

// ---------------------------------------------------------------------------
// EvansSystem coefficients

namespace {

struct C3Inv {
  Eigen::RowVector3d rho, m, En;  // rows of C_NS^{-1}
};

C3Inv c3inv(double b21, double b22, double b31, double b32, double b33) {
  C3Inv c;
  c.rho << -b22 / b21, 1.0 / b21, 0;
  c.m << 1, 0, 0;
  c.En << b22 * b31 / (b21 * b33) - b32 / b33, -b31 / (b21 * b33), 1.0 / b33;
  return c;
}

}  // namespace

EvansSystem::EvansSystem(std::shared_ptr<const Profile> prof, ModelKind model)
    : prof_(std::move(prof)), model_(model) {
  switch (model_) {
    case ModelKind::ns:
      if (prof_->kind != ProfileKind::ns_shock)
        throw ConfigError("EvansSystem: ns model requires a shock profile");
      N_ = 5;
      k_plus_ = 2;
      break;
    case ModelKind::reacting:
      if (prof_->kind != ProfileKind::detonation)
        throw ConfigError("EvansSystem: reacting model requires a detonation profile");
      N_ = 7;
      k_plus_ = 3;
      break;
    case ModelKind::isentropic:
      if (prof_->kind != ProfileKind::isentropic)
        throw ConfigError("EvansSystem: isentropic model requires an isentropic profile");
      N_ = 3;
      k_plus_ = 1;
      break;
  }
  cm_ = coeffs_at(prof_->x_min() - 1e4);  // deep tail == endstate values
  cp_ = coeffs_at(prof_->x_max() + 1e4);
  if (model_ == ModelKind::isentropic) {
    a_minus_ = {prof_->pair.minus.u - prof_->pair.minus.c,
                prof_->pair.minus.u + prof_->pair.minus.c};
    a_plus_ = {prof_->pair.plus.u - prof_->pair.plus.c,
               prof_->pair.plus.u + prof_->pair.plus.c};
  } else {
    auto tm = eigen_triples(prof_->pair.minus, *prof_->eos);
    auto tp = eigen_triples(prof_->pair.plus, *prof_->eos);
    for (int j = 0; j < 3; ++j) {
      a_minus_.push_back(tm[j].a);
      a_plus_.push_back(tp[j].a);
    }
  }
}

EvansSystem assemble(std::shared_ptr<const Profile> prof, ModelKind model) {
  return EvansSystem(std::move(prof), model);
}

EvansCoeffs EvansSystem::coeffs_at(double x) const {
  EvansCoeffs c;
  const Profile& P = *prof_;
  if (model_ == ModelKind::isentropic) {
    Vec U = P.conserved_at(x);
    double rho = U[0], m = U[1];
    double u = m / rho;
    c.b21 = -P.nu * m / (rho * rho);
    c.b22 = P.nu / rho;
    double c2 = P.law.dp(rho);
    Eigen::RowVector2d arow(c2 - u * u, 2 * u);
    // C2^{-1} = [[-b22/b21, 1/b21],[1,0]]
    c.beta[0] = arow[0] * (-c.b22 / c.b21) + arow[1];
    c.beta[1] = arow[0] / c.b21;
    return c;
  }

  Vec U = P.conserved_at(x);
  Vec Ux = P.conserved_deriv_at(x);
  GasState s = P.gas_at(x);
  const Eos& eos = *P.eos;
  Mat3 A = flux_jacobian(s, eos);
  Mat3 B = ns_viscosity_matrix(eos, Vec3(U[0], U[1], U[2]), P.nu, P.theta);
  c.b21 = B(1, 0);
  c.b22 = B(1, 1);
  c.b31 = B(2, 0);
  c.b32 = B(2, 1);
  c.b33 = B(2, 2);
  C3Inv ci = c3inv(c.b21, c.b22, c.b31, c.b32, c.b33);
  Mat3 Cinv;
  Cinv << ci.rho, ci.m, ci.En;
  // viscous fluxes are gradients in U, so alpha + B' collapses to the flux Jacobian rows
  c.beta = A.row(1) * Cinv;
  c.eta = A.row(2) * Cinv;
  c.g = ci.En;

  if (model_ == ModelKind::reacting) {
    double rho = U[0], m = U[1], z = U[3];
    double rho_x = Ux[0], z_x = Ux[3];
    double u = m / rho;
    double Y = z / rho;
    c.d = P.d;
    c.dt = -P.d * z / rho;
    c.dtp = -P.d * (z_x * rho - z * rho_x) / (rho * rho);
    double v1 = -u * Y - P.d * z * rho_x / (rho * rho);
    double v2 = Y;
    double v4 = u + P.d * rho_x / rho;
    // C4^{-1} rows: gas rows padded with 0, then the z row h
    c.h << c.dt * c.b22 / (P.d * c.b21), -c.dt / (P.d * c.b21), 0, 1.0 / P.d;
    Eigen::RowVector4d vrow(v1 + c.dtp, v2, 0, v4);
    Eigen::Matrix4d C4inv = Eigen::Matrix4d::Zero();
    C4inv.block<1, 3>(0, 0) = ci.rho;
    C4inv.block<1, 3>(1, 0) = ci.m;
    C4inv.block<1, 3>(2, 0) = ci.En;
    C4inv.row(3) = c.h;
    c.theta = vrow * C4inv;
    double T = s.T;
    double phi = P.ign.phi(T), dphi = P.ign.dphi(T);
    double e_rho = (u * u - s.E) / rho;
    double Trho = eos.T_rho(rho, s.e), Te = eos.T_e(rho, s.e);
    Eigen::RowVector4d lrow(z * dphi * (Trho + Te * e_rho), -z * dphi * Te * u / rho,
                            z * dphi * Te / rho, phi);
    c.L = lrow * C4inv;
    c.kq = P.k * P.q;
    c.kk = P.k;
  }
  return c;
}

void EvansSystem::fill_A(const EvansCoeffs& c, Cplx lambda, CMat& A) const {
  A.setZero(N_, N_);
  Cplx lb = lambda / c.b21;
  if (model_ == ModelKind::isentropic) {
    A(0, 0) = lb * c.b22;
    A(0, 1) = -lb;
    A(1, 0) = c.beta[0];
    A(1, 1) = c.beta[1];
    A(1, 2) = 1;
    A(2, 0) = lambda;
    return;
  }
  A(0, 0) = lb * c.b22;
  A(0, 1) = -lb;
  if (model_ == ModelKind::ns) {
    for (int j = 0; j < 3; ++j) {
      A(1, j) = c.beta[j];
      A(2, j) = c.eta[j];
    }
    A(1, 3) = 1;
    A(2, 4) = 1;
    A(3, 0) = lambda;
    for (int j = 0; j < 3; ++j) A(4, j) = lambda * c.g[j];
    return;
  }
  // reacting, N = 7: (zeta1..4, w5, w6, w7)
  for (int j = 0; j < 3; ++j) {
    A(1, j) = c.beta[j];
    A(2, j) = c.eta[j];
  }
  for (int j = 0; j < 4; ++j) A(3, j) = c.theta[j];
  A(1, 4) = 1;
  A(2, 5) = 1;
  A(3, 6) = 1;
  A(4, 0) = lambda;
  for (int j = 0; j < 3; ++j) A(5, j) = lambda * c.g[j];
  for (int j = 0; j < 4; ++j) A(5, j) += -c.kq * c.L[j];
  A(6, 0) = lambda * c.h[0];
  A(6, 1) = lambda * c.h[1];
  A(6, 3) = lambda * c.h[3];
  for (int j = 0; j < 4; ++j) A(6, j) += c.kk * c.L[j];
}

CMat EvansSystem::A(double x, Cplx lambda) const {
  CMat M(N_, N_);
  fill_A(coeffs_at(x), lambda, M);
  return M;
}

CMat EvansSystem::A_limit(Side s, Cplx lambda) const {
  CMat M(N_, N_);
  fill_A(coeffs_limit(s), lambda, M);
  return M;
}

// Translation mode in flux coordinates, built from the viscous flux potentials:
//   zeta2 = nu u_x, zeta3 = theta T_x + nu u u_x, zeta4 = d rho Y_x,
// with the derivative components w = zeta' - (beta|eta|theta).zeta obtained by
// state-space directional differentiation along the orbit.
Vec EvansSystem::translation_mode(double x) const {
  const Profile& P = *prof_;
  Vec y = P.state_at(x);
  auto flux_vals = [&](const Vec& yy) -> Vec {
    Vec f = P.rhs(yy);
    if (model_ == ModelKind::isentropic) {
      double rho = yy[0], m = P.pair.m;
      double u_x = -(m / (rho * rho)) * f[0];
      return Vec{{P.nu * u_x}};
    }
    double u = yy[0], e = yy[1];
    double m = P.pair.m;
    double rho = m / u;
    double u_x = f[0], e_x = f[1];
    double rho_x = -(m / (u * u)) * u_x;
    double T_x = P.eos->T_rho(rho, e) * rho_x + P.eos->T_e(rho, e) * e_x;
    double z2 = P.nu * u_x;
    double z3 = P.theta * T_x + P.nu * u * u_x;
    if (model_ == ModelKind::ns) return Vec{{z2, z3}};
    double z4 = P.d * rho * f[2];  // d rho Y_x
    return Vec{{z2, z3, z4}};
  };
  Vec f = P.rhs(y);
  Vec zeta = flux_vals(y);
  double fn = f.norm();
  Vec zeta_x;
  if (fn < 1e-280) {
    zeta_x = Vec::Zero(zeta.size());
  } else {
    Vec w = f / fn;
    double h = 1e-6 * (1.0 + y.cwiseAbs().maxCoeff());
    zeta_x = (flux_vals(y + h * w) - flux_vals(y - h * w)) / (2 * h) * fn;
  }

  EvansCoeffs c = coeffs_at(x);
  Vec out = Vec::Zero(N_);
  if (model_ == ModelKind::isentropic) {
    out[0] = 0;  // m_x
    out[1] = zeta[0];
    out[2] = zeta_x[0] - (c.beta[0] * out[0] + c.beta[1] * out[1]);
    return out;
  }
  if (model_ == ModelKind::ns) {
    out[0] = 0;
    out[1] = zeta[0];
    out[2] = zeta[1];
    out[3] = zeta_x[0] - c.beta * out.head<3>();
    out[4] = zeta_x[1] - c.eta * out.head<3>();
    return out;
  }
  out[0] = 0;
  out[1] = zeta[0];
  out[2] = zeta[1];
  out[3] = zeta[2];
  out[4] = zeta_x[0] - c.beta * out.head<3>();
  out[5] = zeta_x[1] - c.eta * out.head<3>();
  out[6] = zeta_x[2] - c.theta * out.head<4>();
  return out;
}

// ---------------------------------------------------------------------------
// splitting and expansions

SplitCounts splitting_counts(const EvansSystem& sys, Cplx lambda) {
  SplitCounts sc;
  double tol = 1e-8 * (1.0 + std::abs(lambda));
  for (Side side : {Side::plus, Side::minus}) {
    EigPairs ep = eig(sys.A_limit(side, lambda));
    SplitCount s = split_count(ep.values, tol);
    if (s.n_center > 0)
      throw NumericalError("splitting_counts: eigenvalue on the imaginary axis");
    (side == Side::plus ? sc.plus : sc.minus) = s;
  }
  return sc;
}

namespace {

// Slow-mode kernel vector in flux coordinates: zeta = C (r_j [, 0]), w = -(rows).zeta.
Vec slow_kernel_vector(const EvansSystem& sys, const EvansCoeffs& c, const Vec3& r) {
  int N = sys.N();
  Vec v = Vec::Zero(N);
  if (sys.model() == ModelKind::isentropic) {
    Eigen::Vector2d r2(r[0], r[1]);
    v[0] = r2[1];  // zeta1 = m-component
    v[1] = c.b21 * r2[0] + c.b22 * r2[1];
    v[2] = -(c.beta[0] * v[0] + c.beta[1] * v[1]);
    return v;
  }
  v[0] = r[1];
  v[1] = c.b21 * r[0] + c.b22 * r[1];
  v[2] = c.b31 * r[0] + c.b32 * r[1] + c.b33 * r[2];
  if (sys.model() == ModelKind::ns) {
    v[3] = -c.beta * v.head<3>();
    v[4] = -c.eta * v.head<3>();
    return v;
  }
  v[3] = c.dt * r[0];  // z-component of C(r,0)
  v[4] = -c.beta * v.head<3>();
  v[5] = -c.eta * v.head<3>();
  v[6] = -c.theta * v.head<4>();
  return v;
}

std::array<Vec3, 3> right_eigvecs(const EvansSystem& sys, Side side) {
  const GasState& s =
      side == Side::plus ? sys.profile().pair.plus : sys.profile().pair.minus;
  auto t = eigen_triples(s, *sys.profile().eos);
  return {t[0].r, t[1].r, t[2].r};
}

}  // namespace

std::vector<ModeExpansion> slow_mode_expansion(const EvansSystem& sys, Side side, Cplx lambda) {
  if (std::abs(lambda) > 10 * kLambdaSmall)
    throw ConfigError("slow_mode_expansion: |lambda| too large");
  std::vector<ModeExpansion> out;
  const EvansCoeffs& c = sys.coeffs_limit(side);
  const auto& aj = sys.slow_speeds(side);

  // slow gas modes mu = -lambda/a_j + O(lambda^2)
  if (sys.model() == ModelKind::isentropic) {
    Eigen::Vector2d uu(1, 0);
    const GasState& g = side == Side::plus ? sys.profile().pair.plus : sys.profile().pair.minus;
    std::array<Eigen::Vector2d, 2> rs = {Eigen::Vector2d(1, g.u - g.c),
                                         Eigen::Vector2d(1, g.u + g.c)};
    for (int j = 0; j < 2; ++j) {
      ModeExpansion m;
      m.mu = -lambda / aj[j];
      m.slow = true;
      m.reactive = false;
      Vec v = slow_kernel_vector(sys, c, Vec3(rs[j][0], rs[j][1], 0));
      m.v = v.cast<Cplx>();
      out.push_back(std::move(m));
    }
  } else {
    auto rs = right_eigvecs(sys, side);
    for (int j = 0; j < 3; ++j) {
      ModeExpansion m;
      m.mu = -lambda / aj[j];
      m.slow = true;
      m.reactive = false;
      m.v = slow_kernel_vector(sys, c, rs[j]).cast<Cplx>();
      out.push_back(std::move(m));
    }
  }

  // fast modes frozen at lambda = 0 (and the exact reactive quadratic for reacting runs)
  EigPairs e0 = eig(sys.A_limit(side, Cplx(0, 0)));
  const Profile& P = sys.profile();
  double u_end = side == Side::plus ? P.pair.plus.u : P.pair.minus.u;
  double phi_end = side == Side::plus ? 0.0 : 1.0;
  for (Eigen::Index i = 0; i < e0.values.size(); ++i) {
    if (std::abs(e0.values[i]) < 1e-7) continue;  // slow modes handled above
    ModeExpansion m;
    m.mu = e0.values[i];
    m.v = e0.vectors.col(i);
    m.slow = false;
    m.reactive = false;
    if (sys.model() == ModelKind::reacting) {
      double dd = P.d, kk = P.k;
      Cplx disc = std::sqrt(Cplx(u_end * u_end + 4 * dd * (kk * phi_end), 0) + 4 * dd * lambda);
      Cplx mu_s = (u_end - disc) / (2 * dd);
      Cplx mu_u = (u_end + disc) / (2 * dd);
      if (std::abs(m.mu - mu_s) < 0.2 * std::abs(m.mu) + 1e-9 ||
          std::abs(m.mu - mu_u) < 0.2 * std::abs(m.mu) + 1e-9) {
        m.reactive = true;
        // exact quadratic root continued in lambda
        m.mu = (std::abs(m.mu - mu_s) < std::abs(m.mu - mu_u)) ? mu_s : mu_u;
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------------------
// frames

namespace {

double x_near_end(const Profile& P, Side side, double tol) {
  Vec end = side == Side::plus ? P.end_plus : P.end_minus;
  Vec scale(end.size());
  for (Eigen::Index i = 0; i < end.size(); ++i)
    scale[i] = std::max({std::abs(P.end_plus[i] - P.end_minus[i]),
                         1e-3 * std::max(std::abs(P.end_plus[i]), std::abs(P.end_minus[i])),
                         1e-12});
  auto dist = [&](const Vec& y) {
    double m = 0;
    for (Eigen::Index i = 0; i < end.size(); ++i)
      m = std::max(m, std::abs(y[i] - end[i]) / scale[i]);
    return m;
  };
  if (side == Side::plus) {
    double x = P.x_max();
    for (size_t i = P.xs.size(); i-- > 0;) {
      if (P.xs[i] < 0) break;
      if (dist(P.ys[i]) <= tol)
        x = P.xs[i];
      else
        break;
    }
    return std::max(x, 1e-6);
  }
  double x = P.x_min();
  for (size_t i = 0; i < P.xs.size(); ++i) {
    if (P.xs[i] > 0) break;
    if (dist(P.ys[i]) <= tol)
      x = P.xs[i];
    else
      break;
  }
  return std::min(x, -1e-6);
}


// Oriented fast-mode basis data at the endstates, shared by anchors and zero-frames.
struct FastBasis {
  Mat plus_cols;   // N x (k_plus - 1): [fast kinematic (, fast reactive)] at +inf
  Vec minus_kin;   // fast kinematic unstable eigvec at -inf (reacting; oriented)
  CVec plus_mu;    // matching eigenvalues
  Cplx minus_kin_mu = 0;
  Vec3 U6 = Vec3::Zero();
  double u6 = 0, T6 = 0;
};

// velocity/temperature variations of a flux-coordinate vector at an endstate
void uT_variation(const EvansSystem& sys, Side side, const Vec& zeta, double& du, double& dT) {
  const GasState& g = side == Side::plus ? sys.profile().pair.plus : sys.profile().pair.minus;
  const EvansCoeffs& c = sys.coeffs_limit(side);
  const Eos& eos = *sys.profile().eos;
  // w = C^{-1} zeta (gas block)
  double rho_v = -c.b22 / c.b21 * zeta[0] + zeta[1] / c.b21;
  double m_v = zeta[0];
  double En_v = c.g[0] * zeta[0] + c.g[1] * zeta[1] + c.g[2] * zeta[2];
  du = (m_v - g.u * rho_v) / g.rho;
  double e_rho = (g.u * g.u - g.E) / g.rho;
  double e_v = e_rho * rho_v - (g.u / g.rho) * m_v + En_v / g.rho;
  dT = eos.T_rho(g.rho, g.e) * rho_v + eos.T_e(g.rho, g.e) * e_v;
}

FastBasis fast_basis(const EvansSystem& sys) {
  FastBasis fb;
  int N = sys.N();
  const Profile& P = sys.profile();

  // + side: stable eigenvectors of A_+(0), excluding slow (near-zero) modes
  EigPairs ep = eig(sys.A_limit(Side::plus, Cplx(0, 0)));
  std::vector<int> stab;
  for (int i = 0; i < N; ++i)
    if (ep.values[i].real() < -1e-9) stab.push_back(i);
  if (int(stab.size()) != sys.k_plus())
    throw NumericalError("fast_basis: unexpected stable count at +inf");

  Vec t_end = sys.translation_mode(P.x_max());
  double tn = t_end.norm();
  if (tn < 1e-290) throw NumericalError("fast_basis: degenerate translation mode");
  t_end /= tn;

  if (sys.model() == ModelKind::isentropic) {
    fb.plus_cols = Mat(N, 0);
    return fb;
  }

  int n_extra = sys.k_plus() - 1;
  fb.plus_cols = Mat(N, n_extra);
  fb.plus_mu = CVec(n_extra);
  if (sys.model() == ModelKind::ns) {
    // the fast mode least parallel to the translation direction
    int best = -1;
    double best_res = -1;
    for (int i : stab) {
      Vec v = ep.vectors.col(i).real();
      v.normalize();
      double res = (v - v.dot(t_end) * t_end).norm();
      if (res > best_res) {
        best_res = res;
        best = i;
      }
    }
    Vec v = ep.vectors.col(best).real().normalized();
    double du, dT;
    uT_variation(sys, Side::plus, v, du, dT);
    if (dT > 0) v = -v;  // convention: T-variation < 0
    fb.plus_cols.col(0) = v;
    fb.plus_mu[0] = ep.values[best];
  } else {
    // reacting: identify the reactive mode by the exact root u_+/d
    double mu_react = P.pair.plus.u / P.d;
    int ireact = -1;
    double bestd = 1e300;
    for (int i : stab) {
      double dd = std::abs(ep.values[i] - Cplx(mu_react, 0));
      if (dd < bestd) {
        bestd = dd;
        ireact = i;
      }
    }
    std::vector<int> kin;
    for (int i : stab)
      if (i != ireact) kin.push_back(i);
    if (kin.size() != 2) throw NumericalError("fast_basis: reacting stable split failed");
    // kinematic column: the one least parallel to the translation direction
    int best = -1;
    double best_res = -1;
    for (int i : kin) {
      Vec v = ep.vectors.col(i).real();
      v.normalize();
      double res = (v - v.dot(t_end) * t_end).norm();
      if (res > best_res) {
        best_res = res;
        best = i;
      }
    }
    Vec vk = ep.vectors.col(best).real().normalized();
    double du, dT;
    uT_variation(sys, Side::plus, vk, du, dT);
    if (dT > 0) vk = -vk;
    Vec vr = ep.vectors.col(ireact).real().normalized();
    const EvansCoeffs& cp = sys.coeffs_limit(Side::plus);
    double zc = cp.h[0] * vr[0] + cp.h[1] * vr[1] + cp.h[3] * vr[3];
    if (zc > 0) vr = -vr;  // convention: z-variation < 0
    fb.plus_cols.col(0) = vk;
    fb.plus_cols.col(1) = vr;
    fb.plus_mu[0] = ep.values[best];
    fb.plus_mu[1] = ep.values[ireact];

    // - side fast kinematic unstable mode
    EigPairs em = eig(sys.A_limit(Side::minus, Cplx(0, 0)));
    double dd_ = P.d, kk_ = P.k, um = P.pair.minus.u;
    double mu_react_m = (um + std::sqrt(um * um + 4 * dd_ * kk_)) / (2 * dd_);
    int ikin = -1;
    double bestk = -1;
    for (int i = 0; i < N; ++i) {
      if (em.values[i].real() < 1e-9) continue;
      if (std::abs(em.values[i] - Cplx(mu_react_m, 0)) < 1e-6 * (1 + mu_react_m)) continue;
      double mag = em.values[i].real();
      if (mag > bestk) {
        bestk = mag;
        ikin = i;
      }
    }
    if (ikin < 0) throw NumericalError("fast_basis: no fast kinematic mode at -inf");
    Vec v6 = em.vectors.col(ikin).real().normalized();
    double du6, dT6;
    uT_variation(sys, Side::minus, v6, du6, dT6);
    if (du6 > 0) v6 = -v6;  // convention: u-variation < 0
    uT_variation(sys, Side::minus, v6, du6, dT6);
    fb.minus_kin = v6;
    fb.minus_kin_mu = em.values[ikin];
    fb.u6 = du6;
    fb.T6 = dT6;
    const EvansCoeffs& cm = sys.coeffs_limit(Side::minus);
    double rho_v = -cm.b22 / cm.b21 * v6[0] + v6[1] / cm.b21;
    double m_v = v6[0];
    double En_v = cm.g[0] * v6[0] + cm.g[1] * v6[1] + cm.g[2] * v6[2];
    fb.U6 = Vec3(rho_v, m_v, En_v);
  }
  return fb;
}

}  // namespace

CVec anchor_wedge(const EvansSystem& sys, Side side) {
  int N = sys.N();
  const Profile& P = sys.profile();
  FastBasis fb = fast_basis(sys);
  if (side == Side::plus) {
    WedgeSpace W(N, sys.k_plus());
    // the stable-group eigenvector wedge, oriented by the translation mode measured where
    // it is still numerically resolved (it underflows in the deep tail)
    EigPairs ep = eig(sys.A_limit(Side::plus, Cplx(0, 0)));
    CMat Vs(N, sys.k_plus());
    int c = 0;
    for (int i = 0; i < N && c < sys.k_plus(); ++i)
      if (ep.values[i].real() < -1e-9) Vs.col(c++) = ep.vectors.col(i);
    if (c != sys.k_plus()) throw NumericalError("anchor_wedge: stable count mismatch");
    CVec w_eig = W.wedge_of_columns(Vs);
    w_eig /= w_eig.norm();
    double x_a = x_near_end(P, Side::plus, 1e-6);
    Mat V(N, sys.k_plus());
    Vec t = sys.translation_mode(x_a);
    double tn = t.norm();
    if (tn < 1e-250) throw NumericalError("anchor_wedge: degenerate + basis");
    V.col(0) = t / tn;
    for (int j = 0; j < fb.plus_cols.cols(); ++j) V.col(1 + j) = fb.plus_cols.col(j);
    CVec w_t = W.wedge_of_columns(V.cast<Cplx>());
    Cplx s = w_t.dot(w_eig);  // conj(w_t)^T w_eig; both real at lambda = 0
    if (std::abs(s) < 1e-12) throw NumericalError("anchor_wedge: degenerate + orientation");
    return (s.real() > 0 ? 1.0 : -1.0) * w_eig;
  }
  int km = N - sys.k_plus();
  WedgeSpace W(N, km);
  Mat V(N, km);
  const EvansCoeffs& cm = sys.coeffs_limit(Side::minus);
  Vec t = sys.translation_mode(P.x_min());
  if (sys.model() == ModelKind::isentropic) {
    const GasState& g = P.pair.minus;
    V.col(0) = slow_kernel_vector(sys, cm, Vec3(1, g.u - g.c, 0));
    V.col(1) = t / t.norm();
  } else if (sys.model() == ModelKind::ns) {
    auto rs = right_eigvecs(sys, Side::minus);
    V.col(0) = slow_kernel_vector(sys, cm, rs[0]);
    V.col(1) = slow_kernel_vector(sys, cm, rs[1]);
    V.col(2) = t / t.norm();
  } else {
    auto rs = right_eigvecs(sys, Side::minus);
    V.col(0) = slow_kernel_vector(sys, cm, rs[0]);
    V.col(1) = slow_kernel_vector(sys, cm, rs[1]);
    V.col(2) = fb.minus_kin;
    V.col(3) = t / t.norm();
  }
  CVec w = W.wedge_of_columns(V.cast<Cplx>());
  double n = w.norm();
  if (n < 1e-250) throw NumericalError("anchor_wedge: degenerate - basis");
  return w / n;
}

FrameInit frame_init(const EvansSystem& sys, Side side, Cplx lambda, const CVec* align) {
  int N = sys.N();
  int k = side == Side::plus ? sys.k_plus() : N - sys.k_plus();
  WedgeSpace W(N, k);
  FrameInit fr;

  if (std::abs(lambda) < 1e-12) {
    fr.wedge = anchor_wedge(sys, side);
    // group eigenvalues at lambda = 0: fast modes plus zero slow modes
    EigPairs e0 = eig(sys.A_limit(side, Cplx(0, 0)));
    std::vector<Cplx> mus;
    for (int i = 0; i < N; ++i) {
      double re = e0.values[i].real();
      bool want = side == Side::plus ? (re < -1e-9) : (re > 1e-9);
      if (want) mus.push_back(e0.values[i]);
    }
    while (int(mus.size()) < k) mus.push_back(0.0);
    fr.mu_group = CVec(k);
    fr.tau = 0;
    for (int i = 0; i < k; ++i) {
      fr.mu_group[i] = mus[i];
      fr.tau += mus[i];
    }
    return fr;
  }

  EigPairs ep = eig(sys.A_limit(side, lambda));
  std::vector<int> sel;
  bool census = lambda.real() > 1e-6 * (1.0 + std::abs(lambda));
  if (!census && std::abs(lambda) > 0.5)
    throw NumericalError("frame_init: lambda outside the right half-plane and the analytic "
                         "extension neighborhood of 0");
  if (census) {
    for (int i = 0; i < N; ++i) {
      double re = ep.values[i].real();
      if (side == Side::plus ? (re < 0) : (re > 0)) sel.push_back(i);
    }
    if (int(sel.size()) != k)
      throw NumericalError("frame_init: consistent splitting violated");
  } else {
    // continuation selection near lambda = 0: fast modes matched to their lambda = 0
    // values, slow modes (minus side only) matched to -lambda/a_j
    std::vector<Cplx> preds;
    EigPairs e0 = eig(sys.A_limit(side, Cplx(0, 0)));
    for (int i = 0; i < N; ++i) {
      double re = e0.values[i].real();
      bool want = side == Side::plus ? (re < -1e-9) : (re > 1e-9);
      if (want) preds.push_back(e0.values[i]);
    }
    if (side == Side::minus) {
      const auto& aj = sys.slow_speeds(Side::minus);
      for (double a : aj)
        if (a < 0) preds.push_back(-lambda / a);
    }
    if (int(preds.size()) != k) throw NumericalError("frame_init: group prediction failed");
    std::vector<bool> used(N, false);
    for (const Cplx& p : preds) {
      int best = -1;
      double bd = 1e300;
      for (int i = 0; i < N; ++i) {
        if (used[i]) continue;
        double d = std::abs(ep.values[i] - p);
        if (d < bd) {
          bd = d;
          best = i;
        }
      }
      used[best] = true;
      sel.push_back(best);
    }
  }
  std::sort(sel.begin(), sel.end(), [&](int a, int b) {
    if (ep.values[a].real() != ep.values[b].real())
      return ep.values[a].real() < ep.values[b].real();
    return ep.values[a].imag() < ep.values[b].imag();
  });
  CMat V(N, k);
  fr.mu_group = CVec(k);
  fr.tau = 0;
  for (int j = 0; j < k; ++j) {
    V.col(j) = ep.vectors.col(sel[j]);
    fr.mu_group[j] = ep.values[sel[j]];
    fr.tau += ep.values[sel[j]];
  }
  CVec w = W.wedge_of_columns(V);
  double n = w.norm();
  if (n < 1e-200) throw NumericalError("frame_init: degenerate eigenvector wedge");
  w /= n;
  if (align) {
    // discrete Kato transport: phase from the rank-one spectral projector of the lifted
    // matrix, P = v u*/(u* v), applied to the incoming section. This approximates analytic
    // continuation to O(dlambda^2) and carries no Berry holonomy around closed contours.
    CMat Vinv = ep.vectors.inverse();
    CMat U(N, k);
    for (int j = 0; j < k; ++j) U.col(j) = Vinv.row(sel[j]).adjoint();
    CVec u = W.wedge_of_columns(U);
    Cplx uv = u.dot(w);
    Cplx s = (std::abs(uv) > 1e-14) ? u.dot(*align) / uv : align->dot(w);
    if (std::abs(s) > 1e-12)
      w *= s / std::abs(s);
    else {
      int imax = 0;
      for (int i = 1; i < w.size(); ++i)
        if (std::abs(w[i]) > std::abs(w[imax])) imax = i;
      w *= std::conj(w[imax]) / std::abs(w[imax]);
    }
  }
  fr.wedge = w;
  return fr;
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

struct HalfResult {
  CVec zeta;
  double log10 = 0;
};

HalfResult integrate_half(const EvansSystem& sys, Side side, Cplx lambda, const FrameInit& fr,
                          const EvansOptions& opt) {
  int N = sys.N();
  int k = side == Side::plus ? sys.k_plus() : N - sys.k_plus();
  WedgeSpace W(N, k);
  double x_end = side == Side::plus ? (opt.L_plus > 0 ? opt.L_plus : sys.x_hi())
                                    : (opt.L_minus > 0 ? -opt.L_minus : sys.x_lo());
  HalfResult hr;
  hr.zeta = fr.wedge;
  hr.log10 = 0;

  OdeOptions oo;
  oo.abs_tol = opt.ode_tol;
  oo.rel_tol = opt.ode_tol;
  oo.h_init = 1e-3;
  oo.h_max = 0.5;
  CMat A(N, N);
  auto rhs = [&](double x, const CVec& y, CVec& dy) {
    sys.fill_A(sys.coeffs_at(x), lambda, A);
    W.apply_lift(A, y, dy);
    dy -= fr.tau * y;
  };
  double x = x_end;
  double dir = (0.0 - x_end) > 0 ? 1.0 : -1.0;
  while (dir * (0.0 - x) > 1e-14) {
    // renormalization interval adapted to the local coefficient scale so the wedge stays
    // representable between renorms (interior rates reach 1/epsilon inside sharp layers)
    sys.fill_A(sys.coeffs_at(x), lambda, A);
    double rate = std::abs(fr.tau);
    for (int r = 0; r < N; ++r) {
      double s = 0;
      for (int c = 0; c < N; ++c) s += std::abs(A(r, c));
      rate = std::max(rate, double(W.k()) * s);
    }
    double seg = std::clamp(3.0 / rate, 1e-5, opt.renorm_every);
    double x_next = x + dir * std::min(seg, std::abs(0.0 - x));
    hr.zeta = integrate_rk45(rhs, hr.zeta, x, x_next, oo);
    x = x_next;
    double n = hr.zeta.norm();
    if (!(n > 0) || !std::isfinite(n))
      throw NumericalError("evans: overflow in lifted integration");
    hr.zeta /= n;
    hr.log10 += std::log10(n);
  }
  return hr;
}

}  // namespace

ScaledComplex evans_eval_with(const EvansSystem& sys, Cplx lambda, const FrameInit& plus,
                              const FrameInit& minus, const EvansOptions& opt) {
  HalfResult hp = integrate_half(sys, Side::plus, lambda, plus, opt);
  HalfResult hm = integrate_half(sys, Side::minus, lambda, minus, opt);
  WedgeSpace Wk(sys.N(), sys.k_plus());
  ScaledComplex D;
  D.mant = WedgeSpace::pair_full(Wk, hp.zeta, hm.zeta);
  D.log10 = hp.log10 + hm.log10;
  return D;
}

ScaledComplex evans_eval(const EvansSystem& sys, Cplx lambda, const EvansOptions& opt) {
  CVec ap = anchor_wedge(sys, Side::plus);
  CVec am = anchor_wedge(sys, Side::minus);
  FrameInit fp = frame_init(sys, Side::plus, lambda, &ap);
  FrameInit fm = frame_init(sys, Side::minus, lambda, &am);
  return evans_eval_with(sys, lambda, fp, fm, opt);
}

// ---------------------------------------------------------------------------
// winding number

WindingResult winding_number(const EvansSystem& sys, const ContourSpec& contour,
                             const EvansOptions& opt, int threads) {
  if (contour.delta <= 0 || contour.R <= contour.delta)
    throw ConfigError("winding_number: need 0 < delta < R");
  double Y = std::sqrt(contour.R * contour.R - contour.delta * contour.delta);
  double th_a = std::atan2(Y, contour.delta);
  double arc_len = contour.R * 2 * th_a;
  double seg_len = 2 * Y;
  double total = arc_len + seg_len;

  auto lambda_of = [&](double t) -> Cplx {
    double s = t * total;
    if (s < arc_len) {  // ccw arc from -th_a to +th_a
      double th = -th_a + s / contour.R;
      return Cplx(contour.R * std::cos(th), contour.R * std::sin(th));
    }
    double v = s - arc_len;  // segment from delta + iY down to delta - iY
    return Cplx(contour.delta, Y - v);
  };

  struct Node {
    double t;
    Cplx lambda;
    FrameInit fp, fm;
    ScaledComplex D;
    bool fresh = true;
  };
  std::vector<Node> nodes;
  int n0 = std::max(contour.n, 16);
  for (int i = 0; i < n0; ++i) {
    Node nd;
    nd.t = double(i) / n0;
    nd.lambda = lambda_of(nd.t);
    nodes.push_back(nd);
  }

  WindingResult res;
  int max_rounds = 14;
  for (int round = 0; round < max_rounds; ++round) {
    res.rounds = round + 1;
    // frames: sequential continuation in order (phase chained to the left neighbor)
    const CVec* prev_p = nullptr;
    const CVec* prev_m = nullptr;
    for (auto& nd : nodes) {
      if (nd.fresh) {
        nd.fp = frame_init(sys, Side::plus, nd.lambda, prev_p);
        nd.fm = frame_init(sys, Side::minus, nd.lambda, prev_m);
      }
      prev_p = &nd.fp.wedge;
      prev_m = &nd.fm.wedge;
    }
    // integrations for fresh nodes (parallel)
    std::vector<size_t> todo;
    for (size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].fresh) todo.push_back(i);
    parallel_for(todo.size(), [&](size_t j) {
      Node& nd = nodes[todo[j]];
      nd.D = evans_eval_with(sys, nd.lambda, nd.fp, nd.fm, opt);
      nd.fresh = false;
    }, threads);

    // phase sweep
    bool ok = true;
    std::vector<Node> next;
    next.reserve(nodes.size() * 2);
    double total_phase = 0;
    for (size_t i = 0; i < nodes.size(); ++i) {
      const Node& a = nodes[i];
      const Node& b = nodes[(i + 1) % nodes.size()];
      Cplx ratio = b.D.mant / a.D.mant;
      double dphi = std::arg(ratio);
      total_phase += dphi;
      next.push_back(a);
      if (std::abs(dphi) >= M_PI / 2) {
        ok = false;
        Node mid;
        // the wrap interval midpoint stays at the tail of the ordered list so the phase
        // chain always seeds a fresh node from its left neighbor
        mid.t = (i + 1 == nodes.size()) ? 0.5 * (a.t + 1.0) : 0.5 * (a.t + b.t);
        mid.lambda = lambda_of(mid.t >= 1.0 ? mid.t - 1.0 : mid.t);
        next.push_back(mid);
      }
    }
    if (ok) {
      // residual frame holonomy: transport once more around the loop closure and remove
      // the phase defect of each side's frame chain
      FrameInit lp = frame_init(sys, Side::plus, nodes.front().lambda, &nodes.back().fp.wedge);
      FrameInit lm = frame_init(sys, Side::minus, nodes.front().lambda, &nodes.back().fm.wedge);
      double chi = -std::arg(nodes.front().fp.wedge.dot(lp.wedge)) -
                   std::arg(nodes.front().fm.wedge.dot(lm.wedge));
      total_phase -= chi;
      res.winding = int(std::lround(total_phase / (2 * M_PI)));
      if (std::abs(total_phase / (2 * M_PI) - res.winding) > 0.2)
        throw NumericalError("winding_number: phase total far from an integer");
      res.n_points = int(nodes.size());
      for (auto& nd : nodes) {
        res.lambdas.push_back(nd.lambda);
        res.d_mant.push_back(nd.D.mant);
        res.d_log10.push_back(nd.D.log10);
      }
      return res;
    }
    std::sort(next.begin(), next.end(), [](const Node& x, const Node& y) { return x.t < y.t; });
    nodes = std::move(next);
    if (nodes.size() > 20000)
      throw NumericalError("winding_number: refinement exploded (zero on contour?)");
  }
  throw NumericalError("winding_number: phase-step failure after max refinement");
}

// ---------------------------------------------------------------------------
// lambda = 0 frames and D'(0)

namespace {

// x_near_end moved above anchor_wedge
// Integrate columns of V from x0 to 0 under Z' = A(x,0)Z with triangular Gram-Schmidt
// against the analytic translation mode t(x) (column 0 implicit) at renorm events.
Mat integrate_modes_gs(const EvansSystem& sys, Mat V, double x0, double max_rate) {
  int N = sys.N();
  int nc = int(V.cols());
  OdeOptions oo;
  oo.abs_tol = 1e-11;
  oo.rel_tol = 1e-11;
  oo.h_init = 1e-6;
  oo.h_max = 0.25;
  double seg = std::min(0.5, 2.0 / std::max(1.0, max_rate));
  CMat A(N, N);
  Vec packed(N * nc);
  for (int c = 0; c < nc; ++c) packed.segment(c * N, N) = V.col(c);
  auto rhs = [&](double x, const Vec& y, Vec& dy) {
    sys.fill_A(sys.coeffs_at(x), Cplx(0, 0), A);
    Mat Ar = A.real();
    for (int c = 0; c < nc; ++c) dy.segment(c * N, N) = Ar * y.segment(c * N, N);
  };
  double x = x0;
  double dir = (0.0 - x0) > 0 ? 1.0 : -1.0;
  while (dir * (0.0 - x) > 1e-14) {
    double x_next = x + dir * std::min(seg, std::abs(0.0 - x));
    packed = integrate_rk45(rhs, packed, x, x_next, oo);
    x = x_next;
    // triangular GS: remove translation direction then earlier columns, positive scaling
    Vec t = sys.translation_mode(x);
    double tn2 = t.squaredNorm();
    for (int c = 0; c < nc; ++c) {
      auto col = packed.segment(c * N, N);
      if (tn2 > 1e-280) col -= (t.dot(col) / tn2) * t;
      for (int b = 0; b < c; ++b) {
        auto cb = packed.segment(b * N, N);
        double n2 = cb.squaredNorm();
        if (n2 > 1e-280) col -= (cb.dot(col) / n2) * cb;
      }
      double n = col.norm();
      if (n > 1e-280) col /= n;
    }
  }
  for (int c = 0; c < nc; ++c) V.col(c) = packed.segment(c * N, N);
  return V;
}

// Single-mode forward integration from x0 < 0 to 0 with positive renormalization.
Vec integrate_single(const EvansSystem& sys, Vec v, double x0, double max_rate) {
  int N = sys.N();
  OdeOptions oo;
  oo.abs_tol = 1e-11;
  oo.rel_tol = 1e-11;
  oo.h_init = 1e-6;
  oo.h_max = 0.25;
  double seg = std::min(0.5, 2.0 / std::max(1.0, max_rate));
  CMat A(N, N);
  auto rhs = [&](double x, const Vec& y, Vec& dy) {
    sys.fill_A(sys.coeffs_at(x), Cplx(0, 0), A);
    dy = A.real() * y;
  };
  double x = x0;
  while (0.0 - x > 1e-14) {
    double x_next = x + std::min(seg, 0.0 - x);
    v = integrate_rk45(rhs, v, x, x_next, oo);
    x = x_next;
    double n = v.norm();
    if (n > 1e-280) v /= n;
  }
  return v;
}

}  // namespace

ZeroFrames zero_frames(const EvansSystem& sys) {
  ZeroFrames zf;
  const Profile& P = sys.profile();
  int N = sys.N();
  FastBasis fb = fast_basis(sys);

  double xp = x_near_end(P, Side::plus, 1e-6);
  double max_rate_p = 0;
  for (int j = 0; j < fb.plus_mu.size(); ++j)
    max_rate_p = std::max(max_rate_p, std::abs(fb.plus_mu[j].real()));

  zf.plus_cols = Mat(N, sys.k_plus());
  Vec t0 = sys.translation_mode(0.0);
  zf.plus_cols.col(0) = t0;
  if (sys.k_plus() > 1) {
    Mat V = fb.plus_cols;
    V = integrate_modes_gs(sys, V, xp, max_rate_p);
    for (int j = 0; j < V.cols(); ++j) zf.plus_cols.col(1 + j) = V.col(j);
  }

  if (sys.model() == ModelKind::ns) {
    // gamma_NS = det of (zeta2, zeta3) rows of (Z1+, Z2+) at x = 0
    Eigen::Matrix2d G;
    G << zf.plus_cols(1, 0), zf.plus_cols(1, 1), zf.plus_cols(2, 0), zf.plus_cols(2, 1);
    zf.gamma_ns = G.determinant();
    return zf;
  }
  if (sys.model() == ModelKind::isentropic) return zf;

  // reacting
  double xm = x_near_end(P, Side::minus, 1e-6);
  double rate6 = std::abs(fb.minus_kin_mu.real());
  zf.minus_fast = integrate_single(sys, fb.minus_kin, xm, rate6);

  Eigen::Matrix2d G;
  G << zf.plus_cols(1, 0), zf.plus_cols(1, 1), zf.plus_cols(2, 0), zf.plus_cols(2, 1);
  zf.gamma_ns = G.determinant();

  const EvansCoeffs c0 = sys.coeffs_at(0.0);
  auto zeta4p = [&](const Eigen::Ref<const Vec>& col) {
    return col[6] + c0.theta[0] * col[0] + c0.theta[1] * col[1] + c0.theta[2] * col[2] +
           c0.theta[3] * col[3];
  };
  Eigen::Matrix4d M;
  Mat cols(N, 4);
  cols.col(0) = zf.plus_cols.col(0);
  cols.col(1) = zf.plus_cols.col(1);
  cols.col(2) = zf.plus_cols.col(2);
  cols.col(3) = zf.minus_fast;
  for (int j = 0; j < 4; ++j) {
    M(0, j) = cols(1, j);
    M(1, j) = cols(2, j);
    M(2, j) = cols(3, j);
    M(3, j) = zeta4p(cols.col(j));
  }
  zf.gamma_d = M.determinant();
  zf.z3_plus = c0.h[0] * cols(0, 2) + c0.h[1] * cols(1, 2) + c0.h[3] * cols(3, 2);
  zf.z7_minus = P.conserved_deriv_at(P.x_min())[3];
  zf.U6_minus = fb.U6;
  zf.u6 = fb.u6;
  zf.T6 = fb.T6;

  // cross-check gamma_d through the contamination-free wedge route
  {
    WedgeSpace W3(N, 3), W4(N, 4);
    EvansOptions opt;
    FrameInit fp = frame_init(sys, Side::plus, Cplx(0, 0), nullptr);
    // reuse the lifted plus integration
    FrameInit fr = fp;
    // integrate plus wedge to 0
    CVec omega = fr.wedge;
    {
      OdeOptions oo;
      oo.abs_tol = 1e-11;
      oo.rel_tol = 1e-11;
      oo.h_init = 1e-3;
      oo.h_max = 0.25;
      CMat A(N, N);
      auto rhs = [&](double x, const CVec& y, CVec& dy) {
        sys.fill_A(sys.coeffs_at(x), Cplx(0, 0), A);
        W3.apply_lift(A, y, dy);
        dy -= fr.tau * y;
      };
      double x = sys.x_hi();
      while (0.0 - x < -1e-14) {
        double x_next = x - std::min(1.0, x - 0.0);
        omega = integrate_rk45(rhs, omega, x, x_next, oo);
        x = x_next;
        double n = omega.norm();
        omega /= n;
      }
    }
    // gamma_d_alt = (omega ^ Z6) evaluated on rows (zeta2, zeta3, zeta4, zeta4')
    Mat F = Mat::Zero(4, N);
    F(0, 1) = 1;
    F(1, 2) = 1;
    F(2, 3) = 1;
    F(3, 6) = 1;
    F(3, 0) = c0.theta[0];
    F(3, 1) = c0.theta[1];
    F(3, 2) = c0.theta[2];
    F(3, 3) = c0.theta[3];
    // eta = omega ^ Z6 in the 4-wedge basis
    CVec z6 = zf.minus_fast.cast<Cplx>();
    CVec eta = CVec::Zero(W4.dim());
    const auto& subs3 = W3.subsets();
    const auto& subs4 = W4.subsets();
    for (int i3 = 0; i3 < W3.dim(); ++i3) {
      const auto& I = subs3[i3];
      for (int b = 0; b < N; ++b) {
        if (std::find(I.begin(), I.end(), b) != I.end()) continue;
        std::vector<int> J = I;
        J.push_back(b);
        double sign = 1.0;
        int pos = 3;
        while (pos > 0 && J[pos - 1] > J[pos]) {
          std::swap(J[pos - 1], J[pos]);
          --pos;
          sign = -sign;
        }
        int j4 = int(std::lower_bound(subs4.begin(), subs4.end(), J) - subs4.begin());
        eta[j4] += sign * omega[i3] * z6[b];
      }
    }
    double gd_alt = 0;
    Eigen::Matrix4d sub;
    for (int j4 = 0; j4 < W4.dim(); ++j4) {
      const auto& J = subs4[j4];
      for (int r = 0; r < 4; ++r)
        for (int cidx = 0; cidx < 4; ++cidx) sub(r, cidx) = F(r, J[cidx]);
      gd_alt += eta[j4].real() * sub.determinant();
    }
    if (std::getenv("DETONA_ZF_DEBUG"))
      fprintf(stderr, "  [zf] gamma_d mode=%.6e wedge=%.6e gamma_ns=%.6e z3+=%.6e\n",
              zf.gamma_d, gd_alt, zf.gamma_ns, zf.z3_plus);
    if (zf.gamma_d * gd_alt < 0)
      throw NumericalError("zero_frames: gamma_d sign disagrees between mode and wedge routes");
  }
  return zf;
}

DPrimeReport d_prime_zero(const EvansSystem& sys, const EvansOptions& opt) {
  DPrimeReport rep;
  ZeroFrames zf = zero_frames(sys);
  const Profile& P = sys.profile();

  if (sys.model() == ModelKind::ns) {
    // Laplace expansion of the simplified determinant gives an extra minus sign relative
    // to the printed proposition (column 5 carries (-[rho], [m], [En]) after the row ops).
    auto tm = eigen_triples(P.pair.minus, *P.eos);
    Vec3 jumps(P.pair.plus.rho - P.pair.minus.rho, 0.0, P.pair.plus.En - P.pair.minus.En);
    Mat3 D3;
    D3.col(0) = tm[0].r;
    D3.col(1) = tm[1].r;
    D3.col(2) = jumps;
    rep.formula = -tm[0].a * tm[1].a * zf.gamma_ns * D3.determinant();
  } else if (sys.model() == ModelKind::reacting) {
    // same expansion minus sign as the gas case (the jump column enters negated after the
    // integrated-equation row operations)
    auto tm = eigen_triples(P.pair.minus, *P.eos);
    Vec3 jq(P.pair.plus.rho - P.pair.minus.rho, 0.0,
            P.pair.plus.En - P.pair.minus.En + P.q);
    Mat3 D3;
    D3.col(0) = tm[0].r;
    D3.col(1) = tm[1].r;
    D3.col(2) = jq;
    rep.formula = -zf.gamma_d * D3.determinant();
  } else {
    // isentropic: D'(0) = -a1- z2(t(0)) det(r1-, [U])
    double a1 = P.pair.minus.u - P.pair.minus.c;
    Eigen::Matrix2d D2;
    D2 << 1.0, P.pair.plus.rho - P.pair.minus.rho, P.pair.minus.u - P.pair.minus.c,
        P.pair.plus.m - P.pair.minus.rho * P.pair.minus.u;
    double z2t = sys.translation_mode(0.0)[1];
    rep.formula = -a1 * z2t * D2.determinant();
  }

  // centered finite difference with Richardson extrapolation
  double h = rep.fd_h;
  auto D = [&](double lam) {
    return evans_eval(sys, Cplx(lam, 0), opt);
  };
  ScaledComplex Dp = D(h), Dm = D(-h), Dp2 = D(h / 2), Dm2 = D(-h / 2);
  double ref = std::max(std::max(Dp.log10, Dm.log10), std::max(Dp2.log10, Dm2.log10));
  auto val = [&](const ScaledComplex& s) { return s.mant * std::pow(10.0, s.log10 - ref); };
  Cplx d1 = (val(Dp) - val(Dm)) / (2 * h);
  Cplx d2 = (val(Dp2) - val(Dm2)) / h;
  Cplx fd = (4.0 * d2 - d1) / 3.0;
  double scale = std::max(std::abs(val(Dp)), std::abs(val(Dm))) / h;
  if (std::abs(fd) < 1e-9 * scale)
    throw NumericalError("d_prime_zero: finite difference below noise floor");
  rep.fd = fd.real() * std::pow(10.0, ref);  // may overflow to inf; only the sign is used
  if (!std::isfinite(rep.fd)) rep.fd = (fd.real() > 0 ? 1.0 : -1.0) * 1e300;
  rep.signs_agree = (rep.formula > 0) == (fd.real() > 0);
  return rep;
}

}  // namespace detona
