#include "detona/index.hpp"

#include <cmath>
#include <random>

namespace detona {

int sign_dz(double v, double scale) {
  if (std::abs(v) < 1e-9 * std::max(scale, 1e-300))
    throw IndeterminateSign("sign indeterminate: |" + std::to_string(v) + "| below dead zone");
  return v > 0 ? 1 : -1;
}

namespace {

Vec3 jump_vector(const WavePair& pair, double q) {
  return Vec3(pair.plus.rho - pair.minus.rho, pair.plus.m - pair.minus.m,
              pair.plus.En - pair.minus.En + q);
}

double det3_cols(const Vec3& a, const Vec3& b, const Vec3& c) {
  Mat3 M;
  M.col(0) = a;
  M.col(1) = b;
  M.col(2) = c;
  return M.determinant();
}

}  // namespace

double delta_ns(const WavePair& pair, const Eos& eos) {
  auto t = eigen_triples(pair.minus, eos);
  return det3_cols(t[0].r, t[1].r, jump_vector(pair, 0.0));
}

double delta_detonation_reduced(const WavePair& pair, const Eos& eos) {
  const GasState& mn = pair.minus;
  double pe = eos.p_e(mn.rho, mn.e), prho = eos.p_rho(mn.rho, mn.e);
  double jrho = pair.plus.rho - mn.rho;
  double jinv = 1.0 / pair.plus.rho - 1.0 / mn.rho;
  double pavg = 0.5 * (pair.plus.p + mn.p);
  double m = pair.m;
  return jrho * (-pe * m * m * jinv / (2 * mn.rho * mn.rho) + prho - mn.c * m / mn.rho +
                 pe * pavg / (mn.rho * mn.rho));
}

double delta_detonation(const WavePair& pair, const Eos& eos) {
  auto t = eigen_triples(pair.minus, eos);
  double det_form = det3_cols(t[0].r, t[1].r, jump_vector(pair, pair.q));
  double reduced = delta_detonation_reduced(pair, eos);
  // the determinant route uses paper-scaled eigenvectors; l3.(.) carries the normalizer
  double norm3 = det3_cols(t[0].r, t[1].r, t[2].r) / t[2].l.dot(t[2].r);
  double scale = std::max({std::abs(det_form), std::abs(reduced * norm3), 1e-300});
  if (std::abs(det_form - reduced * norm3) > 1e-10 * scale)
    throw NumericalError("delta_detonation: reduction mismatch (EOS derivative bug?)");
  return det_form;
}

double majda_condition(const WavePair& pair, const Eos& eos) {
  const GasState& mn = pair.minus;
  double M = mach_number(mn);
  double jinv = 1.0 / pair.plus.rho - 1.0 / mn.rho;
  return M * M * jinv * eos.p_e(mn.rho, mn.e) - M - 1.0;
}

double gamma_ns(const EvansSystem& sys) { return zero_frames(sys).gamma_ns; }
double gamma_d(const EvansSystem& sys) { return zero_frames(sys).gamma_d; }

IndexReport index_ns(const Profile& prof) {
  if (prof.kind != ProfileKind::ns_shock) throw ConfigError("index_ns: shock profile required");
  IndexReport rep;
  rep.model = "ns";
  auto t = eigen_triples(prof.pair.minus, *prof.eos);
  Vec3 jumps = jump_vector(prof.pair, 0.0);
  rep.delta = det3_cols(t[0].r, t[1].r, jumps);
  Vec ux = prof.conserved_deriv_at(prof.x_min());
  Vec3 ux3(ux[0], ux[1], ux[2]);
  double nux = ux3.norm();
  if (nux < 1e-300) throw NumericalError("index_ns: vanishing tail derivative");
  double det_ux = det3_cols(t[0].r, t[1].r, ux3 / nux);
  double scale = t[2].r.norm() * jumps.norm() + 1.0;
  rep.factors.push_back({"det(r1-,r2-,[U])", rep.delta, sign_dz(rep.delta, scale)});
  rep.factors.push_back({"det(r1-,r2-,Ux(-inf))", det_ux, sign_dz(det_ux, t[2].r.norm())});
  rep.gamma_tilde = rep.recompose();
  rep.parity_even = rep.gamma_tilde == 1;
  rep.orientation_note = "gamma_NS cancels for the extreme 3-shock";
  return rep;
}

IndexReport index_isentropic(const Profile& prof) {
  if (prof.kind != ProfileKind::isentropic)
    throw ConfigError("index_isentropic: isentropic profile required");
  IndexReport rep;
  rep.model = "isentropic";
  const GasState& mn = prof.pair.minus;
  Eigen::Vector2d r1(1.0, mn.u - mn.c);
  Eigen::Vector2d jumps(prof.pair.plus.rho - mn.rho, prof.pair.plus.m - mn.m);
  Eigen::Vector2d ux;
  {
    Vec u2 = prof.conserved_deriv_at(prof.x_min());
    ux << u2[0], u2[1];
  }
  double det_jump = r1[0] * jumps[1] - r1[1] * jumps[0];
  double det_ux = r1[0] * ux[1] - r1[1] * ux[0];
  rep.delta = det_jump;
  rep.factors.push_back({"det(r1-,[U])", det_jump, sign_dz(det_jump, 1.0 + jumps.norm())});
  rep.factors.push_back({"det(r1-,Ux(-inf))", det_ux, sign_dz(det_ux, ux.norm() + 1e-30)});
  rep.gamma_tilde = rep.recompose();
  rep.parity_even = rep.gamma_tilde == 1;
  return rep;
}

IndexReport index_detonation(const EvansSystem& sys) {
  if (sys.model() != ModelKind::reacting)
    throw ConfigError("index_detonation: reacting system required");
  const Profile& prof = sys.profile();
  IndexReport rep;
  rep.model = "detonation";
  ZeroFrames zf = zero_frames(sys);
  const Eos& eos = *prof.eos;
  rep.delta = delta_detonation(prof.pair, eos);
  rep.majda_value = majda_condition(prof.pair, eos);
  rep.gamma_ns = zf.gamma_ns;
  rep.gamma_d = zf.gamma_d;
  rep.z3_plus = zf.z3_plus;
  rep.z7_minus = zf.z7_minus;

  auto t = eigen_triples(prof.pair.minus, eos);
  rep.det_u6 = det3_cols(t[0].r, t[1].r, zf.U6_minus);
  // cross-checks of det(r1-,r2-,U6-): left-eigenvector route and the ideal-gas (u,T) form
  double norm3 = det3_cols(t[0].r, t[1].r, t[2].r) / t[2].l.dot(t[2].r);
  double via_l3 = norm3 * t[2].l.dot(zf.U6_minus);
  if (rep.det_u6 * via_l3 <= 0)
    throw NumericalError("index_detonation: det(r1-,r2-,U6-) routes disagree");
  if (eos.is_ideal()) {
    const auto& ig = static_cast<const IdealPolytropic&>(eos);
    const GasState& mn = prof.pair.minus;
    double coef = mn.c * mn.rho - mn.p / mn.u;  // positive for u < 0
    double uT_form = coef * zf.u6 + ig.gruneisen() * ig.cv() * mn.rho * zf.T6;
    if (t[2].l.dot(zf.U6_minus) * uT_form <= 0)
      throw NumericalError("index_detonation: (u,T)-form of l3.U6 disagrees");
  }

  double amp = 1.0 + jump_vector(prof.pair, prof.q).norm();
  rep.factors.push_back({"gamma_d", rep.gamma_d, sign_dz(rep.gamma_d, 1e-6)});
  rep.factors.push_back({"Delta", rep.delta, sign_dz(rep.delta, amp)});
  rep.factors.push_back({"gamma_NS", rep.gamma_ns, sign_dz(rep.gamma_ns, 1e-6)});
  rep.factors.push_back({"z3+", rep.z3_plus, sign_dz(rep.z3_plus, 1e-6)});
  rep.factors.push_back({"z7-", rep.z7_minus, sign_dz(rep.z7_minus, 1e-12)});
  rep.factors.push_back({"det(r1-,r2-,U6-)", rep.det_u6, sign_dz(rep.det_u6, 1.0)});
  rep.gamma_tilde = -rep.recompose();
  rep.parity_even = rep.gamma_tilde == 1;
  rep.orientation_note =
      "Z2+: dT<0, Z3+: dz<0, Z6-: du<0 at the endstates; only the composed product is "
      "orientation-free";
  return rep;
}

SmallQReport small_q_verdict(const GasState& plus, double m, const DissipationParams& par,
                             const IgnitionFunction& ign, std::shared_ptr<const Eos> eos,
                             std::vector<double> qs, const ContourSpec& contour, int threads) {
  SmallQReport rep;
  rep.qs = qs;

  // base shock: q = 0
  WavePair shock_pair = make_pair(*eos, plus, m, 0.0, DetonationKind::strong);
  auto shock = std::make_shared<Profile>(
      ns_shock_profile(shock_pair, par.nu_eff(), par.theta_eff(), eos));
  EvansSystem ns_sys(shock, ModelKind::ns);
  WindingResult base = winding_number(ns_sys, contour, {}, threads);
  rep.base_winding = base.winding;
  if (base.winding != 0) {
    rep.applicable = false;
    rep.verdict = "not-applicable (base shock has unstable spectrum)";
    return rep;
  }
  rep.applicable = true;

  // q = 0 reaction operator on the shock profile: lambda rho Y = -(mY)' + (rho d Y')' - k phi rho Y
  {
    const int n = 400;
    double xa = shock->x_min(), xb = shock->x_max();
    double h = (xb - xa) / (n + 1);
    Mat A = Mat::Zero(n, n);
    Mat B = Mat::Zero(n, n);
    auto rho_at = [&](double x) { return shock->conserved_at(x)[0]; };
    auto phirho_at = [&](double x) {
      GasState g = shock->gas_at(x);
      return ign.phi(g.T) * g.rho;
    };
    double d = par.d_eff(), k = par.k;
    for (int i = 0; i < n; ++i) {
      double x = xa + (i + 1) * h;
      double rhoL = rho_at(x - 0.5 * h), rhoR = rho_at(x + 0.5 * h);
      B(i, i) = rho_at(x);
      A(i, i) = -d * (rhoL + rhoR) / (h * h) - k * phirho_at(x);
      if (i > 0) A(i, i - 1) = d * rhoL / (h * h) + m / (2 * h);
      if (i + 1 < n) A(i, i + 1) = d * rhoR / (h * h) - m / (2 * h);
    }
    Mat Binv_A = B.inverse() * A;
    EigPairs ep = eig(Binv_A);
    rep.reaction_max_re = -1e300;
    for (Eigen::Index i = 0; i < ep.values.size(); ++i)
      rep.reaction_max_re = std::max(rep.reaction_max_re, ep.values[i].real());
    // Rayleigh quotients on random vectors
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> gauss;
    rep.rayleigh_max_re = -1e300;
    for (int trial = 0; trial < 50; ++trial) {
      CVec y(n);
      for (int i = 0; i < n; ++i) y[i] = Cplx(gauss(rng), gauss(rng));
      Cplx num = y.dot(A * y), den = y.dot(B * y);
      rep.rayleigh_max_re = std::max(rep.rayleigh_max_re, (num / den).real());
    }
  }

  // d = 0 variant: w' = -(lambda/v) w at +inf blows up for Re lambda > 0
  rep.d0_unstable_growth = ((-Cplx(1.0, 0.7) / plus.u).real() > 0);

  for (double q : qs) {
    WavePair pair = make_pair(*eos, plus, m, q, DetonationKind::strong);
    DissipationParams dq = par;
    dq.q = q;
    auto prof = std::make_shared<Profile>(detonation_profile(pair, dq, ign, eos));
    EvansSystem sys(prof, ModelKind::reacting);
    WindingResult w = winding_number(sys, contour, {}, threads);
    rep.windings.push_back(w.winding);
  }
  bool all_zero = true;
  for (int w : rep.windings) all_zero = all_zero && (w == 0);
  rep.verdict = (all_zero && rep.reaction_max_re < 0)
                    ? "strongly spectrally stable (small q)"
                    : "check failed";
  return rep;
}

DimensionCheck dimension_check(const Profile& prof) {
  DimensionCheck dc;
  Vec dvec = prof.end_plus - prof.end_minus;
  if (dvec.norm() < 1e-12 * (1 + prof.end_plus.norm())) {
    dc.skipped = true;
    return dc;
  }
  RestPointSpectrum sp = rest_point_spectrum(prof);
  auto count_re = [](const CVec& v, bool positive) {
    int c = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      double re = v[i].real();
      if (positive ? (re > 1e-9) : (re < -1e-9)) ++c;
    }
    return c;
  };
  dc.d_plus = count_re(sp.plus, false);
  dc.d_minus = count_re(sp.minus, true);

  if (prof.kind == ProfileKind::isentropic) {
    dc.n = 2;
    dc.r = 1;
    dc.i_plus = (prof.pair.plus.u - prof.pair.plus.c < 0 ? 1 : 0) +
                (prof.pair.plus.u + prof.pair.plus.c < 0 ? 1 : 0);
    dc.i_minus = (prof.pair.minus.u - prof.pair.minus.c > 0 ? 1 : 0) +
                 (prof.pair.minus.u + prof.pair.minus.c > 0 ? 1 : 0);
    dc.dim_u_tilde_plus = prof.pair.plus.u > 0 ? 1 : 0;
    dc.dim_s_tilde_minus = prof.pair.minus.u < 0 ? 1 : 0;
  } else if (prof.kind == ProfileKind::ns_shock) {
    dc.n = 3;
    dc.r = 2;
    auto tp = eigen_triples(prof.pair.plus, *prof.eos);
    auto tm = eigen_triples(prof.pair.minus, *prof.eos);
    for (int j = 0; j < 3; ++j) {
      if (tp[j].a < 0) ++dc.i_plus;
      if (tm[j].a > 0) ++dc.i_minus;
    }
    dc.dim_u_tilde_plus = prof.pair.plus.u > 0 ? 1 : 0;
    dc.dim_s_tilde_minus = prof.pair.minus.u < 0 ? 1 : 0;
  } else {
    // reacting: the + relation holds (no source there); at -inf the reactive unstable
    // direction is source-generated and the conservation-law count does not apply
    dc.n = 4;
    dc.r = 3;
    auto tp = eigen_triples(prof.pair.plus, *prof.eos);
    for (int j = 0; j < 3; ++j)
      if (tp[j].a < 0) ++dc.i_plus;
    if (prof.pair.plus.u < 0) ++dc.i_plus;  // z-advection speed
    dc.dim_u_tilde_plus = prof.pair.plus.u > 0 ? 1 : 0;
    dc.plus_ok = (dc.n - dc.i_plus == dc.r - dc.d_plus + dc.dim_u_tilde_plus);
    dc.minus_ok = (dc.d_minus == 2);
    dc.sum_ok = dc.plus_ok && dc.minus_ok;
    dc.extreme = (dc.d_plus == dc.r && dc.dim_u_tilde_plus == 0);
    return dc;
  }
  dc.plus_ok = (dc.n - dc.i_plus == dc.r - dc.d_plus + dc.dim_u_tilde_plus);
  dc.minus_ok = (dc.n - dc.i_minus == dc.r - dc.d_minus + dc.dim_s_tilde_minus);
  dc.sum_ok = (dc.n - (dc.i_plus + dc.i_minus)) == (dc.r - (dc.d_plus + dc.d_minus));
  dc.extreme = (dc.d_plus == dc.r && dc.dim_u_tilde_plus == 0);
  return dc;
}

double serre_transversality_check(const Mat& A, const Mat& B) {
  Eigen::Index n = A.rows();
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-8 * (1 + A.cwiseAbs().maxCoeff()))
    throw ConfigError("serre_transversality_check: A must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> esB(0.5 * (B + B.transpose()));
  double bscale = std::max(1.0, esB.eigenvalues().cwiseAbs().maxCoeff());
  if (esB.eigenvalues().minCoeff() < -1e-9 * bscale)
    throw ConfigError("serre_transversality_check: B must be positive semidefinite");

  // ker B and the A-negative cone inside it
  std::vector<Eigen::Index> kerIdx;
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(esB.eigenvalues()[i]) <= 1e-9 * bscale) kerIdx.push_back(i);
  Mat K(n, static_cast<Eigen::Index>(kerIdx.size()));
  for (size_t j = 0; j < kerIdx.size(); ++j) K.col(j) = esB.eigenvectors().col(kerIdx[j]);
  Mat S1;
  if (K.cols() > 0) {
    Mat KAK = K.transpose() * A * K;
    Eigen::SelfAdjointEigenSolver<Mat> esK(0.5 * (KAK + KAK.transpose()));
    std::vector<Eigen::Index> neg;
    for (Eigen::Index i = 0; i < esK.eigenvalues().size(); ++i)
      if (esK.eigenvalues()[i] < -1e-10) neg.push_back(i);
    Mat N(n, static_cast<Eigen::Index>(neg.size()));
    for (size_t j = 0; j < neg.size(); ++j) N.col(j) = K * esK.eigenvectors().col(neg[j]);
    Mat Sb = real_stable_subspace(A.fullPivLu().solve(B));
    Mat joined(n, Sb.cols() + N.cols());
    joined << Sb, N;
    S1 = joined;
  } else {
    S1 = real_stable_subspace(A.fullPivLu().solve(B));
  }

  Eigen::SelfAdjointEigenSolver<Mat> esA(A);
  std::vector<Eigen::Index> pos;
  for (Eigen::Index i = 0; i < n; ++i)
    if (esA.eigenvalues()[i] > 0) pos.push_back(i);
  Mat U(n, static_cast<Eigen::Index>(pos.size()));
  for (size_t j = 0; j < pos.size(); ++j) U.col(j) = esA.eigenvectors().col(pos[j]);

  if (S1.cols() == 0 || U.cols() == 0) return M_PI / 2;
  return min_principal_angle(S1, U);
}

double serre_ns_instance(const GasState& s, const IdealPolytropic& eos, double nu,
                         double theta) {
  Vec3 U = conserved(s);
  Mat3 A = flux_jacobian(s, eos);
  Mat3 B = ns_viscosity_matrix(eos, U, nu, theta);
  Mat3 A0 = ideal_entropy_hessian(eos, U);
  Mat3 A0A = A0 * A;
  if ((A0A - A0A.transpose()).cwiseAbs().maxCoeff() > 1e-5 * A0A.cwiseAbs().maxCoeff())
    throw NumericalError("serre_ns_instance: A0 A not symmetric (Kawashima check failed)");
  Mat3 A0B = A0 * B;
  if ((A0B - A0B.transpose()).cwiseAbs().maxCoeff() > 1e-5 * A0B.cwiseAbs().maxCoeff())
    throw NumericalError("serre_ns_instance: A0 B not symmetric (Kawashima check failed)");
  Mat S = spd_sqrt(Mat(A0));
  Mat Sinv = S.inverse();
  Mat At = Sinv * A0A * Sinv;
  Mat Bt = Sinv * (0.5 * (A0B + A0B.transpose())) * Sinv;
  return serre_transversality_check(0.5 * (At + At.transpose()), Bt);
}

}  // namespace detona
