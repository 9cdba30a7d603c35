#include "detona/profile.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace detona {

namespace {

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& y) {
  Vec f0 = f(y);
  Mat J(f0.size(), y.size());
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    double h = 1e-7 * std::max(1.0, std::abs(y[j]));
    Vec yp = y, ym = y;
    yp[j] += h;
    ym[j] -= h;
    J.col(j) = (f(yp) - f(ym)) / (2 * h);
  }
  return J;
}

Vec amplitude_scale(const Vec& a, const Vec& b) {
  Vec s(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    s[i] = std::max({std::abs(a[i] - b[i]),
                     1e-3 * std::max(std::abs(a[i]), std::abs(b[i])), 1e-12});
  return s;
}

double scaled_dist(const Vec& y, const Vec& target, const Vec& scale) {
  double m = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    m = std::max(m, std::abs(y[i] - target[i]) / scale[i]);
  return m;
}

Profile::TailData make_tail(const Mat& J, const Vec& dev, bool keep_unstable) {
  EigPairs ep = eig(J);
  Profile::TailData t;
  t.mu = ep.values;
  t.V = ep.vectors;
  t.coef = ep.vectors.fullPivLu().solve(CVec(dev.cast<Cplx>()));
  for (Eigen::Index i = 0; i < t.coef.size(); ++i) {
    double re = ep.values[i].real();
    bool wrong_side = keep_unstable ? (re < -1e-9) : (re > 1e-9);
    if (wrong_side) t.coef[i] = 0;
  }
  return t;
}

// Shift grid so the given x lands at 0.
void recenter(std::vector<double>& xs, double x0) {
  for (double& x : xs) x -= x0;
}

void fit_tails(Profile& p) {
  auto fit_side = [&](bool minus) -> double {
    const Vec& rest = minus ? p.end_minus : p.end_plus;
    Vec scale = amplitude_scale(p.end_plus, p.end_minus);
    double x_mid = 0.5 * (p.xs.front() + p.xs.back());
    std::vector<size_t> win;
    for (size_t i = 0; i < p.xs.size(); ++i)
      if (minus ? (p.xs[i] <= x_mid) : (p.xs[i] >= x_mid)) win.push_back(i);
    if (win.size() < 6) throw NumericalError("tail_decay_fit: tail not resolved");
    // components that actually decay across the half-domain; frozen center-mode offsets
    // (reactant defect at +inf) must not flatten the slope
    std::vector<int> active;
    for (Eigen::Index c = 0; c < rest.size(); ++c) {
      double dmax = 0, dmin = 1e300;
      for (size_t i : win) {
        double d = std::abs(p.ys[i][c] - rest[c]) / scale[c];
        dmax = std::max(dmax, d);
        dmin = std::min(dmin, d);
      }
      if (dmax > 1e-12 && dmax / std::max(dmin, 1e-300) > 5.0) active.push_back(int(c));
    }
    if (active.empty()) throw NumericalError("tail_decay_fit: zero-variance tail");
    auto dev_at = [&](size_t i) {
      double dev = 0;
      for (int c : active) dev += std::pow((p.ys[i][c] - rest[c]) / scale[c], 2);
      return std::sqrt(dev);
    };
    double dev_edge = dev_at(minus ? win.front() : win.back());
    std::vector<double> X, L;
    for (double cap : {1e-2, 0.2}) {
      X.clear();
      L.clear();
      for (size_t i : win) {
        double dev = dev_at(i);
        if (dev > std::max(3.0 * dev_edge, 1e-12) && dev < cap) {
          X.push_back(p.xs[i]);
          L.push_back(std::log(dev));
        }
      }
      if (X.size() >= 6) break;
    }
    if (X.size() < 6) throw NumericalError("tail_decay_fit: tail not resolved");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < X.size(); ++i) {
      sx += X[i];
      sy += L[i];
      sxx += X[i] * X[i];
      sxy += X[i] * L[i];
    }
    double n = double(X.size());
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return minus ? slope : -slope;
  };
  p.alpha_minus = fit_side(true);
  p.alpha_plus = fit_side(false);
}

struct Recorder {
  std::vector<double> xs;
  std::vector<Vec> ys, dys;
  void operator()(double x, const Vec& y, const Vec& dy) {
    xs.push_back(x);
    ys.push_back(y);
    dys.push_back(dy);
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// right-hand sides

Vec ns_shock_rhs(const Eos& eos, const WavePair& pair, double nu, double theta, const Vec& y) {
  double u = y[0], e = y[1];
  double m = pair.m;
  double rho = m / u;
  if (rho < kAdmissibleFloor || e < kAdmissibleFloor || u >= 0)
    throw NumericalError("ns_shock_rhs: inadmissible state");
  double p = eos.p(rho, e);
  double C_mom = m * pair.minus.u + pair.minus.p;
  double u_x = (m * u + p - C_mom) / nu;
  double C_en = m * pair.minus.E + pair.minus.u * pair.minus.p;
  double T_x = (m * (0.5 * u * u + e) + u * p - C_en - nu * u * u_x) / theta;
  double rho_x = -(m / (u * u)) * u_x;
  double e_x = (T_x - eos.T_rho(rho, e) * rho_x) / eos.T_e(rho, e);
  return Vec{{u_x, e_x}};
}

Vec detonation_rhs(const Eos& eos, const WavePair& pair, const DissipationParams& par,
                   const IgnitionFunction& ign, const Vec& y) {
  double u = y[0], e = y[1], Y = y[2], Z = y[3];
  double m = pair.m;
  double rho = m / u;
  if (rho < kAdmissibleFloor || e < kAdmissibleFloor || u >= 0)
    throw NumericalError("detonation_rhs: inadmissible state");
  double nu = par.nu_eff(), th = par.theta_eff(), d = par.d_eff();
  double p = eos.p(rho, e);
  double T = eos.T(rho, e);
  double C_mom = m * pair.minus.u + pair.minus.p;
  double u_x = (m * u + p - C_mom) / nu;
  double C_en = m * pair.minus.E + pair.minus.u * pair.minus.p;
  double T_x = (m * (0.5 * u * u + e) + u * p + par.q * m * Z - C_en - nu * u * u_x) / th;
  double rho_x = -(m / (u * u)) * u_x;
  double e_x = (T_x - eos.T_rho(rho, e) * rho_x) / eos.T_e(rho, e);
  double Y_x = (u / d) * (Y - Z);
  double Z_x = -(par.k / u) * Y * ign.phi(T);
  return Vec{{u_x, e_x, Y_x, Z_x}};
}

double isentropic_rhs(const IsentropicLaw& law, double m, double C_mom, double nu, double u) {
  double rho = m / u;
  if (rho < kAdmissibleFloor) throw NumericalError("isentropic_rhs: inadmissible state");
  return (m * u + law.p(rho) - C_mom) / nu;
}

Vec Profile::rhs(const Vec& y) const {
  switch (kind) {
    case ProfileKind::ns_shock:
      return ns_shock_rhs(*eos, pair, nu, theta, y);
    case ProfileKind::detonation: {
      DissipationParams par{nu, theta, d, k, q, 1.0};
      return detonation_rhs(*eos, pair, par, ign, y);
    }
    case ProfileKind::isentropic:
      return Vec{{isentropic_rhs(law, pair.m, pair.m * pair.minus.u + law.p(pair.minus.rho),
                                 nu, y[0])}};
  }
  throw NumericalError("unreachable");
}

// ---------------------------------------------------------------------------
// Profile queries

Vec Profile::state_at(double x) const {
  if (x <= xs.front()) return tail_state_(x, true, false);
  if (x >= xs.back()) return tail_state_(x, false, false);
  return hermite_(x, false);
}

Vec Profile::deriv_at(double x) const {
  if (x <= xs.front()) return tail_state_(x, true, true);
  if (x >= xs.back()) return tail_state_(x, false, true);
  return hermite_(x, true);
}

Vec Profile::conserved_at(double x) const {
  return core_to_conserved_(state_at(x), deriv_at(x), false);
}
Vec Profile::conserved_deriv_at(double x) const {
  return core_to_conserved_(state_at(x), deriv_at(x), true);
}

GasState Profile::gas_at(double x) const {
  if (kind == ProfileKind::isentropic) throw NumericalError("gas_at: isentropic profile");
  Vec y = state_at(x);
  return make_state(*eos, pair.m / y[0], y[0], y[1]);
}

Vec Profile::core_to_conserved_(const Vec& y, const Vec& dy, bool deriv) const {
  if (kind == ProfileKind::isentropic) {
    double rho = pair.m / y[0];
    if (!deriv) return Vec{{rho, pair.m}};
    return Vec{{-(pair.m / (y[0] * y[0])) * dy[0], 0.0}};
  }
  double u = y[0], e = y[1];
  double m = pair.m;
  double rho = m / u;
  double rho_x = -(m / (u * u)) * dy[0];
  double E = 0.5 * u * u + e;
  double En = rho * E;
  double En_x = rho_x * E + rho * (u * dy[0] + dy[1]);
  if (kind == ProfileKind::ns_shock) {
    if (!deriv) return Vec{{rho, m, En}};
    return Vec{{rho_x, 0.0, En_x}};
  }
  double Y = y[2];
  double z = rho * Y;
  double z_x = rho_x * Y + rho * dy[2];
  if (!deriv) return Vec{{rho, m, En, z}};
  return Vec{{rho_x, 0.0, En_x, z_x}};
}

double Profile::max_ode_residual() const {
  double worst = 0;
  Vec scale = amplitude_scale(end_plus, end_minus);
  for (size_t i = 0; i + 1 < xs.size(); ++i) {
    double xm = 0.5 * (xs[i] + xs[i + 1]);
    Vec y = state_at(xm), dy = deriv_at(xm), f = rhs(y);
    for (Eigen::Index c = 0; c < y.size(); ++c)
      worst = std::max(worst, std::abs(dy[c] - f[c]) / std::max(1.0, scale[c] /
                       std::max(1e-12, xs[i + 1] - xs[i])));
  }
  return worst;
}

Vec Profile::hermite_(double x, bool deriv) const {
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  size_t i = std::max<size_t>(1, std::min(xs.size() - 1, size_t(it - xs.begin()))) - 1;
  double h = xs[i + 1] - xs[i];
  double t = (x - xs[i]) / h;
  const Vec &y0 = ys[i], &y1 = ys[i + 1], &d0 = dys[i], &d1 = dys[i + 1];
  if (!deriv) {
    double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * y0 + h * h10 * d0 + h01 * y1 + h * h11 * d1;
  }
  double g00 = 6 * t * (t - 1) / h, g10 = (1 - t) * (1 - 3 * t);
  double g01 = -6 * t * (t - 1) / h, g11 = t * (3 * t - 2);
  return g00 * y0 + g10 * d0 + g01 * y1 + g11 * d1;
}

Vec Profile::tail_state_(double x, bool minus, bool deriv) const {
  const TailData& td = minus ? tail_minus : tail_plus;
  double dx = x - (minus ? xs.front() : xs.back());
  const Vec& rest = minus ? end_minus : end_plus;
  CVec acc = CVec::Zero(rest.size());
  for (Eigen::Index i = 0; i < td.mu.size(); ++i) {
    if (std::abs(td.coef[i]) < 1e-300) continue;
    Cplx w = td.coef[i] * std::exp(td.mu[i] * dx);
    if (deriv) w *= td.mu[i];
    acc += w * td.V.col(i);
  }
  Vec out(rest.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = acc[i].real() + (deriv ? 0.0 : rest[i]);
  return out;
}

// ---------------------------------------------------------------------------
// builders

namespace {

void finalize_profile(Profile& p, Recorder&& rec, double x_center) {
  p.xs = std::move(rec.xs);
  p.ys = std::move(rec.ys);
  p.dys = std::move(rec.dys);
  recenter(p.xs, x_center);
  auto f = [&](const Vec& y) { return p.rhs(y); };
  Mat Jm = fd_jacobian(f, p.end_minus);
  Mat Jp = fd_jacobian(f, p.end_plus);
  p.tail_minus = make_tail(Jm, Vec(p.ys.front() - p.end_minus), /*keep_unstable=*/true);
  p.tail_plus = make_tail(Jp, Vec(p.ys.back() - p.end_plus), /*keep_unstable=*/false);
  Vec dv_m = p.ys.front() - p.end_minus;
  Vec dv_p = p.ys.back() - p.end_plus;
  p.tail_dir_minus = dv_m / std::max(dv_m.norm(), 1e-300);
  p.tail_dir_plus = dv_p / std::max(dv_p.norm(), 1e-300);
  fit_tails(p);
}

// x where component comp of the trajectory crosses value v (first bracketing nodes).
double crossing_x(const Recorder& rec, int comp, double v) {
  for (size_t i = 0; i + 1 < rec.xs.size(); ++i) {
    double a = rec.ys[i][comp] - v, b = rec.ys[i + 1][comp] - v;
    if (a == 0) return rec.xs[i];
    if (a * b < 0) return rec.xs[i] + (rec.xs[i + 1] - rec.xs[i]) * a / (a - b);
  }
  return 0.5 * (rec.xs.front() + rec.xs.back());
}

}  // namespace

Profile ns_shock_profile(const WavePair& pair, double nu, double theta,
                         std::shared_ptr<const Eos> eos, double tail_target) {
  if (nu <= 0 || theta <= 0) throw ConfigError("ns_shock_profile: nu, theta > 0 required");
  Profile p;
  p.kind = ProfileKind::ns_shock;
  p.eos = eos;
  p.pair = pair;
  p.nu = nu;
  p.theta = theta;
  p.end_minus = Vec{{pair.minus.u, pair.minus.e}};
  p.end_plus = Vec{{pair.plus.u, pair.plus.e}};
  Vec scale = amplitude_scale(p.end_plus, p.end_minus);

  if (scaled_dist(p.end_plus, p.end_minus, amplitude_scale(p.end_plus, p.end_plus)) <
      1e-10) {  // zero-amplitude pair: constant profile
    Recorder rec;
    Vec zero = Vec::Zero(2);
    rec(0.0, p.end_minus, zero);
    rec(1.0, p.end_minus, zero);
    p.xs = rec.xs;
    p.ys = rec.ys;
    p.dys = rec.dys;
    p.end_plus = p.end_minus;
    p.tail_minus.mu = CVec::Zero(2);
    p.tail_minus.V = CMat::Identity(2, 2);
    p.tail_minus.coef = CVec::Zero(2);
    p.tail_plus = p.tail_minus;
    p.tail_dir_minus = p.tail_dir_plus = Vec::Zero(2);
    return p;
  }

  auto f = [&](const Vec& y) { return ns_shock_rhs(*eos, pair, nu, theta, y); };
  Mat Jm = fd_jacobian(f, p.end_minus);
  EigPairs em = eig(Jm);
  int iu = -1;
  for (int i = 0; i < 2; ++i)
    if (em.values[i].real() > 0) {
      if (iu >= 0) throw NumericalError("ns_shock_profile: -inf state not a saddle");
      iu = i;
    }
  if (iu < 0) throw NumericalError("ns_shock_profile: no unstable direction at -inf");
  Vec v = em.vectors.col(iu).real();
  v.normalize();
  if (v.dot(p.end_plus - p.end_minus) < 0) v = -v;

  Vec y0 = p.end_minus + tail_target * scale.cwiseProduct(v.cwiseAbs().cwiseMax(1e-2)).norm() *
                             v;  // offset sized against the amplitude scale
  // simpler and robust: componentwise offset
  y0 = p.end_minus + tail_target * scale.norm() * v;

  OdeOptions opt;
  opt.h_init = 1e-6;
  opt.h_max = 0.2;  // node spacing bounds the Hermite interpolation residual
  Recorder rec;
  bool converged = false;
  auto obs = [&](double x, const Vec& y, const Vec& dy) {
    rec(x, y, dy);
    if (scaled_dist(y, p.end_plus, scale) <= tail_target) {
      converged = true;
      return false;
    }
    return x < 4000.0;
  };
  try {
    integrate_rk45([&](double, const Vec& y, Vec& dy) { dy = f(y); }, y0, 0.0, 4000.0, opt, obs);
  } catch (const NumericalError&) {
    // fall through to the convergence check
  }
  if (!converged) throw NumericalError("ns_shock_profile: no connection found");
  finalize_profile(p, std::move(rec), crossing_x(rec, 0, 0.5 * (pair.plus.u + pair.minus.u)));
  return p;
}

namespace {

// The reacting connection rides a gas-dynamically repelling stretch of the slow manifold,
// so single-trajectory shooting loses it to integration-noise amplification e^{mu x}.
// Multiple shooting with projection boundary conditions keeps every segment flow map well
// conditioned and lets Newton match them.
struct MsSetup {
  Vec minus, plus, scale;
  Mat Vu;        // 4x2 unstable basis at the burned state (kinematic, reactive)
  Vec l_center;  // left eigenvector of the ignition-degenerate zero mode at +inf
};

MsSetup ms_setup(const WavePair& pair, const DissipationParams& par,
                 const IgnitionFunction& ign, const Eos& eos) {
  MsSetup s;
  s.minus = Vec{{pair.minus.u, pair.minus.e, 0.0, 0.0}};
  s.plus = Vec{{pair.plus.u, pair.plus.e, 1.0, 1.0}};
  s.scale = amplitude_scale(s.plus, s.minus);
  auto f = [&](const Vec& y) { return detonation_rhs(eos, pair, par, ign, y); };
  EigPairs em = eig(fd_jacobian(f, s.minus));
  std::vector<int> unstable;
  for (int i = 0; i < 4; ++i)
    if (em.values[i].real() > 0) unstable.push_back(i);
  if (unstable.size() != 2)
    throw NumericalError("detonation_profile: burned state lacks the 2-D unstable manifold");
  double d_eff = par.d_eff(), u_m = pair.minus.u;
  double mu_react = (u_m + std::sqrt(u_m * u_m + 4 * d_eff * par.k)) / (2 * d_eff);
  int ir = unstable[0], ik = unstable[1];
  if (std::abs(em.values[ik] - Cplx(mu_react, 0)) < std::abs(em.values[ir] - Cplx(mu_react, 0)))
    std::swap(ir, ik);
  Vec vk = em.vectors.col(ik).real().normalized();
  Vec vr = em.vectors.col(ir).real().normalized();
  if (vk.dot(s.plus - s.minus) < 0) vk = -vk;
  if (vr[2] + vr[3] < 0) vr = -vr;
  s.Vu = Mat(4, 2);
  s.Vu.col(0) = vk;
  s.Vu.col(1) = vr;

  EigPairs epj = eig(fd_jacobian(f, s.plus));
  CMat Vinv = epj.vectors.inverse();
  int ic = 0;
  for (int i = 1; i < 4; ++i)
    if (std::abs(epj.values[i]) < std::abs(epj.values[ic])) ic = i;
  if (std::abs(epj.values[ic]) > 1e-6)
    throw NumericalError("detonation_profile: unburned state lacks the ignition center mode");
  s.l_center = Vinv.row(ic).real().transpose();
  s.l_center /= s.l_center.norm();
  return s;
}

}  // namespace

Profile detonation_profile_seeded(const WavePair& pair, const DissipationParams& par,
                                  const IgnitionFunction& ign, std::shared_ptr<const Eos> eos,
                                  const Profile* seed, double tail_target) {
  par.validate();
  if (std::abs(par.q - pair.q) > 1e-12 * (1.0 + pair.q))
    throw ConfigError("detonation_profile: params.q must equal pair.q");
  DetonationClass dc = classify(pair, *eos);
  if (dc.kind != DetonationKind::strong)
    throw NumericalError("detonation_profile: pair is not a strong detonation");
  if (!(pair.minus.T >= ign.T_on && pair.plus.T <= ign.T_i))
    throw NumericalError(
        "detonation_profile: ignition window violated (need T+ <= T_i, T- >= T_on)");

  MsSetup st = ms_setup(pair, par, ign, *eos);
  auto f = [&](const Vec& y) { return detonation_rhs(*eos, pair, par, ign, y); };

  // seed curve: a previous profile (epsilon continuation) or the singular composite
  Profile comp;
  const Profile* sc = seed;
  if (!sc) {
    comp = znd_singular_composite(pair, par, ign, eos, par.epsilon);
    sc = &comp;
  }

  const double delta0 = 1e-6 * st.scale.norm();
  double x_lo = sc->x_min();
  while (scaled_dist(sc->state_at(x_lo), st.minus, st.scale) < delta0 * 0.5 &&
         x_lo < sc->x_max())
    x_lo += 0.25;
  while (scaled_dist(sc->state_at(x_lo), st.minus, st.scale) > delta0 * 2.0 &&
         x_lo > sc->x_min() - 400.0)
    x_lo -= 0.25;
  double x_hi = sc->x_max();

  // breakpoints: local linearization-rate integral capped per segment
  std::vector<double> bks{x_lo};
  {
    const double kappa = 3.0;
    double acc = 0, x = x_lo;
    const double dx = std::min(0.05, (x_hi - x_lo) / 400.0);
    while (x < x_hi) {
      double rate = 1.0;
      try {
        EigPairs e = eig(fd_jacobian(f, sc->state_at(x)));
        for (int i = 0; i < 4; ++i) rate = std::max(rate, std::abs(e.values[i].real()));
      } catch (const NumericalError&) {
      }
      acc += rate * dx;
      x += dx;
      if (acc >= kappa || x - bks.back() >= 3.0) {
        bks.push_back(std::min(x, x_hi));
        acc = 0;
      }
    }
    if (x_hi - bks.back() > 1e-9) bks.push_back(x_hi);
  }
  const int M = int(bks.size()) - 1;
  if (M < 2) throw NumericalError("detonation_profile: degenerate segment mesh");

  const int nun = 2 + 4 * (M - 1);
  Vec X(nun);
  {
    Vec dv = sc->state_at(x_lo) - st.minus;
    Eigen::Vector2d a0 = (st.Vu.transpose() * st.Vu).ldlt().solve(st.Vu.transpose() * dv);
    X[0] = a0[0];
    X[1] = a0[1];
    for (int j = 1; j < M; ++j) X.segment(2 + 4 * (j - 1), 4) = sc->state_at(bks[j]);
  }

  OdeOptions oflow;
  oflow.abs_tol = 1e-12;
  oflow.rel_tol = 1e-12;
  oflow.h_init = 1e-8;
  oflow.h_max = 0.2;
  auto flow = [&](const Vec& y0, double xa, double xb, Recorder* rec) -> Vec {
    auto obs = [&](double x, const Vec& y, const Vec& dy) {
      if (rec) (*rec)(x, y, dy);
      return true;
    };
    return integrate_rk45([&](double, const Vec& y, Vec& dy) { dy = f(y); }, y0, xa, xb,
                          oflow, obs);
  };

  // phase condition: pin the temperature at the breakpoint nearest the ignition midpoint
  const double T_mid = 0.5 * (ign.T_i + ign.T_on);
  int j_phase = 1;
  double T_phase_target = 0;
  {
    double best = 1e300;
    for (int j = 1; j < M; ++j) {
      Vec y = sc->state_at(bks[j]);
      double T = eos->T(pair.m / y[0], y[1]);
      if (std::abs(T - T_mid) < best) {
        best = std::abs(T - T_mid);
        j_phase = j;
        T_phase_target = T;
      }
    }
  }

  auto residual = [&](const Vec& Xv) -> Vec {
    Vec R(nun);
    Vec s_prev = st.minus + st.Vu * Eigen::Vector2d(Xv[0], Xv[1]);
    for (int j = 0; j < M; ++j) {
      Vec out = flow(s_prev, bks[j], bks[j + 1], nullptr);
      if (j < M - 1) {
        Vec s_next = Xv.segment(2 + 4 * j, 4);
        R.segment(4 * j, 4) = (out - s_next).cwiseQuotient(st.scale);
        s_prev = s_next;
      } else {
        R[4 * (M - 1)] = st.l_center.dot(out - st.plus) * 4.0 / st.scale.norm();
      }
    }
    Vec yph = Xv.segment(2 + 4 * (j_phase - 1), 4);
    R[nun - 1] = eos->T(pair.m / yph[0], yph[1]) - T_phase_target;
    return R;
  };

  Vec R;
  try {
    R = residual(X);
  } catch (const NumericalError&) {
    throw NumericalError("detonation_profile: seed outside the Newton basin");
  }
  double rn = R.cwiseAbs().maxCoeff();
  for (int it = 0; it < 50 && rn > 1e-10; ++it) {
    // block-bidiagonal Jacobian: each unknown touches one segment flow map, so the
    // Newton matrix costs 5M+2 segment integrations instead of O(M^2)
    Mat J = Mat::Zero(nun, nun);
    Vec s0 = st.minus + st.Vu * Eigen::Vector2d(X[0], X[1]);
    std::vector<Vec> svec(M);
    svec[0] = s0;
    for (int j = 1; j < M; ++j) svec[j] = X.segment(2 + 4 * (j - 1), 4);
    std::vector<Vec> phi(M);
    for (int j = 0; j < M; ++j) phi[j] = flow(svec[j], bks[j], bks[j + 1], nullptr);

    auto dflow = [&](int j, const Vec& dir, double h) {
      Vec fp = flow(svec[j] + h * dir, bks[j], bks[j + 1], nullptr);
      Vec fm = flow(svec[j] - h * dir, bks[j], bks[j + 1], nullptr);
      return Vec((fp - fm) / (2 * h));
    };
    // columns for a (segment 0)
    for (int c = 0; c < 2; ++c) {
      double h = 1e-6 * std::max(1.0, std::abs(X[c]));
      Vec d = dflow(0, st.Vu.col(c), h);
      if (M > 1)
        J.block(0, c, 4, 1) = d.cwiseQuotient(st.scale);
      else
        J(0, c) = st.l_center.dot(d) * 4.0 / st.scale.norm();
    }
    // columns for interior states s_j
    for (int j = 1; j < M; ++j) {
      for (int c = 0; c < 4; ++c) {
        double h = 1e-6 * std::max(1.0, std::abs(svec[j][c]));
        Vec e = Vec::Zero(4);
        e[c] = 1.0;
        Vec d = dflow(j, e, h);
        int col = 2 + 4 * (j - 1) + c;
        if (j < M - 1)
          J.block(4 * j, col, 4, 1) = d.cwiseQuotient(st.scale);
        else
          J(4 * (M - 1), col) = st.l_center.dot(d) * 4.0 / st.scale.norm();
        J(4 * (j - 1) + c, col) = -1.0 / st.scale[c];  // -I block of the previous match
      }
    }
    // phase row: analytic d/d(u,e) of T(m/u, e)
    {
      Vec yph = svec[j_phase];
      double rho = pair.m / yph[0];
      double Trho = eos->T_rho(rho, yph[1]), Te = eos->T_e(rho, yph[1]);
      J(nun - 1, 2 + 4 * (j_phase - 1) + 0) = Trho * (-pair.m / (yph[0] * yph[0]));
      J(nun - 1, 2 + 4 * (j_phase - 1) + 1) = Te;
    }
    Vec dX = J.fullPivLu().solve(R);
    double lam = 1.0;
    bool stepped = false;
    for (int bt = 0; bt < 16; ++bt) {
      Vec Xn = X - lam * dX;
      try {
        Vec Rn = residual(Xn);
        double rnn = Rn.cwiseAbs().maxCoeff();
        bool accept = rnn < rn * (1.0 - 0.25 * lam) || rnn < 1e-10 ||
                      (bt >= 6 && rnn < rn * 0.999);
        if (accept) {
          X = Xn;
          R = Rn;
          rn = rnn;
          stepped = true;
          break;
        }
      } catch (const NumericalError&) {
      }
      lam *= 0.5;
    }
    if (!stepped)
      throw NumericalError("detonation_profile: Newton stalled (residual " +
                           std::to_string(rn) + ")");
    if (std::getenv("DETONA_MS_DEBUG"))
      fprintf(stderr, "  [ms] it=%d rn=%.3e (M=%d)\n", it, rn, M);
  }
  if (rn > 1e-8)
    throw NumericalError("detonation_profile: no connection (multiple-shooting residual " +
                         std::to_string(rn) + ")");

  // assemble the orbit from the converged segments, then extend into the plus tail
  Recorder rec;
  Vec s_prev = st.minus + st.Vu * Eigen::Vector2d(X[0], X[1]);
  for (int j = 0; j < M; ++j) {
    Recorder part;
    Vec out = flow(s_prev, bks[j], bks[j + 1], &part);
    size_t start = (j == 0) ? 0 : 1;
    for (size_t i = start; i < part.xs.size(); ++i)
      rec(part.xs[i], part.ys[i], part.dys[i]);
    s_prev = (j < M - 1) ? Vec(X.segment(2 + 4 * j, 4)) : out;
  }
  {
    double dist = scaled_dist(s_prev, st.plus, st.scale);
    double x = rec.xs.back();
    int guard = 0;
    while (dist > tail_target && guard++ < 40) {
      double x2 = x + 5.0;
      Recorder part;
      Vec out = flow(s_prev, x, x2, &part);
      for (size_t i = 1; i < part.xs.size(); ++i) rec(part.xs[i], part.ys[i], part.dys[i]);
      double dnew = scaled_dist(out, st.plus, st.scale);
      if (dnew > dist) {  // residual noise taking over; truncate at the closest point
        size_t best = 0;
        double dmin = 1e300;
        for (size_t i = 0; i < rec.xs.size(); ++i) {
          double di = scaled_dist(rec.ys[i], st.plus, st.scale);
          if (di < dmin) {
            dmin = di;
            best = i;
          }
        }
        rec.xs.resize(best + 1);
        rec.ys.resize(best + 1);
        rec.dys.resize(best + 1);
        dist = dmin;
        break;
      }
      s_prev = out;
      x = x2;
      dist = dnew;
    }
    if (dist > kTolBc)
      throw NumericalError("detonation_profile: endpoint error above tol_bc (" +
                           std::to_string(dist) + ")");
  }

  Profile p;
  p.kind = ProfileKind::detonation;
  p.eos = eos;
  p.pair = pair;
  p.nu = par.nu_eff();
  p.theta = par.theta_eff();
  p.d = par.d_eff();
  p.k = par.k;
  p.q = par.q;
  p.ign = ign;
  p.end_minus = st.minus;
  p.end_plus = st.plus;
  p.shoot_angle = std::atan2(X[1], X[0]);
  double x0 = 0.5 * (rec.xs.front() + rec.xs.back());
  for (size_t i = 0; i + 1 < rec.xs.size(); ++i) {
    double Ta = eos->T(pair.m / rec.ys[i][0], rec.ys[i][1]) - T_mid;
    double Tb = eos->T(pair.m / rec.ys[i + 1][0], rec.ys[i + 1][1]) - T_mid;
    if (Ta * Tb <= 0 && Ta != Tb) {
      x0 = rec.xs[i] + (rec.xs[i + 1] - rec.xs[i]) * Ta / (Ta - Tb);
      break;
    }
  }
  finalize_profile(p, std::move(rec), x0);
  return p;
}

Profile detonation_profile(const WavePair& pair, const DissipationParams& par,
                           const IgnitionFunction& ign, std::shared_ptr<const Eos> eos,
                           double tail_target) {
  // composite-seeded solve, with a bridge continuation in epsilon when the composite is
  // outside the Newton basin (very large epsilon: no scale separation; very small: the
  // basin narrows with the layer)
  try {
    return detonation_profile_seeded(pair, par, ign, eos, nullptr, tail_target);
  } catch (const NumericalError&) {
  }
  DissipationParams cur = par;
  Profile p;
  bool have = false;
  for (double eps0 : {0.05, 0.1, 0.025, 0.2}) {
    cur.epsilon = eps0;
    try {
      p = detonation_profile_seeded(pair, cur, ign, eos, nullptr, tail_target);
      have = true;
      break;
    } catch (const NumericalError&) {
    }
  }
  if (!have) throw NumericalError("detonation_profile: no connection (all seeds failed)");
  double target = par.epsilon;
  double factor = 2.0;
  while (std::abs(std::log(cur.epsilon / target)) > 1e-12) {
    double eps_next = cur.epsilon > target ? std::max(target, cur.epsilon / factor)
                                           : std::min(target, cur.epsilon * factor);
    DissipationParams trial = par;
    trial.epsilon = eps_next;
    try {
      p = detonation_profile_seeded(pair, trial, ign, eos, &p, tail_target);
      cur.epsilon = eps_next;
      factor = std::min(2.0, factor * 1.3);
    } catch (const NumericalError&) {
      factor = std::sqrt(factor);
      if (factor < 1.001)
        throw NumericalError("detonation_profile: continuation stalled at epsilon = " +
                             std::to_string(cur.epsilon));
    }
  }
  return p;
}

Profile detonation_profile_continued(const WavePair& pair, const DissipationParams& par,
                                     const IgnitionFunction& ign,
                                     std::shared_ptr<const Eos> eos) {
  return detonation_profile(pair, par, ign, std::move(eos));
}

Profile isentropic_profile(const IsentropicLaw& law, double rho_plus, double r, double nu,
                           double tail_target) {
  if (r <= 1.0) throw ConfigError("isentropic_profile: r > 1 required");
  double rho_minus = r * rho_plus;
  double m2 = (law.p(rho_minus) - law.p(rho_plus)) / (1.0 / rho_plus - 1.0 / rho_minus);
  if (m2 <= 0) throw NumericalError("isentropic_profile: no real flux");
  double m = -std::sqrt(m2);

  Profile p;
  p.kind = ProfileKind::isentropic;
  p.law = law;
  p.nu = nu;
  p.pair.m = m;
  p.pair.q = 0;
  // store (rho, u) endpoint data in the pair's GasState slots that matter downstream
  p.pair.minus.rho = rho_minus;
  p.pair.minus.u = m / rho_minus;
  p.pair.minus.m = m;
  p.pair.minus.p = law.p(rho_minus);
  p.pair.minus.c = law.c(rho_minus);
  p.pair.plus.rho = rho_plus;
  p.pair.plus.u = m / rho_plus;
  p.pair.plus.m = m;
  p.pair.plus.p = law.p(rho_plus);
  p.pair.plus.c = law.c(rho_plus);
  p.end_minus = Vec{{m / rho_minus}};
  p.end_plus = Vec{{m / rho_plus}};

  double C_mom = m * p.pair.minus.u + law.p(rho_minus);
  auto f = [&](const Vec& y) { return Vec{{isentropic_rhs(law, m, C_mom, nu, y[0])}}; };
  Vec scale = amplitude_scale(p.end_plus, p.end_minus);
  // scalar phase space: the unstable direction at -inf is the segment toward u_plus
  double h = 1e-7 * std::abs(p.end_minus[0]);
  double fp = (f(Vec{{p.end_minus[0] + h}})[0] - f(Vec{{p.end_minus[0] - h}})[0]) / (2 * h);
  if (fp <= 0) throw NumericalError("isentropic_profile: -inf state not repelling");
  double dir = (p.end_plus[0] > p.end_minus[0]) ? 1.0 : -1.0;
  Vec y0{{p.end_minus[0] + dir * tail_target * scale[0]}};

  OdeOptions opt;
  opt.h_init = 1e-6;
  opt.h_max = 0.2;  // node spacing bounds the Hermite interpolation residual
  Recorder rec;
  bool converged = false;
  auto obs = [&](double x, const Vec& y, const Vec& dy) {
    rec(x, y, dy);
    if (scaled_dist(y, p.end_plus, scale) <= tail_target) {
      converged = true;
      return false;
    }
    return x < 4000.0;
  };
  integrate_rk45([&](double, const Vec& y, Vec& dy) { dy = f(y); }, y0, 0.0, 4000.0, opt, obs);
  if (!converged) throw NumericalError("isentropic_profile: no connection found");
  finalize_profile(p, std::move(rec),
                   crossing_x(rec, 0, 0.5 * (p.end_plus[0] + p.end_minus[0])));
  return p;
}

// ---------------------------------------------------------------------------
// ZND composite

double znd_trough_T(double gamma, double M, double u_hat) {
  return u_hat * (1.0 + gamma * M * M) - gamma * M * M * u_hat * u_hat;
}

double znd_plane_residual(double gamma, double M, double q_hat, double u_hat, double T_hat,
                          double Z) {
  return T_hat * (gamma + 1) / (2 * gamma) + q_hat * Z +
         u_hat * (gamma - 1) / (2 * gamma) * (1 + gamma * M * M) - 1.0 -
         (gamma - 1) * M * M / 2.0;
}

CBranchPoints znd_branch_points(double gamma, double M, double q_hat, double Z) {
  double a = M * M;
  double b = -(2.0 / (gamma + 1)) * (1 + gamma * M * M);
  double c = (2.0 / (gamma + 1)) * (1 + 0.5 * (gamma - 1) * M * M - q_hat * Z);
  double disc = b * b - 4 * a * c;
  CBranchPoints out;
  if (disc < 0) return out;
  out.real = true;
  double s = std::sqrt(disc);
  out.u_strong = (-b - s) / (2 * a);
  out.u_weak = (-b + s) / (2 * a);
  out.T_strong = znd_trough_T(gamma, M, out.u_strong);
  out.T_weak = znd_trough_T(gamma, M, out.u_weak);
  return out;
}

double znd_vertex_z(double gamma, double M, double q_hat) {
  if (q_hat <= 0) return -std::numeric_limits<double>::infinity();
  double a = M * M;
  double b = -(2.0 / (gamma + 1)) * (1 + gamma * M * M);
  double c0 = (2.0 / (gamma + 1)) * (1 + 0.5 * (gamma - 1) * M * M);
  // disc(Z) = b^2 - 4a c0 + 4a (2/(gamma+1)) q_hat Z = 0
  return (4 * a * c0 - b * b) / (4 * a * (2.0 / (gamma + 1)) * q_hat);
}

Profile znd_singular_composite(const WavePair& pair, const DissipationParams& par,
                               const IgnitionFunction& ign, std::shared_ptr<const Eos> eos,
                               double layer_scale, ZndCorner* corner) {
  if (!eos->is_ideal()) throw ConfigError("znd_singular_composite: ideal gas only");
  const auto& ig = static_cast<const IdealPolytropic&>(*eos);
  double gamma = ig.gamma();
  double M = mach_number(pair.minus);
  double q_hat = pair.q / (gamma * ig.cv() * pair.minus.T);
  double u_minus = pair.minus.u, T_minus = pair.minus.T;

  double zv = znd_vertex_z(gamma, M, q_hat);
  if (zv >= 0 && std::abs(zv) > 1e-8)
    throw NumericalError("znd_singular_composite: branch-selection failure (vertex at Z >= 0)");

  CBranchPoints at1 = znd_branch_points(gamma, M, q_hat, 1.0);
  if (!at1.real) throw NumericalError("znd_singular_composite: no branch points at Z=1");
  ZndCorner corn;
  corn.u_neumann = at1.u_strong * u_minus;
  corn.T_neumann = at1.T_strong * T_minus;
  corn.u_unburned = at1.u_weak * u_minus;
  corn.T_unburned = at1.T_weak * T_minus;
  corn.z_vertex = zv;
  if (corner) *corner = corn;
  if (std::abs(corn.u_unburned - pair.plus.u) > 1e-6 * std::abs(pair.plus.u))
    throw NumericalError("znd_singular_composite: Z=1 branch point differs from the pair");

  // slow flow on the strong branch: dZ/dx = k Z phi(T)/|u|, integrated as dx/dZ
  double a = M * M;
  double b = -(2.0 / (gamma + 1)) * (1 + gamma * M * M);
  double dc_dZ = -(2.0 / (gamma + 1)) * q_hat;
  auto u_hat_of = [&](double Z) { return znd_branch_points(gamma, M, q_hat, Z).u_strong; };
  auto slow_core = [&](double Z) {
    double uh = u_hat_of(Z);
    double Th = znd_trough_T(gamma, M, uh);
    return Vec{{uh * u_minus, ig.cv() * Th * T_minus, Z, Z}};
  };
  auto slow_xrate = [&](double Z) {
    double uh = u_hat_of(Z);
    double Th = znd_trough_T(gamma, M, uh);
    double phi = ign.phi(Th * T_minus);
    if (phi <= 0)
      throw NumericalError("znd_singular_composite: slow flow stalls below ignition");
    return -par.k * Z * phi / (uh * u_minus);  // dZ/dx > 0
  };

  Profile p;
  p.kind = ProfileKind::detonation;
  p.znd_composite = true;
  p.eos = eos;
  p.pair = pair;
  p.nu = layer_scale * par.nu;
  p.theta = layer_scale * par.theta;
  p.d = layer_scale * par.d;
  p.k = par.k;
  p.q = pair.q;
  p.ign = ign;
  p.end_minus = Vec{{pair.minus.u, pair.minus.e, 0.0, 0.0}};
  p.end_plus = Vec{{pair.plus.u, pair.plus.e, 1.0, 1.0}};

  const double z_min = 1e-8;
  const int n_slow = 2000;
  std::vector<double> zs(n_slow);
  for (int i = 0; i < n_slow; ++i)
    zs[i] = std::exp(std::log(z_min) + (std::log(1.0 - 1e-9) - std::log(z_min)) *
                                            double(i) / (n_slow - 1));
  std::vector<double> x_of_z(n_slow);
  x_of_z[n_slow - 1] = 0.0;
  for (int i = n_slow - 1; i > 0; --i) {
    double Zb = zs[i], Za = zs[i - 1];
    double fa = 1.0 / slow_xrate(Za), fb = 1.0 / slow_xrate(Zb);
    double Zm = 0.5 * (Za + Zb);
    double fm = 1.0 / slow_xrate(Zm);
    x_of_z[i - 1] = x_of_z[i] - (Zb - Za) * (fa + 4 * fm + fb) / 6.0;  // Simpson
  }
  for (int i = 0; i < n_slow; ++i) {
    double Z = zs[i];
    Vec y = slow_core(Z);
    double rate = slow_xrate(Z);
    double uh = u_hat_of(Z);
    double duh = -dc_dZ / (2 * a * uh + b);
    double dTh = (1 + gamma * M * M - 2 * gamma * M * M * uh) * duh;
    Vec dy{{duh * u_minus * rate, ig.cv() * dTh * T_minus * rate, rate, rate}};
    p.xs.push_back(x_of_z[i]);
    p.ys.push_back(y);
    p.dys.push_back(dy);
  }

  // fast layer at Z = 1: the pure gas shock between the unburned state and the Neumann
  // state, dissipation scaled by layer_scale
  GasState neumann = make_state(*eos, pair.m / corn.u_neumann, corn.u_neumann,
                                ig.cv() * corn.T_neumann);
  WavePair layer_pair;
  layer_pair.plus = pair.plus;
  layer_pair.minus = neumann;
  layer_pair.m = pair.m;
  layer_pair.q = 0;
  Profile layer = ns_shock_profile(layer_pair, layer_scale * par.nu, layer_scale * par.theta,
                                   eos, 1e-6);
  double x_shift = p.xs.back() - layer.xs.front() + 1e-9;
  for (size_t i = 0; i < layer.xs.size(); ++i) {
    p.xs.push_back(layer.xs[i] + x_shift);
    p.ys.push_back(Vec{{layer.ys[i][0], layer.ys[i][1], 1.0, 1.0}});
    p.dys.push_back(Vec{{layer.dys[i][0], layer.dys[i][1], 0.0, 0.0}});
  }

  // recenter on the ignition cross-section
  double T_mid = 0.5 * (ign.T_i + ign.T_on);
  double x0 = p.xs.back();
  for (size_t i = 0; i + 1 < p.xs.size(); ++i) {
    double Ta = eos->T(pair.m / p.ys[i][0], p.ys[i][1]) - T_mid;
    double Tb = eos->T(pair.m / p.ys[i + 1][0], p.ys[i + 1][1]) - T_mid;
    if (Ta * Tb <= 0 && Ta != Tb) {
      x0 = p.xs[i] + (p.xs[i + 1] - p.xs[i]) * Ta / (Ta - Tb);
      break;
    }
  }
  recenter(p.xs, x0);

  // tails: reactive rate k/|u_-| at -inf, layer linearization at +inf
  auto f = [&](const Vec& y) { return p.rhs(y); };
  p.tail_minus = make_tail(fd_jacobian(f, p.end_minus), Vec(p.ys.front() - p.end_minus), true);
  p.tail_plus = make_tail(fd_jacobian(f, p.end_plus), Vec(p.ys.back() - p.end_plus), false);
  Vec dm = p.ys.front() - p.end_minus, dp = p.ys.back() - p.end_plus;
  p.tail_dir_minus = dm / std::max(dm.norm(), 1e-300);
  p.tail_dir_plus = dp / std::max(dp.norm(), 1e-300);
  fit_tails(p);
  return p;
}

std::pair<double, double> tail_decay_fit(const Profile& p) {
  return {p.alpha_minus, p.alpha_plus};
}

RestPointSpectrum rest_point_spectrum(const Profile& p) {
  auto f = [&](const Vec& y) { return p.rhs(y); };
  RestPointSpectrum s;
  s.minus = eig(fd_jacobian(f, p.end_minus)).values;
  s.plus = eig(fd_jacobian(f, p.end_plus)).values;
  return s;
}

}  // namespace detona
