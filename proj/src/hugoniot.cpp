#include "detona/hugoniot.hpp"

#include <cmath>
#include <vector>

namespace detona {

namespace {

// Internal energy at (rho, p_target) by inverting the EOS in e.
double e_from_p(const Eos& eos, double rho, double p_target, double e_guess) {
  if (eos.is_ideal()) {
    const auto& ig = static_cast<const IdealPolytropic&>(eos);
    return p_target / (ig.gruneisen() * rho);
  }
  double e = std::max(e_guess, kAdmissibleFloor);
  for (int it = 0; it < 100; ++it) {
    double r = eos.p(rho, e) - p_target;
    double pe = eos.p_e(rho, e);
    if (pe <= 0) throw NumericalError("e_from_p: p not increasing in e");
    double de = r / pe;
    e -= de;
    if (e <= 0) e = kAdmissibleFloor;
    if (std::abs(de) < 1e-15 * std::max(1.0, std::abs(e))) return e;
  }
  throw NumericalError("e_from_p: no convergence");
}

// Candidate burned state on the Rayleigh line at density rho.
GasState rayleigh_state(const Eos& eos, const GasState& plus, double m, double rho) {
  double p = plus.p - m * m * (1.0 / rho - 1.0 / plus.rho);
  if (p <= 0) throw NumericalError("rayleigh_state: negative pressure");
  double e = e_from_p(eos, rho, p, plus.e);
  return make_state(eos, rho, m / rho, e);
}

}  // namespace

double rayleigh_residual(const GasState& candidate, const GasState& plus, double m) {
  return candidate.p - plus.p + m * m * (1.0 / candidate.rho - 1.0 / plus.rho);
}

double hugoniot_residual(const GasState& candidate, const GasState& plus, double q,
                         double Y_minus) {
  double e_tilde = candidate.e + q * Y_minus;
  double e_tilde_plus = plus.e + q;  // Y_plus = 1
  return e_tilde - e_tilde_plus +
         0.5 * (candidate.p + plus.p) * (1.0 / candidate.rho - 1.0 / plus.rho);
}

EndstateRoots solve_endstates(const GasState& plus, double m, double q, const Eos& eos) {
  if (m >= 0) throw ConfigError("solve_endstates: 3-shock frame requires m < 0");
  auto H = [&](double rho) {
    return hugoniot_residual(rayleigh_state(eos, plus, m, rho), plus, q);
  };
  const double rho_lo = plus.rho * (1.0 + 1e-10);
  const double rho_hi_target = plus.rho * 80.0;
  const int n_scan = 1200;

  // Dense log-spaced scan for sign changes; table EOS may cut the range short.
  std::vector<double> grid, vals;
  grid.reserve(n_scan);
  for (int i = 0; i < n_scan; ++i) {
    double rho = rho_lo * std::pow(rho_hi_target / rho_lo, double(i) / (n_scan - 1));
    double v;
    try {
      v = H(rho);
    } catch (const NumericalError&) {
      break;
    }
    grid.push_back(rho);
    vals.push_back(v);
  }
  std::vector<double> roots;
  const double scale = std::max({plus.e, std::abs(q), m * m / (plus.rho * plus.rho)});
  for (size_t i = 0; i + 1 < grid.size(); ++i) {
    if (vals[i] == 0.0) {
      roots.push_back(grid[i]);
      continue;
    }
    if (vals[i] * vals[i + 1] < 0) {
      double lo = grid[i], hi = grid[i + 1];
      double flo = vals[i];
      for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = H(mid);
        if (flo * fm <= 0)
          hi = mid;
        else {
          lo = mid;
          flo = fm;
        }
      }
      double rho = 0.5 * (lo + hi);
      // one Newton polish
      for (int it = 0; it < 4; ++it) {
        double h = 1e-8 * rho;
        double d = (H(rho + h) - H(rho - h)) / (2 * h);
        if (d == 0) break;
        double step = H(rho) / d;
        if (rho - step <= plus.rho) break;
        rho -= step;
        if (std::abs(step) < 1e-15 * rho) break;
      }
      if (std::abs(H(rho)) < 1e-9 * scale) roots.push_back(rho);
    }
  }

  EndstateRoots out;
  if (q == 0.0) {
    out.weak = plus;  // trivial intersection at the base point
    if (!roots.empty()) out.strong = rayleigh_state(eos, plus, m, roots.back());
    return out;
  }
  if (roots.empty()) return out;
  if (roots.size() == 1) {
    out.strong = rayleigh_state(eos, plus, m, roots[0]);
    return out;
  }
  out.weak = rayleigh_state(eos, plus, m, roots.front());
  out.strong = rayleigh_state(eos, plus, m, roots.back());
  return out;
}

double chapman_jouguet_flux(const GasState& plus, double q, const Eos& eos) {
  if (q <= 0) throw ConfigError("chapman_jouguet_flux: requires q > 0");
  auto count = [&](double abs_m) {
    EndstateRoots r = solve_endstates(plus, -abs_m, q, eos);
    int n = 0;
    if (r.strong) ++n;
    if (r.weak) ++n;
    return n;
  };
  double lo = plus.rho * plus.c;  // sonic flux: below CJ for q > 0
  double hi = lo;
  bool found = false;
  for (int i = 0; i < 60; ++i) {
    hi *= 1.5;
    if (count(hi) == 2) {
      found = true;
      break;
    }
  }
  if (!found) throw NumericalError("chapman_jouguet_flux: bracketing failure");
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (count(mid) >= 2)
      hi = mid;
    else
      lo = mid;
    if ((hi - lo) < 1e-13 * hi) break;
  }
  return -hi;
}

DetonationClass classify(const WavePair& pair, const Eos& eos) {
  if (pair.plus.u >= 0 || pair.minus.u >= 0)
    throw NumericalError("classify: frame violates u(+-) < 0");
  auto tm = eigen_triples(pair.minus, eos);
  auto tp = eigen_triples(pair.plus, eos);
  double a2m = tm[1].a, a3m = tm[2].a, a3p = tp[2].a;
  DetonationClass dc;
  dc.mach_plus = mach_number(pair.plus);
  dc.mach_minus = mach_number(pair.minus);
  if (a3p >= 0 || a2m >= 0) {
    dc.kind = DetonationKind::none;
    return dc;
  }
  if (std::abs(a3m) <= 1e-9 * pair.minus.c)
    dc.kind = DetonationKind::chapman_jouguet;
  else if (a3m > 0)
    dc.kind = DetonationKind::strong;
  else
    dc.kind = DetonationKind::weak;
  return dc;
}

double claim2_check(const WavePair& pair) {
  // [e] + <p>[1/rho] = -q u_+/m; with rho_+ normalized to 1 the right side is -q, which is
  // also the mass-fraction form valid for unnormalized pairs.
  double je = pair.plus.e - pair.minus.e;
  double jinvrho = 1.0 / pair.plus.rho - 1.0 / pair.minus.rho;
  double pavg = 0.5 * (pair.plus.p + pair.minus.p);
  return std::abs(je + pavg * jinvrho + pair.q);
}

std::pair<double, double> compression_bounds(const WavePair& pair, const IdealPolytropic& eos) {
  double r = pair.minus.rho / pair.plus.rho;
  double bound = 1.0 + 2.0 / eos.gruneisen();
  if (!(r > 1.0 && r < bound))
    throw NumericalError("compression_bounds: pair violates 1 < r < 1 + 2/Gamma");
  return {r, bound};
}

Vec3 rh_residuals(const WavePair& pair) {
  const GasState &p = pair.plus, &mn = pair.minus;
  double m = pair.m;
  double scale = std::max(std::abs(m * m / p.rho), std::abs(p.p));
  double rh1 = (p.rho * p.u - mn.rho * mn.u);
  double rh2 = (m * m / p.rho + p.p) - (m * m / mn.rho + mn.p);
  // [m E + m p/rho] + q m [Y] with [Y] = 1; equals the paper's q u_+ once rho_+ = 1.
  double rh3 = m * (p.E + p.p / p.rho) - m * (mn.E + mn.p / mn.rho) + pair.q * m;
  return Vec3(rh1 / scale, rh2 / scale, rh3 / scale);
}

WavePair make_pair(const Eos& eos, const GasState& plus, double m, double q,
                   DetonationKind which) {
  EndstateRoots roots = solve_endstates(plus, m, q, eos);
  const std::optional<GasState>* pick =
      (which == DetonationKind::weak) ? &roots.weak : &roots.strong;
  if (!pick->has_value()) throw NumericalError("make_pair: requested root does not exist");
  WavePair pair;
  pair.plus = plus;
  pair.minus = **pick;
  pair.m = m;
  pair.q = q;
  return pair;
}

WavePair pair_from_compression(const IdealPolytropic& eos, const GasState& plus, double r,
                               double q) {
  if (r <= 1.0 || r >= 1.0 + 2.0 / eos.gruneisen())
    throw ConfigError("pair_from_compression: need 1 < r < 1 + 2/Gamma");
  double rho_m = r * plus.rho;
  double dinv = 1.0 / rho_m - 1.0 / plus.rho;  // negative
  double coef = 1.0 / (eos.gruneisen() * rho_m) + 0.5 * dinv;
  if (coef <= 0) throw NumericalError("pair_from_compression: compression beyond ideal bound");
  double p_m = (plus.e + q - 0.5 * plus.p * dinv) / coef;
  double m2 = (p_m - plus.p) / (1.0 / plus.rho - 1.0 / rho_m);
  if (m2 <= 0) throw NumericalError("pair_from_compression: no real flux");
  double m = -std::sqrt(m2);
  GasState plus_mv = make_state(eos, plus.rho, m / plus.rho, plus.e);
  GasState minus = make_state(eos, rho_m, m / rho_m, p_m / (eos.gruneisen() * rho_m));
  WavePair pair;
  pair.plus = plus_mv;
  pair.minus = minus;
  pair.m = m;
  pair.q = q;
  return pair;
}

}  // namespace detona
