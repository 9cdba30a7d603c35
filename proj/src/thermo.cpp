#include "detona/thermo.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace detona {

double Eos::p_rho(double rho, double e) const {
  double h = fd_step(rho);
  return (p(rho + h, e) - p(rho - h, e)) / (2 * h);
}
double Eos::p_e(double rho, double e) const {
  double h = fd_step(e);
  return (p(rho, e + h) - p(rho, e - h)) / (2 * h);
}
double Eos::T_rho(double rho, double e) const {
  double h = fd_step(rho);
  return (T(rho + h, e) - T(rho - h, e)) / (2 * h);
}
double Eos::T_e(double rho, double e) const {
  double h = fd_step(e);
  return (T(rho, e + h) - T(rho, e - h)) / (2 * h);
}

double Eos::e_from_T(double rho, double T_target) const {
  double e = std::max(T_target, kAdmissibleFloor);
  for (int it = 0; it < 80; ++it) {
    double r = T(rho, e) - T_target;
    double dTde = T_e(rho, e);
    if (dTde <= 0) throw NumericalError("e_from_T: T not increasing in e");
    double de = r / dTde;
    e -= de;
    if (e <= 0) e = kAdmissibleFloor;
    if (std::abs(de) < 1e-14 * std::max(1.0, e)) return e;
  }
  throw NumericalError("e_from_T: Newton did not converge");
}

TableEos::TableEos(std::vector<double> rho_grid, std::vector<double> e_grid, Mat p_tab, Mat T_tab)
    : rho_(std::move(rho_grid)), e_(std::move(e_grid)), p_(std::move(p_tab)), T_(std::move(T_tab)) {
  if (rho_.size() < 2 || e_.size() < 2) throw ConfigError("table EOS needs at least a 2x2 grid");
  if (p_.rows() != static_cast<Eigen::Index>(rho_.size()) ||
      p_.cols() != static_cast<Eigen::Index>(e_.size()) || T_.rows() != p_.rows() ||
      T_.cols() != p_.cols())
    throw ConfigError("table EOS dimensions mismatch");
}

TableEos TableEos::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open EOS table: " + path);
  std::vector<std::array<double, 4>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::array<double, 4> r{};
    std::stringstream ss(line);
    std::string tok;
    for (int i = 0; i < 4; ++i) {
      if (!std::getline(ss, tok, ',')) throw ConfigError("EOS table: bad row: " + line);
      r[i] = std::stod(tok);
    }
    rows.push_back(r);
  }
  std::vector<double> rg, eg;
  for (auto& r : rows) {
    if (rg.empty() || r[0] > rg.back()) rg.push_back(r[0]);
  }
  size_t ne = rows.size() / rg.size();
  if (rg.size() * ne != rows.size()) throw ConfigError("EOS table: not a rectangular grid");
  for (size_t j = 0; j < ne; ++j) eg.push_back(rows[j][1]);
  Mat pt(rg.size(), ne), Tt(rg.size(), ne);
  for (size_t i = 0; i < rg.size(); ++i)
    for (size_t j = 0; j < ne; ++j) {
      pt(i, j) = rows[i * ne + j][2];
      Tt(i, j) = rows[i * ne + j][3];
    }
  return TableEos(rg, eg, pt, Tt);
}

double TableEos::interp_(const Mat& tab, double rho, double e) const {
  auto locate = [](const std::vector<double>& g, double x) {
    if (x < g.front() || x > g.back()) throw NumericalError("table EOS: query out of range");
    size_t lo = 0, hi = g.size() - 1;
    while (hi - lo > 1) {
      size_t mid = (lo + hi) / 2;
      if (g[mid] <= x)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  };
  size_t i = locate(rho_, rho), j = locate(e_, e);
  double tx = (rho - rho_[i]) / (rho_[i + 1] - rho_[i]);
  double ty = (e - e_[j]) / (e_[j + 1] - e_[j]);
  return (1 - tx) * (1 - ty) * tab(i, j) + tx * (1 - ty) * tab(i + 1, j) +
         (1 - tx) * ty * tab(i, j + 1) + tx * ty * tab(i + 1, j + 1);
}

double TableEos::e_from_T(double rho, double T_target) const {
  double lo = e_.front(), hi = e_.back();
  if ((T(rho, lo) - T_target) * (T(rho, hi) - T_target) > 0)
    throw NumericalError("table e_from_T: target not bracketed");
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if ((T(rho, lo) - T_target) * (T(rho, mid) - T_target) <= 0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

GasState make_state(const Eos& eos, double rho, double u, double e) {
  if (rho < kAdmissibleFloor || e < kAdmissibleFloor)
    throw NumericalError("inadmissible state: need rho, e >= 1e-12");
  GasState s;
  s.rho = rho;
  s.u = u;
  s.e = e;
  s.m = rho * u;
  s.p = eos.p(rho, e);
  s.T = eos.T(rho, e);
  s.c = sound_speed(rho, e, eos);
  s.E = 0.5 * u * u + e;
  s.En = rho * s.E;
  return s;
}

double sound_speed(double rho, double e, const Eos& eos) {
  double c2 = eos.p_rho(rho, e) + eos.p(rho, e) * eos.p_e(rho, e) / (rho * rho);
  if (c2 < 0) throw NumericalError("non-hyperbolic state: c^2 < 0");
  return std::sqrt(c2);
}

double mach_number(const GasState& s) {
  if (s.c <= 0) throw NumericalError("mach_number: c = 0");
  return -s.m / (s.rho * s.c);
}

Vec3 conserved(const GasState& s) { return Vec3(s.rho, s.m, s.En); }

GasState state_from_conserved(const Eos& eos, const Vec3& U) {
  double rho = U[0];
  if (rho < kAdmissibleFloor) throw NumericalError("state_from_conserved: rho too small");
  double u = U[1] / rho;
  double e = U[2] / rho - 0.5 * u * u;
  return make_state(eos, rho, u, e);
}

Vec3 euler_flux(const Eos& eos, const Vec3& U) {
  double rho = U[0], m = U[1], En = U[2];
  double u = m / rho;
  double e = En / rho - 0.5 * u * u;
  double p = eos.p(rho, e);
  return Vec3(m, m * u + p, u * (En + p));
}

Mat3 flux_jacobian(const GasState& s, const Eos& eos) {
  double rho = s.rho, u = s.u, e = s.e, p = s.p, E = s.E;
  double prho = eos.p_rho(rho, e), pe = eos.p_e(rho, e);
  double e_rho = (u * u - E) / rho;  // d e / d rho at fixed (m, En)
  Mat3 A;
  A << 0, 1, 0,  //
      -u * u + prho + pe * e_rho, 2 * u - u * pe / rho, pe / rho,
      u * (-E - p / rho + prho + pe * e_rho), E + p / rho - u * u * pe / rho, u + u * pe / rho;
  return A;
}

std::array<EigenTriple, 3> eigen_triples(const GasState& s, const Eos& eos) {
  double rho = s.rho, u = s.u, e = s.e, p = s.p, c = s.c;
  if (c <= 0) throw NumericalError("repeated eigenvalues: c = 0");
  double prho = eos.p_rho(rho, e), pe = eos.p_e(rho, e);
  std::array<EigenTriple, 3> t;
  t[0].a = u - c;
  t[1].a = u;
  t[2].a = u + c;
  t[0].r = Vec3(1, u - c, u * u / 2 - c * u + p / rho + e);
  t[1].r = Vec3(1, u, u * u / 2);
  t[2].r = Vec3(1, u + c, u * u / 2 + c * u + p / rho + e);
  t[0].l << prho - pe * e / rho + c * u + pe * u * u / (2 * rho), -c - pe * u / rho, pe / rho;
  t[1].l << -e - p / rho + u * u / 2, -u, 1;
  t[2].l << prho - pe * e / rho - c * u + pe * u * u / (2 * rho), c - pe * u / rho, pe / rho;
  return t;
}

Mat3 ns_viscosity_matrix(const Eos& eos, const Vec3& U, double nu, double theta) {
  double rho = U[0], m = U[1], En = U[2];
  double u = m / rho;
  double e = En / rho - 0.5 * u * u;
  double Trho = eos.T_rho(rho, e), Te = eos.T_e(rho, e);
  double e_rho = -En / (rho * rho) + m * m / (rho * rho * rho);
  Mat3 B = Mat3::Zero();
  B(1, 0) = -nu * m / (rho * rho);
  B(1, 1) = nu / rho;
  B(2, 0) = theta * (Trho + Te * e_rho) - nu * m * m / (rho * rho * rho);
  B(2, 1) = -theta * Te * m / (rho * rho) + nu * m / (rho * rho);
  B(2, 2) = theta * Te / rho;
  return B;
}

Tensor333 ns_viscosity_jacobian(const Eos& eos, const Vec3& U, double nu, double theta) {
  Tensor333 dB;
  for (int j = 0; j < 3; ++j) {
    double h = 1e-6 * std::max(1.0, std::abs(U[j]));
    Vec3 Up = U, Um = U;
    Up[j] += h;
    Um[j] -= h;
    dB[j] = (ns_viscosity_matrix(eos, Up, nu, theta) - ns_viscosity_matrix(eos, Um, nu, theta)) /
            (2 * h);
  }
  return dB;
}

double ideal_entropy(const IdealPolytropic& eos, const Vec3& U) {
  double rho = U[0], m = U[1], En = U[2];
  double e = En / rho - 0.5 * m * m / (rho * rho);
  double s = eos.cv() * (std::log(e) - eos.gruneisen() * std::log(rho));
  return -rho * s;
}

Mat3 ideal_entropy_hessian(const IdealPolytropic& eos, const Vec3& U) {
  Mat3 H;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double hi = 1e-5 * std::max(1.0, std::abs(U[i]));
      double hj = 1e-5 * std::max(1.0, std::abs(U[j]));
      Vec3 pp = U, pm = U, mp = U, mm = U;
      pp[i] += hi;
      pp[j] += hj;
      pm[i] += hi;
      pm[j] -= hj;
      mp[i] -= hi;
      mp[j] += hj;
      mm[i] -= hi;
      mm[j] -= hj;
      H(i, j) = (ideal_entropy(eos, pp) - ideal_entropy(eos, pm) - ideal_entropy(eos, mp) +
                 ideal_entropy(eos, mm)) /
                (4 * hi * hj);
    }
  return 0.5 * (H + H.transpose());
}

}  // namespace detona
