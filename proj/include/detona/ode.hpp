#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>

#include "detona/linalg.hpp"

namespace detona {

struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double h_init = 1e-4;
  double h_min = 1e-14;
  double h_max = 1.0;
  std::size_t max_steps = 20'000'000;
  bool allow_stiff_fallback = true;
};

namespace ode_detail {

template <class VecT>
double error_norm(const VecT& err, const VecT& y0, const VecT& y1, double abs_tol, double rel_tol) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    double sc = abs_tol + rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    m = std::max(m, std::abs(err[i]) / sc);
  }
  return m;
}

}  // namespace ode_detail

// Dormand-Prince 5(4) embedded pair. RHS signature: void f(double x, const VecT& y, VecT& dy).
// Direction of integration follows sign(x1 - x0). The observer sees every accepted step,
// including the initial point; return false from it to stop early.
template <class VecT, class RHS,
          class Observer = std::function<bool(double, const VecT&, const VecT&)>>
VecT integrate_rk45(
    RHS&& f, VecT y, double x0, double x1, const OdeOptions& opt = {},
    Observer&& observer = [](double, const VecT&, const VecT&) { return true; }) {
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                      a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                      b6 = 11.0 / 84;
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                      e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double dir = (x1 >= x0) ? 1.0 : -1.0;
  double x = x0;
  double h = dir * std::min(opt.h_init, opt.h_max);
  VecT k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), k5(y.size()), k6(y.size()),
      k7(y.size()), ytmp(y.size()), ynew(y.size()), err(y.size());

  f(x, y, k1);
  if (!observer(x, y, k1)) return y;

  for (std::size_t step = 0; step < opt.max_steps; ++step) {
    if (dir * (x - x1) >= 0) return y;
    if (dir * (x + h - x1) > 0) h = x1 - x;
    if (std::abs(h) < opt.h_min)
      throw NumericalError("integrate_rk45: step size underflow at x=" + std::to_string(x));

    ytmp = y + h * a21 * k1;
    f(x + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    f(x + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(x + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(x + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(x + h, ytmp, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(x + h, ynew, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double en = ode_detail::error_norm(err, y, ynew, opt.abs_tol, opt.rel_tol);
    if (en <= 1.0) {
      x += h;
      y = ynew;
      k1 = k7;  // FSAL
      if (!observer(x, y, k1)) return y;
      double fac = (en == 0.0) ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(en, -0.2)));
      h = dir * std::min(std::abs(h) * fac, opt.h_max);
    } else {
      double fac = std::max(0.2, 0.9 * std::pow(en, -0.2));
      h *= fac;
    }
  }
  throw NumericalError("integrate_rk45: max step count exceeded");
}

// TR-BDF2 with finite-difference Jacobians; A-stable fallback for stiff stretches of
// the profile ODE. Fixed error control on the embedded difference.
template <class RHS>
Vec integrate_trbdf2(RHS&& f, Vec y, double x0, double x1, const OdeOptions& opt,
                     const std::function<bool(double, const Vec&, const Vec&)>& observer) {
  const double gamma = 2.0 - std::sqrt(2.0);
  const double dir = (x1 >= x0) ? 1.0 : -1.0;
  const Eigen::Index n = y.size();
  double x = x0;
  double h = dir * std::min(opt.h_init, opt.h_max);
  Vec fy(n);
  f(x, y, fy);
  if (!observer(x, y, fy)) return y;

  auto jac = [&](double xx, const Vec& yy, Mat& J) {
    Vec f0(n), f1(n), yp(yy);
    f(xx, yy, f0);
    for (Eigen::Index j = 0; j < n; ++j) {
      double hj = 1e-7 * std::max(1.0, std::abs(yy[j]));
      yp[j] = yy[j] + hj;
      f(xx, yp, f1);
      J.col(j) = (f1 - f0) / hj;
      yp[j] = yy[j];
    }
  };

  Mat J(n, n), W(n, n);
  for (std::size_t step = 0; step < opt.max_steps; ++step) {
    if (dir * (x - x1) >= 0) return y;
    if (dir * (x + h - x1) > 0) h = x1 - x;
    if (std::abs(h) < opt.h_min) throw NumericalError("integrate_trbdf2: step underflow");

    jac(x, y, J);
    W = Mat::Identity(n, n) - (gamma / 2) * h * J;
    Eigen::PartialPivLU<Mat> lu(W);

    // trapezoidal stage to x + gamma*h
    Vec yg = y, r(n), fg(n);
    bool ok = true;
    for (int it = 0; it < 12; ++it) {
      f(x + gamma * h, yg, fg);
      r = yg - y - (gamma / 2) * h * (fy + fg);
      Vec dy = lu.solve(r);
      yg -= dy;
      if (dy.cwiseAbs().maxCoeff() < 1e-13 * std::max(1.0, yg.cwiseAbs().maxCoeff())) break;
      if (it == 11) ok = false;
    }
    // BDF2 stage to x + h
    Vec y1 = yg, f1(n);
    const double w = (1 - gamma) / (2 - gamma), v = 1.0 / (gamma * (2 - gamma));
    for (int it = 0; it < 12 && ok; ++it) {
      f(x + h, y1, f1);
      r = y1 - v * yg + (v - 1) * y - w * h * f1;
      Vec dy = lu.solve(r);
      y1 -= dy;
      if (dy.cwiseAbs().maxCoeff() < 1e-13 * std::max(1.0, y1.cwiseAbs().maxCoeff())) break;
      if (it == 11) ok = false;
    }
    if (!ok) {
      h *= 0.5;
      continue;
    }
    // error estimate against trapezoid-extrapolated value
    f(x + h, y1, f1);
    Vec ytr = y + (h / 2) * (fy + f1);
    double en = ode_detail::error_norm(Vec(y1 - ytr), y, y1, std::max(opt.abs_tol, 1e-12),
                                       std::max(opt.rel_tol, 1e-9));
    if (en <= 1.0) {
      x += h;
      y = y1;
      fy = f1;
      if (!observer(x, y, fy)) return y;
      h = dir * std::min(std::abs(h) * std::min(3.0, std::max(0.3, 0.9 * std::pow(en + 1e-16, -1.0 / 3))),
                         opt.h_max);
    } else {
      h *= std::max(0.2, 0.9 * std::pow(en, -1.0 / 3));
    }
  }
  throw NumericalError("integrate_trbdf2: max step count exceeded");
}

}  // namespace detona
