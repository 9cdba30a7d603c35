#include "detona/sweep.hpp"

#include <random>

#include "detona/parallel.hpp"

namespace detona {

RaySweep evans_ray_sweep(const EvansSystem& sys, const std::vector<Cplx>& lambdas,
                         const EvansOptions& opt, ExecMode mode, int threads) {
  RaySweep out;
  out.lambdas = lambdas;
  out.d.resize(lambdas.size());
  std::vector<FrameInit> fps(lambdas.size()), fms(lambdas.size());
  CVec ap = anchor_wedge(sys, Side::plus);
  CVec am = anchor_wedge(sys, Side::minus);
  const CVec* prev_p = &ap;
  const CVec* prev_m = &am;
  for (size_t i = 0; i < lambdas.size(); ++i) {
    fps[i] = frame_init(sys, Side::plus, lambdas[i], prev_p);
    fms[i] = frame_init(sys, Side::minus, lambdas[i], prev_m);
    prev_p = &fps[i].wedge;
    prev_m = &fms[i].wedge;
  }
  int nthreads = (mode == ExecMode::serial) ? 1 : threads;
  parallel_for(lambdas.size(), [&](size_t i) {
    out.d[i] = evans_eval_with(sys, lambdas[i], fps[i], fms[i], opt);
  }, nthreads);
  return out;
}

RaySweep evans_real_ray(const EvansSystem& sys, double lo, double hi, int n,
                        const EvansOptions& opt, ExecMode mode, int threads) {
  std::vector<Cplx> lams;
  for (int i = 0; i < n; ++i)
    lams.emplace_back(lo + (hi - lo) * double(i) / std::max(1, n - 1), 0.0);
  return evans_ray_sweep(sys, lams, opt, mode, threads);
}

ScanGrid delta_majda_scan(const IdealPolytropic& eos, const std::vector<double>& rs,
                          const std::vector<double>& Ms, ExecMode mode, int threads) {
  ScanGrid g;
  g.r = rs;
  g.M = Ms;
  g.delta.resize(rs.size(), Ms.size());
  g.majda.resize(rs.size(), Ms.size());
  double Gamma = eos.gruneisen();
  int nthreads = (mode == ExecMode::serial) ? 1 : threads;
  parallel_for(rs.size(), [&](size_t i) {
    for (size_t j = 0; j < Ms.size(); ++j) {
      double r = rs[i], M = Ms[j];
      double majda = Gamma * (r - 1) * M * M - M - 1;
      g.majda(i, j) = majda;
      g.delta(i, j) = (1.0 - r) * majda;  // [rho] = 1 - r with rho_+ = 1
    }
  }, nthreads);
  return g;
}

double delta_identity_batch(const Eos& eos, std::uint64_t seed, int n, ExecMode mode,
                            int threads) {
  // Pre-generate pair parameters deterministically, then evaluate in parallel.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ue(0.6, 1.8), uM(1.3, 3.2), uq(0.0, 0.45);
  struct Job {
    double e_plus, mach_plus, qfrac;
  };
  std::vector<Job> jobs(n);
  for (auto& j : jobs) j = {ue(rng), uM(rng), uq(rng)};

  std::vector<double> errs(n, 0.0);
  int nthreads = (mode == ExecMode::serial) ? 1 : threads;
  parallel_for(jobs.size(), [&](size_t i) {
    const Job& J = jobs[i];
    double c_plus = sound_speed(1.0, J.e_plus, eos);
    GasState plus = make_state(eos, 1.0, -J.mach_plus * c_plus, J.e_plus);
    double q = J.qfrac * J.e_plus;
    WavePair pair;
    try {
      pair = make_pair(eos, plus, plus.rho * plus.u, q, DetonationKind::strong);
    } catch (const NumericalError&) {
      errs[i] = 0.0;  // no strong root for this draw
      return;
    }
    auto t = eigen_triples(pair.minus, eos);
    Mat3 D3;
    D3.col(0) = t[0].r;
    D3.col(1) = t[1].r;
    D3.col(2) = Vec3(pair.plus.rho - pair.minus.rho, pair.plus.m - pair.minus.m,
                     pair.plus.En - pair.minus.En + q);
    double det_form = D3.determinant();
    double norm3 = (Mat3() << t[0].r, t[1].r, t[2].r).finished().determinant() /
                   t[2].l.dot(t[2].r);
    double reduced = norm3 * delta_detonation_reduced(pair, eos);
    errs[i] = std::abs(det_form - reduced) /
              std::max({std::abs(det_form), std::abs(reduced), 1e-300});
  }, nthreads);
  double worst = 0;
  for (double e : errs) worst = std::max(worst, e);
  return worst;
}

}  // namespace detona
