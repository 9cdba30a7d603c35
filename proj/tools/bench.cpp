// Benchmark of the data-parallel sweep kernels against their serial reference.

#include <chrono>
#include <iostream>

#include "detona/parallel.hpp"
#include "detona/runner.hpp"

using namespace detona;
using Clock = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& f) {
  auto t0 = Clock::now();
  f();
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

int main() {
  auto eos = std::make_shared<IdealPolytropic>(0.4, 1.0);
  GasState plus = make_state(*eos, 1.0, -2.2, 1.0);
  WavePair pair = make_pair(*eos, plus, -2.2, 0.0, DetonationKind::strong);
  auto prof = std::make_shared<Profile>(ns_shock_profile(pair, 0.3, 0.3, eos));
  EvansSystem sys(prof, ModelKind::ns);

  std::cout << "threads available: " << hardware_threads() << "\n";

  {
    const int n = 96;
    double ts = 0, tp = 0;
    RaySweep a, b;
    ts = time_ms([&] { a = evans_real_ray(sys, 0.2, 30.0, n, {}, ExecMode::serial); });
    tp = time_ms([&] { b = evans_real_ray(sys, 0.2, 30.0, n, {}, ExecMode::parallel); });
    double worst = 0;
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(a.d[i].mant - b.d[i].mant));
    std::cout << "evans real-ray sweep (" << n << " points): serial " << ts << " ms, parallel "
              << tp << " ms, speedup " << ts / tp << ", max |diff| " << worst << "\n";
  }

  {
    IdealPolytropic ig(0.4, 1.0);
    std::vector<double> rs, Ms;
    for (int i = 0; i < 1200; ++i) rs.push_back(1.01 + 4.9 * i / 1199.0);
    for (int j = 0; j < 1200; ++j) Ms.push_back(0.01 + 0.98 * j / 1199.0);
    ScanGrid a, b;
    double ts = time_ms([&] { a = delta_majda_scan(ig, rs, Ms, ExecMode::serial); });
    double tp = time_ms([&] { b = delta_majda_scan(ig, rs, Ms, ExecMode::parallel); });
    std::cout << "delta/majda scan (" << rs.size() * Ms.size() << " cells): serial " << ts
              << " ms, parallel " << tp << " ms, speedup " << ts / tp << ", max |diff| "
              << (a.delta - b.delta).cwiseAbs().maxCoeff() << "\n";
  }

  {
    IdealPolytropic ig(0.4, 1.0);
    double ts = time_ms([&] { delta_identity_batch(ig, 11, 600, ExecMode::serial); });
    double tp = time_ms([&] { delta_identity_batch(ig, 11, 600, ExecMode::parallel); });
    std::cout << "Delta identity batch (600 pairs): serial " << ts << " ms, parallel " << tp
              << " ms, speedup " << ts / tp << "\n";
  }
  return 0;
}
