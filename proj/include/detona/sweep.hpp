#pragma once

#include <cstdint>

#include "detona/index.hpp"

namespace detona {

enum class ExecMode { serial, parallel };

// Evans sweeps: frame continuation is a cheap serial pass; the x-integrations are the
// data-parallel kernel. Serial and parallel modes produce identical output.
struct RaySweep {
  std::vector<Cplx> lambdas;
  std::vector<ScaledComplex> d;
};

RaySweep evans_ray_sweep(const EvansSystem& sys, const std::vector<Cplx>& lambdas,
                         const EvansOptions& opt, ExecMode mode, int threads = 0);

RaySweep evans_real_ray(const EvansSystem& sys, double lo, double hi, int n,
                        const EvansOptions& opt, ExecMode mode, int threads = 0);

// Closed-form Delta/Majda scan over an (r, M) grid for an ideal gas (the paper's reduced
// forms; the c^2 > 0 factor is omitted).
struct ScanGrid {
  std::vector<double> r, M;
  Mat delta;  // [rho] (Gamma (r-1) M^2 - M - 1), rho_+ = 1
  Mat majda;  // Gamma (r-1) M^2 - M - 1
};
ScanGrid delta_majda_scan(const IdealPolytropic& eos, const std::vector<double>& rs,
                          const std::vector<double>& Ms, ExecMode mode, int threads = 0);

// Randomized Delta identity batch: solver-built RH-consistent pairs, determinant form vs
// reduced closed form; returns the max relative mismatch over n pairs.
double delta_identity_batch(const Eos& eos, std::uint64_t seed, int n, ExecMode mode,
                            int threads = 0);

}  // namespace detona
