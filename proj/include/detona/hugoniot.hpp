#pragma once

#include <optional>

#include "detona/thermo.hpp"

namespace detona {

constexpr double kTolRh = 1e-10;      // absolute tolerance on nondimensional RH residuals
constexpr double kCjRootTie = 1e-6;   // |rho_strong - rho_weak| below this => Chapman-Jouguet

// End states of a traveling wave in the s=0 frame. plus = unburned state at +infinity,
// minus = burned state at -infinity. Jump brackets are [g] = g(+inf) - g(-inf).
struct WavePair {
  GasState plus;
  GasState minus;
  double m = 0;  // mass flux rho*u, constant; m < 0 in the 3-shock frame
  double q = 0;  // heat release >= 0
  double s = 0;  // wave speed, fixed to 0 by Galilean normalization
};

enum class DetonationKind { strong, weak, chapman_jouguet, none };

struct DetonationClass {
  DetonationKind kind = DetonationKind::none;
  double mach_plus = 0;   // Mach number of the unburned state
  double mach_minus = 0;  // Mach number of the burned state (enters the index algebra)
};

// p - p_plus + m^2 (1/rho - 1/rho_plus); zero iff candidate lies on the Rayleigh line.
double rayleigh_residual(const GasState& candidate, const GasState& plus, double m);

// (e + q Y_minus) - (e_plus + q) + (p + p_plus)(1/rho - 1/rho_plus)/2, with Y_plus = 1.
double hugoniot_residual(const GasState& candidate, const GasState& plus, double q,
                         double Y_minus = 0.0);

struct EndstateRoots {
  std::optional<GasState> strong;  // larger-density intersection
  std::optional<GasState> weak;    // smaller-density intersection
};

// Both burned-state roots of {rayleigh=0, hugoniot=0} for fixed plus state, flux m < 0 and
// heat release q. Returns none/none when the Rayleigh line misses the Hugoniot curve.
EndstateRoots solve_endstates(const GasState& plus, double m, double q, const Eos& eos);

// Mass flux m < 0 of Rayleigh/Hugoniot tangency, located by bisection on the root count.
double chapman_jouguet_flux(const GasState& plus, double q, const Eos& eos);

// Lax 3-shock check with s = 0: a2- < 0 < a3-, a3+ < 0. Throws if u+ >= 0.
DetonationClass classify(const WavePair& pair, const Eos& eos);

// |[e] + <p>[1/rho] + q u_plus / m| (Claim 2 of the Delta reduction).
double claim2_check(const WavePair& pair);

// Compression ratio r = rho_-/rho_+ and the ideal-gas bound 1+2/Gamma; throws if violated.
std::pair<double, double> compression_bounds(const WavePair& pair, const IdealPolytropic& eos);

// RH residuals (RH1, RH2, RH3), each divided by the scale |m^2/rho_+|.
Vec3 rh_residuals(const WavePair& pair);

// Assemble a pair from the strong (or weak) root of solve_endstates.
WavePair make_pair(const Eos& eos, const GasState& plus, double m, double q,
                   DetonationKind which = DetonationKind::strong);

// Ideal-gas pair with prescribed whole-wave compression ratio r (q >= 0). RH2+RH3 fix
// p_minus and m^2 given rho_minus = r * rho_plus.
WavePair pair_from_compression(const IdealPolytropic& eos, const GasState& plus, double r,
                               double q);

}  // namespace detona
