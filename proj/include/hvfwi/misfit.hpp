#pragma once

#include <utility>
#include <vector>

#include "hvfwi/core.hpp"
#include "hvfwi/misfit_kind.hpp"
#include "hvfwi/wave.hpp"

namespace hvfwi {

/// Misfit value with the per-trace Frechet derivative dD/df.
struct MisfitEval {
  double value = 0.0;
  std::vector<double> adjoint_source;  // ShotRecord layout: [r*nt + it]
  int hv_fallbacks = 0;                // traces where the HV solve fell back to L2
};

/// Bookkeeping needed to chain-rule an adjoint back through a normalization.
struct NormalizationRecord {
  W2Normalization method = W2Normalization::SquareNormalize;
  double denom = 0.0;  // integral of f^2 (square) or of f + c (shift)
  double shift = 0.0;
};

MisfitEval l2_misfit(const ShotRecord& sim, const ShotRecord& obs);

std::pair<Signal, NormalizationRecord> normalize_to_probability(const Signal& trace,
                                                                W2Normalization method,
                                                                double shift_c = 0.0);

/// Quantile-form squared 2-Wasserstein distance between two traces after
/// normalization; also returns the adjoint trace via the chain rule.
std::pair<double, Signal> w2_misfit_trace(const Signal& sim_trace, const Signal& obs_trace,
                                          W2Normalization method, double shift_c = 0.0);

/// Squared W2 between two signals after normalization (value only).
double w2_squared_signal(const Signal& a, const Signal& b, W2Normalization method,
                         double shift_c = 0.0);

struct HVRescale {
  double amplitude = 1.0;  // shot-wide max |obs| times the configured factor
  double duration = 1.0;   // trace length mapped onto the unit interval
};

/// HV distance between one simulated and one observed trace on the unit
/// square, with the adjoint mapped back through the time/amplitude scaling.
/// Falls back to the L2 trace misfit when the geodesic solver fails.
std::pair<double, Signal> hv_misfit_trace(const Signal& sim_trace, const Signal& obs_trace,
                                          const HVParams& p, const HVRescale& rescale,
                                          bool* fell_back = nullptr);

/// Dispatch on the misfit kind; per-trace values summed, adjoints stacked.
MisfitEval evaluate_misfit(const MisfitKind& kind, const ShotRecord& sim,
                           const ShotRecord& obs);

}  // namespace hvfwi
