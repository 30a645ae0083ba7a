#pragma once

#include "hvfwi/hv_metric.hpp"

namespace hvfwi {

enum class MisfitKindTag { L2, W2, HV };

enum class W2Normalization { SquareNormalize, ShiftNormalize };

/// Misfit selection plus the knobs each family needs.
struct MisfitKind {
  MisfitKindTag tag = MisfitKindTag::L2;

  // W2
  W2Normalization normalization = W2Normalization::SquareNormalize;
  double shift_constant = 0.0;  // ShiftNormalize additive constant

  // HV
  HVParams hv;
  bool time_rescale = true;    // map the trace time axis onto [0,1]
  double amp_rescale = 1.0;    // extra factor on the shot-wide amplitude scale

  static MisfitKind l2() { return {}; }
  static MisfitKind w2(W2Normalization norm = W2Normalization::SquareNormalize,
                       double c = 0.0) {
    MisfitKind k;
    k.tag = MisfitKindTag::W2;
    k.normalization = norm;
    k.shift_constant = c;
    return k;
  }
  static MisfitKind hv_kind(const HVParams& p) {
    MisfitKind k;
    k.tag = MisfitKindTag::HV;
    k.hv = p;
    return k;
  }
};

}  // namespace hvfwi
