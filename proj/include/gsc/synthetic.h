#pragma once

#include <cstdint>

#include "gsc/field.h"

namespace gsc {

// Desk-scale stand-in for a captured scene: clustered point positions with
// attributes drawn from smooth low-frequency fields, so a small tri-plane
// field can represent them well.
struct SyntheticSceneConfig {
  uint64_t seed = 42;
  size_t pointCount = 2000;
  int clusterCount = 8;
  double clusterSpread = 0.35;
  int shDegree = 0;
  int fourierTerms = 8;
  double maxFrequency = 2.0;
};

GaussianCloud makeSyntheticScene(const SyntheticSceneConfig& config);

}  // namespace gsc
