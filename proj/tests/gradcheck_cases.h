#pragma once

// Finite-difference verification of the trainer's analytic gradients on toy
// shapes (16x16 planes, 2 channels). Shared between the unit tests and the
// acceptance suite. The FD oracle only ever evaluates the loss forward.

#include <numeric>

#include "gsc/entropy.h"
#include "gsc/trainer.h"
#include "testutil.h"

namespace gsc::test {

struct GradCase {
  double maxRelError = 0.0;
  size_t checkedCount = 0;

  void merge(const GradCheckResult& r) {
    maxRelError = std::max(maxRelError, r.maxRelError);
    checkedCount += r.checkedCount;
  }
};

namespace detail {

inline GradCase runCase(uint64_t seed, const gsc::LossWeights& lw, bool includeEntropy,
                        std::vector<double> steps, size_t planeProbes, size_t decoderProbes,
                        double planeSkipBelow, bool checkDecoders) {
  ToySetup toy = makeToySetup(16, 2, 16, 8, seed);
  gsc::EntropyModel model = gsc::makeEntropyModel(2, 256.0);
  gsc::fitScales(model, toy.field);
  // non-uniform channel weights so the weighting path is exercised too
  std::vector<double> weights(static_cast<size_t>(gsc::kGroupCount) * 2, 1.0);
  for (size_t i = 0; i < weights.size(); ++i) weights[i] = 1.0 + 0.25 * static_cast<double>(i);

  const std::vector<size_t> batch = allIndices(toy.target.size());
  auto lossFn = [&]() {
    return gsc::computeLoss(toy.field, toy.decoders, toy.target, batch, lw, includeEntropy,
                            &model, weights, nullptr, nullptr)
        .total;
  };

  gsc::Gradients grads = gsc::makeGradients(toy.field, toy.decoders);
  gsc::computeLoss(toy.field, toy.decoders, toy.target, batch, lw, includeEntropy, &model,
                   weights, nullptr, &grads);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  GradCase result;
  for (int g = 0; g < gsc::kGroupCount; ++g) {
    for (int p = 0; p < gsc::kPlanesPerGroup; ++p) {
      auto& params = toy.field.groups[g].planes[p].values;
      std::vector<size_t> indices = sampleIndices(planeProbes, params.size(), rng);
      if (planeSkipBelow > 0.0) {
        // FD is invalid within h of the |x| kink; subgradient points are
        // measure zero in training but not in a fixed probe set.
        std::erase_if(indices,
                      [&](size_t idx) { return std::abs(params[idx]) < planeSkipBelow; });
      }
      result.merge(checkGradient(params, grads.planes[g][p], lossFn, indices, steps));
    }
    if (!checkDecoders) continue;
    gsc::MlpDecoder& mlp = toy.decoders[g];
    gsc::MlpGradients& dg = grads.decoders[g];
    std::vector<double>* params[6] = {&mlp.w1, &mlp.b1, &mlp.w2, &mlp.b2, &mlp.w3, &mlp.b3};
    std::vector<double>* analytic[6] = {&dg.w1, &dg.b1, &dg.w2, &dg.b2, &dg.w3, &dg.b3};
    for (int t = 0; t < 6; ++t) {
      const std::vector<size_t> indices = sampleIndices(decoderProbes, params[t]->size(), rng);
      result.merge(checkGradient(*params[t], *analytic[t], lossFn, indices, steps));
    }
  }
  return result;
}

}  // namespace detail

// Energy only: bilinear sampling, Hadamard product, MLP layers and the
// attribute activation mappings, on planes and all decoder tensors.
inline GradCase energyGradCase(uint64_t seed = 101) {
  return detail::runCase(seed, gsc::LossWeights{0.0, 0.0}, false, {1e-6, 1e-5}, 40, 24, 0.0, true);
}

// Energy + L1. The L1 path only touches plane parameters, so only planes are
// probed; probing decoder tensors here would measure the FD resolution limit
// of the large L1 total against gradients the L1 term does not produce.
inline GradCase l1GradCase(uint64_t seed = 202) {
  return detail::runCase(seed, gsc::LossWeights{0.0, 0.7}, false, {1e-6, 1e-5}, 60, 0, 1e-3, false);
}

// Energy + channel-weighted entropy through the block DCT; plane parameters
// only, for the same reason as the L1 case. The larger lambda keeps the FD
// difference well above the summation roundoff of the bit total; the step is
// raised for the same reason.
inline GradCase entropyGradCase(uint64_t seed = 303) {
  return detail::runCase(seed, gsc::LossWeights{0.5, 0.0}, true, {1e-5, 1e-4}, 60, 0, 0.0, false);
}

}  // namespace gsc::test
