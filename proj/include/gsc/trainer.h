#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gsc/entropy.h"
#include "gsc/field.h"

namespace gsc {

struct ProgressiveSchedule {
  std::vector<int> stageIterations;  // T, non-decreasing, starts at 0
  std::vector<int> activeCounts;     // L, non-decreasing

  static ProgressiveSchedule defaults() { return {{0, 5000, 10000, 15000}, {2, 4, 6, 8}}; }
};

// Active channel count L of the latest stage with T_i <= iteration.
int activeChannels(int iteration, const ProgressiveSchedule& schedule);

struct LossWeights {
  double lambdaEnt = 0.0;
  double lambdaL1 = 0.0;
};

struct TrainConfig {
  int totalIterations = 40000;
  double planeLr = 0.005;
  double decoderLr = 0.001;
  double lrDecayFactor = 0.1;  // final lr / initial lr over the run
  LossWeights weights;
  int entropyStartIteration = 30000;
  int ciIteration = 30000;
  bool channelImportanceEnabled = true;
  double weightCap = 1e3;
  double qStep = 256.0;
  BlockSpec block{4, 4};
  int scaleRefitInterval = 100;
  // Estimator for the expected bin cost under the quantization noise: 0 draws
  // one noise sample per coefficient and step; k > 0 evaluates a deterministic
  // k-point midpoint quadrature of the expectation over the noise support.
  int entropyNoiseSamples = 4;
  int planeResolution = 512;
  int planeChannels = 8;
  int shDegree = 0;
  int hiddenWidth = 128;
  ProgressiveSchedule schedule = ProgressiveSchedule::defaults();
  int batchSize = 0;  // 0 = full target each step
  uint64_t seed = 0;

  void validate() const;
};

struct MlpGradients {
  std::vector<double> w1, b1, w2, b2, w3, b3;
};

struct Gradients {
  std::array<std::array<std::vector<double>, kPlanesPerGroup>, kGroupCount> planes;
  std::array<MlpGradients, kGroupCount> decoders;
};

Gradients makeGradients(const TriPlaneField& field, const DecoderSet& decoders);
void zeroGradients(Gradients& grads);

struct LossBreakdown {
  double energy = 0.0;
  double entropyBits = 0.0;  // channel-weighted bits, before lambdaEnt
  double l1 = 0.0;
  double total = 0.0;
};

// Mean squared error between predicted and target attributes over the given
// points, one term per attribute group with unit weights.
double surrogateEnergy(const TriPlaneField& field, const DecoderSet& decoders,
                       const GaussianCloud& target);

// Forward pass of the combined objective; when grads is non-null, analytic
// gradients are accumulated for every plane and decoder parameter.
// channelWeightsFlat may be empty (all-ones). The entropy term's noise
// handling: noiseQuadSamples > 0 integrates the bin cost over the noise
// support with that many midpoint nodes; otherwise one draw per coefficient
// is taken from noiseRng, and a null rng evaluates clean coefficients.
LossBreakdown computeLoss(const TriPlaneField& field, const DecoderSet& decoders,
                          const GaussianCloud& target, const std::vector<size_t>& batch,
                          const LossWeights& weights, bool includeEntropy,
                          const EntropyModel* model,
                          const std::vector<double>& channelWeightsFlat,
                          std::mt19937_64* noiseRng, Gradients* grads,
                          int noiseQuadSamples = 0);

// Gradient-magnitude sensitivity of each (group, channel) pair with respect
// to the surrogate energy over the full target, flat group-major layout,
// normalized by the point count.
std::vector<double> channelImportanceScores(const TriPlaneField& field,
                                            const DecoderSet& decoders,
                                            const GaussianCloud& target);

struct LogRow {
  int iteration = 0;
  double energy = 0.0;
  double entropyBits = 0.0;
  double l1 = 0.0;
  double total = 0.0;
};

std::string logToCsv(const std::vector<LogRow>& log);

struct TrainResult {
  TriPlaneField field;
  DecoderSet decoders;
  EntropyModel model;
  ChannelImportance importance;
  std::vector<LogRow> log;
};

class Trainer {
 public:
  Trainer(const TrainConfig& config, GaussianCloud target);
  // Warm start from an existing field and decoder set (shapes must match the
  // config).
  Trainer(const TrainConfig& config, GaussianCloud target, TriPlaneField field,
          DecoderSet decoders);

  // One optimizer step at the current iteration; returns the logged losses.
  LogRow step();

  // Executes the remaining schedule and returns the final state.
  TrainResult run();

  const TriPlaneField& field() const { return field_; }
  const DecoderSet& decoders() const { return decoders_; }
  const EntropyModel& model() const { return model_; }
  const ChannelImportance& importance() const { return importance_; }
  const GaussianCloud& target() const { return target_; }
  const std::vector<LogRow>& log() const { return log_; }
  int iteration() const { return iteration_; }

  // Pooled attribute PSNR of the current field against the target (dB).
  double psnrToTarget() const;

 private:
  struct AdamTensor {
    std::vector<double> m, v;
  };

  void initState();
  void maybeComputeImportance();
  void adamUpdate(std::vector<double>& params, const std::vector<double>& grads,
                  AdamTensor& state, double lr, size_t count);
  std::vector<size_t> drawBatch();

  TrainConfig config_;
  GaussianCloud target_;
  TriPlaneField field_;
  DecoderSet decoders_;
  EntropyModel model_;
  ChannelImportance importance_;
  Gradients grads_;
  std::array<std::array<AdamTensor, kPlanesPerGroup>, kGroupCount> planeAdam_;
  std::array<std::array<AdamTensor, 6>, kGroupCount> decoderAdam_;
  std::vector<LogRow> log_;
  std::mt19937_64 rng_;
  int iteration_ = 0;
  int adamStep_ = 0;
  bool importanceComputed_ = false;
};

TrainResult runTraining(const TrainConfig& config, GaussianCloud target);

// Pooled mean squared error over every attribute component, peak 1.0.
double attributePsnr(const GaussianCloud& predicted, const GaussianCloud& target);

}  // namespace gsc
