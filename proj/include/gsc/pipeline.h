#pragma once

#include <string>
#include <vector>

#include "gsc/container.h"
#include "gsc/framecodec.h"
#include "gsc/trainer.h"

namespace gsc {

struct PlaneRate {
  size_t bytes = 0;
  TriPlaneField decodedField;  // planes after 16-bit packing and the codec
};

// Training preset matched to the builtin synthetic scene: 64x64 planes with
// 4 channels per group, 3k iterations, the entropy phase over the second
// half of the run and the importance switch at 75%.
TrainConfig syntheticSceneTrainConfig(uint64_t seed = 7);

// Runs the builtin codec over the packed planes and returns the bitstream
// size together with the decoded field.
PlaneRate measurePlaneRate(const TriPlaneField& field, FrameLayout layout,
                           const CodecSettings& settings);

struct AblationArm {
  std::string name;
  double lambdaEnt = 0.0;
  double lambdaL1 = 0.0;
  bool channelImportance = false;
  size_t planeBytes = 0;
  double psnrDb = 0.0;
};

// Three runs with identical seeds: L1 only, + entropy loss, + entropy loss
// with channel-importance weighting. Sizes and quality are measured through
// the builtin codec at the given settings.
std::vector<AblationArm> runAblation(const TrainConfig& base, double lambdaEnt,
                                     const GaussianCloud& target,
                                     const CodecSettings& codecSettings,
                                     FrameLayout layout = FrameLayout::perPlaneChannel);

std::string ablationCsv(const std::vector<AblationArm>& arms);
// Rate on a log2 axis, one block per arm, gnuplot-style.
std::string ablationPlotData(const std::vector<AblationArm>& arms);

struct QstepRow {
  double qStep = 0.0;
  size_t planeBytes = 0;
  double psnrDb = 0.0;
};

inline std::vector<double> defaultQstepGrid() {
  return {1.0, 4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0};
}

// Trains once per step value with fixed loss weights and measures the
// resulting builtin-codec plane size and attribute quality.
std::vector<QstepRow> runQstepSweep(const TrainConfig& base, const GaussianCloud& target,
                                    const std::vector<double>& steps,
                                    const CodecSettings& codecSettings,
                                    FrameLayout layout = FrameLayout::perPlaneChannel);

std::string qstepCsv(const std::vector<QstepRow>& rows, double lambdaEnt);

std::string sizeReportTable(const SizeReport& report);

}  // namespace gsc
