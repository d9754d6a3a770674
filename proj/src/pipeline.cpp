#include "gsc/pipeline.h"

#include <cmath>
#include <sstream>

namespace gsc {

TrainConfig syntheticSceneTrainConfig(uint64_t seed) {
  TrainConfig config;
  config.totalIterations = 3000;
  config.planeResolution = 64;
  config.planeChannels = 4;
  config.hiddenWidth = 128;
  config.schedule = {{0, 375, 750, 1125}, {1, 2, 3, 4}};
  config.entropyStartIteration = 1500;
  config.ciIteration = 2250;
  config.batchSize = 512;
  config.weights.lambdaL1 = 1e-8;
  config.weights.lambdaEnt = 0.0;
  config.seed = seed;
  return config;
}

PlaneRate measurePlaneRate(const TriPlaneField& field, FrameLayout layout,
                           const CodecSettings& settings) {
  PlaneRate out;
  const FramePack pack = packPlanes(field, layout);
  const std::vector<uint8_t> bitstream = encodeFramesBuiltin(pack, settings);
  out.bytes = bitstream.size();

  FramePack decoded = decodeFramesBuiltin(bitstream);
  decoded.layout = pack.layout;
  decoded.groupCount = pack.groupCount;
  decoded.planeCount = pack.planeCount;
  decoded.channelCount = pack.channelCount;
  decoded.planeResolution = pack.planeResolution;
  decoded.normMin = pack.normMin;
  decoded.normMax = pack.normMax;
  decoded.constantPack = pack.constantPack;
  if (decoded.frames.empty()) {
    decoded.width = pack.width;
    decoded.height = pack.height;
  }

  out.decodedField.resolution = field.resolution;
  out.decodedField.channels = field.channels;
  out.decodedField.shDegree = field.shDegree;
  for (int g = 0; g < kGroupCount; ++g) {
    out.decodedField.groups[g].kind = field.groups[g].kind;
    for (auto& plane : out.decodedField.groups[g].planes) {
      plane.resolution = field.resolution;
      plane.channels = field.channels;
      plane.values.assign(static_cast<size_t>(field.channels) * field.resolution *
                              field.resolution,
                          0.0);
    }
  }
  unpackPlanes(decoded, out.decodedField);
  return out;
}

std::vector<AblationArm> runAblation(const TrainConfig& base, double lambdaEnt,
                                     const GaussianCloud& target,
                                     const CodecSettings& codecSettings, FrameLayout layout) {
  std::vector<AblationArm> arms;
  arms.push_back({"l1_only", 0.0, base.weights.lambdaL1, false, 0, 0.0});
  arms.push_back({"l1_ent", lambdaEnt, base.weights.lambdaL1, false, 0, 0.0});
  arms.push_back({"l1_ent_ci", lambdaEnt, base.weights.lambdaL1, true, 0, 0.0});

  for (AblationArm& arm : arms) {
    TrainConfig config = base;
    config.weights.lambdaEnt = arm.lambdaEnt;
    config.weights.lambdaL1 = arm.lambdaL1;
    config.channelImportanceEnabled = arm.channelImportance;
    TrainResult result = runTraining(config, target);
    const PlaneRate rate = measurePlaneRate(result.field, layout, codecSettings);
    arm.planeBytes = rate.bytes;
    const GaussianCloud predicted =
        predictCloud(rate.decodedField, result.decoders, target.positions);
    arm.psnrDb = attributePsnr(predicted, target);
  }
  return arms;
}

std::string ablationCsv(const std::vector<AblationArm>& arms) {
  std::ostringstream out;
  out << "arm,lambda_ent,lambda_l1,channel_importance,plane_bytes,attribute_psnr_db\n";
  out.precision(10);
  for (const AblationArm& arm : arms) {
    out << arm.name << ',' << arm.lambdaEnt << ',' << arm.lambdaL1 << ','
        << (arm.channelImportance ? 1 : 0) << ',' << arm.planeBytes << ',' << arm.psnrDb
        << '\n';
  }
  return out.str();
}

std::string ablationPlotData(const std::vector<AblationArm>& arms) {
  std::ostringstream out;
  out << "# log2_plane_bytes attribute_psnr_db\n";
  out.precision(10);
  for (const AblationArm& arm : arms) {
    out << "# arm: " << arm.name << '\n';
    out << std::log2(static_cast<double>(arm.planeBytes)) << ' ' << arm.psnrDb << "\n\n";
  }
  return out.str();
}

std::vector<QstepRow> runQstepSweep(const TrainConfig& base, const GaussianCloud& target,
                                    const std::vector<double>& steps,
                                    const CodecSettings& codecSettings, FrameLayout layout) {
  std::vector<QstepRow> rows;
  rows.reserve(steps.size());
  for (const double step : steps) {
    TrainConfig config = base;
    config.qStep = step;
    TrainResult result = runTraining(config, target);
    const PlaneRate rate = measurePlaneRate(result.field, layout, codecSettings);
    const GaussianCloud predicted =
        predictCloud(rate.decodedField, result.decoders, target.positions);
    rows.push_back({step, rate.bytes, attributePsnr(predicted, target)});
  }
  return rows;
}

std::string qstepCsv(const std::vector<QstepRow>& rows, double lambdaEnt) {
  std::ostringstream out;
  out << "# lambda_ent=" << lambdaEnt << " (fixed across rows)\n";
  out << "q_step,plane_bytes,attribute_psnr_db\n";
  out.precision(10);
  for (const QstepRow& row : rows) {
    out << row.qStep << ',' << row.planeBytes << ',' << row.psnrDb << '\n';
  }
  return out.str();
}

std::string sizeReportTable(const SizeReport& report) {
  std::ostringstream out;
  out << "section,bytes\n";
  out << "feature_planes," << report.planeBytes << '\n';
  out << "positions," << report.positionBytes << '\n';
  out << "decoder_weights," << report.decoderBytes << '\n';
  out << "entropy_scales," << report.entropyScaleBytes << '\n';
  out << "header," << report.headerBytes << '\n';
  out << "total," << report.totalBytes << '\n';
  return out.str();
}

}  // namespace gsc
