#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "gsc/container.h"
#include "gsc/errors.h"
#include "gsc/pipeline.h"
#include "gsc/ply.h"
#include "gsc/synthetic.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 2;
constexpr int kExitFormatError = 3;
constexpr int kExitTrainError = 4;

struct SceneOptions {
  std::string input = "synthetic";
  size_t points = 2000;
  int clusters = 6;
  uint64_t sceneSeed = 42;
  int shDegree = 0;
};

void addSceneOptions(CLI::App* cmd, SceneOptions& opts) {
  cmd->add_option("--input", opts.input, "PLY path or 'synthetic'");
  cmd->add_option("--points", opts.points, "synthetic point count");
  cmd->add_option("--clusters", opts.clusters, "synthetic cluster count");
  cmd->add_option("--scene-seed", opts.sceneSeed, "synthetic scene seed");
  cmd->add_option("--sh-degree", opts.shDegree, "SH degree of the synthetic scene");
}

gsc::GaussianCloud loadScene(const SceneOptions& opts) {
  if (opts.input == "synthetic") {
    gsc::SyntheticSceneConfig config;
    config.seed = opts.sceneSeed;
    config.pointCount = opts.points;
    config.clusterCount = opts.clusters;
    config.shDegree = opts.shDegree;
    return gsc::makeSyntheticScene(config);
  }
  return gsc::readPly(opts.input);
}

struct TrainOptions {
  gsc::TrainConfig config;
  std::vector<int> scheduleT;
  std::vector<int> scheduleL;
};

void addTrainOptions(CLI::App* cmd, TrainOptions& opts) {
  auto& c = opts.config;
  cmd->add_option("--iterations", c.totalIterations, "training iterations");
  cmd->add_option("--plane-lr", c.planeLr, "feature plane learning rate");
  cmd->add_option("--decoder-lr", c.decoderLr, "decoder MLP learning rate");
  cmd->add_option("--lambda-ent", c.weights.lambdaEnt, "entropy loss weight");
  cmd->add_option("--lambda-l1", c.weights.lambdaL1, "L1 loss weight");
  cmd->add_option("--entropy-start", c.entropyStartIteration, "first entropy-loss iteration");
  cmd->add_option("--ci-iteration", c.ciIteration, "channel importance iteration");
  cmd->add_flag_callback(
      "--no-ci", [&c]() { c.channelImportanceEnabled = false; },
      "disable channel-importance weighting");
  cmd->add_option("--qstep", c.qStep, "entropy model quantization step");
  cmd->add_option("--resolution", c.planeResolution, "feature plane resolution");
  cmd->add_option("--channels", c.planeChannels, "feature plane channels");
  cmd->add_option("--hidden", c.hiddenWidth, "decoder hidden width");
  cmd->add_option("--batch", c.batchSize, "points per step (0 = all)");
  cmd->add_option("--seed", c.seed, "training seed");
  cmd->add_option("--schedule-t", opts.scheduleT, "progressive stage iterations")
      ->delimiter(',');
  cmd->add_option("--schedule-l", opts.scheduleL, "progressive active channel counts")
      ->delimiter(',');
}

gsc::TrainConfig resolveTrainConfig(const TrainOptions& opts, int shDegree) {
  gsc::TrainConfig config = opts.config;
  config.shDegree = shDegree;
  if (!opts.scheduleT.empty() || !opts.scheduleL.empty()) {
    if (opts.scheduleT.size() != opts.scheduleL.size()) {
      throw std::invalid_argument("--schedule-t and --schedule-l need matching lengths");
    }
    config.schedule = {opts.scheduleT, opts.scheduleL};
  }
  return config;
}

void writeTextFile(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << content;
}

gsc::CodecBackend parseBackend(const std::string& name) {
  if (name == "builtin") return gsc::CodecBackend::builtin;
  if (name == "external-hm") return gsc::CodecBackend::externalHm;
  if (name == "external-x265") return gsc::CodecBackend::externalX265;
  throw std::invalid_argument("unknown backend: " + name);
}

gsc::FrameLayout parseLayout(const std::string& name) {
  if (name == "per-plane-channel") return gsc::FrameLayout::perPlaneChannel;
  if (name == "tiled") return gsc::FrameLayout::tiledPlanes;
  throw std::invalid_argument("unknown frame layout: " + name);
}

void printSizeReport(const gsc::Container& container) {
  const gsc::SizeReport report = gsc::containerSizeReport(container);
  std::cout << gsc::sizeReportTable(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gscodec: tri-plane gaussian-splat scene codec"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "fit a tri-plane field to a scene");
  SceneOptions trainScene;
  TrainOptions trainOpts;
  std::string trainOutput = "checkpoint.gspc";
  std::string trainLog;
  addSceneOptions(train, trainScene);
  addTrainOptions(train, trainOpts);
  train->add_option("--output", trainOutput, "checkpoint container path");
  train->add_option("--log", trainLog, "CSV training log path");

  // encode
  auto* encode = app.add_subcommand("encode", "encode a checkpoint into a container");
  std::string encodeInput;
  std::string encodeOutput = "scene.gspc";
  std::string encodeBackend = "builtin";
  std::string encodeLayout = "per-plane-channel";
  std::string framesOut = "planes.yuv";
  std::string externalBitstream;
  int encodeQp = 1;
  bool encodeLossless = false;
  encode->add_option("--checkpoint", encodeInput, "checkpoint container")->required();
  encode->add_option("--output", encodeOutput, "output container path");
  encode->add_option("--backend", encodeBackend, "builtin | external-hm | external-x265");
  encode->add_option("--layout", encodeLayout, "per-plane-channel | tiled");
  encode->add_option("--qp", encodeQp, "quantization parameter");
  encode->add_flag("--lossless", encodeLossless, "lossless frame coding");
  encode->add_option("--frames-out", framesOut, "raw frame file for external backends");
  encode->add_option("--external-bitstream", externalBitstream,
                     "bitstream produced by the external encoder; assembles the container");

  // decode
  auto* decode = app.add_subcommand("decode", "decode a container to a PLY cloud");
  std::string decodeInput;
  std::string decodeOutput = "scene.ply";
  decode->add_option("--input", decodeInput, "container path")->required();
  decode->add_option("--output", decodeOutput, "output PLY path");

  // sweep-qstep
  auto* sweep = app.add_subcommand("sweep-qstep", "train per quantization step and report");
  SceneOptions sweepScene;
  TrainOptions sweepOpts;
  sweepOpts.config = gsc::syntheticSceneTrainConfig();
  sweepOpts.config.weights.lambdaEnt = 2e-9;
  std::string sweepOutput = "qstep_sweep.csv";
  addSceneOptions(sweep, sweepScene);
  addTrainOptions(sweep, sweepOpts);
  sweep->add_option("--output", sweepOutput, "CSV output path");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "compare L1-only, +entropy, +bit allocation");
  SceneOptions ablateScene;
  TrainOptions ablateOpts;
  ablateOpts.config = gsc::syntheticSceneTrainConfig();
  std::string ablateOutput = "ablation.csv";
  std::string ablatePlot = "ablation_rd.dat";
  double ablateLambdaEnt = 2e-9;
  addSceneOptions(ablate, ablateScene);
  addTrainOptions(ablate, ablateOpts);
  ablate->add_option("--output", ablateOutput, "CSV output path");
  ablate->add_option("--plot-data", ablatePlot, "gnuplot-style RD data path");
  ablate->add_option("--ablate-lambda-ent", ablateLambdaEnt,
                     "entropy weight used by the entropy arms");

  // report
  auto* report = app.add_subcommand("report", "print a container's size breakdown");
  std::string reportInput;
  report->add_option("--input", reportInput, "container path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const gsc::GaussianCloud target = loadScene(trainScene);
      const gsc::TrainConfig config = resolveTrainConfig(trainOpts, target.shDegree);
      gsc::TrainResult result;
      try {
        result = gsc::runTraining(config, target);
      } catch (const std::invalid_argument&) {
        throw;
      } catch (const std::exception& e) {
        std::cerr << "training failed: " << e.what() << "\n";
        return kExitTrainError;
      }
      gsc::EncodeSettings settings;
      settings.codec.lossless = true;  // checkpoints keep the planes intact
      const gsc::Container container =
          gsc::encodeScene(result.field, result.decoders, target.positions, settings,
                           result.model, config.schedule);
      gsc::writeContainerFile(container, trainOutput);
      if (!trainLog.empty()) {
        writeTextFile(trainLog, gsc::logToCsv(result.log));
      }
      const gsc::GaussianCloud predicted =
          gsc::predictCloud(result.field, result.decoders, target.positions);
      std::cout << "checkpoint: " << trainOutput << "\n";
      std::cout << "attribute_psnr_db: " << gsc::attributePsnr(predicted, target) << "\n";
      printSizeReport(container);
      return kExitOk;
    }

    if (*encode) {
      const gsc::Container checkpoint = gsc::readContainerFile(encodeInput);
      const gsc::DecodedArtifact artifact = gsc::decodeArtifact(checkpoint);
      gsc::EncodeSettings settings;
      settings.codec.backend = parseBackend(encodeBackend);
      settings.codec.qp = encodeQp;
      settings.codec.lossless = encodeLossless;
      settings.layout = parseLayout(encodeLayout);

      if (settings.codec.backend == gsc::CodecBackend::builtin) {
        const gsc::Container container =
            gsc::encodeScene(artifact.field, artifact.decoders, artifact.positions, settings,
                             artifact.model, checkpoint.schedule);
        gsc::writeContainerFile(container, encodeOutput);
        std::cout << "container: " << encodeOutput << "\n";
        printSizeReport(container);
        return kExitOk;
      }

      // External path: frames to disk, command to stdout; the container is
      // assembled once the caller supplies the produced bitstream.
      const gsc::FramePack pack = gsc::packPlanes(artifact.field, settings.layout);
      const bool bigEndian = settings.codec.backend == gsc::CodecBackend::externalX265;
      gsc::writeRawFrames(pack.frames, framesOut, bigEndian);
      gsc::ExternalJob job;
      job.inputFile = framesOut;
      job.bitstreamFile = encodeOutput + ".ext";
      std::cout << "frames: " << framesOut << " (" << pack.frames.size() << " x " << pack.width
                << "x" << pack.height << ", 16-bit grayscale"
                << (bigEndian ? ", big-endian" : ", little-endian") << ")\n";
      std::cout << "run: "
                << gsc::buildExternalCommand(settings.codec.backend,
                                             static_cast<uint32_t>(pack.frames.size()),
                                             pack.width, pack.height, settings.codec, job)
                << "\n";
      if (settings.codec.backend == gsc::CodecBackend::externalHm) {
        const std::string cfgPath = encodeOutput + ".gop.cfg";
        writeTextFile(cfgPath, gsc::buildHmGopConfig(settings.codec));
        std::cout << "gop-config: " << cfgPath << "\n";
      }
      std::cout << "expected bitstream: " << job.bitstreamFile << "\n";
      if (!externalBitstream.empty()) {
        std::ifstream in(externalBitstream, std::ios::binary);
        if (!in) {
          throw std::runtime_error("cannot open external bitstream: " + externalBitstream);
        }
        std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
        const gsc::Container container = gsc::encodeSceneExternal(
            artifact.field, artifact.decoders, artifact.positions, settings, artifact.model,
            checkpoint.schedule, std::move(bytes));
        gsc::writeContainerFile(container, encodeOutput);
        std::cout << "container: " << encodeOutput << "\n";
        printSizeReport(container);
      }
      return kExitOk;
    }

    if (*decode) {
      const gsc::Container container = gsc::readContainerFile(decodeInput);
      const gsc::GaussianCloud cloud = gsc::decodeScene(container);
      gsc::writePly(cloud, decodeOutput);
      std::cout << "decoded " << cloud.size() << " points -> " << decodeOutput << "\n";
      return kExitOk;
    }

    if (*sweep) {
      const gsc::GaussianCloud target = loadScene(sweepScene);
      const gsc::TrainConfig config = resolveTrainConfig(sweepOpts, target.shDegree);
      gsc::CodecSettings codec;
      const std::vector<gsc::QstepRow> rows =
          gsc::runQstepSweep(config, target, gsc::defaultQstepGrid(), codec);
      writeTextFile(sweepOutput, gsc::qstepCsv(rows, config.weights.lambdaEnt));
      std::cout << gsc::qstepCsv(rows, config.weights.lambdaEnt);
      return kExitOk;
    }

    if (*ablate) {
      const gsc::GaussianCloud target = loadScene(ablateScene);
      const gsc::TrainConfig config = resolveTrainConfig(ablateOpts, target.shDegree);
      gsc::CodecSettings codec;
      const std::vector<gsc::AblationArm> arms =
          gsc::runAblation(config, ablateLambdaEnt, target, codec);
      writeTextFile(ablateOutput, gsc::ablationCsv(arms));
      writeTextFile(ablatePlot, gsc::ablationPlotData(arms));
      std::cout << gsc::ablationCsv(arms);
      return kExitOk;
    }

    if (*report) {
      const gsc::Container container = gsc::readContainerFile(reportInput);
      std::cout << "points: " << container.pointCount << "\n";
      std::cout << "plane: " << container.planeResolution << "x" << container.planeResolution
                << " x" << container.planeChannels << "ch, sh degree " << container.shDegree
                << "\n";
      printSizeReport(container);
      return kExitOk;
    }
  } catch (const gsc::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitFormatError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitOk;
}
