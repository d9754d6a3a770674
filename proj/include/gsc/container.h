#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsc/entropy.h"
#include "gsc/field.h"
#include "gsc/framecodec.h"
#include "gsc/trainer.h"

namespace gsc {

// Single-file bundle: plane bitstream, position bitstream, decoder weights,
// entropy-model scales and the metadata needed to rebuild the field.
struct Container {
  uint32_t version = 1;
  uint64_t pointCount = 0;
  BoundingBox bbox;
  bool contraction = true;
  int shDegree = 0;
  int planeResolution = 0;
  int planeChannels = 0;
  FrameLayout layout = FrameLayout::perPlaneChannel;
  double normMin = 0.0;
  double normMax = 0.0;
  bool constantPack = false;
  double qStep = 256.0;
  BlockSpec block{4, 4};
  ProgressiveSchedule schedule;
  CodecBackend planeBackend = CodecBackend::builtin;
  std::vector<uint8_t> planeBitstream;
  std::vector<uint8_t> positionBitstream;
  DecoderSet decoders;
  std::vector<float> entropyScales;  // kGroupCount * 3 * channels * bands
};

struct SizeReport {
  size_t headerBytes = 0;
  size_t planeBytes = 0;
  size_t positionBytes = 0;
  size_t decoderBytes = 0;
  size_t entropyScaleBytes = 0;
  size_t totalBytes = 0;
};

struct EncodeSettings {
  CodecSettings codec;
  FrameLayout layout = FrameLayout::perPlaneChannel;
};

Container encodeScene(const TriPlaneField& field, const DecoderSet& decoders,
                      const std::vector<Point3>& positions, const EncodeSettings& settings,
                      const EntropyModel& model, const ProgressiveSchedule& schedule);

// Assembles a container whose plane section holds an externally produced
// bitstream; the caller ran the printed command themselves.
Container encodeSceneExternal(const TriPlaneField& field, const DecoderSet& decoders,
                              const std::vector<Point3>& positions,
                              const EncodeSettings& settings, const EntropyModel& model,
                              const ProgressiveSchedule& schedule,
                              std::vector<uint8_t> externalBitstream);

struct DecodedArtifact {
  TriPlaneField field;
  DecoderSet decoders;
  std::vector<Point3> positions;
  EntropyModel model;
};

// Rebuilds the field, decoders and positions; builtin plane backend only.
DecodedArtifact decodeArtifact(const Container& container);

// Full decode: positions (bit-exact), planes (within quantization bounds),
// attribute prediction at the decoded positions.
GaussianCloud decodeScene(const Container& container);

std::vector<uint8_t> serializeContainer(const Container& container);
Container parseContainer(const std::vector<uint8_t>& bytes);

void writeContainerFile(const Container& container, const std::string& path);
Container readContainerFile(const std::string& path);

SizeReport containerSizeReport(const Container& container);

// Worst-case absolute plane-value reconstruction error after 16-bit
// normalization plus the builtin codec's per-sample bound.
double planeReconstructionBound(const Container& container);

}  // namespace gsc
