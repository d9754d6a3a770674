#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsc/dct.h"
#include "gsc/field.h"
#include "gsc/geometry.h"

namespace gsc {

enum class FrameLayout : uint32_t {
  perPlaneChannel = 0,  // one frame per (group, plane, channel) slice
  tiledPlanes = 1,      // a channel's three planes side by side per frame
};

enum class CodecBackend : uint8_t { builtin = 0, externalHm = 1, externalX265 = 2 };

struct CodecSettings {
  CodecBackend backend = CodecBackend::builtin;
  int qp = 1;
  std::vector<int> qpOffsets;  // per-frame; empty = all zero
  bool lossless = false;
};

struct FramePack {
  uint32_t width = 0;
  uint32_t height = 0;
  std::vector<std::vector<uint16_t>> frames;
  double normMin = 0.0;
  double normMax = 0.0;
  bool constantPack = false;
  FrameLayout layout = FrameLayout::perPlaneChannel;
  uint32_t groupCount = kGroupCount;
  uint32_t planeCount = kPlanesPerGroup;
  uint32_t channelCount = 0;
  uint32_t planeResolution = 0;
};

struct PositionPack {
  uint32_t width = 512;
  uint32_t height = 512;
  uint64_t pointCount = 0;
  std::vector<std::vector<uint16_t>> frames;  // qx, qy, qz streams then zero padding
};

// Frame index of a (group, plane, channel) slice under the pack's layout.
// Under tiledPlanes the plane selects the horizontal tile instead.
uint32_t frameIndexOf(const FramePack& pack, int group, int plane, int channel);

// Global affine map of all plane values onto [0, 65535], round-half-up.
FramePack packPlanes(const TriPlaneField& field, FrameLayout layout = FrameLayout::perPlaneChannel);

// Inverse affine map back into an existing field skeleton (resolution,
// channels, groups already sized). Round trip error per value is bounded by
// (normMax - normMin) / (2 * 65535).
void unpackPlanes(const FramePack& pack, TriPlaneField& field);

// Intra-only frame codec: 4x4 block DCT on centered samples, uniform scalar
// quantization with step 2^(qp/6), DC prediction from the preceding block,
// zigzag scan and zero-run + exp-Golomb coding. The lossless flag skips the
// transform and codes raster-order sample deltas exactly.
std::vector<uint8_t> encodeFramesBuiltin(const FramePack& pack, const CodecSettings& settings);
FramePack decodeFramesBuiltin(const std::vector<uint8_t>& bitstream);

double builtinQuantStep(int qp);
// Per-sample absolute reconstruction error bound of the lossy builtin path.
double builtinSampleErrorBound(const CodecSettings& settings, const BlockSpec& block = {4, 4});

PositionPack buildPositionPack(const std::vector<QuantizedPosition>& positions,
                               uint32_t width = 512, uint32_t height = 512);

// Lossless position coding: per-stream delta prediction then signed
// exp-Golomb. Bit-exact by construction.
std::vector<uint8_t> encodePositions(const PositionPack& pack);
PositionPack decodePositionPack(const std::vector<uint8_t>& bitstream);
std::vector<QuantizedPosition> decodePositions(const std::vector<uint8_t>& bitstream);

struct ExternalJob {
  std::string inputFile = "planes.yuv";
  std::string bitstreamFile = "planes.bin";
  std::string configFile = "encoder_randomaccess_main_rext.cfg";
  int framerate = 30;
};

// Command line for an external encoder run; never executes anything.
std::string buildExternalCommand(CodecBackend backend, uint32_t frameCount, uint32_t width,
                                 uint32_t height, const CodecSettings& settings,
                                 const ExternalJob& job);

// Random-access GOP rows with explicit per-frame QP offsets.
std::string buildHmGopConfig(const CodecSettings& settings);

// Raw 16-bit grayscale frames, one after another; big-endian for x265.
void writeRawFrames(const std::vector<std::vector<uint16_t>>& frames, const std::string& path,
                    bool bigEndian);

}  // namespace gsc
