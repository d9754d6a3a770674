#include "gsc/framecodec.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gsc/bitio.h"

namespace gsc {

namespace {

constexpr char kFrameMagic[4] = {'G', 'P', 'F', '1'};
constexpr char kPositionMagic[4] = {'G', 'P', 'P', '1'};
constexpr int kCenterOffset = 32768;

void putU32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

void putU64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
  }
}

uint32_t readU32(const std::vector<uint8_t>& data, size_t& pos) {
  if (pos + 4 > data.size()) throw DecodeError("unexpected end of stream", pos);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data[pos + i]) << (8 * i);
  pos += 4;
  return v;
}

uint64_t readU64(const std::vector<uint8_t>& data, size_t& pos) {
  if (pos + 8 > data.size()) throw DecodeError("unexpected end of stream", pos);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data[pos + i]) << (8 * i);
  pos += 8;
  return v;
}

uint16_t quantizeNorm(double value, double lo, double hi) {
  if (hi <= lo) return 0;
  const double t = (value - lo) / (hi - lo) * 65535.0;
  const double q = std::floor(t + 0.5);
  return static_cast<uint16_t>(std::clamp(q, 0.0, 65535.0));
}

// Zero-run + exp-Golomb coding of a level sequence; level code 0 marks end
// of data, remaining levels are zero.
void encodeLevels(BitWriter& writer, const std::vector<int64_t>& levels) {
  uint64_t run = 0;
  for (const int64_t level : levels) {
    if (level == 0) {
      ++run;
      continue;
    }
    writer.putExpGolomb(run);
    writer.putSignedExpGolomb(level);
    run = 0;
  }
  writer.putExpGolomb(0);
  writer.putSignedExpGolomb(0);
}

void decodeLevels(BitReader& reader, std::vector<int64_t>& levels) {
  size_t pos = 0;
  while (true) {
    const uint64_t run = reader.getExpGolomb();
    const int64_t level = reader.getSignedExpGolomb();
    if (level == 0) {
      std::fill(levels.begin() + pos, levels.end(), int64_t{0});
      return;
    }
    if (pos + run >= levels.size()) {
      throw DecodeError("level run exceeds frame", reader.byteOffset());
    }
    pos += run;
    levels[pos++] = level;
  }
}

std::vector<uint8_t> encodeOneFrame(const std::vector<uint16_t>& samples, uint32_t width,
                                    uint32_t height, int qp, bool lossless) {
  std::vector<uint8_t> payload;
  putU32(payload, width);
  putU32(payload, height);
  payload.push_back(lossless ? 1 : 0);
  payload.push_back(0);
  payload.push_back(static_cast<uint8_t>(qp & 0xff));
  payload.push_back(static_cast<uint8_t>((qp >> 8) & 0xff));

  BitWriter writer;
  if (lossless) {
    std::vector<int64_t> deltas(samples.size());
    int64_t prev = 0;
    for (size_t i = 0; i < samples.size(); ++i) {
      const int64_t centered = static_cast<int64_t>(samples[i]) - kCenterOffset;
      deltas[i] = centered - prev;
      prev = centered;
    }
    encodeLevels(writer, deltas);
  } else {
    const BlockSpec block{4, 4};
    const Dct2d dct(block);
    const double step = builtinQuantStep(qp);
    const uint32_t padW = (width + block.cols - 1) / block.cols * block.cols;
    const uint32_t padH = (height + block.rows - 1) / block.rows * block.rows;
    const size_t blockLen = static_cast<size_t>(block.rows) * block.cols;
    std::vector<double> buf(blockLen);
    std::vector<int64_t> blockLevels(blockLen);
    std::vector<double> scanned(blockLen);
    std::vector<int64_t> levels;
    levels.reserve(static_cast<size_t>(padW) * padH);
    const auto order = zigzagOrder(block.rows, block.cols);
    int64_t prevDc = 0;
    for (uint32_t br = 0; br < padH; br += block.rows) {
      for (uint32_t bc = 0; bc < padW; bc += block.cols) {
        for (int r = 0; r < block.rows; ++r) {
          const uint32_t sr = std::min(br + r, height - 1);
          for (int c = 0; c < block.cols; ++c) {
            const uint32_t sc = std::min(bc + c, width - 1);
            buf[static_cast<size_t>(r) * block.cols + c] =
                static_cast<double>(samples[static_cast<size_t>(sr) * width + sc]) -
                kCenterOffset;
          }
        }
        dct.forward(buf.data(), buf.data());
        for (size_t k = 0; k < blockLen; ++k) {
          blockLevels[k] = std::llround(buf[k] / step);
        }
        const int64_t dc = blockLevels[0];
        blockLevels[0] = dc - prevDc;
        prevDc = dc;
        for (size_t k = 0; k < blockLen; ++k) {
          levels.push_back(
              blockLevels[static_cast<size_t>(order[k].first) * block.cols + order[k].second]);
        }
      }
    }
    encodeLevels(writer, levels);
  }
  const auto& bits = writer.bytes();
  payload.insert(payload.end(), bits.begin(), bits.end());
  return payload;
}

std::vector<uint16_t> decodeOneFrame(const std::vector<uint8_t>& payload, uint32_t* width,
                                     uint32_t* height) {
  size_t pos = 0;
  const uint32_t w = readU32(payload, pos);
  const uint32_t h = readU32(payload, pos);
  if (pos + 4 > payload.size()) throw DecodeError("frame payload truncated", pos);
  const bool lossless = payload[pos] != 0;
  const int qp = payload[pos + 2] | (payload[pos + 3] << 8);
  pos += 4;
  if (w == 0 || h == 0 || static_cast<uint64_t>(w) * h > (1ull << 32)) {
    throw DecodeError("implausible frame dimensions", 0);
  }
  *width = w;
  *height = h;

  BitReader reader(payload.data() + pos, payload.size() - pos);
  std::vector<uint16_t> samples(static_cast<size_t>(w) * h);
  if (lossless) {
    std::vector<int64_t> deltas(samples.size());
    decodeLevels(reader, deltas);
    int64_t prev = 0;
    for (size_t i = 0; i < samples.size(); ++i) {
      prev += deltas[i];
      if (prev < -kCenterOffset || prev > 32767) {
        throw DecodeError("lossless sample out of range", pos + reader.byteOffset());
      }
      samples[i] = static_cast<uint16_t>(prev + kCenterOffset);
    }
  } else {
    const BlockSpec block{4, 4};
    const Dct2d dct(block);
    const double step = builtinQuantStep(qp);
    const uint32_t padW = (w + block.cols - 1) / block.cols * block.cols;
    const uint32_t padH = (h + block.rows - 1) / block.rows * block.rows;
    const size_t blockLen = static_cast<size_t>(block.rows) * block.cols;
    std::vector<int64_t> levels(static_cast<size_t>(padW) * padH);
    decodeLevels(reader, levels);
    const auto order = zigzagOrder(block.rows, block.cols);
    std::vector<int64_t> blockLevels(blockLen);
    std::vector<double> buf(blockLen);
    size_t cursor = 0;
    int64_t prevDc = 0;
    for (uint32_t br = 0; br < padH; br += block.rows) {
      for (uint32_t bc = 0; bc < padW; bc += block.cols) {
        for (size_t k = 0; k < blockLen; ++k) {
          blockLevels[static_cast<size_t>(order[k].first) * block.cols + order[k].second] =
              levels[cursor++];
        }
        blockLevels[0] += prevDc;
        prevDc = blockLevels[0];
        for (size_t k = 0; k < blockLen; ++k) {
          buf[k] = static_cast<double>(blockLevels[k]) * step;
        }
        dct.inverse(buf.data(), buf.data());
        for (int r = 0; r < block.rows; ++r) {
          const uint32_t sr = br + r;
          if (sr >= h) continue;
          for (int c = 0; c < block.cols; ++c) {
            const uint32_t sc = bc + c;
            if (sc >= w) continue;
            const double recon = std::floor(buf[static_cast<size_t>(r) * block.cols + c] + 0.5);
            const double clamped = std::clamp(recon, -32768.0, 32767.0);
            samples[static_cast<size_t>(sr) * w + sc] =
                static_cast<uint16_t>(static_cast<int32_t>(clamped) + kCenterOffset);
          }
        }
      }
    }
  }
  return samples;
}

}  // namespace

uint32_t frameIndexOf(const FramePack& pack, int group, int plane, int channel) {
  if (pack.layout == FrameLayout::tiledPlanes) {
    return static_cast<uint32_t>(group) * pack.channelCount + channel;
  }
  return (static_cast<uint32_t>(group) * pack.planeCount + plane) * pack.channelCount + channel;
}

FramePack packPlanes(const TriPlaneField& field, FrameLayout layout) {
  FramePack pack;
  pack.layout = layout;
  pack.channelCount = static_cast<uint32_t>(field.channels);
  pack.planeResolution = static_cast<uint32_t>(field.resolution);
  const uint32_t res = pack.planeResolution;
  pack.width = layout == FrameLayout::tiledPlanes ? res * kPlanesPerGroup : res;
  pack.height = res;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& group : field.groups) {
    for (const auto& plane : group.planes) {
      for (double v : plane.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  pack.normMin = lo;
  pack.normMax = hi;
  pack.constantPack = !(hi > lo);

  const uint32_t frameCount = layout == FrameLayout::tiledPlanes
                                  ? kGroupCount * pack.channelCount
                                  : kGroupCount * kPlanesPerGroup * pack.channelCount;
  pack.frames.assign(frameCount,
                     std::vector<uint16_t>(static_cast<size_t>(pack.width) * pack.height, 0));
  if (pack.constantPack) {
    return pack;
  }
  for (int g = 0; g < kGroupCount; ++g) {
    for (int p = 0; p < kPlanesPerGroup; ++p) {
      const FeaturePlane& plane = field.groups[g].planes[p];
      for (int c = 0; c < field.channels; ++c) {
        auto& frame = pack.frames[frameIndexOf(pack, g, p, c)];
        const uint32_t colOffset = pack.layout == FrameLayout::tiledPlanes ? p * res : 0;
        for (uint32_t row = 0; row < res; ++row) {
          for (uint32_t col = 0; col < res; ++col) {
            frame[static_cast<size_t>(row) * pack.width + colOffset + col] =
                quantizeNorm(plane.at(c, row, col), lo, hi);
          }
        }
      }
    }
  }
  return pack;
}

void unpackPlanes(const FramePack& pack, TriPlaneField& field) {
  if (static_cast<uint32_t>(field.resolution) != pack.planeResolution ||
      static_cast<uint32_t>(field.channels) != pack.channelCount) {
    throw std::invalid_argument("unpackPlanes: field skeleton does not match pack");
  }
  const uint32_t expected = pack.layout == FrameLayout::tiledPlanes
                                ? kGroupCount * pack.channelCount
                                : kGroupCount * kPlanesPerGroup * pack.channelCount;
  if (pack.frames.size() != expected) {
    throw DecodeError("frame pack layout mismatch", 0);
  }
  const uint32_t res = pack.planeResolution;
  const double span = pack.normMax - pack.normMin;
  for (int g = 0; g < kGroupCount; ++g) {
    for (int p = 0; p < kPlanesPerGroup; ++p) {
      FeaturePlane& plane = field.groups[g].planes[p];
      for (int c = 0; c < field.channels; ++c) {
        const auto& frame = pack.frames[frameIndexOf(pack, g, p, c)];
        const uint32_t colOffset = pack.layout == FrameLayout::tiledPlanes ? p * res : 0;
        for (uint32_t row = 0; row < res; ++row) {
          for (uint32_t col = 0; col < res; ++col) {
            const uint16_t q = frame[static_cast<size_t>(row) * pack.width + colOffset + col];
            plane.at(c, row, col) =
                pack.constantPack
                    ? pack.normMin
                    : pack.normMin + static_cast<double>(q) / 65535.0 * span;
          }
        }
      }
    }
  }
}

double builtinQuantStep(int qp) { return std::pow(2.0, static_cast<double>(qp) / 6.0); }

double builtinSampleErrorBound(const CodecSettings& settings, const BlockSpec& block) {
  if (settings.lossless) return 0.0;
  const Dct2d dct(block);
  // step/2 per coefficient, spread by the basis, plus integer rounding.
  return 0.5 * builtinQuantStep(settings.qp) * dct.sampleAmplification() + 0.5;
}

std::vector<uint8_t> encodeFramesBuiltin(const FramePack& pack, const CodecSettings& settings) {
  std::vector<std::vector<uint8_t>> payloads;
  payloads.reserve(pack.frames.size());
  for (const auto& frame : pack.frames) {
    payloads.push_back(
        encodeOneFrame(frame, pack.width, pack.height, settings.qp, settings.lossless));
  }
  std::vector<uint8_t> out;
  out.insert(out.end(), kFrameMagic, kFrameMagic + 4);
  putU32(out, static_cast<uint32_t>(payloads.size()));
  for (const auto& payload : payloads) {
    putU64(out, payload.size());
  }
  for (const auto& payload : payloads) {
    out.insert(out.end(), payload.begin(), payload.end());
  }
  return out;
}

FramePack decodeFramesBuiltin(const std::vector<uint8_t>& bitstream) {
  size_t pos = 0;
  if (bitstream.size() < 8 || std::memcmp(bitstream.data(), kFrameMagic, 4) != 0) {
    throw DecodeError("bad frame bitstream magic", 0);
  }
  pos = 4;
  const uint32_t frameCount = readU32(bitstream, pos);
  std::vector<uint64_t> lengths(frameCount);
  for (uint32_t i = 0; i < frameCount; ++i) {
    lengths[i] = readU64(bitstream, pos);
  }
  FramePack pack;
  for (uint32_t i = 0; i < frameCount; ++i) {
    if (pos + lengths[i] > bitstream.size()) {
      throw DecodeError("frame payload extends past stream", pos);
    }
    std::vector<uint8_t> payload(bitstream.begin() + pos, bitstream.begin() + pos + lengths[i]);
    uint32_t w = 0;
    uint32_t h = 0;
    try {
      pack.frames.push_back(decodeOneFrame(payload, &w, &h));
    } catch (const DecodeError& e) {
      throw DecodeError(std::string("frame ") + std::to_string(i) + ": " + e.what(),
                        pos + e.byteOffset);
    }
    if (i == 0) {
      pack.width = w;
      pack.height = h;
    } else if (w != pack.width || h != pack.height) {
      throw DecodeError("inconsistent frame dimensions", pos);
    }
    pos += lengths[i];
  }
  return pack;
}

PositionPack buildPositionPack(const std::vector<QuantizedPosition>& positions, uint32_t width,
                               uint32_t height) {
  PositionPack pack;
  pack.width = width;
  pack.height = height;
  pack.pointCount = positions.size();
  const size_t perFrame = static_cast<size_t>(width) * height;
  const size_t total = positions.size() * 3;
  const size_t frameCount = total == 0 ? 0 : (total + perFrame - 1) / perFrame;
  pack.frames.assign(frameCount, std::vector<uint16_t>(perFrame, 0));
  auto put = [&](size_t idx, uint16_t v) { pack.frames[idx / perFrame][idx % perFrame] = v; };
  const size_t n = positions.size();
  for (size_t i = 0; i < n; ++i) {
    put(i, positions[i].qx);
    put(n + i, positions[i].qy);
    put(2 * n + i, positions[i].qz);
  }
  return pack;
}

std::vector<uint8_t> encodePositions(const PositionPack& pack) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kPositionMagic, kPositionMagic + 4);
  putU64(out, pack.pointCount);
  putU32(out, pack.width);
  putU32(out, pack.height);
  putU32(out, static_cast<uint32_t>(pack.frames.size()));

  const size_t perFrame = static_cast<size_t>(pack.width) * pack.height;
  auto sampleAt = [&](size_t idx) -> uint16_t {
    return pack.frames[idx / perFrame][idx % perFrame];
  };
  BitWriter writer;
  const size_t n = pack.pointCount;
  for (int stream = 0; stream < 3; ++stream) {
    int64_t prev = 0;
    for (size_t i = 0; i < n; ++i) {
      const int64_t v = sampleAt(static_cast<size_t>(stream) * n + i);
      writer.putSignedExpGolomb(v - prev);
      prev = v;
    }
  }
  const auto& bits = writer.bytes();
  out.insert(out.end(), bits.begin(), bits.end());
  return out;
}

PositionPack decodePositionPack(const std::vector<uint8_t>& bitstream) {
  if (bitstream.size() < 24 || std::memcmp(bitstream.data(), kPositionMagic, 4) != 0) {
    throw DecodeError("bad position bitstream magic", 0);
  }
  size_t pos = 4;
  PositionPack pack;
  pack.pointCount = readU64(bitstream, pos);
  pack.width = readU32(bitstream, pos);
  pack.height = readU32(bitstream, pos);
  const uint32_t frameCount = readU32(bitstream, pos);
  const size_t perFrame = static_cast<size_t>(pack.width) * pack.height;
  if (perFrame == 0 || static_cast<uint64_t>(frameCount) * perFrame < pack.pointCount * 3) {
    throw DecodeError("position pack too small for point count", pos);
  }
  pack.frames.assign(frameCount, std::vector<uint16_t>(perFrame, 0));

  BitReader reader(bitstream.data() + pos, bitstream.size() - pos);
  auto put = [&](size_t idx, uint16_t v) { pack.frames[idx / perFrame][idx % perFrame] = v; };
  const size_t n = pack.pointCount;
  for (int stream = 0; stream < 3; ++stream) {
    int64_t prev = 0;
    for (size_t i = 0; i < n; ++i) {
      prev += reader.getSignedExpGolomb();
      if (prev < 0 || prev > 65535) {
        throw DecodeError("position sample out of range", pos + reader.byteOffset());
      }
      put(static_cast<size_t>(stream) * n + i, static_cast<uint16_t>(prev));
    }
  }
  return pack;
}

std::vector<QuantizedPosition> decodePositions(const std::vector<uint8_t>& bitstream) {
  const PositionPack pack = decodePositionPack(bitstream);
  const size_t perFrame = static_cast<size_t>(pack.width) * pack.height;
  auto sampleAt = [&](size_t idx) -> uint16_t {
    return pack.frames[idx / perFrame][idx % perFrame];
  };
  std::vector<QuantizedPosition> out(pack.pointCount);
  const size_t n = pack.pointCount;
  for (size_t i = 0; i < n; ++i) {
    out[i].qx = sampleAt(i);
    out[i].qy = sampleAt(n + i);
    out[i].qz = sampleAt(2 * n + i);
  }
  return out;
}

std::string buildExternalCommand(CodecBackend backend, uint32_t frameCount, uint32_t width,
                                 uint32_t height, const CodecSettings& settings,
                                 const ExternalJob& job) {
  std::ostringstream cmd;
  if (backend == CodecBackend::externalHm) {
    const char* bin = std::getenv("GSCODEC_HM_BIN");
    cmd << (bin != nullptr ? bin : "TAppEncoder") << " -c " << job.configFile
        << " --InputFile=" << job.inputFile << " --SourceWidth=" << width
        << " --SourceHeight=" << height
        << " --InputBitDepth=16 --InternalBitDepth=16 --OutputBitDepth=16"
        << " --InputChromaFormat=400 --FrameRate=" << job.framerate
        << " --FramesToBeEncoded=" << frameCount << " --QP=" << settings.qp
        << " --BitstreamFile=" << job.bitstreamFile;
    return cmd.str();
  }
  if (backend == CodecBackend::externalX265) {
    const char* bin = std::getenv("GSCODEC_FFMPEG_BIN");
    cmd << (bin != nullptr ? bin : "ffmpeg") << " -y -pix_fmt gray16be -s " << width << "x"
        << height << " -framerate " << job.framerate << " -i " << job.inputFile
        << " -c:v libx265 -x265-params lossless=1 " << job.bitstreamFile;
    return cmd.str();
  }
  throw std::invalid_argument("buildExternalCommand: backend has no external command");
}

std::string buildHmGopConfig(const CodecSettings& settings) {
  static const int kGopPoc[16] = {16, 8, 4, 2, 1, 3, 6, 5, 7, 12, 10, 9, 11, 14, 13, 15};
  std::ostringstream out;
  out << "#        Type POC QPoffset\n";
  for (int i = 0; i < 16; ++i) {
    const int offset =
        i < static_cast<int>(settings.qpOffsets.size()) ? settings.qpOffsets[i] : 0;
    char row[64];
    std::snprintf(row, sizeof(row), "Frame%d:%s B %4d %3d\n", i + 1, i < 9 ? " " : "",
                  kGopPoc[i], offset);
    out << row;
  }
  return out.str();
}

void writeRawFrames(const std::vector<std::vector<uint16_t>>& frames, const std::string& path,
                    bool bigEndian) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("writeRawFrames: cannot open " + path);
  }
  for (const auto& frame : frames) {
    for (const uint16_t sample : frame) {
      const uint8_t hi = static_cast<uint8_t>(sample >> 8);
      const uint8_t lo = static_cast<uint8_t>(sample & 0xff);
      if (bigEndian) {
        out.put(static_cast<char>(hi)).put(static_cast<char>(lo));
      } else {
        out.put(static_cast<char>(lo)).put(static_cast<char>(hi));
      }
    }
  }
}

}  // namespace gsc
