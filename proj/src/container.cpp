#include "gsc/container.h"

#include <cmath>
#include <cstring>
#include <fstream>

#include "gsc/errors.h"

namespace gsc {

namespace {

constexpr char kMagic[4] = {'G', 'S', 'P', 'C'};
constexpr uint32_t kVersion = 1;

class Writer {
 public:
  void u8(uint8_t v) { bytes_.push_back(v); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
  }
  void f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void raw(const std::vector<uint8_t>& data) {
    bytes_.insert(bytes_.end(), data.begin(), data.end());
  }
  size_t size() const { return bytes_.size(); }
  std::vector<uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<uint8_t>& bytes, std::string section)
      : bytes_(bytes), section_(std::move(section)) {}

  void section(std::string name) { section_ = std::move(name); }

  uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() {
    const uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::vector<uint8_t> raw(size_t count) {
    need(count);
    std::vector<uint8_t> out(bytes_.begin() + pos_, bytes_.begin() + pos_ + count);
    pos_ += count;
    return out;
  }
  size_t pos() const { return pos_; }

 private:
  void need(size_t count) {
    if (pos_ + count > bytes_.size()) {
      throw FormatError("container truncated in section '" + section_ + "'");
    }
  }
  const std::vector<uint8_t>& bytes_;
  std::string section_;
  size_t pos_ = 0;
};

void writeDecoder(Writer& w, const MlpDecoder& mlp) {
  w.u32(static_cast<uint32_t>(mlp.inputWidth));
  w.u32(static_cast<uint32_t>(mlp.hiddenWidth));
  w.u32(static_cast<uint32_t>(mlp.outputWidth));
  for (const auto* tensor : {&mlp.w1, &mlp.b1, &mlp.w2, &mlp.b2, &mlp.w3, &mlp.b3}) {
    for (double v : *tensor) w.f32(static_cast<float>(v));
  }
}

MlpDecoder readDecoder(Reader& r) {
  MlpDecoder mlp;
  mlp.inputWidth = static_cast<int>(r.u32());
  mlp.hiddenWidth = static_cast<int>(r.u32());
  mlp.outputWidth = static_cast<int>(r.u32());
  if (mlp.inputWidth <= 0 || mlp.hiddenWidth <= 0 || mlp.outputWidth <= 0 ||
      mlp.inputWidth > 4096 || mlp.hiddenWidth > 65536 || mlp.outputWidth > 4096) {
    throw FormatError("container decoder section: implausible layer shape");
  }
  mlp.w1.resize(static_cast<size_t>(mlp.hiddenWidth) * mlp.inputWidth);
  mlp.b1.resize(mlp.hiddenWidth);
  mlp.w2.resize(static_cast<size_t>(mlp.hiddenWidth) * mlp.hiddenWidth);
  mlp.b2.resize(mlp.hiddenWidth);
  mlp.w3.resize(static_cast<size_t>(mlp.outputWidth) * mlp.hiddenWidth);
  mlp.b3.resize(mlp.outputWidth);
  for (auto* tensor : {&mlp.w1, &mlp.b1, &mlp.w2, &mlp.b2, &mlp.w3, &mlp.b3}) {
    for (double& v : *tensor) v = r.f32();
  }
  return mlp;
}

Container assembleContainer(const TriPlaneField& field, const DecoderSet& decoders,
                            const std::vector<Point3>& positions,
                            const EncodeSettings& settings, const EntropyModel& model,
                            const ProgressiveSchedule& schedule) {
  Container c;
  c.pointCount = positions.size();
  c.shDegree = field.shDegree;
  c.planeResolution = field.resolution;
  c.planeChannels = field.channels;
  c.layout = settings.layout;
  c.qStep = model.qStep;
  c.block = model.block;
  c.schedule = schedule;
  c.decoders = decoders;
  c.entropyScales.reserve(model.scales.size());
  for (double s : model.scales) c.entropyScales.push_back(static_cast<float>(s));

  if (!positions.empty()) {
    auto [quantized, box] = quantizePositions(positions);
    c.bbox = box;
    const std::vector<size_t> perm = mortonOrder(quantized);
    std::vector<QuantizedPosition> sorted(quantized.size());
    for (size_t i = 0; i < perm.size(); ++i) sorted[i] = quantized[perm[i]];
    c.positionBitstream = encodePositions(buildPositionPack(sorted));
  } else {
    c.bbox.zeroExtent = {true, true, true};
    c.positionBitstream = encodePositions(buildPositionPack({}));
  }
  return c;
}

}  // namespace

Container encodeScene(const TriPlaneField& field, const DecoderSet& decoders,
                      const std::vector<Point3>& positions, const EncodeSettings& settings,
                      const EntropyModel& model, const ProgressiveSchedule& schedule) {
  if (settings.codec.backend != CodecBackend::builtin) {
    throw std::invalid_argument(
        "encodeScene: external backends need encodeSceneExternal with the produced bitstream");
  }
  Container c = assembleContainer(field, decoders, positions, settings, model, schedule);
  const FramePack pack = packPlanes(field, settings.layout);
  c.normMin = pack.normMin;
  c.normMax = pack.normMax;
  c.constantPack = pack.constantPack;
  c.planeBackend = CodecBackend::builtin;
  c.planeBitstream = encodeFramesBuiltin(pack, settings.codec);
  return c;
}

Container encodeSceneExternal(const TriPlaneField& field, const DecoderSet& decoders,
                              const std::vector<Point3>& positions,
                              const EncodeSettings& settings, const EntropyModel& model,
                              const ProgressiveSchedule& schedule,
                              std::vector<uint8_t> externalBitstream) {
  Container c = assembleContainer(field, decoders, positions, settings, model, schedule);
  const FramePack pack = packPlanes(field, settings.layout);
  c.normMin = pack.normMin;
  c.normMax = pack.normMax;
  c.constantPack = pack.constantPack;
  c.planeBackend = settings.codec.backend;
  c.planeBitstream = std::move(externalBitstream);
  return c;
}

DecodedArtifact decodeArtifact(const Container& container) {
  if (container.planeBackend != CodecBackend::builtin) {
    throw FormatError(
        "container plane section was produced by an external encoder; decode it with the "
        "matching external tool first");
  }
  DecodedArtifact out;
  out.field.resolution = container.planeResolution;
  out.field.channels = container.planeChannels;
  out.field.shDegree = container.shDegree;
  for (int g = 0; g < kGroupCount; ++g) {
    out.field.groups[g].kind = static_cast<AttributeKind>(g);
    for (auto& plane : out.field.groups[g].planes) {
      plane.resolution = container.planeResolution;
      plane.channels = container.planeChannels;
      plane.values.assign(static_cast<size_t>(container.planeChannels) *
                              container.planeResolution * container.planeResolution,
                          0.0);
    }
  }

  FramePack pack = decodeFramesBuiltin(container.planeBitstream);
  pack.layout = container.layout;
  pack.groupCount = kGroupCount;
  pack.planeCount = kPlanesPerGroup;
  pack.channelCount = static_cast<uint32_t>(container.planeChannels);
  pack.planeResolution = static_cast<uint32_t>(container.planeResolution);
  pack.normMin = container.normMin;
  pack.normMax = container.normMax;
  pack.constantPack = container.constantPack;
  if (pack.frames.empty()) {
    pack.width = container.layout == FrameLayout::tiledPlanes
                     ? pack.planeResolution * kPlanesPerGroup
                     : pack.planeResolution;
    pack.height = pack.planeResolution;
  }
  unpackPlanes(pack, out.field);

  out.decoders = container.decoders;
  const std::vector<QuantizedPosition> quantized = decodePositions(container.positionBitstream);
  out.positions.reserve(quantized.size());
  for (const auto& q : quantized) {
    out.positions.push_back(dequantizePosition(q, container.bbox));
  }

  out.model = makeEntropyModel(container.planeChannels, container.qStep, container.block);
  if (container.entropyScales.size() == out.model.scales.size()) {
    for (size_t i = 0; i < out.model.scales.size(); ++i) {
      out.model.scales[i] = container.entropyScales[i];
    }
  }
  return out;
}

GaussianCloud decodeScene(const Container& container) {
  const DecodedArtifact artifact = decodeArtifact(container);
  return predictCloud(artifact.field, artifact.decoders, artifact.positions);
}

std::vector<uint8_t> serializeContainer(const Container& container) {
  Writer w;
  w.raw({kMagic[0], kMagic[1], kMagic[2], kMagic[3]});
  w.u32(kVersion);
  w.u64(container.pointCount);
  for (int a = 0; a < 3; ++a) w.f64(container.bbox.minCorner[a]);
  for (int a = 0; a < 3; ++a) w.f64(container.bbox.extent[a]);
  uint8_t zeroMask = 0;
  for (int a = 0; a < 3; ++a) {
    if (container.bbox.zeroExtent[a]) zeroMask |= static_cast<uint8_t>(1 << a);
  }
  w.u8(zeroMask);
  w.u8(container.contraction ? 1 : 0);
  w.u32(static_cast<uint32_t>(container.shDegree));
  w.u32(static_cast<uint32_t>(container.planeResolution));
  w.u32(static_cast<uint32_t>(container.planeChannels));
  w.u32(static_cast<uint32_t>(container.layout));
  w.f64(container.normMin);
  w.f64(container.normMax);
  w.u8(container.constantPack ? 1 : 0);
  w.f64(container.qStep);
  w.u32(static_cast<uint32_t>(container.block.rows));
  w.u32(static_cast<uint32_t>(container.block.cols));
  w.u32(static_cast<uint32_t>(container.schedule.stageIterations.size()));
  for (int t : container.schedule.stageIterations) w.u32(static_cast<uint32_t>(t));
  for (int l : container.schedule.activeCounts) w.u32(static_cast<uint32_t>(l));
  w.u8(static_cast<uint8_t>(container.planeBackend));
  w.u64(container.planeBitstream.size());
  w.raw(container.planeBitstream);
  w.u64(container.positionBitstream.size());
  w.raw(container.positionBitstream);
  w.u32(kGroupCount);
  for (const auto& decoder : container.decoders) {
    writeDecoder(w, decoder);
  }
  w.u32(kGroupCount);
  w.u32(kPlanesPerGroup);
  w.u32(static_cast<uint32_t>(container.planeChannels));
  w.u32(static_cast<uint32_t>(container.block.rows * container.block.cols));
  w.u64(container.entropyScales.size());
  for (float s : container.entropyScales) w.f32(s);
  return w.take();
}

Container parseContainer(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad container magic");
  }
  Reader r(bytes, "header");
  r.raw(4);
  Container c;
  c.version = r.u32();
  if (c.version != kVersion) {
    throw FormatError("unsupported container version " + std::to_string(c.version));
  }
  c.pointCount = r.u64();
  for (int a = 0; a < 3; ++a) c.bbox.minCorner[a] = r.f64();
  for (int a = 0; a < 3; ++a) c.bbox.extent[a] = r.f64();
  const uint8_t zeroMask = r.u8();
  for (int a = 0; a < 3; ++a) c.bbox.zeroExtent[a] = (zeroMask >> a) & 1;
  c.contraction = r.u8() != 0;
  c.shDegree = static_cast<int>(r.u32());
  c.planeResolution = static_cast<int>(r.u32());
  c.planeChannels = static_cast<int>(r.u32());
  if (c.planeResolution < 2 || c.planeResolution > 1 << 16 || c.planeChannels < 1 ||
      c.planeChannels > 4096 || c.shDegree < 0 || c.shDegree > 8) {
    throw FormatError("container header: implausible field shape");
  }
  const uint32_t layout = r.u32();
  if (layout > 1) throw FormatError("container header: unknown frame layout");
  c.layout = static_cast<FrameLayout>(layout);
  c.normMin = r.f64();
  c.normMax = r.f64();
  c.constantPack = r.u8() != 0;
  c.qStep = r.f64();
  c.block.rows = static_cast<int>(r.u32());
  c.block.cols = static_cast<int>(r.u32());
  if (c.block.rows < 2 || c.block.rows > 256 || c.block.cols < 2 || c.block.cols > 256) {
    throw FormatError("container header: implausible block spec");
  }
  const uint32_t stages = r.u32();
  if (stages > 1024) throw FormatError("container header: implausible schedule");
  c.schedule.stageIterations.resize(stages);
  c.schedule.activeCounts.resize(stages);
  for (uint32_t i = 0; i < stages; ++i) c.schedule.stageIterations[i] = static_cast<int>(r.u32());
  for (uint32_t i = 0; i < stages; ++i) c.schedule.activeCounts[i] = static_cast<int>(r.u32());
  const uint8_t backend = r.u8();
  if (backend > 2) throw FormatError("container header: unknown plane backend");
  c.planeBackend = static_cast<CodecBackend>(backend);

  r.section("plane bitstream");
  c.planeBitstream = r.raw(r.u64());
  r.section("position bitstream");
  c.positionBitstream = r.raw(r.u64());

  r.section("decoder weights");
  const uint32_t decoderCount = r.u32();
  if (decoderCount != kGroupCount) {
    throw FormatError("container decoder section: expected 4 decoders, got " +
                      std::to_string(decoderCount));
  }
  for (auto& decoder : c.decoders) {
    decoder = readDecoder(r);
  }
  for (int g = 0; g < kGroupCount; ++g) {
    const int expected =
        attributeOutputWidth(static_cast<AttributeKind>(g), c.shDegree);
    if (c.decoders[g].outputWidth != expected || c.decoders[g].inputWidth != c.planeChannels) {
      throw FormatError("container decoder section: shape does not match declared field");
    }
  }

  r.section("entropy scales");
  const uint32_t sg = r.u32();
  const uint32_t sp = r.u32();
  const uint32_t sc = r.u32();
  const uint32_t sb = r.u32();
  const uint64_t scaleCount = r.u64();
  if (scaleCount != static_cast<uint64_t>(sg) * sp * sc * sb || scaleCount > (1ull << 28)) {
    throw FormatError("container entropy-scale section: inconsistent dimensions");
  }
  c.entropyScales.resize(scaleCount);
  for (auto& s : c.entropyScales) s = r.f32();
  return c;
}

void writeContainerFile(const Container& container, const std::string& path) {
  const std::vector<uint8_t> bytes = serializeContainer(container);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

Container readContainerFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path);
  }
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return parseContainer(bytes);
}

SizeReport containerSizeReport(const Container& container) {
  SizeReport report;
  report.planeBytes = container.planeBitstream.size();
  report.positionBytes = container.positionBitstream.size();
  size_t decoderBytes = 0;
  for (const auto& d : container.decoders) {
    decoderBytes = decoderBytes + 12 + d.parameterCount() * sizeof(float);
  }
  report.decoderBytes = decoderBytes;
  report.entropyScaleBytes = container.entropyScales.size() * sizeof(float) + 24;
  report.totalBytes = serializeContainer(container).size();
  report.headerBytes = report.totalBytes - report.planeBytes - report.positionBytes -
                       report.decoderBytes - report.entropyScaleBytes;
  return report;
}

double planeReconstructionBound(const Container& container) {
  if (container.constantPack) return 0.0;
  const double span = container.normMax - container.normMin;
  const double quantBound = span / (2.0 * 65535.0);
  CodecSettings settings;
  settings.qp = 1;
  settings.lossless = true;
  // Recover the codec settings the plane section was encoded with.
  if (container.planeBackend == CodecBackend::builtin &&
      container.planeBitstream.size() >= 24) {
    // payload header: u32 w, u32 h, u8 lossless, u8 pad, u16 qp
    size_t tablePos = 8;
    const uint32_t frameCount = static_cast<uint32_t>(container.planeBitstream[4]) |
                                (static_cast<uint32_t>(container.planeBitstream[5]) << 8) |
                                (static_cast<uint32_t>(container.planeBitstream[6]) << 16) |
                                (static_cast<uint32_t>(container.planeBitstream[7]) << 24);
    const size_t payloadStart = tablePos + static_cast<size_t>(frameCount) * 8;
    if (frameCount > 0 && payloadStart + 12 <= container.planeBitstream.size()) {
      settings.lossless = container.planeBitstream[payloadStart + 8] != 0;
      settings.qp = container.planeBitstream[payloadStart + 10] |
                    (container.planeBitstream[payloadStart + 11] << 8);
    }
  }
  const double codecSampleBound = builtinSampleErrorBound(settings, {4, 4});
  // codec error is in 16-bit sample units; map back to plane values
  return quantBound + codecSampleBound * span / 65535.0;
}

}  // namespace gsc
