#include "gsc/field.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gsc {

namespace {

constexpr double kScaleLogMin = -10.0;
constexpr double kScaleLogMax = -0.1;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct BilinearTap {
  int x0, x1, y0, y1;
  double w00, w01, w10, w11;
};

// Texel-center mapping of a contracted coordinate in [-2, 2]; out-of-range
// coordinates clamp to the edge texels.
BilinearTap bilinearTap(double u, double v, int resolution) {
  const double scale = (resolution - 1) / 4.0;
  double fu = (u + 2.0) * scale;
  double fv = (v + 2.0) * scale;
  fu = std::clamp(fu, 0.0, static_cast<double>(resolution - 1));
  fv = std::clamp(fv, 0.0, static_cast<double>(resolution - 1));
  BilinearTap tap;
  tap.x0 = static_cast<int>(fu);
  tap.y0 = static_cast<int>(fv);
  tap.x1 = std::min(tap.x0 + 1, resolution - 1);
  tap.y1 = std::min(tap.y0 + 1, resolution - 1);
  const double ax = fu - tap.x0;
  const double ay = fv - tap.y0;
  tap.w00 = (1.0 - ax) * (1.0 - ay);
  tap.w01 = ax * (1.0 - ay);
  tap.w10 = (1.0 - ax) * ay;
  tap.w11 = ax * ay;
  return tap;
}

double samplePlaneChannel(const FeaturePlane& plane, int c, const BilinearTap& tap) {
  return tap.w00 * plane.at(c, tap.y0, tap.x0) + tap.w01 * plane.at(c, tap.y0, tap.x1) +
         tap.w10 * plane.at(c, tap.y1, tap.x0) + tap.w11 * plane.at(c, tap.y1, tap.x1);
}

}  // namespace

int attributeOutputWidth(AttributeKind kind, int shDegree) {
  switch (kind) {
    case AttributeKind::color:
      return shCoefficientCount(shDegree);
    case AttributeKind::scale:
      return 3;
    case AttributeKind::rotation:
      return 4;
    case AttributeKind::opacity:
      return 1;
  }
  return 0;
}

size_t TriPlaneField::parameterCount() const {
  size_t total = 0;
  for (const auto& group : groups) {
    for (const auto& plane : group.planes) {
      total += plane.values.size();
    }
  }
  return total;
}

void GaussianCloud::resize(size_t n) {
  positions.resize(n);
  sh.resize(n * shCoefficientCount(shDegree));
  scales.resize(n * 3);
  rotations.resize(n * 4);
  opacities.resize(n);
}

TriPlaneField makeField(int resolution, int channels, int shDegree, std::mt19937_64& rng) {
  if (resolution < 2 || channels < 1) {
    throw std::invalid_argument("makeField: resolution >= 2 and channels >= 1 required");
  }
  std::uniform_real_distribution<double> init(-0.1, 0.1);
  TriPlaneField field;
  field.resolution = resolution;
  field.channels = channels;
  field.shDegree = shDegree;
  for (int g = 0; g < kGroupCount; ++g) {
    field.groups[g].kind = static_cast<AttributeKind>(g);
    for (auto& plane : field.groups[g].planes) {
      plane.resolution = resolution;
      plane.channels = channels;
      plane.values.resize(static_cast<size_t>(channels) * resolution * resolution);
      for (double& v : plane.values) {
        v = init(rng);
      }
    }
  }
  return field;
}

MlpDecoder makeDecoder(int inputWidth, int hiddenWidth, int outputWidth, std::mt19937_64& rng) {
  MlpDecoder mlp;
  mlp.inputWidth = inputWidth;
  mlp.hiddenWidth = hiddenWidth;
  mlp.outputWidth = outputWidth;
  auto initLayer = [&](std::vector<double>& w, std::vector<double>& b, int out, int in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    w.resize(static_cast<size_t>(out) * in);
    b.resize(out);
    for (double& v : w) v = dist(rng);
    for (double& v : b) v = dist(rng);
  };
  initLayer(mlp.w1, mlp.b1, hiddenWidth, inputWidth);
  initLayer(mlp.w2, mlp.b2, hiddenWidth, hiddenWidth);
  initLayer(mlp.w3, mlp.b3, outputWidth, hiddenWidth);
  return mlp;
}

DecoderSet makeDecoders(const TriPlaneField& field, int hiddenWidth, std::mt19937_64& rng) {
  DecoderSet decoders;
  for (int g = 0; g < kGroupCount; ++g) {
    decoders[g] = makeDecoder(field.channels, hiddenWidth,
                              attributeOutputWidth(static_cast<AttributeKind>(g), field.shDegree),
                              rng);
  }
  return decoders;
}

std::vector<double> sampleFeatures(const TriPlaneGroup& group, const ContractedPoint& p) {
  const int channels = group.planes[0].channels;
  const int res = group.planes[0].resolution;
  const BilinearTap taps[3] = {
      bilinearTap(p.x, p.y, res),
      bilinearTap(p.x, p.z, res),
      bilinearTap(p.y, p.z, res),
  };
  std::vector<double> feature(channels, 1.0);
  for (int k = 0; k < kPlanesPerGroup; ++k) {
    for (int c = 0; c < channels; ++c) {
      feature[c] *= samplePlaneChannel(group.planes[k], c, taps[k]);
    }
  }
  return feature;
}

void mlpForward(const MlpDecoder& mlp, const double* input, double* output) {
  std::vector<double> h1(mlp.hiddenWidth);
  std::vector<double> h2(mlp.hiddenWidth);
  for (int i = 0; i < mlp.hiddenWidth; ++i) {
    double acc = mlp.b1[i];
    const double* row = mlp.w1.data() + static_cast<size_t>(i) * mlp.inputWidth;
    for (int j = 0; j < mlp.inputWidth; ++j) acc += row[j] * input[j];
    h1[i] = acc > 0.0 ? acc : 0.0;
  }
  for (int i = 0; i < mlp.hiddenWidth; ++i) {
    double acc = mlp.b2[i];
    const double* row = mlp.w2.data() + static_cast<size_t>(i) * mlp.hiddenWidth;
    for (int j = 0; j < mlp.hiddenWidth; ++j) acc += row[j] * h1[j];
    h2[i] = acc > 0.0 ? acc : 0.0;
  }
  for (int i = 0; i < mlp.outputWidth; ++i) {
    double acc = mlp.b3[i];
    const double* row = mlp.w3.data() + static_cast<size_t>(i) * mlp.hiddenWidth;
    for (int j = 0; j < mlp.hiddenWidth; ++j) acc += row[j] * h2[j];
    output[i] = acc;
  }
}

double opacityFromRaw(double raw) { return sigmoid(raw); }

std::array<double, 3> scaleFromRaw(const std::array<double, 3>& raw) {
  std::array<double, 3> out;
  for (int i = 0; i < 3; ++i) {
    const double logScale = kScaleLogMin + (kScaleLogMax - kScaleLogMin) * sigmoid(raw[i]);
    out[i] = std::exp(logScale);
  }
  return out;
}

std::array<double, 4> rotationFromRaw(const std::array<double, 4>& raw) {
  const double norm = std::sqrt(raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2] +
                                raw[3] * raw[3]);
  if (norm < 1e-12) {
    return {1.0, 0.0, 0.0, 0.0};
  }
  return {raw[0] / norm, raw[1] / norm, raw[2] / norm, raw[3] / norm};
}

GaussianAttributes decodeAttributes(const TriPlaneField& field, const DecoderSet& decoders,
                                    const ContractedPoint& p) {
  GaussianAttributes out;
  out.sh.resize(shCoefficientCount(field.shDegree));
  for (int g = 0; g < kGroupCount; ++g) {
    const std::vector<double> feature = sampleFeatures(field.groups[g], p);
    const MlpDecoder& mlp = decoders[g];
    std::vector<double> raw(mlp.outputWidth);
    mlpForward(mlp, feature.data(), raw.data());
    switch (field.groups[g].kind) {
      case AttributeKind::color:
        std::copy(raw.begin(), raw.end(), out.sh.begin());
        break;
      case AttributeKind::scale:
        out.scale = scaleFromRaw({raw[0], raw[1], raw[2]});
        break;
      case AttributeKind::rotation:
        out.rotation = rotationFromRaw({raw[0], raw[1], raw[2], raw[3]});
        break;
      case AttributeKind::opacity:
        out.opacity = opacityFromRaw(raw[0]);
        break;
    }
  }
  return out;
}

GaussianCloud predictCloud(const TriPlaneField& field, const DecoderSet& decoders,
                           const std::vector<Point3>& positions) {
  GaussianCloud cloud;
  cloud.shDegree = field.shDegree;
  cloud.resize(positions.size());
  const int shCount = shCoefficientCount(field.shDegree);
  for (size_t i = 0; i < positions.size(); ++i) {
    cloud.positions[i] = positions[i];
    const GaussianAttributes attrs = decodeAttributes(field, decoders, contract(positions[i]));
    std::copy(attrs.sh.begin(), attrs.sh.end(), cloud.sh.begin() + i * shCount);
    for (int a = 0; a < 3; ++a) cloud.scales[i * 3 + a] = attrs.scale[a];
    for (int a = 0; a < 4; ++a) cloud.rotations[i * 4 + a] = attrs.rotation[a];
    cloud.opacities[i] = attrs.opacity;
  }
  return cloud;
}

GaussianCloud permuteCloud(const GaussianCloud& cloud, const std::vector<size_t>& perm) {
  if (perm.size() != cloud.size()) {
    throw std::invalid_argument("permuteCloud: permutation size mismatch");
  }
  GaussianCloud out;
  out.shDegree = cloud.shDegree;
  out.resize(cloud.size());
  const size_t shCount = shCoefficientCount(cloud.shDegree);
  for (size_t i = 0; i < perm.size(); ++i) {
    const size_t s = perm[i];
    out.positions[i] = cloud.positions[s];
    std::copy(cloud.sh.begin() + s * shCount, cloud.sh.begin() + (s + 1) * shCount,
              out.sh.begin() + i * shCount);
    for (int a = 0; a < 3; ++a) out.scales[i * 3 + a] = cloud.scales[s * 3 + a];
    for (int a = 0; a < 4; ++a) out.rotations[i * 4 + a] = cloud.rotations[s * 4 + a];
    out.opacities[i] = cloud.opacities[s];
  }
  return out;
}

}  // namespace gsc
