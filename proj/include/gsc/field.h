#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "gsc/geometry.h"

namespace gsc {

enum class AttributeKind : int { color = 0, scale = 1, rotation = 2, opacity = 3 };

constexpr int kGroupCount = 4;
constexpr int kPlanesPerGroup = 3;  // xy, xz, yz

inline int shCoefficientCount(int degree) { return 3 * (degree + 1) * (degree + 1); }

int attributeOutputWidth(AttributeKind kind, int shDegree);

// One axis-aligned feature plane: C channels of R x R values, channel-major.
struct FeaturePlane {
  int resolution = 0;
  int channels = 0;
  std::vector<double> values;  // channels * resolution * resolution

  double& at(int c, int row, int col) {
    return values[(static_cast<size_t>(c) * resolution + row) * resolution + col];
  }
  double at(int c, int row, int col) const {
    return values[(static_cast<size_t>(c) * resolution + row) * resolution + col];
  }
  const double* channelData(int c) const {
    return values.data() + static_cast<size_t>(c) * resolution * resolution;
  }
  double* channelData(int c) {
    return values.data() + static_cast<size_t>(c) * resolution * resolution;
  }
};

struct TriPlaneGroup {
  AttributeKind kind = AttributeKind::color;
  std::array<FeaturePlane, kPlanesPerGroup> planes;  // [0]=xy [1]=xz [2]=yz
};

struct TriPlaneField {
  int resolution = 0;
  int channels = 0;
  int shDegree = 0;
  std::array<TriPlaneGroup, kGroupCount> groups;

  size_t parameterCount() const;
};

// Three fully-connected layers; the two intermediate layers are rectified,
// the output layer is raw. Attribute-specific mappings happen outside.
struct MlpDecoder {
  int inputWidth = 0;
  int hiddenWidth = 0;
  int outputWidth = 0;
  std::vector<double> w1, b1;  // hidden x input, hidden
  std::vector<double> w2, b2;  // hidden x hidden, hidden
  std::vector<double> w3, b3;  // output x hidden, output

  size_t parameterCount() const {
    return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size();
  }
};

using DecoderSet = std::array<MlpDecoder, kGroupCount>;

struct GaussianAttributes {
  std::vector<double> sh;              // 3 * (D+1)^2 coefficients
  std::array<double, 3> scale{};       // strictly positive
  std::array<double, 4> rotation{};    // unit quaternion
  double opacity = 0.0;                // in (0, 1)
};

// Struct-of-arrays payload; per-point attribute rows are contiguous.
struct GaussianCloud {
  std::vector<Point3> positions;
  int shDegree = 0;
  std::vector<double> sh;         // N * shCoefficientCount(shDegree)
  std::vector<double> scales;     // N * 3
  std::vector<double> rotations;  // N * 4
  std::vector<double> opacities;  // N

  size_t size() const { return positions.size(); }
  void resize(size_t n);
};

TriPlaneField makeField(int resolution, int channels, int shDegree, std::mt19937_64& rng);
MlpDecoder makeDecoder(int inputWidth, int hiddenWidth, int outputWidth, std::mt19937_64& rng);
DecoderSet makeDecoders(const TriPlaneField& field, int hiddenWidth, std::mt19937_64& rng);

// Bilinear sample of each of the three planes at the point's (x,y), (x,z),
// (y,z) projections, combined per channel by element-wise product. The
// contracted domain [-2,2] maps affinely onto [0, R-1] texel centers with
// edge clamping.
std::vector<double> sampleFeatures(const TriPlaneGroup& group, const ContractedPoint& p);

void mlpForward(const MlpDecoder& mlp, const double* input, double* output);

GaussianAttributes decodeAttributes(const TriPlaneField& field, const DecoderSet& decoders,
                                    const ContractedPoint& p);

GaussianCloud predictCloud(const TriPlaneField& field, const DecoderSet& decoders,
                           const std::vector<Point3>& positions);

GaussianCloud permuteCloud(const GaussianCloud& cloud, const std::vector<size_t>& perm);

// Output mappings applied to the raw decoder outputs.
double opacityFromRaw(double raw);
std::array<double, 3> scaleFromRaw(const std::array<double, 3>& raw);
std::array<double, 4> rotationFromRaw(const std::array<double, 4>& raw);

}  // namespace gsc
