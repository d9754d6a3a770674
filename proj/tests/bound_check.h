#pragma once

// Attribute-error bound propagation for decode(encode(scene)) checks: the
// plane-value reconstruction bound composed through bilinear sampling, the
// Hadamard product, the decoder layers and the output mappings.

#include <cmath>

#include "gsc/container.h"
#include "gsc/field.h"

namespace gsc::test {

struct GroupErrors {
  double color = 0.0;
  double scale = 0.0;
  double rotation = 0.0;
  double opacity = 0.0;
};

inline GroupErrors attributeErrors(const gsc::GaussianCloud& a, const gsc::GaussianCloud& b) {
  GroupErrors e;
  for (size_t i = 0; i < a.sh.size(); ++i) {
    e.color = std::max(e.color, std::abs(a.sh[i] - b.sh[i]));
  }
  for (size_t i = 0; i < a.scales.size(); ++i) {
    e.scale = std::max(e.scale, std::abs(a.scales[i] - b.scales[i]));
  }
  for (size_t i = 0; i < a.rotations.size(); ++i) {
    e.rotation = std::max(e.rotation, std::abs(a.rotations[i] - b.rotations[i]));
  }
  for (size_t i = 0; i < a.opacities.size(); ++i) {
    e.opacity = std::max(e.opacity, std::abs(a.opacities[i] - b.opacities[i]));
  }
  return e;
}

inline double mlpInfNorm(const std::vector<double>& w, int rows, int cols) {
  double best = 0.0;
  for (int r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (int c = 0; c < cols; ++c) sum += std::abs(w[static_cast<size_t>(r) * cols + c]);
    best = std::max(best, sum);
  }
  return best;
}

// Worst-case raw decoder output perturbation for a per-plane-value error;
// bilinear interpolation is a convex combination and the rectifier is
// 1-Lipschitz, so the layer inf-norms compose.
inline double rawOutputBound(const gsc::TriPlaneField& field, const gsc::MlpDecoder& mlp,
                             double planeBound) {
  double planeAbsMax = 0.0;
  for (const auto& group : field.groups) {
    for (const auto& plane : group.planes) {
      for (double v : plane.values) planeAbsMax = std::max(planeAbsMax, std::abs(v));
    }
  }
  const double sampleMax = planeAbsMax + planeBound;
  const double featureBound = 3.0 * planeBound * sampleMax * sampleMax;
  return featureBound * mlpInfNorm(mlp.w1, mlp.hiddenWidth, mlp.inputWidth) *
         mlpInfNorm(mlp.w2, mlp.hiddenWidth, mlp.hiddenWidth) *
         mlpInfNorm(mlp.w3, mlp.outputWidth, mlp.hiddenWidth);
}

// ||x/|x| - y/|y|||_2 <= 2 ||x - y||_2 / max(|x|, |y|), never above 2.
inline double rotationBound(const gsc::TriPlaneField& field, const gsc::DecoderSet& decoders,
                            const std::vector<gsc::Point3>& positions, double rawBound) {
  double worst = 0.0;
  const int g = static_cast<int>(gsc::AttributeKind::rotation);
  for (const gsc::Point3& p : positions) {
    const std::vector<double> feature = gsc::sampleFeatures(field.groups[g], gsc::contract(p));
    const gsc::MlpDecoder& mlp = decoders[g];
    std::vector<double> raw(mlp.outputWidth);
    gsc::mlpForward(mlp, feature.data(), raw.data());
    const double norm =
        std::sqrt(raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2] + raw[3] * raw[3]);
    const double bound = norm > 1e-12 ? std::min(2.0, 2.0 * (2.0 * rawBound) / norm) : 2.0;
    worst = std::max(worst, bound);
  }
  return worst;
}

struct BoundReport {
  GroupErrors errors;
  double colorBound = 0.0;
  double scaleBound = 0.0;
  double rotationBoundValue = 0.0;
  double opacityBound = 0.0;

  bool pass() const {
    return errors.color <= colorBound + 1e-12 && errors.scale <= scaleBound + 1e-12 &&
           errors.rotation <= rotationBoundValue + 1e-12 &&
           errors.opacity <= opacityBound + 1e-12;
  }
};

// Compares the decoded container against encoder-side predictions at the
// decoded positions and evaluates the composed bound for each group.
inline BoundReport checkSceneBound(const gsc::TriPlaneField& field,
                                   const gsc::DecoderSet& decoders,
                                   const gsc::Container& container) {
  const gsc::DecodedArtifact artifact = gsc::decodeArtifact(container);
  const gsc::GaussianCloud decoded =
      gsc::predictCloud(artifact.field, artifact.decoders, artifact.positions);
  const gsc::GaussianCloud reference = gsc::predictCloud(field, decoders, artifact.positions);

  BoundReport report;
  report.errors = attributeErrors(decoded, reference);
  const double planeBound = gsc::planeReconstructionBound(container);
  const double colorRaw = rawOutputBound(
      field, decoders[static_cast<int>(gsc::AttributeKind::color)], planeBound);
  const double scaleRaw = rawOutputBound(
      field, decoders[static_cast<int>(gsc::AttributeKind::scale)], planeBound);
  const double rotRaw = rawOutputBound(
      field, decoders[static_cast<int>(gsc::AttributeKind::rotation)], planeBound);
  const double opacityRaw = rawOutputBound(
      field, decoders[static_cast<int>(gsc::AttributeKind::opacity)], planeBound);
  report.colorBound = colorRaw;
  report.scaleBound = scaleRaw * 0.25 * 9.9 * std::exp(-0.1);
  report.rotationBoundValue = rotationBound(field, decoders, artifact.positions, rotRaw);
  report.opacityBound = opacityRaw * 0.25;
  return report;
}

}  // namespace gsc::test
