#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace gsc {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

// Contracted coordinates live in the sup-norm ball of radius 2.
struct ContractedPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct QuantizedPosition {
  uint16_t qx = 0;
  uint16_t qy = 0;
  uint16_t qz = 0;
};

struct BoundingBox {
  std::array<double, 3> minCorner{0.0, 0.0, 0.0};
  std::array<double, 3> extent{0.0, 0.0, 0.0};
  // Axes whose extent is zero map to the constant 0 sample.
  std::array<bool, 3> zeroExtent{false, false, false};
};

// Piecewise-projective contraction. Identity inside the unit sup-norm ball;
// outside, the max-magnitude axis maps to (2 - 1/|x|)*sign(x) and the other
// axes are divided by the sup-norm. Every axis attaining the maximum takes
// the projective branch. Throws std::invalid_argument on non-finite input.
ContractedPoint contract(const Point3& p);

// Affine map of the tight axis-aligned bounding box onto [0, 65535] per axis,
// round-half-up. Requires at least one finite point.
std::pair<std::vector<QuantizedPosition>, BoundingBox> quantizePositions(
    const std::vector<Point3>& points);

Point3 dequantizePosition(const QuantizedPosition& q, const BoundingBox& box);

// 48-bit interleave of (qx, qy, qz) with qx occupying bits 0, 3, 6, ...
uint64_t mortonKey(const QuantizedPosition& q);

// Stable sort permutation by Morton key: result[i] is the index of the point
// that lands at output position i.
std::vector<size_t> mortonOrder(const std::vector<QuantizedPosition>& positions);

}  // namespace gsc
