#include "gsc/geometry.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gsc {

namespace {

bool allFinite(const Point3& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

// Spreads the low 16 bits of v so consecutive bits land 3 apart.
uint64_t spreadBy3(uint64_t v) {
  v &= 0xffff;
  v = (v | v << 32) & 0x001f00000000ffffULL;
  v = (v | v << 16) & 0x001f0000ff0000ffULL;
  v = (v | v << 8) & 0x100f00f00f00f00fULL;
  v = (v | v << 4) & 0x10c30c30c30c30c3ULL;
  v = (v | v << 2) & 0x1249249249249249ULL;
  return v;
}

uint16_t quantizeAxis(double value, double minCorner, double extent) {
  if (extent <= 0.0) {
    return 0;
  }
  double t = (value - minCorner) / extent * 65535.0;
  double q = std::floor(t + 0.5);  // round-half-up
  q = std::clamp(q, 0.0, 65535.0);
  return static_cast<uint16_t>(q);
}

}  // namespace

ContractedPoint contract(const Point3& p) {
  if (!allFinite(p)) {
    throw std::invalid_argument("contract: non-finite input coordinate");
  }
  const double ax = std::abs(p.x);
  const double ay = std::abs(p.y);
  const double az = std::abs(p.z);
  const double supNorm = std::max({ax, ay, az});
  if (supNorm <= 1.0) {
    return {p.x, p.y, p.z};
  }
  auto mapAxis = [&](double v, double mag) {
    if (mag == supNorm) {
      const double sign = v < 0.0 ? -1.0 : 1.0;
      return (2.0 - 1.0 / mag) * sign;
    }
    return v / supNorm;
  };
  return {mapAxis(p.x, ax), mapAxis(p.y, ay), mapAxis(p.z, az)};
}

std::pair<std::vector<QuantizedPosition>, BoundingBox> quantizePositions(
    const std::vector<Point3>& points) {
  if (points.empty()) {
    throw std::invalid_argument("quantizePositions: empty point set");
  }
  BoundingBox box;
  std::array<double, 3> maxCorner;
  for (int a = 0; a < 3; ++a) {
    box.minCorner[a] = std::numeric_limits<double>::infinity();
    maxCorner[a] = -std::numeric_limits<double>::infinity();
  }
  for (const Point3& p : points) {
    if (!allFinite(p)) {
      throw std::invalid_argument("quantizePositions: non-finite coordinate");
    }
    const double v[3] = {p.x, p.y, p.z};
    for (int a = 0; a < 3; ++a) {
      box.minCorner[a] = std::min(box.minCorner[a], v[a]);
      maxCorner[a] = std::max(maxCorner[a], v[a]);
    }
  }
  for (int a = 0; a < 3; ++a) {
    box.extent[a] = maxCorner[a] - box.minCorner[a];
    box.zeroExtent[a] = box.extent[a] <= 0.0;
  }
  std::vector<QuantizedPosition> result(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    result[i].qx = quantizeAxis(points[i].x, box.minCorner[0], box.extent[0]);
    result[i].qy = quantizeAxis(points[i].y, box.minCorner[1], box.extent[1]);
    result[i].qz = quantizeAxis(points[i].z, box.minCorner[2], box.extent[2]);
  }
  return {std::move(result), box};
}

Point3 dequantizePosition(const QuantizedPosition& q, const BoundingBox& box) {
  auto axis = [&](uint16_t qv, int a) {
    if (box.zeroExtent[a]) {
      return box.minCorner[a];
    }
    return box.minCorner[a] + static_cast<double>(qv) / 65535.0 * box.extent[a];
  };
  return {axis(q.qx, 0), axis(q.qy, 1), axis(q.qz, 2)};
}

uint64_t mortonKey(const QuantizedPosition& q) {
  return spreadBy3(q.qx) | (spreadBy3(q.qy) << 1) | (spreadBy3(q.qz) << 2);
}

std::vector<size_t> mortonOrder(const std::vector<QuantizedPosition>& positions) {
  std::vector<uint64_t> keys(positions.size());
  for (size_t i = 0; i < positions.size(); ++i) {
    keys[i] = mortonKey(positions[i]);
  }
  std::vector<size_t> perm(positions.size());
  std::iota(perm.begin(), perm.end(), size_t{0});
  std::stable_sort(perm.begin(), perm.end(),
                   [&](size_t a, size_t b) { return keys[a] < keys[b]; });
  return perm;
}

}  // namespace gsc
