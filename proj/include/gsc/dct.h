#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace gsc {

struct BlockSpec {
  int rows = 4;
  int cols = 4;
};

// Per-block coefficients stored in place: coefficient (u, v) of block (bi, bj)
// sits at row bi*rows + u, col bj*cols + v. Dimensions are the replicate-padded
// multiples of the block size.
struct CoefficientPlane {
  int rows = 0;
  int cols = 0;
  int origRows = 0;
  int origCols = 0;
  BlockSpec block;
  std::vector<double> values;
};

// Orthonormal separable 2D DCT-II over fixed block dimensions. Forward and
// inverse are exact transposes, so Parseval holds and the adjoint of the
// forward transform is the inverse.
class Dct2d {
 public:
  explicit Dct2d(BlockSpec spec);

  const BlockSpec& spec() const { return spec_; }

  // in/out are rows*cols row-major and may alias.
  void forward(const double* in, double* out) const;
  void inverse(const double* in, double* out) const;

  // max over sample positions of the absolute basis-function sum; converts a
  // per-coefficient error bound into a per-sample one.
  double sampleAmplification() const { return amplification_; }

 private:
  BlockSpec spec_;
  std::vector<double> basisRows_;  // rows x rows, basisRows_[u*N + x]
  std::vector<double> basisCols_;  // cols x cols
  double amplification_ = 0.0;
};

CoefficientPlane transformPlane(const std::vector<double>& channel, int rows,
                                int cols, const BlockSpec& spec);

// Inverse of transformPlane; returns origRows*origCols samples.
std::vector<double> inverseTransformPlane(const CoefficientPlane& plane);

// Anti-diagonal scan order starting at DC; (row, col) pairs.
std::vector<std::pair<int, int>> zigzagOrder(int rows, int cols);

std::vector<double> zigzagScan(const std::vector<double>& block, const BlockSpec& spec);
std::vector<double> zigzagUnscan(const std::vector<double>& scanned, const BlockSpec& spec);

}  // namespace gsc
