#include "gsc/dct.h"

#include <cmath>
#include <stdexcept>

namespace gsc {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> makeBasis(int n) {
  std::vector<double> basis(static_cast<size_t>(n) * n);
  const double dcScale = std::sqrt(1.0 / n);
  const double acScale = std::sqrt(2.0 / n);
  for (int u = 0; u < n; ++u) {
    const double scale = u == 0 ? dcScale : acScale;
    for (int x = 0; x < n; ++x) {
      basis[static_cast<size_t>(u) * n + x] =
          scale * std::cos(kPi * (2.0 * x + 1.0) * u / (2.0 * n));
    }
  }
  return basis;
}

}  // namespace

Dct2d::Dct2d(BlockSpec spec) : spec_(spec) {
  if (spec_.rows < 2 || spec_.cols < 2) {
    throw std::invalid_argument("Dct2d: block dimensions must be >= 2");
  }
  basisRows_ = makeBasis(spec_.rows);
  basisCols_ = makeBasis(spec_.cols);
  // amplification = max_x sum_u |rowBasis(u,x)| * max_y sum_v |colBasis(v,y)|
  auto maxAbsColumnSum = [](const std::vector<double>& basis, int n) {
    double best = 0.0;
    for (int x = 0; x < n; ++x) {
      double sum = 0.0;
      for (int u = 0; u < n; ++u) {
        sum += std::abs(basis[static_cast<size_t>(u) * n + x]);
      }
      best = std::max(best, sum);
    }
    return best;
  };
  amplification_ = maxAbsColumnSum(basisRows_, spec_.rows) *
                   maxAbsColumnSum(basisCols_, spec_.cols);
}

void Dct2d::forward(const double* in, double* out) const {
  const int n = spec_.rows;
  const int m = spec_.cols;
  // rows first: tmp[x][v] = sum_y in[x][y] * colBasis[v][y]
  std::vector<double> tmp(static_cast<size_t>(n) * m, 0.0);
  for (int x = 0; x < n; ++x) {
    for (int v = 0; v < m; ++v) {
      double acc = 0.0;
      for (int y = 0; y < m; ++y) {
        acc += in[static_cast<size_t>(x) * m + y] * basisCols_[static_cast<size_t>(v) * m + y];
      }
      tmp[static_cast<size_t>(x) * m + v] = acc;
    }
  }
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < m; ++v) {
      double acc = 0.0;
      for (int x = 0; x < n; ++x) {
        acc += basisRows_[static_cast<size_t>(u) * n + x] * tmp[static_cast<size_t>(x) * m + v];
      }
      out[static_cast<size_t>(u) * m + v] = acc;
    }
  }
}

void Dct2d::inverse(const double* in, double* out) const {
  const int n = spec_.rows;
  const int m = spec_.cols;
  std::vector<double> tmp(static_cast<size_t>(n) * m, 0.0);
  for (int u = 0; u < n; ++u) {
    for (int y = 0; y < m; ++y) {
      double acc = 0.0;
      for (int v = 0; v < m; ++v) {
        acc += in[static_cast<size_t>(u) * m + v] * basisCols_[static_cast<size_t>(v) * m + y];
      }
      tmp[static_cast<size_t>(u) * m + y] = acc;
    }
  }
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < m; ++y) {
      double acc = 0.0;
      for (int u = 0; u < n; ++u) {
        acc += basisRows_[static_cast<size_t>(u) * n + x] * tmp[static_cast<size_t>(u) * m + y];
      }
      out[static_cast<size_t>(x) * m + y] = acc;
    }
  }
}

CoefficientPlane transformPlane(const std::vector<double>& channel, int rows,
                                int cols, const BlockSpec& spec) {
  if (rows <= 0 || cols <= 0 ||
      channel.size() != static_cast<size_t>(rows) * cols) {
    throw std::invalid_argument("transformPlane: shape mismatch");
  }
  const int padRows = (rows + spec.rows - 1) / spec.rows * spec.rows;
  const int padCols = (cols + spec.cols - 1) / spec.cols * spec.cols;
  std::vector<double> padded(static_cast<size_t>(padRows) * padCols);
  for (int r = 0; r < padRows; ++r) {
    const int sr = std::min(r, rows - 1);
    for (int c = 0; c < padCols; ++c) {
      const int sc = std::min(c, cols - 1);
      padded[static_cast<size_t>(r) * padCols + c] = channel[static_cast<size_t>(sr) * cols + sc];
    }
  }
  CoefficientPlane out;
  out.rows = padRows;
  out.cols = padCols;
  out.origRows = rows;
  out.origCols = cols;
  out.block = spec;
  out.values.resize(padded.size());
  Dct2d dct(spec);
  std::vector<double> block(static_cast<size_t>(spec.rows) * spec.cols);
  for (int br = 0; br < padRows; br += spec.rows) {
    for (int bc = 0; bc < padCols; bc += spec.cols) {
      for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c) {
          block[static_cast<size_t>(r) * spec.cols + c] =
              padded[static_cast<size_t>(br + r) * padCols + (bc + c)];
        }
      }
      dct.forward(block.data(), block.data());
      for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c) {
          out.values[static_cast<size_t>(br + r) * padCols + (bc + c)] =
              block[static_cast<size_t>(r) * spec.cols + c];
        }
      }
    }
  }
  return out;
}

std::vector<double> inverseTransformPlane(const CoefficientPlane& plane) {
  Dct2d dct(plane.block);
  const int n = plane.block.rows;
  const int m = plane.block.cols;
  std::vector<double> recon(static_cast<size_t>(plane.rows) * plane.cols);
  std::vector<double> block(static_cast<size_t>(n) * m);
  for (int br = 0; br < plane.rows; br += n) {
    for (int bc = 0; bc < plane.cols; bc += m) {
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < m; ++c) {
          block[static_cast<size_t>(r) * m + c] =
              plane.values[static_cast<size_t>(br + r) * plane.cols + (bc + c)];
        }
      }
      dct.inverse(block.data(), block.data());
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < m; ++c) {
          recon[static_cast<size_t>(br + r) * plane.cols + (bc + c)] =
              block[static_cast<size_t>(r) * m + c];
        }
      }
    }
  }
  std::vector<double> out(static_cast<size_t>(plane.origRows) * plane.origCols);
  for (int r = 0; r < plane.origRows; ++r) {
    for (int c = 0; c < plane.origCols; ++c) {
      out[static_cast<size_t>(r) * plane.origCols + c] =
          recon[static_cast<size_t>(r) * plane.cols + c];
    }
  }
  return out;
}

std::vector<std::pair<int, int>> zigzagOrder(int rows, int cols) {
  std::vector<std::pair<int, int>> order;
  order.reserve(static_cast<size_t>(rows) * cols);
  for (int d = 0; d <= rows + cols - 2; ++d) {
    if (d % 2 == 1) {
      // down-left: start from the topmost cell on this diagonal
      for (int r = std::max(0, d - cols + 1); r <= std::min(d, rows - 1); ++r) {
        order.emplace_back(r, d - r);
      }
    } else {
      // up-right: start from the bottommost cell
      for (int r = std::min(d, rows - 1); r >= std::max(0, d - cols + 1); --r) {
        order.emplace_back(r, d - r);
      }
    }
  }
  return order;
}

std::vector<double> zigzagScan(const std::vector<double>& block, const BlockSpec& spec) {
  const auto order = zigzagOrder(spec.rows, spec.cols);
  std::vector<double> out(order.size());
  for (size_t i = 0; i < order.size(); ++i) {
    out[i] = block[static_cast<size_t>(order[i].first) * spec.cols + order[i].second];
  }
  return out;
}

std::vector<double> zigzagUnscan(const std::vector<double>& scanned, const BlockSpec& spec) {
  const auto order = zigzagOrder(spec.rows, spec.cols);
  std::vector<double> out(order.size());
  for (size_t i = 0; i < order.size(); ++i) {
    out[static_cast<size_t>(order[i].first) * spec.cols + order[i].second] = scanned[i];
  }
  return out;
}

}  // namespace gsc
