#include "gsc/entropy.h"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace gsc {

namespace {

constexpr double kMinMass = 2.3283064365386963e-10;  // 2^-32
constexpr double kMinScale = 1e-9;
constexpr double kLn2 = 0.6931471805599453;

double laplacePdf(double x, double b) { return 0.5 / b * std::exp(-std::abs(x) / b); }

// Mass of the Laplacian on [v - halfBin, v + halfBin], computed tail-side to
// avoid cancellation far from the origin. Symmetric in v.
double binMass(double v, double b, double halfBin) {
  v = std::abs(v);
  const double lo = v - halfBin;
  const double hi = v + halfBin;
  if (lo >= 0.0) {
    return 0.5 * std::exp(-lo / b) * (1.0 - std::exp(-(hi - lo) / b));
  }
  // bin straddles the origin
  return 1.0 - 0.5 * std::exp(-hi / b) - 0.5 * std::exp(lo / b);
}

}  // namespace

EntropyModel makeEntropyModel(int channels, double qStep, BlockSpec block) {
  if (qStep <= 0.0) {
    throw std::invalid_argument("makeEntropyModel: qStep must be positive");
  }
  EntropyModel model;
  model.qStep = qStep;
  model.block = block;
  model.channels = channels;
  model.scales.assign(static_cast<size_t>(model.groups) * model.planes * channels *
                          model.bandCount(),
                      kMinScale);
  return model;
}

void fitScales(EntropyModel& model, const TriPlaneField& field) {
  const int bands = model.bandCount();
  std::vector<double> absSum(static_cast<size_t>(bands));
  std::vector<size_t> counts(static_cast<size_t>(bands));
  for (int g = 0; g < model.groups; ++g) {
    for (int p = 0; p < model.planes; ++p) {
      const FeaturePlane& plane = field.groups[g].planes[p];
      for (int c = 0; c < model.channels; ++c) {
        const CoefficientPlane coeffs = transformPlane(
            std::vector<double>(plane.channelData(c),
                                plane.channelData(c) + static_cast<size_t>(plane.resolution) *
                                                           plane.resolution),
            plane.resolution, plane.resolution, model.block);
        std::fill(absSum.begin(), absSum.end(), 0.0);
        std::fill(counts.begin(), counts.end(), size_t{0});
        for (int r = 0; r < coeffs.rows; ++r) {
          const int u = r % model.block.rows;
          for (int col = 0; col < coeffs.cols; ++col) {
            const int v = col % model.block.cols;
            const int band = u * model.block.cols + v;
            absSum[band] += std::abs(coeffs.values[static_cast<size_t>(r) * coeffs.cols + col]);
            counts[band] += 1;
          }
        }
        for (int band = 0; band < bands; ++band) {
          const double mean = counts[band] > 0 ? absSum[band] / counts[band] : 0.0;
          model.scales[model.scaleIndex(g, p, c, band)] = std::max(mean, kMinScale);
        }
      }
    }
  }
}

void perturb(std::vector<double>& coeffs, double qStep, std::mt19937_64& rng) {
  if (qStep <= 0.0) {
    throw std::invalid_argument("perturb: qStep must be positive");
  }
  std::uniform_real_distribution<double> noise(-1.0 / qStep, 1.0 / qStep);
  for (double& c : coeffs) {
    c += noise(rng);
  }
}

double coefficientBits(double value, double scale, double qStep) {
  const double mass = std::max(binMass(value, scale, 1.0 / qStep), kMinMass);
  return -std::log2(mass);
}

double coefficientBitsGrad(double value, double scale, double qStep) {
  const double halfBin = 1.0 / qStep;
  const double mass = binMass(value, scale, halfBin);
  if (mass <= kMinMass) {
    return 0.0;
  }
  const double dMass = laplacePdf(value + halfBin, scale) - laplacePdf(value - halfBin, scale);
  return -dMass / (mass * kLn2);
}

double entropyOfChannel(const std::vector<double>& channel, int resolution,
                        const EntropyModel& model, int g, int p, int c,
                        std::mt19937_64* noiseRng) {
  CoefficientPlane coeffs = transformPlane(channel, resolution, resolution, model.block);
  if (noiseRng != nullptr) {
    perturb(coeffs.values, model.qStep, *noiseRng);
  }
  double bits = 0.0;
  for (int r = 0; r < coeffs.rows; ++r) {
    const int u = r % model.block.rows;
    for (int col = 0; col < coeffs.cols; ++col) {
      const int v = col % model.block.cols;
      const double b = model.scaleAt(g, p, c, u * model.block.cols + v);
      bits += coefficientBits(coeffs.values[static_cast<size_t>(r) * coeffs.cols + col], b,
                              model.qStep);
    }
  }
  return bits;
}

ChannelImportance channelWeights(const std::vector<double>& ci, double weightCap) {
  if (ci.empty()) {
    throw std::invalid_argument("channelWeights: empty importance vector");
  }
  ChannelImportance out;
  out.ci = ci;
  out.weights.resize(ci.size());
  const double first = ci[0];
  out.weights[0] = 1.0;
  for (size_t c = 1; c < ci.size(); ++c) {
    if (ci[c] <= 0.0 || first <= 0.0) {
      out.weights[c] = weightCap;
      out.capped = true;
    } else {
      out.weights[c] = std::min(first / ci[c], weightCap);
    }
  }
  if (out.capped) {
    std::cerr << "channelWeights: zero importance score, weight capped at " << weightCap
              << "\n";
  }
  return out;
}

double entropyLoss(const TriPlaneField& field, const EntropyModel& model,
                   const std::vector<double>& weights, std::mt19937_64* noiseRng) {
  double total = 0.0;
  for (int g = 0; g < model.groups; ++g) {
    for (int c = 0; c < model.channels; ++c) {
      const double w =
          weights.empty() ? 1.0 : weights[static_cast<size_t>(g) * model.channels + c];
      for (int p = 0; p < model.planes; ++p) {
        const FeaturePlane& plane = field.groups[g].planes[p];
        const std::vector<double> channel(
            plane.channelData(c),
            plane.channelData(c) + static_cast<size_t>(plane.resolution) * plane.resolution);
        total += w * entropyOfChannel(channel, plane.resolution, model, g, p, c, noiseRng);
      }
    }
  }
  return total;
}

double l1Loss(const TriPlaneField& field) {
  double total = 0.0;
  for (const auto& group : field.groups) {
    for (const auto& plane : group.planes) {
      for (double v : plane.values) {
        total += std::abs(v);
      }
    }
  }
  return total;
}

}  // namespace gsc
