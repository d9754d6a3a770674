#include "gsc/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gsc {

namespace {

constexpr double kScaleLogMin = -10.0;
constexpr double kScaleLogSpan = 9.9;  // maps sigmoid output onto [-10, -0.1]
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct BilinearTap {
  int x0, x1, y0, y1;
  double w00, w01, w10, w11;
};

BilinearTap bilinearTap(double u, double v, int resolution) {
  const double scale = (resolution - 1) / 4.0;
  double fu = std::clamp((u + 2.0) * scale, 0.0, static_cast<double>(resolution - 1));
  double fv = std::clamp((v + 2.0) * scale, 0.0, static_cast<double>(resolution - 1));
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

double tapSample(const FeaturePlane& plane, int c, const BilinearTap& t) {
  return t.w00 * plane.at(c, t.y0, t.x0) + t.w01 * plane.at(c, t.y0, t.x1) +
         t.w10 * plane.at(c, t.y1, t.x0) + t.w11 * plane.at(c, t.y1, t.x1);
}

void tapScatter(std::vector<double>& grad, int resolution, int c, const BilinearTap& t,
                double g) {
  const size_t base = static_cast<size_t>(c) * resolution * resolution;
  grad[base + static_cast<size_t>(t.y0) * resolution + t.x0] += g * t.w00;
  grad[base + static_cast<size_t>(t.y0) * resolution + t.x1] += g * t.w01;
  grad[base + static_cast<size_t>(t.y1) * resolution + t.x0] += g * t.w10;
  grad[base + static_cast<size_t>(t.y1) * resolution + t.x1] += g * t.w11;
}

// Scratch buffers for one decoder evaluation; sized once per computeLoss call.
struct MlpScratch {
  std::vector<double> z1, h1, z2, h2, raw;
  std::vector<double> dz1, dh1, dz2, dh2, dy;

  void resize(int hidden, int output) {
    z1.resize(hidden);
    h1.resize(hidden);
    z2.resize(hidden);
    h2.resize(hidden);
    raw.resize(output);
    dz1.resize(hidden);
    dh1.resize(hidden);
    dz2.resize(hidden);
    dh2.resize(hidden);
    dy.resize(output);
  }
};

// Dot product with four independent accumulator chains; fixed association,
// so results are reproducible while the chains still vectorize.
double dot4(const double* __restrict a, const double* __restrict b, int n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  int j = 0;
  for (; j + 4 <= n; j += 4) {
    acc0 += a[j] * b[j];
    acc1 += a[j + 1] * b[j + 1];
    acc2 += a[j + 2] * b[j + 2];
    acc3 += a[j + 3] * b[j + 3];
  }
  for (; j < n; ++j) acc0 += a[j] * b[j];
  return (acc0 + acc1) + (acc2 + acc3);
}

void axpy(double alpha, const double* __restrict x, double* __restrict y, int n) {
  for (int j = 0; j < n; ++j) y[j] += alpha * x[j];
}

void mlpForwardCached(const MlpDecoder& mlp, const double* input, MlpScratch& s) {
  for (int i = 0; i < mlp.hiddenWidth; ++i) {
    const double acc =
        mlp.b1[i] + dot4(mlp.w1.data() + static_cast<size_t>(i) * mlp.inputWidth, input,
                         mlp.inputWidth);
    s.z1[i] = acc;
    s.h1[i] = acc > 0.0 ? acc : 0.0;
  }
  for (int i = 0; i < mlp.hiddenWidth; ++i) {
    const double acc =
        mlp.b2[i] + dot4(mlp.w2.data() + static_cast<size_t>(i) * mlp.hiddenWidth,
                         s.h1.data(), mlp.hiddenWidth);
    s.z2[i] = acc;
    s.h2[i] = acc > 0.0 ? acc : 0.0;
  }
  for (int i = 0; i < mlp.outputWidth; ++i) {
    s.raw[i] = mlp.b3[i] + dot4(mlp.w3.data() + static_cast<size_t>(i) * mlp.hiddenWidth,
                                s.h2.data(), mlp.hiddenWidth);
  }
}

// Backpropagates s.dy through the decoder, accumulating parameter gradients
// and writing d(loss)/d(input) into dInput. The transposed products run as
// row sweeps so every inner loop touches contiguous memory.
void mlpBackward(const MlpDecoder& mlp, const double* input, MlpScratch& s,
                 MlpGradients& grads, double* dInput) {
  std::fill(s.dh2.begin(), s.dh2.end(), 0.0);
  for (int i = 0; i < mlp.outputWidth; ++i) {
    const double g = s.dy[i];
    if (g == 0.0) continue;
    grads.b3[i] += g;
    axpy(g, s.h2.data(), grads.w3.data() + static_cast<size_t>(i) * mlp.hiddenWidth,
         mlp.hiddenWidth);
    axpy(g, mlp.w3.data() + static_cast<size_t>(i) * mlp.hiddenWidth, s.dh2.data(),
         mlp.hiddenWidth);
  }
  for (int j = 0; j < mlp.hiddenWidth; ++j) {
    s.dz2[j] = s.z2[j] > 0.0 ? s.dh2[j] : 0.0;
  }
  std::fill(s.dh1.begin(), s.dh1.end(), 0.0);
  for (int i = 0; i < mlp.hiddenWidth; ++i) {
    const double g = s.dz2[i];
    if (g == 0.0) continue;
    grads.b2[i] += g;
    axpy(g, s.h1.data(), grads.w2.data() + static_cast<size_t>(i) * mlp.hiddenWidth,
         mlp.hiddenWidth);
    axpy(g, mlp.w2.data() + static_cast<size_t>(i) * mlp.hiddenWidth, s.dh1.data(),
         mlp.hiddenWidth);
  }
  for (int j = 0; j < mlp.hiddenWidth; ++j) {
    s.dz1[j] = s.z1[j] > 0.0 ? s.dh1[j] : 0.0;
  }
  std::fill(dInput, dInput + mlp.inputWidth, 0.0);
  for (int i = 0; i < mlp.hiddenWidth; ++i) {
    const double g = s.dz1[i];
    if (g == 0.0) continue;
    grads.b1[i] += g;
    axpy(g, input, grads.w1.data() + static_cast<size_t>(i) * mlp.inputWidth, mlp.inputWidth);
    axpy(g, mlp.w1.data() + static_cast<size_t>(i) * mlp.inputWidth, dInput, mlp.inputWidth);
  }
}

}  // namespace

int activeChannels(int iteration, const ProgressiveSchedule& schedule) {
  if (schedule.stageIterations.empty() ||
      schedule.stageIterations.size() != schedule.activeCounts.size()) {
    throw std::invalid_argument("activeChannels: malformed schedule");
  }
  int active = schedule.activeCounts.front();
  for (size_t i = 0; i < schedule.stageIterations.size(); ++i) {
    if (schedule.stageIterations[i] <= iteration) {
      active = schedule.activeCounts[i];
    }
  }
  return active;
}

void TrainConfig::validate() const {
  if (totalIterations < 0) throw std::invalid_argument("TrainConfig: negative iterations");
  if (!(entropyStartIteration <= ciIteration && ciIteration <= totalIterations)) {
    throw std::invalid_argument(
        "TrainConfig: require entropyStart <= ciIteration <= totalIterations");
  }
  if (planeLr <= 0.0 || decoderLr <= 0.0 || lrDecayFactor <= 0.0) {
    throw std::invalid_argument("TrainConfig: learning rates must be positive");
  }
  if (qStep <= 0.0) throw std::invalid_argument("TrainConfig: qStep must be positive");
  if (weights.lambdaEnt < 0.0 || weights.lambdaL1 < 0.0) {
    throw std::invalid_argument("TrainConfig: loss weights must be non-negative");
  }
  const auto& t = schedule.stageIterations;
  const auto& l = schedule.activeCounts;
  if (t.empty() || t.size() != l.size() || t.front() != 0) {
    throw std::invalid_argument("TrainConfig: malformed progressive schedule");
  }
  for (size_t i = 1; i < t.size(); ++i) {
    if (t[i] < t[i - 1] || l[i] < l[i - 1]) {
      throw std::invalid_argument("TrainConfig: schedule must be non-decreasing");
    }
  }
  if (l.back() > planeChannels) {
    throw std::invalid_argument("TrainConfig: schedule activates more channels than exist");
  }
}

Gradients makeGradients(const TriPlaneField& field, const DecoderSet& decoders) {
  Gradients grads;
  for (int g = 0; g < kGroupCount; ++g) {
    for (int p = 0; p < kPlanesPerGroup; ++p) {
      grads.planes[g][p].assign(field.groups[g].planes[p].values.size(), 0.0);
    }
    const MlpDecoder& mlp = decoders[g];
    grads.decoders[g].w1.assign(mlp.w1.size(), 0.0);
    grads.decoders[g].b1.assign(mlp.b1.size(), 0.0);
    grads.decoders[g].w2.assign(mlp.w2.size(), 0.0);
    grads.decoders[g].b2.assign(mlp.b2.size(), 0.0);
    grads.decoders[g].w3.assign(mlp.w3.size(), 0.0);
    grads.decoders[g].b3.assign(mlp.b3.size(), 0.0);
  }
  return grads;
}

void zeroGradients(Gradients& grads) {
  for (auto& group : grads.planes) {
    for (auto& plane : group) {
      std::fill(plane.begin(), plane.end(), 0.0);
    }
  }
  for (auto& d : grads.decoders) {
    std::fill(d.w1.begin(), d.w1.end(), 0.0);
    std::fill(d.b1.begin(), d.b1.end(), 0.0);
    std::fill(d.w2.begin(), d.w2.end(), 0.0);
    std::fill(d.b2.begin(), d.b2.end(), 0.0);
    std::fill(d.w3.begin(), d.w3.end(), 0.0);
    std::fill(d.b3.begin(), d.b3.end(), 0.0);
  }
}

LossBreakdown computeLoss(const TriPlaneField& field, const DecoderSet& decoders,
                          const GaussianCloud& target, const std::vector<size_t>& batch,
                          const LossWeights& weights, bool includeEntropy,
                          const EntropyModel* model,
                          const std::vector<double>& channelWeightsFlat,
                          std::mt19937_64* noiseRng, Gradients* grads,
                          int noiseQuadSamples) {
  LossBreakdown out;
  const int channels = field.channels;
  const int res = field.resolution;
  const int shCount = shCoefficientCount(field.shDegree);
  const size_t batchSize = batch.size();

  MlpScratch scratch;
  std::vector<double> feature(channels);
  std::vector<double> dFeature(channels);
  std::array<std::vector<double>, kPlanesPerGroup> planeSamples;
  for (auto& s : planeSamples) s.resize(channels);

  if (batchSize > 0) {
    for (int g = 0; g < kGroupCount; ++g) {
      const TriPlaneGroup& group = field.groups[g];
      const MlpDecoder& mlp = decoders[g];
      const int dim = mlp.outputWidth;
      scratch.resize(mlp.hiddenWidth, dim);
      const double invNorm = 1.0 / (static_cast<double>(batchSize) * dim);
      double groupSse = 0.0;

      for (size_t bi = 0; bi < batchSize; ++bi) {
        const size_t i = batch[bi];
        const ContractedPoint cp = contract(target.positions[i]);
        const BilinearTap taps[3] = {
            bilinearTap(cp.x, cp.y, res),
            bilinearTap(cp.x, cp.z, res),
            bilinearTap(cp.y, cp.z, res),
        };
        for (int k = 0; k < kPlanesPerGroup; ++k) {
          for (int c = 0; c < channels; ++c) {
            planeSamples[k][c] = tapSample(group.planes[k], c, taps[k]);
          }
        }
        for (int c = 0; c < channels; ++c) {
          feature[c] = planeSamples[0][c] * planeSamples[1][c] * planeSamples[2][c];
        }
        mlpForwardCached(mlp, feature.data(), scratch);

        // Residuals through the attribute mapping; dy holds d(loss)/d(raw).
        switch (group.kind) {
          case AttributeKind::color: {
            for (int a = 0; a < shCount; ++a) {
              const double r = scratch.raw[a] - target.sh[i * shCount + a];
              groupSse += r * r;
              scratch.dy[a] = 2.0 * r * invNorm;
            }
            break;
          }
          case AttributeKind::scale: {
            for (int a = 0; a < 3; ++a) {
              const double sig = sigmoid(scratch.raw[a]);
              const double s = std::exp(kScaleLogMin + kScaleLogSpan * sig);
              const double r = s - target.scales[i * 3 + a];
              groupSse += r * r;
              scratch.dy[a] = 2.0 * r * invNorm * s * kScaleLogSpan * sig * (1.0 - sig);
            }
            break;
          }
          case AttributeKind::rotation: {
            const double* y = scratch.raw.data();
            const double n =
                std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3]);
            if (n < 1e-12) {
              const double q[4] = {1.0, 0.0, 0.0, 0.0};
              for (int a = 0; a < 4; ++a) {
                const double r = q[a] - target.rotations[i * 4 + a];
                groupSse += r * r;
                scratch.dy[a] = 0.0;
              }
            } else {
              double dq[4];
              double dot = 0.0;
              for (int a = 0; a < 4; ++a) {
                const double q = y[a] / n;
                const double r = q - target.rotations[i * 4 + a];
                groupSse += r * r;
                dq[a] = 2.0 * r * invNorm;
                dot += y[a] * dq[a];
              }
              const double n3 = n * n * n;
              for (int a = 0; a < 4; ++a) {
                scratch.dy[a] = dq[a] / n - y[a] * dot / n3;
              }
            }
            break;
          }
          case AttributeKind::opacity: {
            const double o = sigmoid(scratch.raw[0]);
            const double r = o - target.opacities[i];
            groupSse += r * r;
            scratch.dy[0] = 2.0 * r * invNorm * o * (1.0 - o);
            break;
          }
        }

        if (grads != nullptr) {
          mlpBackward(mlp, feature.data(), scratch, grads->decoders[g], dFeature.data());
          for (int c = 0; c < channels; ++c) {
            const double df = dFeature[c];
            if (df == 0.0) continue;
            const double g0 = df * planeSamples[1][c] * planeSamples[2][c];
            const double g1 = df * planeSamples[0][c] * planeSamples[2][c];
            const double g2 = df * planeSamples[0][c] * planeSamples[1][c];
            tapScatter(grads->planes[g][0], res, c, taps[0], g0);
            tapScatter(grads->planes[g][1], res, c, taps[1], g1);
            tapScatter(grads->planes[g][2], res, c, taps[2], g2);
          }
        }
      }
      out.energy += groupSse * invNorm;
    }
  }

  out.l1 = l1Loss(field);
  if (grads != nullptr && weights.lambdaL1 > 0.0) {
    for (int g = 0; g < kGroupCount; ++g) {
      for (int p = 0; p < kPlanesPerGroup; ++p) {
        const auto& values = field.groups[g].planes[p].values;
        auto& grad = grads->planes[g][p];
        for (size_t idx = 0; idx < values.size(); ++idx) {
          if (values[idx] > 0.0) {
            grad[idx] += weights.lambdaL1;
          } else if (values[idx] < 0.0) {
            grad[idx] -= weights.lambdaL1;
          }
        }
      }
    }
  }

  if (includeEntropy && model != nullptr) {
    const BlockSpec block = model->block;
    Dct2d dct(block);
    const int bn = block.rows;
    const int bm = block.cols;
    const int padRows = (res + bn - 1) / bn * bn;
    const int padCols = (res + bm - 1) / bm * bm;
    std::vector<double> blockBuf(static_cast<size_t>(bn) * bm);
    std::vector<double> gradBuf(static_cast<size_t>(bn) * bm);
    std::uniform_real_distribution<double> noise(-1.0 / model->qStep, 1.0 / model->qStep);
    // midpoint nodes over the noise support for the quadrature estimator
    std::vector<double> quadNodes;
    for (int k = 0; k < noiseQuadSamples; ++k) {
      quadNodes.push_back((2.0 * k + 1.0) / noiseQuadSamples / model->qStep -
                          1.0 / model->qStep);
    }

    for (int g = 0; g < kGroupCount; ++g) {
      for (int c = 0; c < channels; ++c) {
        const double wc = channelWeightsFlat.empty()
                              ? 1.0
                              : channelWeightsFlat[static_cast<size_t>(g) * channels + c];
        for (int p = 0; p < kPlanesPerGroup; ++p) {
          const FeaturePlane& plane = field.groups[g].planes[p];
          double bits = 0.0;
          for (int br = 0; br < padRows; br += bn) {
            for (int bc = 0; bc < padCols; bc += bm) {
              for (int r = 0; r < bn; ++r) {
                const int sr = std::min(br + r, res - 1);
                for (int cc = 0; cc < bm; ++cc) {
                  const int sc = std::min(bc + cc, res - 1);
                  blockBuf[static_cast<size_t>(r) * bm + cc] = plane.at(c, sr, sc);
                }
              }
              dct.forward(blockBuf.data(), blockBuf.data());
              if (noiseQuadSamples <= 0 && noiseRng != nullptr) {
                for (double& v : blockBuf) v += noise(*noiseRng);
              }
              for (int r = 0; r < bn; ++r) {
                for (int cc = 0; cc < bm; ++cc) {
                  const double b = model->scaleAt(g, p, c, r * bm + cc);
                  const double v = blockBuf[static_cast<size_t>(r) * bm + cc];
                  if (quadNodes.empty()) {
                    bits += coefficientBits(v, b, model->qStep);
                    if (grads != nullptr) {
                      gradBuf[static_cast<size_t>(r) * bm + cc] =
                          weights.lambdaEnt * wc * coefficientBitsGrad(v, b, model->qStep);
                    }
                  } else {
                    double meanBits = 0.0;
                    double meanGrad = 0.0;
                    for (const double u : quadNodes) {
                      meanBits += coefficientBits(v + u, b, model->qStep);
                      if (grads != nullptr) {
                        meanGrad += coefficientBitsGrad(v + u, b, model->qStep);
                      }
                    }
                    bits += meanBits / noiseQuadSamples;
                    if (grads != nullptr) {
                      gradBuf[static_cast<size_t>(r) * bm + cc] =
                          weights.lambdaEnt * wc * meanGrad / noiseQuadSamples;
                    }
                  }
                }
              }
              if (grads != nullptr) {
                dct.inverse(gradBuf.data(), gradBuf.data());
                auto& grad = grads->planes[g][p];
                for (int r = 0; r < bn; ++r) {
                  const int sr = std::min(br + r, res - 1);
                  for (int cc = 0; cc < bm; ++cc) {
                    const int sc = std::min(bc + cc, res - 1);
                    grad[(static_cast<size_t>(c) * res + sr) * res + sc] +=
                        gradBuf[static_cast<size_t>(r) * bm + cc];
                  }
                }
              }
            }
          }
          out.entropyBits += wc * bits;
        }
      }
    }
  }

  out.total = out.energy + weights.lambdaEnt * out.entropyBits + weights.lambdaL1 * out.l1;
  return out;
}

double surrogateEnergy(const TriPlaneField& field, const DecoderSet& decoders,
                       const GaussianCloud& target) {
  std::vector<size_t> all(target.size());
  std::iota(all.begin(), all.end(), size_t{0});
  return computeLoss(field, decoders, target, all, LossWeights{}, false, nullptr, {}, nullptr,
                     nullptr)
      .energy;
}

std::vector<double> channelImportanceScores(const TriPlaneField& field,
                                            const DecoderSet& decoders,
                                            const GaussianCloud& target) {
  std::vector<size_t> all(target.size());
  std::iota(all.begin(), all.end(), size_t{0});
  Gradients grads = makeGradients(field, decoders);
  computeLoss(field, decoders, target, all, LossWeights{}, false, nullptr, {}, nullptr, &grads);
  const int channels = field.channels;
  const size_t perChannel = static_cast<size_t>(field.resolution) * field.resolution;
  std::vector<double> scores(static_cast<size_t>(kGroupCount) * channels, 0.0);
  const double norm = target.size() > 0 ? 1.0 / static_cast<double>(target.size()) : 0.0;
  for (int g = 0; g < kGroupCount; ++g) {
    for (int c = 0; c < channels; ++c) {
      double acc = 0.0;
      for (int p = 0; p < kPlanesPerGroup; ++p) {
        const double* gp = grads.planes[g][p].data() + static_cast<size_t>(c) * perChannel;
        for (size_t idx = 0; idx < perChannel; ++idx) {
          acc += std::abs(gp[idx]);
        }
      }
      scores[static_cast<size_t>(g) * channels + c] = acc * norm;
    }
  }
  return scores;
}

std::string logToCsv(const std::vector<LogRow>& log) {
  std::ostringstream out;
  out << "iteration,energy_mse,entropy_bits,l1,total_loss\n";
  out.precision(12);
  for (const LogRow& row : log) {
    out << row.iteration << ',' << row.energy << ',' << row.entropyBits << ',' << row.l1 << ','
        << row.total << '\n';
  }
  return out.str();
}

Trainer::Trainer(const TrainConfig& config, GaussianCloud target)
    : config_(config), target_(std::move(target)), rng_(config.seed) {
  config_.validate();
  if (target_.size() == 0) {
    throw std::invalid_argument("Trainer: empty target cloud");
  }
  field_ = makeField(config_.planeResolution, config_.planeChannels, config_.shDegree, rng_);
  decoders_ = makeDecoders(field_, config_.hiddenWidth, rng_);
  initState();
}

Trainer::Trainer(const TrainConfig& config, GaussianCloud target, TriPlaneField field,
                 DecoderSet decoders)
    : config_(config),
      target_(std::move(target)),
      field_(std::move(field)),
      decoders_(std::move(decoders)),
      rng_(config.seed) {
  config_.validate();
  if (target_.size() == 0) {
    throw std::invalid_argument("Trainer: empty target cloud");
  }
  if (field_.resolution != config_.planeResolution ||
      field_.channels != config_.planeChannels || field_.shDegree != config_.shDegree) {
    throw std::invalid_argument("Trainer: warm-start field does not match config");
  }
  initState();
}

void Trainer::initState() {
  model_ = makeEntropyModel(config_.planeChannels, config_.qStep, config_.block);
  grads_ = makeGradients(field_, decoders_);
  for (int g = 0; g < kGroupCount; ++g) {
    for (int p = 0; p < kPlanesPerGroup; ++p) {
      planeAdam_[g][p].m.assign(field_.groups[g].planes[p].values.size(), 0.0);
      planeAdam_[g][p].v.assign(field_.groups[g].planes[p].values.size(), 0.0);
    }
    const MlpDecoder& mlp = decoders_[g];
    const std::vector<double>* tensors[6] = {&mlp.w1, &mlp.b1, &mlp.w2,
                                             &mlp.b2, &mlp.w3, &mlp.b3};
    for (int t = 0; t < 6; ++t) {
      decoderAdam_[g][t].m.assign(tensors[t]->size(), 0.0);
      decoderAdam_[g][t].v.assign(tensors[t]->size(), 0.0);
    }
  }
}

std::vector<size_t> Trainer::drawBatch() {
  const size_t n = target_.size();
  if (config_.batchSize <= 0 || static_cast<size_t>(config_.batchSize) >= n) {
    std::vector<size_t> all(n);
    std::iota(all.begin(), all.end(), size_t{0});
    return all;
  }
  std::uniform_int_distribution<size_t> pick(0, n - 1);
  std::vector<size_t> batch(config_.batchSize);
  for (auto& idx : batch) {
    idx = pick(rng_);
  }
  return batch;
}

void Trainer::maybeComputeImportance() {
  if (!config_.channelImportanceEnabled || importanceComputed_) return;
  if (iteration_ != config_.ciIteration) return;
  const std::vector<double> scores = channelImportanceScores(field_, decoders_, target_);
  // Weights are anchored per attribute group: gradient magnitudes differ by
  // orders of magnitude between groups, so a single global anchor would push
  // whole groups into the weight cap.
  const int channels = config_.planeChannels;
  importance_ = ChannelImportance{};
  importance_.ci = scores;
  for (int g = 0; g < kGroupCount; ++g) {
    const std::vector<double> slice(scores.begin() + static_cast<size_t>(g) * channels,
                                    scores.begin() + static_cast<size_t>(g + 1) * channels);
    const ChannelImportance groupWeights = channelWeights(slice, config_.weightCap);
    importance_.weights.insert(importance_.weights.end(), groupWeights.weights.begin(),
                               groupWeights.weights.end());
    importance_.capped = importance_.capped || groupWeights.capped;
  }
  importanceComputed_ = true;
}

void Trainer::adamUpdate(std::vector<double>& params, const std::vector<double>& grads,
                         AdamTensor& state, double lr, size_t count) {
  const double biasC1 = 1.0 - std::pow(kAdamBeta1, adamStep_);
  const double biasC2 = 1.0 - std::pow(kAdamBeta2, adamStep_);
  for (size_t i = 0; i < count; ++i) {
    const double g = grads[i];
    state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * g;
    state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * g * g;
    const double mHat = state.m[i] / biasC1;
    const double vHat = state.v[i] / biasC2;
    params[i] -= lr * mHat / (std::sqrt(vHat) + kAdamEps);
  }
}

LogRow Trainer::step() {
  const int t = iteration_;
  maybeComputeImportance();

  const bool entropyActive = config_.weights.lambdaEnt > 0.0 && t >= config_.entropyStartIteration;
  if (entropyActive &&
      (t - config_.entropyStartIteration) % std::max(config_.scaleRefitInterval, 1) == 0) {
    fitScales(model_, field_);
  }

  const std::vector<size_t> batch = drawBatch();
  zeroGradients(grads_);
  static const std::vector<double> kUnitWeights;
  const std::vector<double>& flatWeights =
      importanceComputed_ ? importance_.weights : kUnitWeights;
  const LossBreakdown losses =
      computeLoss(field_, decoders_, target_, batch, config_.weights, entropyActive, &model_,
                  flatWeights, entropyActive ? &rng_ : nullptr, &grads_,
                  config_.entropyNoiseSamples);
  if (!std::isfinite(losses.total)) {
    std::ostringstream msg;
    msg << "train step " << t << ": non-finite loss (energy=" << losses.energy
        << ", entropy=" << losses.entropyBits << ", l1=" << losses.l1 << ")";
    throw std::runtime_error(msg.str());
  }

  const int active =
      std::min(activeChannels(t, config_.schedule), config_.planeChannels);
  const size_t perChannel =
      static_cast<size_t>(config_.planeResolution) * config_.planeResolution;
  const size_t activeCount = static_cast<size_t>(active) * perChannel;

  // Inactive channels are excluded from the update entirely; their gradient
  // tail is cleared first so the masking is observable to callers.
  for (int g = 0; g < kGroupCount; ++g) {
    for (int p = 0; p < kPlanesPerGroup; ++p) {
      auto& grad = grads_.planes[g][p];
      std::fill(grad.begin() + activeCount, grad.end(), 0.0);
    }
  }

  adamStep_ += 1;
  const double decay =
      config_.totalIterations > 0
          ? std::pow(config_.lrDecayFactor,
                     static_cast<double>(t) / config_.totalIterations)
          : 1.0;
  const double planeLr = config_.planeLr * decay;
  const double decoderLr = config_.decoderLr * decay;

  for (int g = 0; g < kGroupCount; ++g) {
    for (int p = 0; p < kPlanesPerGroup; ++p) {
      adamUpdate(field_.groups[g].planes[p].values, grads_.planes[g][p], planeAdam_[g][p],
                 planeLr, activeCount);
    }
    MlpDecoder& mlp = decoders_[g];
    MlpGradients& dg = grads_.decoders[g];
    std::vector<double>* params[6] = {&mlp.w1, &mlp.b1, &mlp.w2, &mlp.b2, &mlp.w3, &mlp.b3};
    std::vector<double>* grads[6] = {&dg.w1, &dg.b1, &dg.w2, &dg.b2, &dg.w3, &dg.b3};
    for (int k = 0; k < 6; ++k) {
      adamUpdate(*params[k], *grads[k], decoderAdam_[g][k], decoderLr, params[k]->size());
    }
  }

  iteration_ += 1;
  LogRow row{t, losses.energy, losses.entropyBits, losses.l1, losses.total};
  log_.push_back(row);
  return row;
}

TrainResult Trainer::run() {
  while (iteration_ < config_.totalIterations) {
    step();
  }
  maybeComputeImportance();  // ciIteration == totalIterations case
  fitScales(model_, field_);
  return {field_, decoders_, model_, importance_, log_};
}

double Trainer::psnrToTarget() const {
  return attributePsnr(predictCloud(field_, decoders_, target_.positions), target_);
}

TrainResult runTraining(const TrainConfig& config, GaussianCloud target) {
  Trainer trainer(config, std::move(target));
  return trainer.run();
}

double attributePsnr(const GaussianCloud& predicted, const GaussianCloud& target) {
  if (predicted.size() != target.size() || predicted.shDegree != target.shDegree) {
    throw std::invalid_argument("attributePsnr: cloud shape mismatch");
  }
  double sse = 0.0;
  size_t count = 0;
  auto accumulate = [&](const std::vector<double>& a, const std::vector<double>& b) {
    for (size_t i = 0; i < a.size(); ++i) {
      const double r = a[i] - b[i];
      sse += r * r;
    }
    count += a.size();
  };
  accumulate(predicted.sh, target.sh);
  accumulate(predicted.scales, target.scales);
  accumulate(predicted.rotations, target.rotations);
  accumulate(predicted.opacities, target.opacities);
  if (count == 0) return 0.0;
  const double mse = sse / static_cast<double>(count);
  if (mse < 1e-30) return 300.0;
  return -10.0 * std::log10(mse);
}

}  // namespace gsc
