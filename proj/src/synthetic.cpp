#include "gsc/synthetic.h"

#include <cmath>
#include <random>

namespace gsc {

namespace {

// Sum of a few random cosines, normalized into [-1, 1].
class SmoothField {
 public:
  SmoothField(int terms, double maxFrequency, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> freq(-maxFrequency, maxFrequency);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * 3.14159265358979323846);
    std::uniform_real_distribution<double> amp(0.3, 1.0);
    double total = 0.0;
    for (int i = 0; i < terms; ++i) {
      Term t;
      t.wx = freq(rng);
      t.wy = freq(rng);
      t.wz = freq(rng);
      t.phase = phase(rng);
      t.amp = amp(rng);
      total += t.amp;
      terms_.push_back(t);
    }
    norm_ = total > 0.0 ? 1.0 / total : 1.0;
  }

  double operator()(const Point3& p) const {
    double acc = 0.0;
    for (const Term& t : terms_) {
      acc += t.amp * std::cos(t.wx * p.x + t.wy * p.y + t.wz * p.z + t.phase);
    }
    return acc * norm_;
  }

 private:
  struct Term {
    double wx, wy, wz, phase, amp;
  };
  std::vector<Term> terms_;
  double norm_ = 1.0;
};

}  // namespace

GaussianCloud makeSyntheticScene(const SyntheticSceneConfig& config) {
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> centerDist(-0.9, 0.9);
  std::normal_distribution<double> offset(0.0, config.clusterSpread);

  std::vector<Point3> centers(std::max(config.clusterCount, 1));
  for (auto& c : centers) {
    c = {centerDist(rng), centerDist(rng), centerDist(rng)};
  }

  const int shCount = shCoefficientCount(config.shDegree);
  std::vector<SmoothField> colorFields;
  for (int i = 0; i < shCount; ++i) {
    colorFields.emplace_back(config.fourierTerms, config.maxFrequency, rng);
  }
  SmoothField opacityField(config.fourierTerms, config.maxFrequency, rng);
  std::vector<SmoothField> scaleFields;
  for (int i = 0; i < 3; ++i) {
    scaleFields.emplace_back(config.fourierTerms, config.maxFrequency, rng);
  }
  std::vector<SmoothField> rotFields;
  for (int i = 0; i < 4; ++i) {
    rotFields.emplace_back(config.fourierTerms, config.maxFrequency, rng);
  }

  GaussianCloud cloud;
  cloud.shDegree = config.shDegree;
  cloud.resize(config.pointCount);
  std::uniform_int_distribution<size_t> pickCluster(0, centers.size() - 1);
  for (size_t i = 0; i < config.pointCount; ++i) {
    const Point3& c = centers[pickCluster(rng)];
    const Point3 p{c.x + offset(rng), c.y + offset(rng), c.z + offset(rng)};
    cloud.positions[i] = p;

    for (int a = 0; a < 3; ++a) {
      cloud.sh[i * shCount + a] = 0.5 + 0.35 * colorFields[a](p);
    }
    for (int a = 3; a < shCount; ++a) {
      cloud.sh[i * shCount + a] = 0.1 * colorFields[a](p);
    }
    cloud.opacities[i] = 0.5 + 0.4 * opacityField(p);
    for (int a = 0; a < 3; ++a) {
      cloud.scales[i * 3 + a] = std::exp(-5.0 + 1.5 * scaleFields[a](p));
    }
    const double q0 = 1.0 + 0.3 * rotFields[0](p);
    const double q1 = 0.3 * rotFields[1](p);
    const double q2 = 0.3 * rotFields[2](p);
    const double q3 = 0.3 * rotFields[3](p);
    const double norm = std::sqrt(q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3);
    cloud.rotations[i * 4 + 0] = q0 / norm;
    cloud.rotations[i * 4 + 1] = q1 / norm;
    cloud.rotations[i * 4 + 2] = q2 / norm;
    cloud.rotations[i * 4 + 3] = q3 / norm;
  }
  return cloud;
}

}  // namespace gsc
