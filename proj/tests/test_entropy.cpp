#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gsc/entropy.h"

using namespace gsc;

TEST_CASE("coefficientBits matches the closed-form Laplacian mass") {
  // v = 0, b = 1/256, qStep = 256: mass = 1 - e^-1
  const double expected = -std::log2(1.0 - std::exp(-1.0));
  CHECK(coefficientBits(0.0, 1.0 / 256.0, 256.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.6617).epsilon(1e-3));
}

TEST_CASE("coefficientBits floors at 32 bits for far-tail values") {
  CHECK(coefficientBits(1e9, 0.01, 256.0) == doctest::Approx(32.0));
  CHECK(coefficientBits(-1e9, 0.01, 256.0) == doctest::Approx(32.0));
}

TEST_CASE("coefficientBits is symmetric and positive") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(0.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = dist(rng);
    const double b = 0.001 + dist(rng);
    const double bits = coefficientBits(v, b, 256.0);
    CHECK(bits == coefficientBits(-v, b, 256.0));
    CHECK(bits > 0.0);
    CHECK(bits <= 32.0 + 1e-12);
  }
}

TEST_CASE("coefficientBitsGrad matches finite differences") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-0.2, 0.2);
  for (int i = 0; i < 500; ++i) {
    const double v = dist(rng);
    const double b = 0.003 + std::abs(dist(rng));
    const double h = 1e-7;
    const double numeric =
        (coefficientBits(v + h, b, 256.0) - coefficientBits(v - h, b, 256.0)) / (2 * h);
    const double analytic = coefficientBitsGrad(v, b, 256.0);
    CHECK(std::abs(analytic - numeric) <=
          1e-4 * std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
  }
}

TEST_CASE("perturb draws noise inside (-1/qStep, 1/qStep) with zero mean") {
  std::mt19937_64 rng(3);
  std::vector<double> coeffs(1000000, 0.0);
  perturb(coeffs, 256.0, rng);
  double mean = 0.0;
  for (double c : coeffs) {
    CHECK(std::abs(c) < 1.0 / 256.0);
    mean += c;
  }
  mean /= static_cast<double>(coeffs.size());
  CHECK(std::abs(mean) < 1e-3);

  // large qStep shrinks the perturbation toward zero
  std::vector<double> tiny(1000, 0.0);
  perturb(tiny, 1e12, rng);
  for (double c : tiny) CHECK(std::abs(c) < 1e-11);
}

TEST_CASE("entropyOfChannel on a zero channel is uniform per band") {
  const int res = 16;
  EntropyModel model = makeEntropyModel(2, 256.0);
  std::fill(model.scales.begin(), model.scales.end(), 0.01);
  const std::vector<double> zeros(res * res, 0.0);
  const double bits = entropyOfChannel(zeros, res, model, 0, 0, 0);
  const double perCoeff = coefficientBits(0.0, 0.01, 256.0);
  CHECK(bits == doctest::Approx(perCoeff * res * res).epsilon(1e-9));
}

TEST_CASE("doubling the Laplacian scales changes the total bits") {
  const int res = 16;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  std::vector<double> channel(res * res);
  for (auto& v : channel) v = dist(rng);
  EntropyModel model = makeEntropyModel(1, 256.0);
  std::fill(model.scales.begin(), model.scales.end(), 0.02);
  const double bitsA = entropyOfChannel(channel, res, model, 0, 0, 0);
  for (auto& s : model.scales) s *= 2.0;
  const double bitsB = entropyOfChannel(channel, res, model, 0, 0, 0);
  CHECK(std::abs(bitsA - bitsB) > 1e-6);
}

TEST_CASE("a single DC-only block only changes that block's cost") {
  const int res = 8;
  EntropyModel model = makeEntropyModel(1, 256.0);
  std::fill(model.scales.begin(), model.scales.end(), 0.02);
  std::vector<double> channel(res * res, 0.0);
  const double zeroBits = entropyOfChannel(channel, res, model, 0, 0, 0);
  // lift one whole 4x4 block by a constant: only its DC bin cost changes
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      channel[r * res + c] = 0.01;
    }
  }
  const double bits = entropyOfChannel(channel, res, model, 0, 0, 0);
  const double dcDelta = coefficientBits(0.04, 0.02, 256.0) - coefficientBits(0.0, 0.02, 256.0);
  CHECK(bits - zeroBits == doctest::Approx(dcDelta).epsilon(1e-9));
}

TEST_CASE("channelWeights algebra") {
  SUBCASE("spec example") {
    const ChannelImportance ci = channelWeights({2.0, 1.0, 0.5});
    CHECK(ci.weights[0] == 1.0);
    CHECK(ci.weights[1] == doctest::Approx(2.0));
    CHECK(ci.weights[2] == doctest::Approx(4.0));
    CHECK_FALSE(ci.capped);
  }
  SUBCASE("equal importance gives unit weights") {
    const ChannelImportance ci = channelWeights({0.7, 0.7, 0.7, 0.7});
    for (double w : ci.weights) CHECK(w == doctest::Approx(1.0));
  }
  SUBCASE("invariant under uniform rescaling") {
    const ChannelImportance a = channelWeights({2.0, 1.0, 0.5});
    const ChannelImportance b = channelWeights({8.0, 4.0, 2.0});  // power-of-two scale: exact
    CHECK(a.weights == b.weights);
    const ChannelImportance c = channelWeights({6.0, 3.0, 1.5});
    for (size_t i = 0; i < a.weights.size(); ++i) {
      CHECK(std::abs(a.weights[i] - c.weights[i]) <= 1e-12 * a.weights[i]);
    }
  }
  SUBCASE("zero score caps the weight") {
    const ChannelImportance ci = channelWeights({1.0, 0.0});
    CHECK(ci.weights[1] == doctest::Approx(1e3));
    CHECK(ci.capped);
  }
}

TEST_CASE("fitScales matches the mean absolute coefficient per band") {
  std::mt19937_64 rng(7);
  TriPlaneField field = makeField(8, 1, 0, rng);
  EntropyModel model = makeEntropyModel(1, 256.0);
  fitScales(model, field);
  // recompute band 0 (DC) of group 0 plane 0 channel 0 by hand
  const FeaturePlane& plane = field.groups[0].planes[0];
  const std::vector<double> channel(plane.values.begin(),
                                    plane.values.begin() + 8 * 8);
  const CoefficientPlane coeffs = transformPlane(channel, 8, 8, {4, 4});
  double dcAbs = 0.0;
  int count = 0;
  for (int r = 0; r < coeffs.rows; r += 4) {
    for (int c = 0; c < coeffs.cols; c += 4) {
      dcAbs += std::abs(coeffs.values[r * coeffs.cols + c]);
      ++count;
    }
  }
  CHECK(model.scaleAt(0, 0, 0, 0) == doctest::Approx(dcAbs / count).epsilon(1e-12));
}

TEST_CASE("entropyLoss is the weighted sum of channel entropies") {
  std::mt19937_64 rng(9);
  TriPlaneField field = makeField(8, 2, 0, rng);
  EntropyModel model = makeEntropyModel(2, 256.0);
  fitScales(model, field);

  const double plain = entropyLoss(field, model, {});
  double manual = 0.0;
  for (int g = 0; g < kGroupCount; ++g) {
    for (int p = 0; p < kPlanesPerGroup; ++p) {
      const FeaturePlane& plane = field.groups[g].planes[p];
      for (int c = 0; c < 2; ++c) {
        const std::vector<double> channel(
            plane.channelData(c), plane.channelData(c) + plane.resolution * plane.resolution);
        manual += entropyOfChannel(channel, plane.resolution, model, g, p, c);
      }
    }
  }
  CHECK(plain == doctest::Approx(manual).epsilon(1e-12));

  // doubling one channel's weight adds exactly that channel's entropy
  std::vector<double> weights(kGroupCount * 2, 1.0);
  weights[3] = 2.0;  // group 1, channel 1
  const double weighted = entropyLoss(field, model, weights);
  double channelBits = 0.0;
  for (int p = 0; p < kPlanesPerGroup; ++p) {
    const FeaturePlane& plane = field.groups[1].planes[p];
    const std::vector<double> channel(
        plane.channelData(1), plane.channelData(1) + plane.resolution * plane.resolution);
    channelBits += entropyOfChannel(channel, plane.resolution, model, 1, p, 1);
  }
  CHECK(weighted - plain == doctest::Approx(channelBits).epsilon(1e-9));
}

TEST_CASE("zero field is a local entropy minimum") {
  std::mt19937_64 rng(11);
  TriPlaneField field = makeField(8, 1, 0, rng);
  for (auto& group : field.groups) {
    for (auto& plane : group.planes) {
      std::fill(plane.values.begin(), plane.values.end(), 0.0);
    }
  }
  EntropyModel model = makeEntropyModel(1, 256.0);
  std::fill(model.scales.begin(), model.scales.end(), 0.01);
  const double zeroBits = entropyLoss(field, model, {});
  std::uniform_real_distribution<double> dist(-0.01, 0.01);
  for (int trial = 0; trial < 20; ++trial) {
    TriPlaneField perturbed = field;
    for (auto& group : perturbed.groups) {
      for (auto& plane : group.planes) {
        for (auto& v : plane.values) v += dist(rng);
      }
    }
    CHECK(entropyLoss(perturbed, model, {}) > zeroBits);
  }
}

TEST_CASE("l1Loss") {
  std::mt19937_64 rng(13);
  TriPlaneField field = makeField(8, 1, 0, rng);
  for (auto& group : field.groups) {
    for (auto& plane : group.planes) {
      std::fill(plane.values.begin(), plane.values.end(), 0.0);
    }
  }
  CHECK(l1Loss(field) == 0.0);
  field.groups[2].planes[1].values[17] = 3.5;
  CHECK(l1Loss(field) == doctest::Approx(3.5));
  field.groups[0].planes[0].values[0] = -1.25;
  const double base = l1Loss(field);
  for (auto& group : field.groups) {
    for (auto& plane : group.planes) {
      for (auto& v : plane.values) v *= -2.0;
    }
  }
  CHECK(l1Loss(field) == doctest::Approx(2.0 * base));
}
