#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gsc/field.h"

using namespace gsc;

namespace {

TriPlaneField constantField(int res, int channels, double value) {
  std::mt19937_64 rng(0);
  TriPlaneField field = makeField(res, channels, 0, rng);
  for (auto& group : field.groups) {
    for (auto& plane : group.planes) {
      std::fill(plane.values.begin(), plane.values.end(), value);
    }
  }
  return field;
}

}  // namespace

TEST_CASE("sampleFeatures multiplies the three plane samples") {
  TriPlaneField field = constantField(8, 2, 2.0);
  const std::vector<double> f = sampleFeatures(field.groups[0], {0.3, -0.7, 1.2});
  REQUIRE(f.size() == 2);
  CHECK(f[0] == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(f[1] == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("a zero plane zeroes the feature") {
  TriPlaneField field = constantField(8, 2, 3.0);
  std::fill(field.groups[0].planes[1].values.begin(), field.groups[0].planes[1].values.end(),
            0.0);
  const std::vector<double> f = sampleFeatures(field.groups[0], {0.1, 0.1, 0.1});
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 0.0);
}

TEST_CASE("sampling at a texel center returns the texel product exactly") {
  std::mt19937_64 rng(3);
  TriPlaneField field = makeField(9, 1, 0, rng);
  // texel (2, 6) of a 9-resolution plane: u = -2 + 4*2/8, v = -2 + 4*6/8
  const double u = -2.0 + 4.0 * 2.0 / 8.0;
  const double v = -2.0 + 4.0 * 6.0 / 8.0;
  const ContractedPoint p{u, v, v};
  const double expected = field.groups[1].planes[0].at(0, 6, 2) *   // (x,y)
                          field.groups[1].planes[1].at(0, 6, 2) *   // (x,z)
                          field.groups[1].planes[2].at(0, 6, 6);    // (y,z)
  const std::vector<double> f = sampleFeatures(field.groups[1], p);
  CHECK(f[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sampleFeatures is multilinear in each plane") {
  std::mt19937_64 rng(5);
  TriPlaneField field = makeField(16, 3, 0, rng);
  const ContractedPoint p{0.37, -1.1, 0.9};
  const std::vector<double> before = sampleFeatures(field.groups[2], p);
  const double alpha = 3.25;
  for (double& v : field.groups[2].planes[0].values) v *= alpha;
  const std::vector<double> after = sampleFeatures(field.groups[2], p);
  for (size_t c = 0; c < before.size(); ++c) {
    CHECK(after[c] == doctest::Approx(alpha * before[c]).epsilon(1e-12));
  }
}

TEST_CASE("bilinear interpolation stays within the local texel range") {
  std::mt19937_64 rng(7);
  TriPlaneField field = makeField(8, 1, 0, rng);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double x = dist(rng), y = dist(rng), z = dist(rng);
    const double delta = 1e-3;
    const std::vector<double> a = sampleFeatures(field.groups[0], {x, y, z});
    const std::vector<double> b =
        sampleFeatures(field.groups[0], {std::min(x + delta, 2.0), y, z});
    double lo = 1e300, hi = -1e300;
    for (double v : field.groups[0].planes[0].values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    // product of three in-range samples; crude but sufficient continuity probe
    const double bound = 3.0 * std::max(std::abs(lo), std::abs(hi)) *
                         std::max(std::abs(lo), std::abs(hi)) * (hi - lo);
    CHECK(std::abs(a[0] - b[0]) <= bound + 1e-12);
  }
}

TEST_CASE("output mappings") {
  CHECK(opacityFromRaw(0.0) == doctest::Approx(0.5));
  const auto scale = scaleFromRaw({0.0, 0.0, 0.0});
  for (double s : scale) {
    CHECK(s == doctest::Approx(std::exp(-5.05)).epsilon(1e-9));
  }
  const auto rot = rotationFromRaw({2.0, 0.0, 0.0, 0.0});
  CHECK(rot[0] == doctest::Approx(1.0));
  CHECK(rot[1] == doctest::Approx(0.0));
}

TEST_CASE("decoded attribute ranges") {
  std::mt19937_64 rng(11);
  TriPlaneField field = makeField(16, 4, 0, rng);
  DecoderSet decoders = makeDecoders(field, 16, rng);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const GaussianAttributes attrs =
        decodeAttributes(field, decoders, contract({dist(rng), dist(rng), dist(rng)}));
    CHECK(attrs.opacity > 0.0);
    CHECK(attrs.opacity < 1.0);
    for (double s : attrs.scale) {
      CHECK(s >= std::exp(-10.0) - 1e-15);
      CHECK(s <= std::exp(-0.1) + 1e-15);
    }
    const double norm = std::sqrt(attrs.rotation[0] * attrs.rotation[0] +
                                  attrs.rotation[1] * attrs.rotation[1] +
                                  attrs.rotation[2] * attrs.rotation[2] +
                                  attrs.rotation[3] * attrs.rotation[3]);
    CHECK(std::abs(norm - 1.0) < 1e-6);
  }
}

TEST_CASE("predictCloud composes contraction and decoding") {
  std::mt19937_64 rng(13);
  TriPlaneField field = makeField(16, 2, 0, rng);
  DecoderSet decoders = makeDecoders(field, 8, rng);

  SUBCASE("empty input gives an empty cloud") {
    const GaussianCloud cloud = predictCloud(field, decoders, {});
    CHECK(cloud.size() == 0);
  }
  SUBCASE("single point equals decodeAttributes at the contracted point") {
    const GaussianCloud cloud = predictCloud(field, decoders, {{0.0, 0.0, 0.0}});
    const GaussianAttributes attrs = decodeAttributes(field, decoders, contract({0, 0, 0}));
    CHECK(cloud.opacities[0] == attrs.opacity);
    CHECK(cloud.sh[0] == attrs.sh[0]);
    CHECK(cloud.scales[2] == attrs.scale[2]);
    CHECK(cloud.rotations[3] == attrs.rotation[3]);
  }
  SUBCASE("deterministic and permutation-equivariant") {
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<Point3> positions(100);
    for (auto& p : positions) p = {dist(rng), dist(rng), dist(rng)};
    const GaussianCloud a = predictCloud(field, decoders, positions);
    const GaussianCloud b = predictCloud(field, decoders, positions);
    CHECK(a.sh == b.sh);
    CHECK(a.opacities == b.opacities);

    std::vector<size_t> perm(positions.size());
    std::iota(perm.begin(), perm.end(), size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Point3> shuffled(positions.size());
    for (size_t i = 0; i < perm.size(); ++i) shuffled[i] = positions[perm[i]];
    const GaussianCloud c = predictCloud(field, decoders, shuffled);
    const GaussianCloud aPerm = permuteCloud(a, perm);
    CHECK(c.sh == aPerm.sh);
    CHECK(c.scales == aPerm.scales);
    CHECK(c.rotations == aPerm.rotations);
    CHECK(c.opacities == aPerm.opacities);
  }
}
