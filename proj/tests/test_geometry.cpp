#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <bitset>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "gsc/geometry.h"

using namespace gsc;

namespace {

// Independent z-order comparator: builds the interleaved bit string per point
// and compares lexicographically, never touching mortonKey.
std::string interleavedBitString(const QuantizedPosition& q) {
  std::string bits;
  bits.reserve(48);
  for (int i = 15; i >= 0; --i) {
    bits.push_back(((q.qz >> i) & 1) ? '1' : '0');
    bits.push_back(((q.qy >> i) & 1) ? '1' : '0');
    bits.push_back(((q.qx >> i) & 1) ? '1' : '0');
  }
  return bits;
}

}  // namespace

TEST_CASE("contract is the identity inside the unit cube") {
  const ContractedPoint c = contract({0.5, 0.2, -0.3});
  CHECK(c.x == 0.5);
  CHECK(c.y == 0.2);
  CHECK(c.z == -0.3);
}

TEST_CASE("contract hand cases") {
  const ContractedPoint a = contract({4.0, 1.0, 1.0});
  CHECK(a.x == doctest::Approx(1.75).epsilon(1e-12));
  CHECK(a.y == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(a.z == doctest::Approx(0.25).epsilon(1e-12));

  const ContractedPoint b = contract({0.0, -3.0, 0.0});
  CHECK(b.x == doctest::Approx(0.0));
  CHECK(b.y == doctest::Approx(-5.0 / 3.0).epsilon(1e-12));
  CHECK(b.z == doctest::Approx(0.0));
}

TEST_CASE("contract ties apply the projective branch to every max axis") {
  const ContractedPoint c = contract({2.0, -2.0, 0.5});
  CHECK(c.x == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(c.y == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(c.z == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("contract rejects non-finite input") {
  CHECK_THROWS_AS(contract({std::nan(""), 0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(contract({0.0, std::numeric_limits<double>::infinity(), 0.0}),
                  std::invalid_argument);
}

TEST_CASE("contract output stays inside the radius-2 ball and is continuous") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> wide(-50.0, 50.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const ContractedPoint c = contract({wide(rng), wide(rng), wide(rng)});
    CHECK(std::max({std::abs(c.x), std::abs(c.y), std::abs(c.z)}) <= 2.0 + 1e-12);
  }
  // boundary continuity: scale unit-sup-norm points by 1 + 1e-6
  for (int i = 0; i < 2000; ++i) {
    Point3 p{unit(rng), unit(rng), unit(rng)};
    const double sup = std::max({std::abs(p.x), std::abs(p.y), std::abs(p.z)});
    if (sup == 0.0) continue;
    p = {p.x / sup, p.y / sup, p.z / sup};
    const double eps = 1e-6;
    const ContractedPoint a = contract(p);
    const ContractedPoint b = contract({p.x * (1 + eps), p.y * (1 + eps), p.z * (1 + eps)});
    const double gap =
        std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
    CHECK(gap <= 1e-5);
  }
}

TEST_CASE("quantizePositions maps the bounding box onto the 16-bit lattice") {
  SUBCASE("endpoints") {
    auto [q, box] = quantizePositions({{0, 0, 0}, {1, 1, 1}});
    CHECK(q[1].qx == 65535);
    CHECK(q[1].qy == 65535);
    CHECK(q[1].qz == 65535);
    CHECK(q[0].qx == 0);
    CHECK_FALSE(box.zeroExtent[0]);
  }
  SUBCASE("round-half-up at the midpoint") {
    auto [q, box] = quantizePositions({{0, 0, 0}, {2, 2, 2}, {1, 1, 1}});
    CHECK(q[2].qx == 32768);
    CHECK(q[2].qy == 32768);
    CHECK(q[2].qz == 32768);
  }
  SUBCASE("single point sets zero-extent flags") {
    auto [q, box] = quantizePositions({{3.5, -1.0, 2.0}});
    CHECK(q[0].qx == 0);
    CHECK(q[0].qy == 0);
    CHECK(q[0].qz == 0);
    CHECK(box.zeroExtent[0]);
    CHECK(box.zeroExtent[1]);
    CHECK(box.zeroExtent[2]);
    const Point3 back = dequantizePosition(q[0], box);
    CHECK(back.x == doctest::Approx(3.5));
  }
}

TEST_CASE("quantize/dequantize round trip is bounded by extent/(2*65535)") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-10.0, 30.0);
  std::vector<Point3> points(500);
  for (auto& p : points) p = {dist(rng), dist(rng), dist(rng)};
  auto [q, box] = quantizePositions(points);
  for (size_t i = 0; i < points.size(); ++i) {
    const Point3 back = dequantizePosition(q[i], box);
    CHECK(std::abs(back.x - points[i].x) <= box.extent[0] / (2.0 * 65535.0) + 1e-12);
    CHECK(std::abs(back.y - points[i].y) <= box.extent[1] / (2.0 * 65535.0) + 1e-12);
    CHECK(std::abs(back.z - points[i].z) <= box.extent[2] / (2.0 * 65535.0) + 1e-12);
  }
}

TEST_CASE("mortonKey interleaves with x at bit zero") {
  CHECK(mortonKey({0, 0, 0}) == 0);
  CHECK(mortonKey({1, 0, 0}) == 1);
  CHECK(mortonKey({0, 1, 0}) == 2);
  CHECK(mortonKey({0, 0, 1}) == 4);
  CHECK(mortonKey({3, 3, 3}) == 63);
  CHECK(mortonKey({65535, 65535, 65535}) == (1ull << 48) - 1);
}

TEST_CASE("mortonKey has no collisions on random trials") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> dist(0, 65535);
  std::set<uint64_t> seen;
  std::set<std::tuple<int, int, int>> inputs;
  for (int i = 0; i < 20000; ++i) {
    const int x = dist(rng), y = dist(rng), z = dist(rng);
    if (!inputs.insert({x, y, z}).second) continue;
    const uint64_t key = mortonKey({static_cast<uint16_t>(x), static_cast<uint16_t>(y),
                                    static_cast<uint16_t>(z)});
    CHECK(seen.insert(key).second);
  }
}

TEST_CASE("mortonOrder matches the bit-string comparator oracle") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> dist(0, 65535);
  std::vector<QuantizedPosition> points(10000);
  for (auto& p : points) {
    p = {static_cast<uint16_t>(dist(rng)), static_cast<uint16_t>(dist(rng)),
         static_cast<uint16_t>(dist(rng))};
  }
  const std::vector<size_t> perm = mortonOrder(points);

  std::vector<size_t> oracle(points.size());
  std::iota(oracle.begin(), oracle.end(), size_t{0});
  std::vector<std::string> keys(points.size());
  for (size_t i = 0; i < points.size(); ++i) keys[i] = interleavedBitString(points[i]);
  std::stable_sort(oracle.begin(), oracle.end(),
                   [&](size_t a, size_t b) { return keys[a] < keys[b]; });
  CHECK(perm == oracle);
}

TEST_CASE("mortonOrder is a stable sort") {
  SUBCASE("already sorted input gives the identity") {
    const std::vector<QuantizedPosition> points{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    const std::vector<size_t> perm = mortonOrder(points);
    CHECK(perm == std::vector<size_t>{0, 1, 2});
  }
  SUBCASE("two points out of order swap") {
    const std::vector<QuantizedPosition> points{{1, 0, 1}, {0, 1, 0}};  // keys 5 and 2
    const std::vector<size_t> perm = mortonOrder(points);
    CHECK(perm == std::vector<size_t>{1, 0});
  }
  SUBCASE("duplicates keep their input order") {
    const std::vector<QuantizedPosition> points{{7, 7, 7}, {7, 7, 7}, {0, 0, 0}};
    const std::vector<size_t> perm = mortonOrder(points);
    CHECK(perm == std::vector<size_t>{2, 0, 1});
  }
}
