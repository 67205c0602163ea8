#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ogsf/error.hpp"
#include "ogsf/geometry.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ogsf;

namespace {

std::vector<Real> shifted(std::vector<Real> p, Real dx, Real dy, Real dz) {
  for (std::size_t i = 0; i < p.size(); i += 3) {
    p[i] += dx;
    p[i + 1] += dy;
    p[i + 2] += dz;
  }
  return p;
}

}  // namespace

TEST_CASE("farthest point sampling examples") {
  const std::vector<Real> line = {0, 0, 0, 1, 0, 0, 2, 0, 0, 10, 0, 0};
  CHECK(farthest_point_sample(line, 2, 0) == std::vector<std::size_t>{0, 3});
  CHECK(oracle::fps(line, 2, 0) == std::vector<std::size_t>{0, 3});
  const auto all = farthest_point_sample(line, 4, 1);
  CHECK(all.front() == 1);
  auto sorted = all;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(farthest_point_sample(line, 1, 2) == std::vector<std::size_t>{2});

  CHECK_THROWS_AS(farthest_point_sample(line, 5), ContractError);
  CHECK_THROWS_AS(farthest_point_sample(line, 0), ContractError);
  CHECK_THROWS_AS(farthest_point_sample(line, 2, 4), ContractError);
}

TEST_CASE("farthest point sampling ties go to the lowest index") {
  // Points 1 and 2 are both at distance 1 from the seed.
  const std::vector<Real> p = {0, 0, 0, 1, 0, 0, -1, 0, 0};
  CHECK(farthest_point_sample(p, 2, 0) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("farthest point sampling matches the exhaustive oracle") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng() % 256;
    const std::size_t m = 1 + rng() % n;
    const std::size_t seed = rng() % n;
    const auto p = test::uniform(rng, 3 * n);
    CHECK(farthest_point_sample(p, m, seed) == oracle::fps(p, m, seed));
  }
}

TEST_CASE("k nearest examples") {
  const std::vector<Real> q = {0, 0, 0};
  const std::vector<Real> ref = {1, 0, 0, 0, 2, 0, 0, 0, 3};
  const NeighborSet nb = k_nearest(q, ref, 2);
  CHECK(nb.k == 2);
  CHECK(nb.indices == std::vector<std::size_t>{0, 1});
  CHECK(nb.distances == std::vector<Real>{1.0, 2.0});

  const NeighborSet self = k_nearest(std::vector<Real>{0, 2, 0}, ref, 1);
  CHECK(self.indices[0] == 1);
  CHECK(self.distances[0] == 0);

  const NeighborSet clamp = k_nearest(q, ref, 10);
  CHECK(clamp.k == 3);
  CHECK(clamp.indices == std::vector<std::size_t>{0, 1, 2});

  CHECK_THROWS_AS(k_nearest(q, std::vector<Real>{}, 1), ContractError);
  CHECK_THROWS_AS(k_nearest(q, ref, 0), ContractError);
  CHECK_THROWS_AS(k_nearest(std::vector<Real>{0, 0}, ref, 1), DimensionError);
}

TEST_CASE("k nearest matches a brute-force sort") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t nr = 1 + rng() % 512, nq = 1 + rng() % 64, k = 1 + rng() % 20;
    const auto ref = test::uniform(rng, 3 * nr), q = test::uniform(rng, 3 * nq);
    const NeighborSet nb = k_nearest(q, ref, k);
    for (std::size_t i = 0; i < nq; ++i) {
      const auto expect = oracle::knn(q, i, ref, k);
      const std::vector<std::size_t> got(nb.indices.begin() + i * nb.k,
                                         nb.indices.begin() + (i + 1) * nb.k);
      CHECK(got == expect);
      for (std::size_t j = 1; j < nb.k; ++j) CHECK(nb.distance(i, j - 1) <= nb.distance(i, j));
    }
  }
}

TEST_CASE("inverse distance interpolation examples") {
  const std::vector<Real> coarse = {0, 0, 0, 4, 0, 0};
  const std::vector<Real> fine = {1, 0, 0};
  const Real u = 2, v = -6;
  const Tensor vals = Tensor::constant({2, 1}, {u, v});
  const Tensor out = inverse_distance_interpolate(coarse, vals, fine, 2, 1e-12);
  CHECK(out.shape() == Shape{1, 1});
  CHECK(out.values()[0] == doctest::Approx((3 * u + v) / 4).epsilon(1e-9));

  const Tensor hit =
      inverse_distance_interpolate(coarse, vals, std::vector<Real>{4, 0, 0}, 2, 1e-10);
  CHECK(std::abs(hit.values()[0] - v) < 1e-6);

  std::mt19937_64 rng(3);
  const auto cp = test::uniform(rng, 30), fp = test::uniform(rng, 60);
  const Tensor constant = Tensor::constant({10, 2}, std::vector<Real>{0.7, -1.3, 0.7, -1.3, 0.7, -1.3,
                                                                     0.7, -1.3, 0.7, -1.3, 0.7, -1.3,
                                                                     0.7, -1.3, 0.7, -1.3, 0.7, -1.3,
                                                                     0.7, -1.3});
  const Tensor flat = inverse_distance_interpolate(cp, constant, fp, 3);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(flat.values()[2 * i] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(flat.values()[2 * i + 1] == doctest::Approx(-1.3).epsilon(1e-12));
  }

  CHECK_THROWS_AS(inverse_distance_interpolate(std::vector<Real>{}, Tensor::constant({0, 1}, {}), fine, 1),
                  ContractError);
}

TEST_CASE("interpolated values stay within their neighbours' bounds") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t nc = 4 + rng() % 30, nf = 1 + rng() % 40, c = 3;
    const auto cp = test::uniform(rng, 3 * nc), fp = test::uniform(rng, 3 * nf);
    const auto cv = test::uniform(rng, nc * c);
    const Tensor out = inverse_distance_interpolate(cp, Tensor::constant({nc, c}, cv), fp, 3);
    const NeighborSet nb = k_nearest(fp, cp, 3);
    for (std::size_t i = 0; i < nf; ++i)
      for (std::size_t ch = 0; ch < c; ++ch) {
        Real lo = INFINITY, hi = -INFINITY;
        for (std::size_t j = 0; j < nb.k; ++j) {
          lo = std::min(lo, cv[nb.index(i, j) * c + ch]);
          hi = std::max(hi, cv[nb.index(i, j) * c + ch]);
        }
        const Real x = out.values()[i * c + ch];
        CHECK(x >= lo - 1e-12);
        CHECK(x <= hi + 1e-12);
      }
  }
}

TEST_CASE("interpolation gradient reaches coarse values only") {
  std::mt19937_64 rng(6);
  const auto cp = test::uniform(rng, 15), fp = test::uniform(rng, 21);
  const test::Builder f = [&](std::span<const Tensor> in) {
    return inverse_distance_interpolate(cp, in[0], fp, 3);
  };
  CHECK(test::gradcheck(f, {{5, 2}}, {test::uniform(rng, 10)}, rng) < 1e-6);
}

TEST_CASE("geometry is translation equivariant") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = test::uniform(rng, 3 * 120), q = test::uniform(rng, 3 * 30);
    const auto ps = shifted(p, 0.25, -0.5, 0.125), qs = shifted(q, 0.25, -0.5, 0.125);
    CHECK(farthest_point_sample(p, 40, 3) == farthest_point_sample(ps, 40, 3));
    const NeighborSet a = k_nearest(q, p, 5), b = k_nearest(qs, ps, 5);
    CHECK(a.indices == b.indices);
    const auto wa = inverse_distance_weights(a, 1e-8), wb = inverse_distance_weights(b, 1e-8);
    for (std::size_t i = 0; i < wa.size(); ++i) CHECK(wa[i] == doctest::Approx(wb[i]).epsilon(1e-9));
  }
}

TEST_CASE("point cloud validation") {
  PointCloud c{{0, 0, 0, 1, 1, 1}, {0.5, 0.5}, 1};
  CHECK_NOTHROW(c.validate());
  c.features.pop_back();
  CHECK_THROWS_AS(c.validate(), ContractError);
  PointCloud empty;
  CHECK_THROWS_AS(empty.validate(), ContractError);
  PointCloud bad{{0, 0, NAN}, {}, 0};
  CHECK_THROWS_AS(bad.validate(), ContractError);
}
