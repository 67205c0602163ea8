#include <doctest.h>

#include <random>

#include "ogsf/kernels.hpp"
#include "support.hpp"

using namespace ogsf;
namespace K = ogsf::kernels;

namespace {

struct ThreadGuard {
  int saved = K::thread_count();
  ~ThreadGuard() { K::set_thread_count(saved); }
};

}  // namespace

TEST_CASE("gemm against a naive triple loop") {
  std::mt19937_64 rng(1);
  const std::size_t n = 7, k = 5, m = 3;
  const auto a = test::uniform(rng, n * k), b = test::uniform(rng, k * m);
  std::vector<Real> c(n * m);
  K::serial::gemm(a, b, c, n, k, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      Real s = 0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * m + j];
      CHECK(c[i * m + j] == doctest::Approx(s).epsilon(1e-14));
    }

  const auto g = test::uniform(rng, n * m);
  std::vector<Real> ga(n * k, 0), gb(k * m, 0);
  K::serial::gemm_nt_acc(g, b, ga, n, k, m);
  K::serial::gemm_tn_acc(a, g, gb, n, k, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      Real s = 0;
      for (std::size_t j = 0; j < m; ++j) s += g[i * m + j] * b[p * m + j];
      CHECK(ga[i * k + p] == doctest::Approx(s).epsilon(1e-14));
    }
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < m; ++j) {
      Real s = 0;
      for (std::size_t i = 0; i < n; ++i) s += a[i * k + p] * g[i * m + j];
      CHECK(gb[p * m + j] == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("parallel kernels are bit-identical to serial ones") {
  ThreadGuard guard;
  std::mt19937_64 rng(7);
  const std::size_t n = 301, k = 13, m = 11;  // above the gemm parallel threshold
  const auto a = test::uniform(rng, n * k), b = test::uniform(rng, k * m), g = test::uniform(rng, n * m);
  const std::size_t np = 5000, nq = 57, kk = 9, fm = 24;  // above the fps parallel threshold
  const auto pts = test::uniform(rng, np * 3), q = test::uniform(rng, nq * 3);

  std::vector<Real> c_ref(n * m), ga_ref(n * k, 0.5), gb_ref(k * m, -0.5);
  K::serial::gemm(a, b, c_ref, n, k, m);
  K::serial::gemm_nt_acc(g, b, ga_ref, n, k, m);
  K::serial::gemm_tn_acc(a, g, gb_ref, n, k, m);
  std::vector<std::size_t> idx_ref(nq * kk), fps_ref(fm);
  std::vector<Real> dist_ref(nq * kk);
  K::serial::knn(q, nq, pts, np, kk, idx_ref, dist_ref);
  K::serial::fps(pts, np, fm, 3, fps_ref);

  for (int threads : {1, 2, 3, 8}) {
    CAPTURE(threads);
    K::set_thread_count(threads);
    std::vector<Real> c(n * m), ga(n * k, 0.5), gb(k * m, -0.5);
    K::parallel::gemm(a, b, c, n, k, m);
    K::parallel::gemm_nt_acc(g, b, ga, n, k, m);
    K::parallel::gemm_tn_acc(a, g, gb, n, k, m);
    CHECK(c == c_ref);
    CHECK(ga == ga_ref);
    CHECK(gb == gb_ref);
    std::vector<std::size_t> idx(nq * kk), sel(fm);
    std::vector<Real> dist(nq * kk);
    K::parallel::knn(q, nq, pts, np, kk, idx, dist);
    K::parallel::fps(pts, np, fm, 3, sel);
    CHECK(idx == idx_ref);
    CHECK(dist == dist_ref);
    CHECK(sel == fps_ref);
  }
}

TEST_CASE("knn breaks distance ties by reference index") {
  // Four references at equal distance from the origin.
  const std::vector<Real> ref = {1, 0, 0, 0, 1, 0, -1, 0, 0, 0, -1, 0};
  const std::vector<Real> q = {0, 0, 0};
  std::vector<std::size_t> idx(3);
  std::vector<Real> dist(3);
  K::serial::knn(q, 1, ref, 4, 3, idx, dist);
  CHECK(idx == std::vector<std::size_t>{0, 1, 2});
  K::parallel::knn(q, 1, ref, 4, 3, idx, dist);
  CHECK(idx == std::vector<std::size_t>{0, 1, 2});
}
