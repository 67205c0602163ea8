#include "ogsf/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#ifdef OGSF_HAVE_OPENMP
#include <omp.h>
#endif

namespace ogsf::kernels {

namespace {

inline Real distance3(const Real* a, const Real* b) {
  const Real dx = a[0] - b[0];
  const Real dy = a[1] - b[1];
  const Real dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline void gemm_row(const Real* a_row, std::span<const Real> b, Real* c_row, std::size_t k,
                     std::size_t m) {
  std::fill(c_row, c_row + m, Real{0});
  for (std::size_t p = 0; p < k; ++p) {
    const Real av = a_row[p];
    const Real* b_row = b.data() + p * m;
    for (std::size_t j = 0; j < m; ++j) c_row[j] += av * b_row[j];
  }
}

inline void gemm_nt_row(const Real* g_row, std::span<const Real> b, Real* ga_row, std::size_t k,
                        std::size_t m) {
  for (std::size_t p = 0; p < k; ++p) {
    const Real* b_row = b.data() + p * m;
    Real acc = 0;
    for (std::size_t j = 0; j < m; ++j) acc += g_row[j] * b_row[j];
    ga_row[p] += acc;
  }
}

inline void gemm_tn_row(std::span<const Real> a, std::span<const Real> g, Real* gb_row,
                        std::size_t p, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const Real av = a[i * k + p];
    if (av == Real{0}) continue;
    const Real* g_row = g.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) gb_row[j] += av * g_row[j];
  }
}

void knn_query(const Real* q, std::span<const Real> ref, std::size_t nr, std::size_t k,
               std::vector<Real>& dist, std::vector<std::size_t>& order, std::size_t* out_idx,
               Real* out_dist) {
  dist.resize(nr);
  order.resize(nr);
  for (std::size_t j = 0; j < nr; ++j) dist[j] = distance3(q, ref.data() + 3 * j);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto closer = [&](std::size_t a, std::size_t b) {
    return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    closer);
  for (std::size_t t = 0; t < k; ++t) {
    out_idx[t] = order[t];
    out_dist[t] = dist[order[t]];
  }
}

// Larger distance wins; equal distances prefer the lower index.
inline bool fps_better(Real d, std::size_t i, Real best_d, std::size_t best_i) {
  return d > best_d || (d == best_d && i < best_i);
}

}  // namespace

namespace serial {

void gemm(std::span<const Real> a, std::span<const Real> b, std::span<Real> c, std::size_t n,
          std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) gemm_row(a.data() + i * k, b, c.data() + i * m, k, m);
}

void gemm_nt_acc(std::span<const Real> g, std::span<const Real> b, std::span<Real> ga,
                 std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) gemm_nt_row(g.data() + i * m, b, ga.data() + i * k, k, m);
}

void gemm_tn_acc(std::span<const Real> a, std::span<const Real> g, std::span<Real> gb,
                 std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t p = 0; p < k; ++p) gemm_tn_row(a, g, gb.data() + p * m, p, n, k, m);
}

void knn(std::span<const Real> query, std::size_t nq, std::span<const Real> ref, std::size_t nr,
         std::size_t k, std::span<std::size_t> indices, std::span<Real> distances) {
  std::vector<Real> dist;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < nq; ++i) {
    knn_query(query.data() + 3 * i, ref, nr, k, dist, order, indices.data() + i * k,
              distances.data() + i * k);
  }
}

void fps(std::span<const Real> points, std::size_t n, std::size_t m, std::size_t seed,
         std::span<std::size_t> selected) {
  std::vector<Real> min_dist(n, std::numeric_limits<Real>::infinity());
  std::size_t current = seed;
  selected[0] = seed;
  min_dist[seed] = -1;
  for (std::size_t s = 1; s < m; ++s) {
    const Real* c = points.data() + 3 * current;
    Real best_d = -1;
    std::size_t best_i = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (min_dist[i] < 0) continue;
      min_dist[i] = std::min(min_dist[i], distance3(points.data() + 3 * i, c));
      if (fps_better(min_dist[i], i, best_d, best_i)) {
        best_d = min_dist[i];
        best_i = i;
      }
    }
    current = best_i;
    selected[s] = current;
    min_dist[current] = -1;
  }
}

}  // namespace serial

namespace parallel {

void gemm(std::span<const Real> a, std::span<const Real> b, std::span<Real> c, std::size_t n,
          std::size_t k, std::size_t m) {
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * k * m > 32768)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    gemm_row(a.data() + r * k, b, c.data() + r * m, k, m);
  }
}

void gemm_nt_acc(std::span<const Real> g, std::span<const Real> b, std::span<Real> ga,
                 std::size_t n, std::size_t k, std::size_t m) {
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * k * m > 32768)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    gemm_nt_row(g.data() + r * m, b, ga.data() + r * k, k, m);
  }
}

void gemm_tn_acc(std::span<const Real> a, std::span<const Real> g, std::span<Real> gb,
                 std::size_t n, std::size_t k, std::size_t m) {
  const auto rows = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(static) if (n * k * m > 32768)
  for (std::ptrdiff_t p = 0; p < rows; ++p) {
    const auto r = static_cast<std::size_t>(p);
    gemm_tn_row(a, g, gb.data() + r * m, r, n, k, m);
  }
}

void knn(std::span<const Real> query, std::size_t nq, std::span<const Real> ref, std::size_t nr,
         std::size_t k, std::span<std::size_t> indices, std::span<Real> distances) {
  const auto queries = static_cast<std::ptrdiff_t>(nq);
#pragma omp parallel if (nq * nr > 4096)
  {
    std::vector<Real> dist;
    std::vector<std::size_t> order;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < queries; ++i) {
      const auto r = static_cast<std::size_t>(i);
      knn_query(query.data() + 3 * r, ref, nr, k, dist, order, indices.data() + r * k,
                distances.data() + r * k);
    }
  }
}

void fps(std::span<const Real> points, std::size_t n, std::size_t m, std::size_t seed,
         std::span<std::size_t> selected) {
  std::vector<Real> min_dist(n, std::numeric_limits<Real>::infinity());
  std::size_t current = seed;
  selected[0] = seed;
  min_dist[seed] = -1;
  const auto count = static_cast<std::ptrdiff_t>(n);
  for (std::size_t s = 1; s < m; ++s) {
    const Real* c = points.data() + 3 * current;
    Real best_d = -1;
    std::size_t best_i = n;
#pragma omp parallel if (n > 4096)
    {
      Real local_d = -1;
      std::size_t local_i = n;
#pragma omp for schedule(static) nowait
      for (std::ptrdiff_t t = 0; t < count; ++t) {
        const auto i = static_cast<std::size_t>(t);
        if (min_dist[i] < 0) continue;
        min_dist[i] = std::min(min_dist[i], distance3(points.data() + 3 * i, c));
        if (fps_better(min_dist[i], i, local_d, local_i)) {
          local_d = min_dist[i];
          local_i = i;
        }
      }
#pragma omp critical(ogsf_fps_merge)
      {
        if (local_i < n && fps_better(local_d, local_i, best_d, best_i)) {
          best_d = local_d;
          best_i = local_i;
        }
      }
    }
    current = best_i;
    selected[s] = current;
    min_dist[current] = -1;
  }
}

}  // namespace parallel

int thread_count() {
#ifdef OGSF_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_thread_count(int threads) {
#ifdef OGSF_HAVE_OPENMP
  omp_set_num_threads(std::max(1, threads));
#else
  (void)threads;
#endif
}

}  // namespace ogsf::kernels
