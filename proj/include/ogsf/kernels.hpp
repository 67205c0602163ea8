#pragma once

// Data-parallel numeric kernels.
//
// Every kernel exists twice: `serial::` is the plain reference loop kept for
// testing, `parallel::` distributes the outer loop with OpenMP. Both variants
// evaluate each output element with the same operation order, so their
// results are bit-identical regardless of thread count. The unqualified
// entry points in `ogsf::kernels` pick the parallel variant when the library
// is built with OpenMP.

#include <cstddef>
#include <span>
#include <vector>

namespace ogsf::kernels {

using Real = double;

namespace serial {

// C(n x m) = A(n x k) * B(k x m)
void gemm(std::span<const Real> a, std::span<const Real> b, std::span<Real> c,
          std::size_t n, std::size_t k, std::size_t m);
// GA(n x k) += G(n x m) * B(k x m)^T
void gemm_nt_acc(std::span<const Real> g, std::span<const Real> b, std::span<Real> ga,
                 std::size_t n, std::size_t k, std::size_t m);
// GB(k x m) += A(n x k)^T * G(n x m)
void gemm_tn_acc(std::span<const Real> a, std::span<const Real> g, std::span<Real> gb,
                 std::size_t n, std::size_t k, std::size_t m);

// For each of nq queries, the k nearest of nr reference points (3D),
// ascending by distance, ties broken by lower reference index.
void knn(std::span<const Real> query, std::size_t nq, std::span<const Real> ref, std::size_t nr,
         std::size_t k, std::span<std::size_t> indices, std::span<Real> distances);

// Greedy farthest-point selection of m indices starting at seed.
void fps(std::span<const Real> points, std::size_t n, std::size_t m, std::size_t seed,
         std::span<std::size_t> selected);

}  // namespace serial

namespace parallel {

void gemm(std::span<const Real> a, std::span<const Real> b, std::span<Real> c,
          std::size_t n, std::size_t k, std::size_t m);
void gemm_nt_acc(std::span<const Real> g, std::span<const Real> b, std::span<Real> ga,
                 std::size_t n, std::size_t k, std::size_t m);
void gemm_tn_acc(std::span<const Real> a, std::span<const Real> g, std::span<Real> gb,
                 std::size_t n, std::size_t k, std::size_t m);
void knn(std::span<const Real> query, std::size_t nq, std::span<const Real> ref, std::size_t nr,
         std::size_t k, std::span<std::size_t> indices, std::span<Real> distances);
void fps(std::span<const Real> points, std::size_t n, std::size_t m, std::size_t seed,
         std::span<std::size_t> selected);

}  // namespace parallel

#ifdef OGSF_HAVE_OPENMP
namespace active = parallel;
#else
namespace active = serial;
#endif

inline void gemm(std::span<const Real> a, std::span<const Real> b, std::span<Real> c,
                 std::size_t n, std::size_t k, std::size_t m) {
  active::gemm(a, b, c, n, k, m);
}
inline void gemm_nt_acc(std::span<const Real> g, std::span<const Real> b, std::span<Real> ga,
                        std::size_t n, std::size_t k, std::size_t m) {
  active::gemm_nt_acc(g, b, ga, n, k, m);
}
inline void gemm_tn_acc(std::span<const Real> a, std::span<const Real> g, std::span<Real> gb,
                        std::size_t n, std::size_t k, std::size_t m) {
  active::gemm_tn_acc(a, g, gb, n, k, m);
}
inline void knn(std::span<const Real> query, std::size_t nq, std::span<const Real> ref,
                std::size_t nr, std::size_t k, std::span<std::size_t> indices,
                std::span<Real> distances) {
  active::knn(query, nq, ref, nr, k, indices, distances);
}
inline void fps(std::span<const Real> points, std::size_t n, std::size_t m, std::size_t seed,
                std::span<std::size_t> selected) {
  active::fps(points, n, m, seed, selected);
}

// Number of worker threads the parallel kernels use (1 without OpenMP).
int thread_count();
void set_thread_count(int threads);

}  // namespace ogsf::kernels
