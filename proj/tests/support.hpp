#pragma once

// Shared fixtures for the unit tests: seeded random data, a scratch
// directory and a central-difference gradient oracle.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

#include "ogsf/tensor.hpp"

namespace test {

using ogsf::Real;
using ogsf::Shape;
using ogsf::Tensor;

inline std::vector<Real> uniform(std::mt19937_64& rng, std::size_t n, Real lo = -1, Real hi = 1) {
  std::uniform_real_distribution<Real> d(lo, hi);
  std::vector<Real> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Values bounded away from zero, for primitives with a kink at the origin.
inline std::vector<Real> away_from_zero(std::mt19937_64& rng, std::size_t n, Real gap = 0.05) {
  std::vector<Real> v = uniform(rng, n);
  for (auto& x : v)
    if (std::abs(x) < gap) x = x < 0 ? x - gap : x + gap;
  return v;
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ogsf_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Real relative_error(Real a, Real b, Real floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

using Builder = std::function<Tensor(std::span<const Tensor>)>;

// Max relative error between backward() and central differences of the
// readout sum(f(inputs) * weights) with random weights.
inline Real gradcheck(const Builder& f, const std::vector<Shape>& shapes,
                      const std::vector<std::vector<Real>>& values, std::mt19937_64& rng,
                      Real h = 1e-5) {
  std::vector<Tensor> params;
  for (std::size_t i = 0; i < shapes.size(); ++i)
    params.push_back(Tensor::parameter(shapes[i], values[i]));
  const Tensor out = f(params);
  const std::vector<Real> weights = uniform(rng, out.numel());
  const Tensor loss = ogsf::sum_all(ogsf::mul(out, Tensor::constant(out.shape(), weights)));
  const ogsf::Gradients grads = ogsf::backward(loss);

  const auto readout = [&](const std::vector<std::vector<Real>>& vals) {
    std::vector<Tensor> consts;
    for (std::size_t i = 0; i < shapes.size(); ++i) consts.push_back(Tensor::constant(shapes[i], vals[i]));
    const Tensor o = f(consts);
    Real s = 0;
    for (std::size_t i = 0; i < o.numel(); ++i) s += o.values()[i] * weights[i];
    return s;
  };

  Real worst = 0;
  std::vector<std::vector<Real>> vals = values;
  for (std::size_t t = 0; t < shapes.size(); ++t) {
    const std::vector<Real> analytic = grads.of(params[t]);
    for (std::size_t i = 0; i < vals[t].size(); ++i) {
      const Real orig = vals[t][i];
      vals[t][i] = orig + h;
      const Real plus = readout(vals);
      vals[t][i] = orig - h;
      const Real minus = readout(vals);
      vals[t][i] = orig;
      worst = std::max(worst, relative_error(analytic[i], (plus - minus) / (2 * h)));
    }
  }
  return worst;
}

}  // namespace test
