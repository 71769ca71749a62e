#pragma once

#include "matn/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace matn {

using DenseMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Seedable 64-bit generator. Workers derive their own stream with split().
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  bool bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }
  // Uniform integer in [0, n). n must be positive.
  std::uint32_t index(std::uint32_t n) {
    return std::uniform_int_distribution<std::uint32_t>(0, n - 1)(engine_);
  }

  Rng split(std::uint64_t worker) const { return Rng(seed_ + worker); }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

Vector matvec(const DenseMatrix& a, const Vector& x);

// Numerically stable softmax (max subtraction). Throws on empty input.
Vector softmax(const Vector& x);

Vector relu(const Vector& x);

// Uniform in [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))].
DenseMatrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng);

// Throws NumericError naming `what` if any entry is NaN or infinite.
void check_finite(std::span<const double> values, const std::string& what);

// Which axis of a rank-2 table indexes independent embeddings. Rows or
// columns whose gradient is entirely zero are skipped by the lazy optimizer.
enum class SparseAxis { kNone, kRows, kColumns };

// A flat, named view of one learnable array.
template <class T>
struct BasicTensorView {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::span<T> data;
  SparseAxis sparse_axis = SparseAxis::kNone;
};
using TensorView = BasicTensorView<double>;
using ConstTensorView = BasicTensorView<const double>;

// Anything exposing its learnable arrays in a fixed order.
template <class P>
concept ParameterSet = requires(P& p, const P& cp) {
  { p.tensors() } -> std::same_as<std::vector<TensorView>>;
  { cp.tensors() } -> std::same_as<std::vector<ConstTensorView>>;
};

// Sum of squares over every learnable entry (the Frobenius term of the loss).
template <ParameterSet P>
double squared_norm(const P& params) {
  double total = 0.0;
  for (const auto& t : params.tensors()) {
    for (double v : t.data) total += v * v;
  }
  return total;
}

struct FiniteDiffResult {
  std::string tensor;
  std::size_t offset = 0;
  double numeric = 0.0;
};

// Central-difference gradient of `loss` over every coordinate of `params`.
// The returned gradient has the same tensor layout as `params`, flattened per
// tensor. `params` is restored exactly before returning.
template <ParameterSet P>
std::vector<std::vector<double>> finite_diff_grad(
    const std::function<double(const P&)>& loss, P& params,
    double eps = 1e-5) {
  if (!(eps > 0.0)) throw NumericError("finite_diff_grad: eps must be > 0");
  std::vector<std::vector<double>> grads;
  for (auto& t : params.tensors()) {
    std::vector<double> g(t.data.size());
    for (std::size_t k = 0; k < t.data.size(); ++k) {
      const double saved = t.data[k];
      t.data[k] = saved + eps;
      const double up = loss(params);
      t.data[k] = saved - eps;
      const double down = loss(params);
      t.data[k] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("finite_diff_grad: non-finite loss at " + t.name +
                           "[" + std::to_string(k) + "]");
      }
      g[k] = (up - down) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

// |a - b| / max(|a|, |b|, floor)
double relative_error(double a, double b, double floor = 1e-8);

}  // namespace matn
