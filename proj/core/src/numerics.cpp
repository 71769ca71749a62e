#include "matn/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace matn {

Vector matvec(const DenseMatrix& a, const Vector& x) {
  if (a.cols() != x.size()) {
    throw DimensionError("matvec: matrix has " + std::to_string(a.cols()) +
                         " columns but vector has " +
                         std::to_string(x.size()) + " entries");
  }
  return a * x;
}

Vector softmax(const Vector& x) {
  if (x.size() == 0) throw DimensionError("softmax: empty input");
  const double peak = x.maxCoeff();
  Vector out = (x.array() - peak).exp().matrix();
  out /= out.sum();
  return out;
}

Vector relu(const Vector& x) { return x.cwiseMax(0.0); }

DenseMatrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  DenseMatrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    m.data()[k] = rng.uniform(-bound, bound);
  }
  return m;
}

void check_finite(std::span<const double> values, const std::string& what) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) {
      throw NumericError("non-finite value in " + what + "[" +
                         std::to_string(k) + "]");
    }
  }
}

double relative_error(double a, double b, double floor) {
  const double scale = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / scale;
}

}  // namespace matn
