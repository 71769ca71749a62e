#include "matn/errors.hpp"
#include "matn/numerics.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace matn {
namespace {

// Scalar parameter set for exercising finite_diff_grad on closed forms.
struct Scalar {
  std::vector<double> theta{0.0};
  std::vector<TensorView> tensors() {
    return {{"theta", {1}, theta, SparseAxis::kNone}};
  }
  std::vector<ConstTensorView> tensors() const {
    return {{"theta", {1}, theta, SparseAxis::kNone}};
  }
};
static_assert(ParameterSet<Scalar>);

TEST(Matvec, Identity) {
  const Vector x = Vector::LinSpaced(3, 1, 3);
  EXPECT_EQ(matvec(DenseMatrix::Identity(3, 3), x), x);
}

TEST(Matvec, ZeroMatrix) {
  const Vector y = matvec(DenseMatrix::Zero(2, 3), Vector::Ones(3));
  ASSERT_EQ(y.size(), 2);
  EXPECT_EQ(y(0), 0.0);
  EXPECT_EQ(y(1), 0.0);
}

TEST(Matvec, HandArithmetic) {
  DenseMatrix a(2, 2);
  a << 1, 2, 3, 4;
  const Vector y = matvec(a, Vector::Ones(2));
  EXPECT_EQ(y(0), 3.0);
  EXPECT_EQ(y(1), 7.0);
}

TEST(Matvec, ShapeMismatchThrows) {
  EXPECT_THROW(matvec(DenseMatrix::Zero(2, 3), Vector::Ones(2)), DimensionError);
}

TEST(Matvec, Linearity) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = glorot_init(4, 5, rng);
    Vector x(5), y(5);
    for (int k = 0; k < 5; ++k) {
      x(k) = rng.normal();
      y(k) = rng.normal();
    }
    const double s = rng.normal(), t = rng.normal();
    const Vector lhs = matvec(a, s * x + t * y);
    const Vector rhs = s * matvec(a, x) + t * matvec(a, y);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Softmax, UniformOnZeros) {
  const Vector p = softmax(Vector::Zero(3));
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(p(k), 1.0 / 3.0, 1e-15);
}

TEST(Softmax, Singleton) {
  Vector x(1);
  x << 5.0;
  EXPECT_EQ(softmax(x)(0), 1.0);
}

TEST(Softmax, LargeInputsDoNotOverflow) {
  Vector x(2);
  x << 1000.0, 1000.0;
  const Vector p = softmax(x);
  EXPECT_EQ(p(0), 0.5);
  EXPECT_EQ(p(1), 0.5);
}

TEST(Softmax, EmptyThrows) {
  EXPECT_THROW(softmax(Vector()), DimensionError);
}

TEST(Softmax, ShiftInvarianceAndNormalization) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Vector x(6);
    for (int k = 0; k < 6; ++k) x(k) = rng.normal(0.0, 5.0);
    const double c = rng.uniform(-100.0, 100.0);
    const Vector p = softmax(x);
    const Vector q = softmax((x.array() + c).matrix());
    EXPECT_LT((p - q).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GT(p.minCoeff(), 0.0);
  }
}

TEST(Relu, Examples) {
  Vector x(3);
  x << -1, 0, 2;
  const Vector y = relu(x);
  EXPECT_EQ(y(0), 0.0);
  EXPECT_EQ(y(1), 0.0);
  EXPECT_EQ(y(2), 2.0);
  EXPECT_EQ(relu(Vector::Constant(4, -3.0)), Vector::Zero(4));
  const Vector pos = Vector::LinSpaced(4, 0.5, 2.0);
  EXPECT_EQ(relu(pos), pos);
}

TEST(Relu, Idempotent) {
  Rng rng(5);
  Vector x(20);
  for (int k = 0; k < 20; ++k) x(k) = rng.normal();
  EXPECT_EQ(relu(relu(x)), relu(x));
}

TEST(Glorot, Deterministic) {
  Rng a(42), b(42);
  EXPECT_EQ(glorot_init(7, 3, a), glorot_init(7, 3, b));
}

TEST(Glorot, WithinBound) {
  Rng rng(1);
  const auto m = glorot_init(30, 50, rng);
  const double bound = std::sqrt(6.0 / 80.0);
  EXPECT_LE(m.cwiseAbs().maxCoeff(), bound);
}

TEST(Glorot, SampleMeanNearZero) {
  Rng rng(9);
  const auto m = glorot_init(1000, 1000, rng);
  const double bound = std::sqrt(6.0 / 2000.0);
  // uniform(-b, b) has sd b/sqrt(3); the mean of n draws has sd that / sqrt(n)
  const double sigma = bound / std::sqrt(3.0) / std::sqrt(1e6);
  EXPECT_LT(std::abs(m.mean()), 3.0 * sigma);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(123), b(123);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(a.uniform(0, 1), b.uniform(0, 1));
  EXPECT_EQ(Rng(7).split(2).seed(), 9u);
}

TEST(FiniteDiff, Square) {
  Scalar s;
  s.theta[0] = 3.0;
  const std::function<double(const Scalar&)> f = [](const Scalar& p) {
    return p.theta[0] * p.theta[0];
  };
  const auto g = finite_diff_grad(f, s, 1e-5);
  EXPECT_NEAR(g[0][0], 6.0, 1e-8);
  EXPECT_EQ(s.theta[0], 3.0);
}

TEST(FiniteDiff, Constant) {
  Scalar s;
  s.theta[0] = -2.0;
  const std::function<double(const Scalar&)> f = [](const Scalar&) { return 4.2; };
  EXPECT_EQ(finite_diff_grad(f, s)[0][0], 0.0);
}

TEST(FiniteDiff, NonFiniteNamesCoordinate) {
  Scalar s;
  const std::function<double(const Scalar&)> f = [](const Scalar& p) {
    return p.theta[0] > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  };
  try {
    finite_diff_grad(f, s);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("theta[0]"), std::string::npos);
  }
}

TEST(FiniteDiff, RejectsNonPositiveEps) {
  Scalar s;
  const std::function<double(const Scalar&)> f = [](const Scalar&) { return 0.0; };
  EXPECT_THROW(finite_diff_grad(f, s, 0.0), NumericError);
}

TEST(RelativeError, UsesFloor) {
  EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_NEAR(relative_error(1e-10, 0.0), 1e-2, 1e-15);
  EXPECT_NEAR(relative_error(2.0, 1.0), 0.5, 1e-15);
}

TEST(CheckFinite, Throws) {
  std::vector<double> v{1.0, std::nan("")};
  EXPECT_THROW(check_finite(v, "v"), NumericError);
  v[1] = 0.0;
  EXPECT_NO_THROW(check_finite(v, "v"));
}

}  // namespace
}  // namespace matn
