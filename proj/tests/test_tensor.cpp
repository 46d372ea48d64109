#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "thermadapt/adam.hpp"
#include "thermadapt/errors.hpp"
#include "thermadapt/matrix.hpp"
#include "thermadapt/tape.hpp"

using namespace thermadapt;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix m(r, c);
  for (auto& v : m.values()) v = nd(rng);
  return m;
}

}  // namespace

TEST_CASE("matrix identities") {
  std::mt19937_64 rng(3);
  Tape t;
  const auto a = t.constant(Matrix(2, 2));
  const auto b = t.constant(Matrix::identity(2));
  CHECK(t.value(t.add(a, b)) == Matrix::identity(2));

  const Matrix m = random_matrix(3, 5, rng);
  CHECK(matmul(Matrix::identity(3), m) == m);

  const auto z = t.constant(Matrix(3, 4));
  for (double v : t.value(t.sigmoid(z)).values()) CHECK(v == 0.5);
}

TEST_CASE("shape errors are reported") {
  Tape t;
  const auto a = t.constant(Matrix(2, 3));
  const auto b = t.constant(Matrix(2, 3));
  CHECK_THROWS_AS(t.matmul(a, b), DimensionError);
  CHECK_THROWS_AS(t.hadamard(a, t.constant(Matrix(3, 2))), DimensionError);
  CHECK_THROWS_AS(t.slice_rows(a, 1, 3), DimensionError);
}

TEST_CASE("sum of squares gradient") {
  Tape t;
  const auto theta = t.parameter(Matrix{{1.0}, {2.0}});
  const auto g = t.backward(t.sum_squares(theta));
  REQUIRE(g.size() == 1);
  CHECK(g[0](0, 0) == 2.0);
  CHECK(g[0](1, 0) == 4.0);

  Tape u;
  u.parameter(Matrix{{1.0}, {2.0}});
  const auto c = u.constant(Matrix{{3.0}});
  const auto gz = u.backward(u.sum_squares(c));
  CHECK(gz[0](0, 0) == 0.0);
  CHECK(gz[0](1, 0) == 0.0);
}

TEST_CASE("every op against central differences") {
  std::mt19937_64 rng(11);
  Tape t;
  const auto w = t.parameter(random_matrix(4, 6, rng));
  const auto b = t.parameter(random_matrix(4, 1, rng));
  const auto x = t.constant(random_matrix(6, 3, rng));
  const auto h = t.add(t.matmul(w, x), b);
  const auto s = t.sigmoid(t.slice_rows(h, 0, 2));
  const auto th = t.tanh(t.slice_rows(h, 2, 4));
  const NodeId parts[] = {s, t.hadamard(s, th)};
  const auto loss = t.scalar_mul(t.sum_squares(t.concat_rows(parts)), 0.7);
  const auto grads = t.backward(loss);

  const double eps = 1e-6;
  for (std::size_t p = 0; p < t.parameters().size(); ++p) {
    const NodeId id = t.parameters()[p];
    Matrix base = t.value(id);
    for (std::size_t i = 0; i < base.size(); ++i) {
      Matrix plus = base, minus = base;
      plus[i] += eps;
      minus[i] -= eps;
      t.set_value(id, plus);
      t.replay();
      const double lp = t.value(loss)[0];
      t.set_value(id, minus);
      t.replay();
      const double lm = t.value(loss)[0];
      const double fd = (lp - lm) / (2 * eps);
      CHECK(grads[p][i] == doctest::Approx(fd).epsilon(1e-6));
    }
    t.set_value(id, base);
    t.replay();
  }
}

TEST_CASE("adam step") {
  SUBCASE("zero gradient leaves parameters") {
    std::vector<Matrix> params{Matrix{{1.0, -2.0}}};
    AdamState adam({}, params);
    const std::vector<Matrix> grads{Matrix(1, 2)};
    adam.step(params, grads);
    CHECK(params[0] == Matrix{{1.0, -2.0}});
  }
  SUBCASE("first bias-corrected step is lr * g / (|g| + eps)") {
    std::vector<Matrix> params{Matrix{{0.0}}};
    AdamConfig cfg;
    cfg.learning_rate = 0.1;
    AdamState adam(cfg, params);
    adam.step(params, std::vector<Matrix>{Matrix{{1.0}}});
    // m_hat = 1, v_hat = 1
    CHECK(params[0][0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-14));
  }
  SUBCASE("identical parameters stay identical") {
    std::vector<Matrix> params{Matrix{{0.3}}, Matrix{{0.3}}};
    AdamState adam({}, params);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 50; ++i) {
      const double g = nd(rng);
      adam.step(params, std::vector<Matrix>{Matrix{{g}}, Matrix{{g}}});
    }
    CHECK(params[0] == params[1]);
  }
  SUBCASE("non-finite gradient names the block") {
    std::vector<Matrix> params{Matrix{{0.0}}};
    AdamState adam({}, params);
    const std::vector<std::string> names{"head.b"};
    CHECK_THROWS_WITH_AS(adam.step(params, std::vector<Matrix>{Matrix{{NAN}}}, names),
                         doctest::Contains("head.b"), NumericError);
  }
}
