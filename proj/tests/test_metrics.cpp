#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "thermadapt/errors.hpp"
#include "thermadapt/metrics.hpp"

using namespace thermadapt;

TEST_CASE("rmse") {
  const Matrix truth{{20.0, 21.0}, {22.0, 23.0}};
  CHECK(rmse(truth, truth) == 0.0);
  const Matrix shifted{{20.5, 21.5}, {22.5, 23.5}};
  CHECK(rmse(truth, shifted) == 0.5);
  // errors (1, 0) and (0, 1): sqrt(((1 + 0) / 2 + (0 + 1) / 2) / 2)
  const Matrix pred{{21.0, 21.0}, {22.0, 24.0}};
  CHECK(std::abs(rmse(truth, pred) - std::sqrt(0.5)) < 1e-12);
  CHECK_THROWS_AS(rmse(truth, Matrix(2, 3)), DimensionError);
}

TEST_CASE("mase") {
  const Matrix truth{{20.0, 21.0, 22.0}, {19.0, 18.5, 18.0}};
  const std::vector<double> anchors{19.5, 19.0};
  Matrix naive(2, 3);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) naive(i, j) = anchors[i];
  const auto m1 = mase(truth, naive, anchors);
  CHECK_FALSE(m1.degenerate);
  CHECK(m1.value == 1.0);
  CHECK(mase(truth, truth, anchors).value == 0.0);

  // naive MAE = (0.5+1.5+2.5+0+0.5+1)/6 = 1; model MAE = 0.25
  Matrix pred = truth;
  for (auto& v : pred.values()) v += 0.25;
  CHECK(std::abs(mase(truth, pred, anchors).value - 0.25) < 1e-12);

  const Matrix flat{{21.0, 21.0}, {21.0, 21.0}};
  const std::vector<double> flat_anchor{21.0, 21.0};
  const auto d = mase(flat, Matrix{{21.1, 21.0}, {21.0, 21.0}}, flat_anchor);
  CHECK(d.degenerate);
  CHECK(std::isnan(d.value));
}

TEST_CASE("rri") {
  CHECK(std::abs(rri(0.2, 0.15) - 0.25) < 1e-12);
  CHECK(rri(0.3, 0.3) == 0.0);
  const double r = rri(0.109, 0.078);
  CHECK(std::abs(r - 31.0 / 109.0) < 1e-12);
  CHECK(std::abs(r - 0.281) <= 0.005);
  CHECK_THROWS_AS(rri(0.0, 0.1), ContractError);
  CHECK_THROWS_AS(rri(-1.0, 0.1), ContractError);
}
