#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fsurvey/reference.hpp"
#include "fsurvey/smooth.hpp"

using namespace fsurvey;

TEST_CASE("kernel shapes") {
  CHECK(kernel_eval(Kernel::Epanechnikov, 0.0) == 0.75);
  CHECK(kernel_eval(Kernel::Epanechnikov, 1.5) == 0.0);
  CHECK(kernel_eval(Kernel::Triangular, 1.5) == 0.0);
  CHECK(kernel_eval(Kernel::Uniform, 1.5) == 0.0);
  CHECK(kernel_eval(Kernel::Uniform, 0.3) == 0.5);

  // all kernels integrate to one over [-1, 1] (quadrature oracle)
  for (Kernel kernel : {Kernel::Epanechnikov, Kernel::Triangular, Kernel::Uniform}) {
    const int n = 20001;
    double acc = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
      const double u0 = -1.0 + 2.0 * i / (n - 1.0);
      const double u1 = -1.0 + 2.0 * (i + 1) / (n - 1.0);
      acc += (u1 - u0) * (kernel_eval(kernel, u0) + kernel_eval(kernel, u1)) / 2.0;
    }
    CHECK(std::abs(acc - 1.0) <= 1e-4);
  }
}

TEST_CASE("local linear weights reproduce affine data") {
  const TimeGrid grid = TimeGrid::uniform(23, 1.0);
  Eigen::VectorXd affine(23), ones(23);
  for (int j = 0; j < 23; ++j) {
    affine[j] = -1.3 + 2.7 * grid[j];
    ones[j] = 1.0;
  }
  for (double h : {0.1, 0.25, 0.6}) {
    const auto w = local_linear_weights(grid, h, Kernel::Epanechnikov);
    CHECK(w.n_fallback() == 0);
    const Eigen::VectorXd smoothed = smooth_curve(affine, w);
    CHECK((smoothed - affine).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((smooth_curve(ones, w) - ones).cwiseAbs().maxCoeff() <= 1e-10);
    // row sums and first moment conditions
    for (int i = 0; i < w.n_eval(); ++i) {
      double row_sum = 0.0, moment = 0.0;
      for (int j = 0; j < w.n_source(); ++j) {
        row_sum += w.weights(i, j);
        moment += w.weights(i, j) * (grid[j] - grid[i]);
      }
      CHECK(std::abs(row_sum - 1.0) <= 1e-9);
      CHECK(std::abs(moment) <= 1e-9 * grid.t_max());
    }
  }
  CHECK_THROWS_AS(local_linear_weights(grid, 0.0, Kernel::Epanechnikov), config_error);
}

TEST_CASE("local linear weights equal the explicit WLS solve") {
  const TimeGrid grid = TimeGrid::uniform(5, 1.0);
  const double h = 0.5, t = 0.5;
  const auto w = local_linear_weights(grid, TimeGrid({0.0, t, 1.0}), h, Kernel::Epanechnikov);

  // weighted least squares oracle: first row of (X^T K X)^-1 X^T K
  Eigen::MatrixXd x(5, 2);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(5, 5);
  for (int j = 0; j < 5; ++j) {
    x(j, 0) = 1.0;
    x(j, 1) = grid[j] - t;
    k(j, j) = kernel_eval(Kernel::Epanechnikov, (grid[j] - t) / h);
  }
  const Eigen::MatrixXd gram = x.transpose() * k * x;
  const Eigen::MatrixXd oracle = gram.inverse() * x.transpose() * k;
  for (int j = 0; j < 5; ++j) CHECK(w.weights(1, j) == doctest::Approx(oracle(0, j)).epsilon(1e-12));
}

TEST_CASE("weights vanish outside the bandwidth window") {
  const TimeGrid grid = TimeGrid::uniform(40, 1.0);
  const double h = 0.07;
  const auto w = local_linear_weights(grid, h, Kernel::Epanechnikov);
  for (int i = 0; i < w.n_eval(); ++i)
    for (int j = 0; j < w.n_source(); ++j)
      if (std::abs(grid[j] - grid[i]) > h) CHECK(w.weights(i, j) == 0.0);
}

TEST_CASE("weight magnitudes stay bounded by C/(dh)") {
  // the classical bound: max_j |W_j| <= C / (d h); C = 8 holds comfortably for
  // the Epanechnikov kernel on quasi-uniform grids
  for (int d : {25, 80, 201}) {
    const TimeGrid grid = TimeGrid::uniform(d, 1.0);
    for (double h : {3.0 / d, 0.05, 0.2}) {
      const auto w = local_linear_weights(grid, h, Kernel::Epanechnikov);
      if (w.n_fallback() > 0) continue;
      CHECK(w.weights.cwiseAbs().maxCoeff() <= 8.0 / (d * h));
    }
  }
}

TEST_CASE("smoothing is linear and matches the naive loops") {
  const TimeGrid grid = TimeGrid::uniform(17, 1.0);
  const auto w = local_linear_weights(grid, 0.2, Kernel::Epanechnikov);

  CHECK(smooth_curve(Eigen::VectorXd::Zero(17), w).cwiseAbs().maxCoeff() == 0.0);

  const auto noise = standard_normals(RngStream{14, 0}, 34);
  Eigen::VectorXd y(17), z(17);
  for (int j = 0; j < 17; ++j) {
    y[j] = noise[static_cast<size_t>(j)];
    z[j] = noise[static_cast<size_t>(17 + j)];
  }
  const Eigen::VectorXd combo = smooth_curve(2.0 * y - 3.0 * z, w);
  const Eigen::VectorXd parts = 2.0 * smooth_curve(y, w) - 3.0 * smooth_curve(z, w);
  CHECK((combo - parts).cwiseAbs().maxCoeff() <= 1e-12 * combo.cwiseAbs().maxCoeff() + 1e-14);

  Eigen::MatrixXd obs(2, 17);
  obs.row(0) = y.transpose();
  obs.row(1) = z.transpose();
  const Eigen::MatrixXd fast = smooth_rows(obs, w);
  const Eigen::MatrixXd slow = ref::smooth_rows_serial(obs, w);
  CHECK((fast - slow).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((fast.row(0).transpose() - smooth_curve(y, w)).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(smooth_curve(Eigen::VectorXd::Zero(5), w), config_error);
}

TEST_CASE("tiny bandwidths fall back to Nadaraya-Watson") {
  const TimeGrid grid = TimeGrid::uniform(11, 1.0);
  const auto w = local_linear_weights(grid, 0.03, Kernel::Epanechnikov);  // < spacing/2
  CHECK(w.n_fallback() == w.n_eval());
  for (int i = 0; i < w.n_eval(); ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < w.n_source(); ++j) row_sum += w.weights(i, j);
    CHECK(row_sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  // with only the evaluation knot in window, smoothing reproduces the data
  Eigen::VectorXd y(11);
  for (int j = 0; j < 11; ++j) y[j] = std::cos(3.0 * grid[j]);
  CHECK((smooth_curve(y, w) - y).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("fallback widens an empty window to the two nearest points") {
  const TimeGrid source({0.0, 0.5, 1.0});
  const TimeGrid eval({0.0, 0.25, 1.0});
  const auto w = local_linear_weights(source, eval, 0.05, Kernel::Epanechnikov);
  CHECK(w.fallback_rows[1] == 1);
  // eval point 0.25 sees no source point within h = 0.05; the two nearest
  // knots share the weight
  CHECK(w.weights(1, 0) + w.weights(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w.weights(1, 2) == 0.0);
}

TEST_CASE("linear interpolation") {
  const TimeGrid grid = TimeGrid::uniform(6, 1.0);
  const auto noise = standard_normals(RngStream{15, 0}, 6);
  Eigen::VectorXd y(6);
  for (int j = 0; j < 6; ++j) y[j] = noise[static_cast<size_t>(j)];

  CHECK((linear_interpolate(y, grid, grid) - y).cwiseAbs().maxCoeff() == 0.0);

  const TimeGrid pair({0.0, 1.0});
  Eigen::VectorXd two(2);
  two << 0.0, 2.0;
  CHECK(linear_interpolate(two, pair, TimeGrid({0.0, 0.5, 1.0}))[1] == doctest::Approx(1.0));

  // midpoints average the adjacent knots
  std::vector<double> mids = {0.0};
  for (int j = 0; j + 1 < 6; ++j) mids.push_back((grid[j] + grid[j + 1]) / 2.0);
  const Eigen::VectorXd at_mids = linear_interpolate(y, grid, TimeGrid(mids));
  for (int j = 0; j + 1 < 6; ++j)
    CHECK(at_mids[j + 1] == doctest::Approx((y[j] + y[j + 1]) / 2.0).epsilon(1e-14));

  CHECK_THROWS_AS(linear_interpolate(y, grid, TimeGrid({0.0, 1.5})), config_error);
}
