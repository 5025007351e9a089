#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fsurvey/numerics.hpp"
#include "fsurvey/population.hpp"

using namespace fsurvey;

namespace {

PopulationConfig small_config(int n_units, int d, uint64_t seed) {
  return default_population_config(n_units, TimeGrid::uniform(d, 1.0), seed);
}

}  // namespace

TEST_CASE("default family: orthonormal modes, electricity-like scale") {
  const auto config = small_config(100, 101, 1);
  config.validate();  // orthonormality under the trapezoid inner product

  // quadratic distance between the mean curve and its flat average is of the
  // order 10^3
  const Eigen::VectorXd mu = config.mean_curve;
  Eigen::VectorXd flat =
      Eigen::VectorXd::Constant(mu.size(), trapezoid(mu, config.grid) / config.grid.t_max());
  const Eigen::VectorXd diff = mu - flat;
  const double r_flat = trapezoid(Eigen::VectorXd(diff.cwiseProduct(diff)), config.grid);
  CHECK(r_flat >= 1e3);
  CHECK(r_flat < 1e4);
}

TEST_CASE("synthesize: degenerate modes reproduce the mean") {
  auto config = small_config(5, 21, 3);
  for (auto& mode : config.modes) mode.variance = 0.0;
  const CurvePopulation pop = synthesize_population(config);
  for (int k = 0; k < 5; ++k)
    CHECK((pop.curves.row(k).transpose() - config.mean_curve).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("synthesize: determinism per seed") {
  const auto config = small_config(3, 11, 99);
  const CurvePopulation a = synthesize_population(config);
  const CurvePopulation b = synthesize_population(config);
  CHECK(a.curves == b.curves);
  auto other = config;
  other.seed = 100;
  CHECK(synthesize_population(other).curves != a.curves);
}

TEST_CASE("synthesize: single mode empirical covariance matches sigma^2 v v^T") {
  const TimeGrid grid = TimeGrid::uniform(12, 1.0);
  Eigen::VectorXd v(12);
  for (int j = 0; j < 12; ++j) v[j] = std::sin(2.0 * std::numbers::pi * grid[j]);
  const double norm = std::sqrt(trapezoid(Eigen::VectorXd(v.cwiseProduct(v)), grid));
  v /= norm;

  PopulationConfig config;
  config.n_units = 10000;
  config.grid = grid;
  config.mean_curve = Eigen::VectorXd::Zero(12);
  config.modes = {ModeSpec{v, 1.0}};
  config.seed = 5;
  const CurvePopulation pop = synthesize_population(config);

  const Eigen::RowVectorXd mean = pop.curves.colwise().mean();
  const Eigen::MatrixXd centered = pop.curves.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / (pop.n_units() - 1.0);
  const Eigen::MatrixXd want = v * v.transpose();
  CHECK((cov - want).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("synthesize rejects a non-orthonormal basis") {
  const TimeGrid grid = TimeGrid::uniform(11, 1.0);
  PopulationConfig config;
  config.n_units = 4;
  config.grid = grid;
  config.mean_curve = Eigen::VectorXd::Zero(11);
  config.modes = {ModeSpec{Eigen::VectorXd::Ones(11), 1.0}};  // norm sqrt(T) = 1 ok
  CHECK_NOTHROW(synthesize_population(config));
  config.modes.push_back(ModeSpec{Eigen::VectorXd::Ones(11), 1.0});  // not orthogonal
  CHECK_THROWS_AS(synthesize_population(config), config_error);
}

TEST_CASE("population mean and variance") {
  const TimeGrid grid = TimeGrid::uniform(4, 1.0);
  CurvePopulation pop{grid, Eigen::MatrixXd(2, 4)};
  pop.curves.row(0).setZero();
  pop.curves.row(1).setConstant(2.0);
  CHECK((population_mean(pop) - Eigen::VectorXd::Constant(4, 1.0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((population_variance_at(pop) - Eigen::VectorXd::Constant(4, 2.0)).cwiseAbs().maxCoeff() == 0.0);

  CurvePopulation same{grid, Eigen::MatrixXd(3, 4)};
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 4; ++j) same.curves(k, j) = 1.0 + grid[j];
  CHECK((population_mean(same).transpose() - same.curves.row(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(population_variance_at(same).cwiseAbs().maxCoeff() == 0.0);

  // column means against direct summation
  CurvePopulation random{TimeGrid::uniform(4, 1.0), Eigen::MatrixXd(5, 4)};
  const auto noise = standard_normals(RngStream{8, 0}, 20);
  for (int k = 0; k < 5; ++k)
    for (int j = 0; j < 4; ++j) random.curves(k, j) = noise[static_cast<size_t>(4 * k + j)];
  const Eigen::VectorXd mean = population_mean(random);
  for (int j = 0; j < 4; ++j) {
    double acc = 0.0;
    for (int k = 0; k < 5; ++k) acc += random.curves(k, j);
    CHECK(mean[j] == doctest::Approx(acc / 5.0).epsilon(1e-12));
  }
}

TEST_CASE("synthesized population variance matches the mode expansion") {
  auto config = small_config(10000, 21, 12);
  const CurvePopulation pop = synthesize_population(config);
  const Eigen::VectorXd v = population_variance_at(pop);
  for (int j = 0; j < 21; ++j) {
    double want = 0.0;
    for (const auto& mode : config.modes)
      want += mode.variance * mode.values[j] * mode.values[j];
    CHECK(v[j] == doctest::Approx(want).epsilon(0.05));
  }

  // empirical mean stays within 3 sd of mu at every grid point
  double total_variance = 0.0;
  for (const auto& mode : config.modes) total_variance += mode.variance;
  const double bound = 3.0 * std::sqrt(total_variance) / std::sqrt(10000.0);
  CHECK((population_mean(pop) - config.mean_curve).cwiseAbs().maxCoeff() <= bound);
}

TEST_CASE("observe: delta zero is the identity on selected rows") {
  const auto config = small_config(6, 15, 2);
  const CurvePopulation pop = synthesize_population(config);
  NoiseModel noise;  // heteroscedastic, delta 0
  const auto obs = observe(pop, {5, 1, 3}, noise, RngStream{2, 1});
  CHECK(obs.units == std::vector<int>{5, 1, 3});
  CHECK((obs.values.row(0) - pop.curves.row(5)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((obs.values.row(1) - pop.curves.row(1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((obs.values.row(2) - pop.curves.row(3)).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(observe(pop, {6}, noise, RngStream{2, 1}), config_error);
}

TEST_CASE("observe: heteroscedastic noise has the population variance profile") {
  const auto config = small_config(400, 16, 21);
  const CurvePopulation pop = synthesize_population(config);
  const Eigen::VectorXd v = population_variance_at(pop);

  NoiseModel noise;
  noise.delta = 1.0;
  const std::vector<int> units(10000, 3);  // one unit replicated
  const auto obs = observe(pop, units, noise, RngStream{21, 9});
  for (int j = 0; j < 16; ++j) {
    double acc = 0.0;
    for (int r = 0; r < 10000; ++r) {
      const double e = obs.values(r, j) - pop.curves(3, j);
      acc += e * e;
    }
    CHECK(acc / 10000.0 == doctest::Approx(v[j]).epsilon(0.05));
  }
}

TEST_CASE("observe: AR(3) noise matches Yule-Walker") {
  const auto config = small_config(400, 40, 31);
  const CurvePopulation pop = synthesize_population(config);
  const Eigen::VectorXd v = population_variance_at(pop);
  const double target = v.mean();

  NoiseModel noise;
  noise.kind = NoiseModel::Kind::Ar3;
  noise.delta = 1.0;
  const std::vector<int> units(10000, 0);
  const auto obs = observe(pop, units, noise, RngStream{31, 9});
  Eigen::MatrixXd eps = obs.values;
  for (int r = 0; r < eps.rows(); ++r) eps.row(r) -= pop.curves.row(0);

  // lag-1 autocorrelation of the stationary AR(3)
  const double s2 = ar3_innovation_variance(noise.ar_coeffs, target);
  const auto acov = ar3_autocovariance(noise.ar_coeffs, s2, 1);
  const double rho1 = acov[1] / acov[0];

  double c0 = 0.0, c1 = 0.0;
  for (int r = 0; r < eps.rows(); ++r) {
    for (int j = 0; j < 40; ++j) c0 += eps(r, j) * eps(r, j);
    for (int j = 0; j + 1 < 40; ++j) c1 += eps(r, j) * eps(r, j + 1);
  }
  c0 /= 10000.0 * 40;
  c1 /= 10000.0 * 39;
  CHECK(std::abs(c1 / c0 - rho1) <= 0.03);

  // stationarity across columns: variance flat after burn-in
  const Eigen::VectorXd column_var =
      eps.colwise().squaredNorm().transpose() / static_cast<double>(eps.rows());
  CHECK(column_var.maxCoeff() / column_var.minCoeff() < 1.2);

  // the scale calibration: E eps^2 = mean population variance
  CHECK(c0 == doctest::Approx(target).epsilon(0.05));
}

TEST_CASE("ar3 innovation variance") {
  CHECK(ar3_innovation_variance({0.0, 0.0, 0.0}, 3.0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(ar3_innovation_variance({0.5, 0.0, 0.0}, 1.0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS_AS(ar3_innovation_variance({1.2, 0.0, 0.0}, 1.0), config_error);

  // long-simulation oracle for the study coefficients
  const std::array<double, 3> coeffs = {0.89, 0.3, -0.4};
  const double s2 = ar3_innovation_variance(coeffs, 1.0);
  RngSequence rng(RngStream{55, 0});
  double e1 = 0.0, e2 = 0.0, e3 = 0.0, acc = 0.0;
  const int warmup = 2000, steps = 1000000;
  for (int i = 0; i < warmup + steps; ++i) {
    const double u1 = rng.next_unit(), u2 = rng.next_unit();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    const double e = coeffs[0] * e1 + coeffs[1] * e2 + coeffs[2] * e3 + std::sqrt(s2) * z;
    if (i >= warmup) acc += e * e;
    e3 = e2; e2 = e1; e1 = e;
  }
  CHECK(acc / steps == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("noise model validation") {
  NoiseModel bad;
  bad.kind = NoiseModel::Kind::Ar3;
  bad.ar_coeffs = {0.5, 0.5, 0.5};  // root on/inside the unit circle
  CHECK_THROWS_AS(bad.validate(), config_error);

  NoiseModel good;
  good.kind = NoiseModel::Kind::Ar3;  // study coefficients are stationary
  CHECK_NOTHROW(good.validate());
}

TEST_CASE("observe determinism") {
  const auto config = small_config(10, 12, 77);
  const CurvePopulation pop = synthesize_population(config);
  NoiseModel noise;
  noise.kind = NoiseModel::Kind::Ar3;
  noise.delta = 0.3;
  const auto a = observe(pop, {1, 4, 7}, noise, RngStream{7, 13});
  const auto b = observe(pop, {1, 4, 7}, noise, RngStream{7, 13});
  CHECK(a.values == b.values);
}
