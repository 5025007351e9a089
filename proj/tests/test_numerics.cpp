#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <random>
#include <set>

#include "fsurvey/numerics.hpp"

using namespace fsurvey;

TEST_CASE("time grid invariants") {
  CHECK_THROWS_AS(TimeGrid({0.0}), config_error);
  CHECK_THROWS_AS(TimeGrid({0.1, 0.5, 1.0}), config_error);      // must start at 0
  CHECK_THROWS_AS(TimeGrid({0.0, 0.5, 0.5, 1.0}), config_error); // strictly increasing
  const TimeGrid grid = TimeGrid::uniform(11, 2.0);
  CHECK(grid.size() == 11);
  CHECK(grid[0] == 0.0);
  CHECK(grid.t_max() == 2.0);
  CHECK(grid.spacing_ratio() == doctest::Approx(1.0));
  const TimeGrid uneven({0.0, 0.1, 0.2, 1.0});
  CHECK(uneven.spacing_ratio() == doctest::Approx(8.0));
}

TEST_CASE("trapezoid quadrature") {
  const TimeGrid grid = TimeGrid::uniform(11, 1.0);
  CHECK(trapezoid(std::vector<double>(11, 1.0), grid) == doctest::Approx(1.0).epsilon(1e-15));
  // exact for linear functions: values equal to the grid points
  CHECK(trapezoid(grid.points(), grid) == doctest::Approx(0.5).epsilon(1e-15));

  const TimeGrid fine = TimeGrid::uniform(101, 1.0);
  std::vector<double> squares(101);
  for (int j = 0; j < 101; ++j) squares[static_cast<size_t>(j)] = fine[j] * fine[j];
  CHECK(std::abs(trapezoid(squares, fine) - 1.0 / 3.0) <= 2e-5);

  CHECK_THROWS_AS(trapezoid(std::vector<double>(5, 1.0), grid), config_error);

  // exact on functions that are linear between the knots of an uneven grid
  const TimeGrid knots({0.0, 0.3, 0.45, 0.8, 1.7});
  std::vector<double> linear(5);
  for (int j = 0; j < 5; ++j) linear[static_cast<size_t>(j)] = -2.0 + 3.5 * knots[j];
  const double want = -2.0 * 1.7 + 3.5 * 1.7 * 1.7 / 2.0;
  CHECK(trapezoid(linear, knots) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("empirical quantile order statistic") {
  CHECK(empirical_quantile({1, 2, 3, 4, 5}, 0.95) == 5);  // ceil(4.75) = 5th
  CHECK(empirical_quantile({7}, 0.5) == 7);
  CHECK(empirical_quantile({7}, 0.01) == 7);

  std::vector<double> values(100);
  for (int i = 0; i < 100; ++i) values[static_cast<size_t>(i)] = i + 1;
  std::mt19937 shuffler(17);
  std::shuffle(values.begin(), values.end(), shuffler);
  CHECK(empirical_quantile(values, 0.5) == 50);  // sort-based oracle

  CHECK_THROWS_AS(empirical_quantile({}, 0.5), config_error);
  CHECK_THROWS_AS(empirical_quantile({1.0}, 0.0), config_error);
  CHECK_THROWS_AS(empirical_quantile({1.0}, 1.0), config_error);

  // monotone nondecreasing in p
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(-5, 5);
  std::vector<double> samples(37);
  for (auto& s : samples) s = unif(rng);
  double last = -1e300;
  for (double p = 0.05; p < 1.0; p += 0.05) {
    const double q = empirical_quantile(samples, p);
    CHECK(q >= last);
    last = q;
  }

  CHECK(empirical_quantile({2, 2, 2, 2}, 0.5) == 2);  // deterministic under ties
}

TEST_CASE("symmetric matrix storage") {
  SymmetricMatrix a(3);
  a.set(2, 0, 5.0);
  CHECK(a(0, 2) == 5.0);
  CHECK(a(2, 0) == 5.0);
  const Eigen::MatrixXd dense = a.to_dense();
  CHECK(dense(0, 2) == 5.0);
  CHECK(SymmetricMatrix::from_dense(dense)(2, 0) == 5.0);

  Eigen::MatrixXd skew(2, 2);
  skew << 0.0, 1.0, -1.0, 0.0;
  CHECK_THROWS_AS(SymmetricMatrix::from_dense(skew), config_error);
}

TEST_CASE("sym_eig identity and diagonal") {
  SymmetricMatrix eye(3);
  for (int i = 0; i < 3; ++i) eye.set(i, i, 1.0);
  const auto eig = sym_eig(eye);
  for (int i = 0; i < 3; ++i) CHECK(eig.eigenvalues[i] == doctest::Approx(1.0));

  SymmetricMatrix diag(2);
  diag.set(0, 0, 4.0);
  diag.set(1, 1, 1.0);
  const auto d = sym_eig(diag);
  CHECK(d.eigenvalues[0] == doctest::Approx(4.0));  // descending
  CHECK(d.eigenvalues[1] == doctest::Approx(1.0));
  CHECK(std::abs(d.eigenvectors(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(d.eigenvectors(1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig reconstruction contract") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  const int order = 8;
  Eigen::MatrixXd m(order, order);
  for (int i = 0; i < order; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = normal(rng);
  const SymmetricMatrix a = SymmetricMatrix::from_dense(m);
  const auto eig = sym_eig(a);

  const Eigen::MatrixXd rebuilt =
      eig.eigenvectors * eig.eigenvalues.asDiagonal() * eig.eigenvectors.transpose();
  CHECK((rebuilt - m).cwiseAbs().maxCoeff() <= 1e-8 * a.max_abs());
  const Eigen::MatrixXd gram = eig.eigenvectors.transpose() * eig.eigenvectors;
  CHECK((gram - Eigen::MatrixXd::Identity(order, order)).cwiseAbs().maxCoeff() <= 1e-8);
  for (int i = 1; i < order; ++i) CHECK(eig.eigenvalues[i] <= eig.eigenvalues[i - 1]);
}

TEST_CASE("sym_eig of PSD matrices stays nonnegative") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd b(6, 4);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 4; ++j) b(i, j) = normal(rng);
    const Eigen::MatrixXd psd = b * b.transpose();
    const SymmetricMatrix a = SymmetricMatrix::from_dense(psd, 1e-9);
    const auto eig = sym_eig(a);
    CHECK(eig.eigenvalues.minCoeff() >= -1e-8 * a.max_abs());
  }
}

TEST_CASE("standard normals: moments and determinism") {
  const RngStream stream{42, 1};
  CHECK(standard_normals(stream, 0).empty());

  const auto draws = standard_normals(stream, 1000000);
  double mean = 0.0;
  for (double x : draws) mean += x;
  mean /= static_cast<double>(draws.size());
  double var = 0.0;
  for (double x : draws) var += (x - mean) * (x - mean);
  var /= static_cast<double>(draws.size() - 1);
  CHECK(std::abs(mean) <= 0.005);   // CLT bound
  CHECK(std::abs(var - 1.0) <= 0.01);

  CHECK(standard_normals(stream, 100) == standard_normals(stream, 100));
  // random access agrees with bulk generation
  const auto tail = standard_normals(stream, 10, 90);
  for (int i = 0; i < 10; ++i)
    CHECK(tail[static_cast<size_t>(i)] == draws[static_cast<size_t>(90 + i)]);
}

TEST_CASE("streams with distinct ids do not overlap") {
  const int count = 10000;
  std::set<uint64_t> seen;
  for (uint64_t id : {0ull, 1ull, 2ull, 1ull << 40}) {
    const auto block = standard_normals(RngStream{5, id}, count);
    for (double x : block) {
      uint64_t bits;
      static_assert(sizeof(bits) == sizeof(x));
      std::memcpy(&bits, &x, 8);
      CHECK(seen.insert(bits).second);  // no value collision at all, let alone runs
    }
  }
}

TEST_CASE("rng sequence bounded draws") {
  RngSequence rng(RngStream{9, 77});
  std::array<int, 5> counts = {0, 0, 0, 0, 0};
  for (int i = 0; i < 50000; ++i) {
    const uint64_t v = rng.next_below(5);
    REQUIRE(v < 5);
    ++counts[static_cast<size_t>(v)];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);  // ~6 sigma

  RngSequence a(RngStream{9, 78}), b(RngStream{9, 78});
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK_THROWS_AS(a.next_below(0), config_error);
}
