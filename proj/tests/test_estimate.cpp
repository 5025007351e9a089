#include <doctest.h>

#include <cmath>
#include <memory>

#include "fsurvey/estimate.hpp"
#include "fsurvey/reference.hpp"

using namespace fsurvey;

namespace {

void enumerate_subsets(int n_total, int n_pick, std::vector<std::vector<int>>& out,
                       std::vector<int>& current, int next) {
  if (static_cast<int>(current.size()) == n_pick) {
    out.push_back(current);
    return;
  }
  for (int k = next; k < n_total; ++k) {
    current.push_back(k);
    enumerate_subsets(n_total, n_pick, out, current, k + 1);
    current.pop_back();
  }
}

std::vector<std::vector<int>> all_subsets(int n_total, int n_pick) {
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  enumerate_subsets(n_total, n_pick, out, current, 0);
  return out;
}

Eigen::MatrixXd random_matrix(int rows, int cols, uint64_t seed) {
  const auto noise = standard_normals(RngStream{seed, 0}, rows * cols);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int j = 0; j < cols; ++j)
      m(r, j) = noise[static_cast<size_t>(r * cols + j)];
  return m;
}

Eigen::MatrixXd pick_rows(const Eigen::MatrixXd& all, const std::vector<int>& units) {
  Eigen::MatrixXd out(static_cast<long>(units.size()), all.cols());
  for (size_t r = 0; r < units.size(); ++r) out.row(static_cast<long>(r)) = all.row(units[r]);
  return out;
}

}  // namespace

TEST_CASE("ht mean: census and constant-population cases") {
  const TimeGrid grid = TimeGrid::uniform(4, 1.0);
  const Eigen::MatrixXd curves = random_matrix(5, 4, 3);

  {  // census: plain average
    const auto design = std::make_shared<SamplingDesign>(SamplingDesign::srswor(5, 5));
    const SampleDraw draw{{0, 1, 2, 3, 4}, design};
    const InclusionProbabilities probs(*design);
    const auto mean = ht_mean(curves, grid, draw, probs);
    CHECK((mean.values.transpose() - curves.colwise().mean()).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(mean.population_size == 5);
    CHECK(mean.sample_size == 5);
  }
  {  // identical curves under an unequal-probability design: exactly f
    Eigen::MatrixXd identical(3, 4);
    for (int r = 0; r < 3; ++r) identical.row(r) = curves.row(0);
    const auto design = std::make_shared<SamplingDesign>(
        SamplingDesign::stratified({{0, 1}, {2, 3, 4, 5}}, {1, 2}));
    const SampleDraw draw{{1, 3, 5}, design};
    const InclusionProbabilities probs(*design);
    const auto mean = ht_mean(identical, grid, draw, probs);
    CHECK((mean.values.transpose() - curves.row(0)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  {
    const auto design = std::make_shared<SamplingDesign>(SamplingDesign::srswor(5, 2));
    const SampleDraw draw{{0, 1}, design};
    CHECK_THROWS_AS(ht_mean(curves, grid, draw, InclusionProbabilities(*design)), config_error);
  }
}

TEST_CASE("ht mean is design-unbiased over the full SRSWOR enumeration") {
  const TimeGrid grid = TimeGrid::uniform(3, 1.0);
  const Eigen::MatrixXd smoothed_pop = random_matrix(6, 3, 7);
  const auto design = std::make_shared<SamplingDesign>(SamplingDesign::srswor(6, 3));
  const InclusionProbabilities probs(*design);

  Eigen::VectorXd average = Eigen::VectorXd::Zero(3);
  const auto subsets = all_subsets(6, 3);
  for (const auto& subset : subsets) {
    const SampleDraw draw{subset, design};
    average += ht_mean(pick_rows(smoothed_pop, subset), grid, draw, probs).values;
  }
  average /= static_cast<double>(subsets.size());
  const Eigen::VectorXd truth = smoothed_pop.colwise().mean().transpose();
  CHECK((average - truth).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("ht covariance: census vanishes, scaling is quadratic") {
  const TimeGrid grid = TimeGrid::uniform(3, 1.0);
  const Eigen::MatrixXd curves = random_matrix(4, 3, 11);
  const auto census = std::make_shared<SamplingDesign>(SamplingDesign::srswor(4, 4));
  const SampleDraw draw{{0, 1, 2, 3}, census};
  const auto cov = ht_covariance(curves, grid, draw, InclusionProbabilities(*census));
  CHECK(cov.gamma.max_abs() == 0.0);

  const auto srswor = std::make_shared<SamplingDesign>(SamplingDesign::srswor(4, 2));
  const SampleDraw half{{1, 3}, srswor};
  const InclusionProbabilities probs(*srswor);
  const auto base = ht_covariance(pick_rows(curves, half.units), grid, half, probs);
  const auto scaled =
      ht_covariance(Eigen::MatrixXd(3.0 * pick_rows(curves, half.units)), grid, half, probs);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j <= i; ++j)
      CHECK(scaled.gamma(i, j) == doctest::Approx(9.0 * base.gamma(i, j)).epsilon(1e-12));
}

TEST_CASE("ht covariance is design-unbiased for the exact design covariance") {
  const TimeGrid grid = TimeGrid::uniform(3, 1.0);
  const Eigen::MatrixXd smoothed_pop = random_matrix(4, 3, 13);
  const auto design = std::make_shared<SamplingDesign>(SamplingDesign::srswor(4, 2));
  const InclusionProbabilities probs(*design);

  Eigen::MatrixXd average = Eigen::MatrixXd::Zero(3, 3);
  const auto subsets = all_subsets(4, 2);
  for (const auto& subset : subsets) {
    const SampleDraw draw{subset, design};
    average += ht_covariance(pick_rows(smoothed_pop, subset), grid, draw, probs).gamma.to_dense();
  }
  average /= static_cast<double>(subsets.size());
  const SymmetricMatrix want = exact_gamma(smoothed_pop, probs, std::nullopt);
  CHECK((average - want.to_dense()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("ht covariance agrees with the literal pair sum") {
  const TimeGrid grid = TimeGrid::uniform(5, 1.0);
  const Eigen::MatrixXd smoothed_pop = random_matrix(9, 5, 17);
  const auto design = std::make_shared<SamplingDesign>(
      SamplingDesign::stratified({{0, 1, 2, 3}, {4, 5, 6, 7, 8}}, {2, 3}));
  const InclusionProbabilities probs(*design);
  const SampleDraw draw{{0, 2, 4, 6, 8}, design};
  const Eigen::MatrixXd rows = pick_rows(smoothed_pop, draw.units);

  const auto fast = ht_covariance(rows, grid, draw, probs);
  const auto naive = ref::ht_covariance_naive(rows, draw, probs);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j <= i; ++j)
      CHECK(fast.gamma(i, j) == doctest::Approx(naive(i, j)).epsilon(1e-12));
  // symmetry is structural
  CHECK(fast.gamma(0, 4) == fast.gamma(4, 0));
}

TEST_CASE("ht covariance rejects designs with vanishing pair probabilities") {
  const TimeGrid grid = TimeGrid::uniform(3, 1.0);
  const auto design = std::make_shared<SamplingDesign>(SamplingDesign::srswor(4, 1));
  const SampleDraw draw{{2}, design};
  CHECK_THROWS_AS(
      ht_covariance(random_matrix(1, 3, 19), grid, draw, InclusionProbabilities(*design)),
      design_violation);
}

TEST_CASE("exact gamma: enumeration of N Cov(mu_hat(s), mu_hat(t))") {
  const TimeGrid grid = TimeGrid::uniform(3, 1.0);
  const Eigen::MatrixXd smoothed_pop = random_matrix(4, 3, 23);
  const auto design = std::make_shared<SamplingDesign>(SamplingDesign::srswor(4, 2));
  const InclusionProbabilities probs(*design);

  const auto subsets = all_subsets(4, 2);
  std::vector<Eigen::VectorXd> means;
  for (const auto& subset : subsets) {
    const SampleDraw draw{subset, design};
    means.push_back(ht_mean(pick_rows(smoothed_pop, subset), grid, draw, probs).values);
  }
  Eigen::VectorXd grand = Eigen::VectorXd::Zero(3);
  for (const auto& m : means) grand += m;
  grand /= static_cast<double>(means.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  for (const auto& m : means) cov += (m - grand) * (m - grand).transpose();
  cov *= 4.0 / static_cast<double>(means.size());  // N * Cov

  const SymmetricMatrix gamma = exact_gamma(smoothed_pop, probs, std::nullopt);
  CHECK((cov - gamma.to_dense()).cwiseAbs().maxCoeff() <= 1e-12);

  // census with white noise: gamma collapses to sigma^2 W W^T
  const auto census = std::make_shared<SamplingDesign>(SamplingDesign::srswor(4, 4));
  const double sigma2 = 0.7;
  const Eigen::MatrixXd w = random_matrix(3, 3, 29);
  const Eigen::MatrixXd noise_moment = sigma2 * w * w.transpose();
  const SymmetricMatrix noisy =
      exact_gamma(smoothed_pop, InclusionProbabilities(*census), noise_moment);
  CHECK((noisy.to_dense() - noise_moment).cwiseAbs().maxCoeff() <= 1e-12);

  const SymmetricMatrix clean = exact_gamma(smoothed_pop, InclusionProbabilities(*census), std::nullopt);
  CHECK(clean.max_abs() <= 1e-14);
}

TEST_CASE("exact gamma matches its literal double sum on a stratified design") {
  const Eigen::MatrixXd smoothed_pop = random_matrix(7, 4, 31);
  const auto design = std::make_shared<SamplingDesign>(
      SamplingDesign::stratified({{0, 1, 2}, {3, 4, 5, 6}}, {2, 2}));
  const InclusionProbabilities probs(*design);
  const Eigen::MatrixXd noise_moment = Eigen::MatrixXd::Identity(4, 4) * 0.3;

  const SymmetricMatrix fast = exact_gamma(smoothed_pop, probs, noise_moment);
  const SymmetricMatrix naive = ref::exact_gamma_naive(smoothed_pop, probs, noise_moment);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j <= i; ++j)
      CHECK(fast(i, j) == doctest::Approx(naive(i, j)).epsilon(1e-12));
}

TEST_CASE("variance curve clips negative diagonals") {
  SymmetricMatrix gamma(2);
  gamma.set(0, 0, 4.0);
  gamma.set(1, 1, 9.0);
  const CovarianceEstimate cov{TimeGrid::uniform(2, 1.0), gamma, "", 0, 0};
  const auto sigma = variance_curve(cov);
  CHECK(sigma.sigma[0] == 2.0);
  CHECK(sigma.sigma[1] == 3.0);
  CHECK(sigma.clipped == 0);

  SymmetricMatrix dented(2);
  dented.set(0, 0, -1e-6);
  const auto clipped = variance_curve(CovarianceEstimate{TimeGrid::uniform(2, 1.0), dented, "", 0, 0});
  CHECK(clipped.sigma[0] == 0.0);
  CHECK(clipped.clipped == 1);

  SymmetricMatrix zero(3);
  const auto none = variance_curve(CovarianceEstimate{TimeGrid::uniform(3, 1.0), zero, "", 0, 0});
  CHECK(none.sigma.cwiseAbs().maxCoeff() == 0.0);
}
