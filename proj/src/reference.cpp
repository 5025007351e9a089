#include "fsurvey/reference.hpp"

#include <cmath>

#include "fsurvey/bands.hpp"

namespace fsurvey::ref {

Eigen::MatrixXd smooth_rows_serial(const Eigen::MatrixXd& obs,
                                   const SmootherWeightMatrix& w) {
  const int n = static_cast<int>(obs.rows());
  const int m = w.n_eval();
  const int d = w.n_source();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, m);
  for (int r = 0; r < n; ++r)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j) out(r, i) += w.weights(i, j) * obs(r, j);
  return out;
}

SymmetricMatrix ht_covariance_naive(const Eigen::MatrixXd& smoothed,
                                    const SampleDraw& draw,
                                    const InclusionProbabilities& probs) {
  const int m = static_cast<int>(smoothed.cols());
  const int n = draw.size();
  const auto n_pop = static_cast<double>(probs.population_size());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m, m);
  for (int a = 0; a < n; ++a) {
    const int k = draw.units[static_cast<size_t>(a)];
    for (int b = 0; b < n; ++b) {
      const int l = draw.units[static_cast<size_t>(b)];
      const double pi_kl = probs.pi2(k, l);
      if (pi_kl <= 0.0)
        throw design_violation("ht_covariance_naive: pi_kl = 0 for a sampled pair");
      const double coef =
          probs.delta(k, l) / (pi_kl * probs.pi(k) * probs.pi(l));
      acc += coef * smoothed.row(a).transpose() * smoothed.row(b);
    }
  }
  acc /= n_pop;
  SymmetricMatrix out(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) out.set(i, j, (acc(i, j) + acc(j, i)) / 2.0);
  return out;
}

SymmetricMatrix exact_gamma_naive(const Eigen::MatrixXd& smoothed_population,
                                  const InclusionProbabilities& probs,
                                  const std::optional<Eigen::MatrixXd>& noise_second_moment) {
  const int m = static_cast<int>(smoothed_population.cols());
  const int n_pop = probs.population_size();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < n_pop; ++k)
    for (int l = 0; l < n_pop; ++l)
      acc += probs.delta(k, l) / (probs.pi(k) * probs.pi(l)) *
             smoothed_population.row(k).transpose() * smoothed_population.row(l);
  if (noise_second_moment) {
    double inverse_pi_sum = 0.0;
    for (int k = 0; k < n_pop; ++k) inverse_pi_sum += 1.0 / probs.pi(k);
    acc += inverse_pi_sum * (*noise_second_moment);
  }
  acc /= static_cast<double>(n_pop);
  SymmetricMatrix out(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) out.set(i, j, (acc(i, j) + acc(j, i)) / 2.0);
  return out;
}

double wcv_naive(const SmootherWeightMatrix& w, const ObservationMatrix& obs,
                 const CvWeights& weights) {
  const int n = weights.sample_size();
  const Eigen::MatrixXd smoothed = smooth_rows_serial(obs.values, w);
  double score = 0.0;
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd loo = Eigen::VectorXd::Zero(smoothed.cols());
    for (int l = 0; l < n; ++l)
      if (l != k) loo += weights.loo(l, k) * smoothed.row(l).transpose();
    score += weights.base(k) * (obs.values.row(k).transpose() - loo).squaredNorm();
  }
  return score;
}

double rice_silverman_cv(const SmootherWeightMatrix& w, const ObservationMatrix& obs) {
  const int n = static_cast<int>(obs.values.rows());
  if (n < 2) throw config_error("rice_silverman_cv: need at least two curves");
  const Eigen::MatrixXd smoothed = smooth_rows_serial(obs.values, w);
  double score = 0.0;
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd loo = Eigen::VectorXd::Zero(smoothed.cols());
    for (int l = 0; l < n; ++l)
      if (l != k) loo += smoothed.row(l).transpose();
    loo /= (n - 1.0);
    score += (obs.values.row(k).transpose() - loo).squaredNorm() / n;
  }
  return score;
}

std::vector<double> sup_ratios_serial(const SymmetricMatrix& gamma, int n_draws,
                                      const RngStream& stream) {
  // Re-derives the plan the way simulate_sup_ratios does, then runs the draw
  // loop without OpenMP. Must agree bit for bit with the parallel kernel.
  const int m = gamma.order();
  double max_diag = gamma(0, 0);
  for (int i = 1; i < m; ++i) max_diag = std::max(max_diag, gamma(i, i));
  if (!(max_diag > 0.0)) throw numerical_error("sup_ratios_serial: sigma_hat vanishes");
  SymmetricMatrix normalized(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) normalized.set(i, j, gamma(i, j) / max_diag);
  const PsdFactor psd = psd_project(normalized);

  std::vector<double> sigma(static_cast<size_t>(m), 0.0);
  for (int i = 0; i < m; ++i)
    sigma[static_cast<size_t>(i)] = std::sqrt(std::max(normalized(i, i), 0.0));

  std::vector<double> ratios(static_cast<size_t>(n_draws));
  for (int b = 0; b < n_draws; ++b) {
    Eigen::VectorXd z(m);
    const uint64_t base = static_cast<uint64_t>(b) * static_cast<uint64_t>(m);
    for (int i = 0; i < m; ++i)
      z[i] = standard_normal_at(stream, base + static_cast<uint64_t>(i));
    const Eigen::VectorXd path = psd.factor * z;
    double sup = 0.0;
    for (int i = 0; i < m; ++i)
      if (sigma[static_cast<size_t>(i)] >= 1e-12)
        sup = std::max(sup, std::abs(path[i]) / sigma[static_cast<size_t>(i)]);
    ratios[static_cast<size_t>(b)] = sup;
  }
  return ratios;
}

}  // namespace fsurvey::ref
