#include "fsurvey/estimate.hpp"

#include <cmath>
#include <vector>

namespace fsurvey {

namespace {

void check_alignment(const Eigen::MatrixXd& smoothed, const SampleDraw& draw) {
  if (static_cast<int>(smoothed.rows()) != draw.size())
    throw config_error("estimate: row count does not match the sample");
}

// Sampled row indices grouped by stratum.
std::vector<std::vector<int>> rows_by_stratum(const SampleDraw& draw,
                                              const InclusionProbabilities& probs) {
  std::vector<std::vector<int>> rows(static_cast<size_t>(probs.n_strata()));
  for (int r = 0; r < draw.size(); ++r)
    rows[static_cast<size_t>(probs.stratum_of(draw.units[static_cast<size_t>(r)]))].push_back(r);
  return rows;
}

}  // namespace

MeanEstimate ht_mean(const Eigen::MatrixXd& smoothed, const TimeGrid& grid,
                     const SampleDraw& draw, const InclusionProbabilities& probs) {
  check_alignment(smoothed, draw);
  const auto n_pop = static_cast<double>(probs.population_size());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(smoothed.cols());
  for (int r = 0; r < draw.size(); ++r)
    acc += smoothed.row(r).transpose() / probs.pi(draw.units[static_cast<size_t>(r)]);
  MeanEstimate out;
  out.grid = grid;
  out.values = acc / n_pop;
  out.sample_size = draw.size();
  out.population_size = probs.population_size();
  return out;
}

CovarianceEstimate ht_covariance(const Eigen::MatrixXd& smoothed, const TimeGrid& grid,
                                 const SampleDraw& draw,
                                 const InclusionProbabilities& probs) {
  check_alignment(smoothed, draw);
  const int m = static_cast<int>(smoothed.cols());
  const auto n_pop = static_cast<double>(probs.population_size());
  const auto rows = rows_by_stratum(draw, probs);

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m, m);
  for (int v = 0; v < probs.n_strata(); ++v) {
    const auto& stratum_rows = rows[static_cast<size_t>(v)];
    if (stratum_rows.empty()) continue;
    const double size_v = probs.stratum_size(v);
    const double nv = probs.stratum_sample_size(v);
    const double f = nv / size_v;
    if (size_v >= 2.0 && nv < 2.0)
      throw design_violation("ht_covariance: pi_kl = 0 within stratum " +
                             std::to_string(v + 1) + " (stratum sample size 1)");
    // Coefficient of Xhat_k(s) Xhat_l(t) for distinct units of one stratum:
    //   Delta_kl / (pi_kl pi_k pi_l) = (pi_kl - f^2) / (pi_kl f^2),
    // and for k = l: (1 - pi_k) / pi_k^2.
    const double pi_kl = size_v >= 2.0 ? nv * (nv - 1.0) / (size_v * (size_v - 1.0)) : f;
    const double pair_coef = size_v >= 2.0 ? (pi_kl - f * f) / (pi_kl * f * f) : 0.0;
    const double diag_coef = (1.0 - f) / (f * f);

    Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(m, m);
    for (int r : stratum_rows) {
      const Eigen::VectorXd row = smoothed.row(r).transpose();
      sum += row;
      outer.selfadjointView<Eigen::Lower>().rankUpdate(row, 1.0);
    }
    outer.triangularView<Eigen::StrictlyUpper>() = outer.transpose();
    acc += pair_coef * (sum * sum.transpose() - outer) + diag_coef * outer;
  }
  acc /= n_pop;

  CovarianceEstimate out{grid, SymmetricMatrix(m), "", draw.size(), probs.population_size()};
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) out.gamma.set(i, j, (acc(i, j) + acc(j, i)) / 2.0);
  return out;
}

SymmetricMatrix exact_gamma(const Eigen::MatrixXd& smoothed_population,
                            const InclusionProbabilities& probs,
                            const std::optional<Eigen::MatrixXd>& noise_second_moment) {
  if (static_cast<int>(smoothed_population.rows()) != probs.population_size())
    throw config_error("exact_gamma: expected one row per population unit");
  const int m = static_cast<int>(smoothed_population.cols());
  const auto n_pop = static_cast<double>(probs.population_size());

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m, m);
  double inverse_pi_sum = 0.0;
  for (int v = 0; v < probs.n_strata(); ++v) {
    const double size_v = probs.stratum_size(v);
    const double nv = probs.stratum_sample_size(v);
    const double f = nv / size_v;
    // Delta_kl / (pi_k pi_l) for distinct same-stratum units and k = l.
    const double pi_kl = size_v >= 2.0 ? nv * (nv - 1.0) / (size_v * (size_v - 1.0)) : f;
    const double pair_coef = (pi_kl - f * f) / (f * f);
    const double diag_coef = (1.0 - f) / f;
    inverse_pi_sum += size_v / f;

    Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < probs.population_size(); ++k) {
      if (probs.stratum_of(k) != v) continue;
      const Eigen::VectorXd row = smoothed_population.row(k).transpose();
      sum += row;
      outer.selfadjointView<Eigen::Lower>().rankUpdate(row, 1.0);
    }
    outer.triangularView<Eigen::StrictlyUpper>() = outer.transpose();
    acc += pair_coef * (sum * sum.transpose() - outer) + diag_coef * outer;
  }
  acc /= n_pop;
  if (noise_second_moment) {
    if (noise_second_moment->rows() != m || noise_second_moment->cols() != m)
      throw config_error("exact_gamma: noise second moment has wrong dimensions");
    acc += (inverse_pi_sum / n_pop) * (*noise_second_moment);
  }

  SymmetricMatrix out(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) out.set(i, j, (acc(i, j) + acc(j, i)) / 2.0);
  return out;
}

Eigen::MatrixXd smoothed_noise_second_moment(const SmootherWeightMatrix& w,
                                             const NoiseModel& noise,
                                             const CurvePopulation& pop) {
  const Eigen::MatrixXd v = noise_covariance(noise, pop);
  return w.weights * v * w.weights.transpose();
}

VarianceCurve variance_curve(const CovarianceEstimate& cov) {
  const int m = cov.gamma.order();
  VarianceCurve out{Eigen::VectorXd(m), 0};
  for (int i = 0; i < m; ++i) {
    const double g = cov.gamma(i, i);
    if (g < 0.0) ++out.clipped;
    out.sigma[i] = std::sqrt(std::max(g, 0.0));
  }
  return out;
}

}  // namespace fsurvey
