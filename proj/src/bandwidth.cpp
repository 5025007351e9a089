#include "fsurvey/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fsurvey {

CvWeights::CvWeights(CvVariant variant, const SampleDraw& draw,
                     const InclusionProbabilities& probs)
    : variant_(variant) {
  const int n = draw.size();
  if (n < 2) throw config_error("CvWeights: sample size must be >= 2");
  const auto n_pop = static_cast<double>(probs.population_size());

  base_.resize(static_cast<size_t>(n));
  stratum_.resize(static_cast<size_t>(n));
  for (int pos = 0; pos < n; ++pos) {
    const int unit = draw.units[static_cast<size_t>(pos)];
    base_[static_cast<size_t>(pos)] = 1.0 / (n_pop * probs.pi(unit));
    stratum_[static_cast<size_t>(pos)] = probs.stratum_of(unit);
  }

  const int n_strata = probs.n_strata();
  within_.assign(static_cast<size_t>(n_strata), 0.0);
  cross_.assign(static_cast<size_t>(n_strata), 0.0);
  if (variant_ == CvVariant::StratifiedRescaled) {
    for (int v = 0; v < n_strata; ++v) {
      const double size_v = probs.stratum_size(v);
      const double nv = probs.stratum_sample_size(v);
      if (nv < 2.0)
        throw config_error("stratified leave-one-out weights need n_v >= 2; stratum " +
                           std::to_string(v + 1) + " has " + std::to_string(static_cast<int>(nv)));
      within_[static_cast<size_t>(v)] = (size_v - 1.0) / ((n_pop - 1.0) * (nv - 1.0));
      cross_[static_cast<size_t>(v)] = size_v / ((n_pop - 1.0) * nv);
    }
  } else if (variant_ == CvVariant::OpsomerMiller) {
    for (int pos = 0; pos < n; ++pos)
      if (base_[static_cast<size_t>(pos)] >= 1.0)
        throw config_error("Opsomer-Miller weights need w_k < 1");
  }
}

double CvWeights::loo(int l_pos, int k_pos) const {
  if (l_pos == k_pos) throw config_error("CvWeights::loo: l must differ from k");
  switch (variant_) {
    case CvVariant::OpsomerMiller:
      return base_[static_cast<size_t>(l_pos)] / (1.0 - base_[static_cast<size_t>(k_pos)]);
    case CvVariant::Unweighted:
      return 1.0 / (sample_size() - 1.0);
    case CvVariant::StratifiedRescaled: {
      const int vl = stratum_[static_cast<size_t>(l_pos)];
      if (vl == stratum_[static_cast<size_t>(k_pos)]) return within_[static_cast<size_t>(vl)];
      return cross_[static_cast<size_t>(vl)];
    }
  }
  return 0.0;
}

CvWeights stratified_loo_weights(const SampleDraw& draw,
                                 const InclusionProbabilities& probs) {
  return CvWeights(CvVariant::StratifiedRescaled, draw, probs);
}

namespace {

void check_eval_on_source(const SmootherWeightMatrix& w, const ObservationMatrix& obs) {
  if (!(w.source_grid == obs.grid))
    throw config_error("cross validation: smoother source grid != observation grid");
  if (!(w.eval_grid == obs.grid))
    throw config_error("cross validation: leave-one-out means must be evaluated on the observation grid");
}

// Per-stratum sums of smoothed curves, the backbone of the O(n d) criterion.
struct LooSums {
  Eigen::VectorXd total;           // sum of Xhat_l, all positions
  Eigen::VectorXd weighted_total;  // sum of w_l Xhat_l
  Eigen::MatrixXd by_stratum;      // column v: sum of Xhat_l over stratum v
};

LooSums make_sums(const Eigen::MatrixXd& smoothed, const CvWeights& weights) {
  const int n = static_cast<int>(smoothed.rows());
  const int m = static_cast<int>(smoothed.cols());
  LooSums sums{Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m),
               Eigen::MatrixXd::Zero(m, weights.n_strata())};
  for (int pos = 0; pos < n; ++pos) {
    const Eigen::VectorXd row = smoothed.row(pos).transpose();
    sums.total += row;
    sums.weighted_total += weights.base(pos) * row;
    sums.by_stratum.col(weights.stratum_of_pos(pos)) += row;
  }
  return sums;
}

Eigen::VectorXd loo_from_sums(const Eigen::MatrixXd& smoothed, const LooSums& sums,
                              const CvWeights& weights, int k) {
  const Eigen::VectorXd row_k = smoothed.row(k).transpose();
  switch (weights.variant()) {
    case CvVariant::Unweighted:
      return (sums.total - row_k) / (smoothed.rows() - 1.0);
    case CvVariant::OpsomerMiller:
      return (sums.weighted_total - weights.base(k) * row_k) / (1.0 - weights.base(k));
    case CvVariant::StratifiedRescaled: {
      const int vk = weights.stratum_of_pos(k);
      Eigen::VectorXd out =
          weights.within_weight(vk) * (sums.by_stratum.col(vk) - row_k);
      for (int v = 0; v < weights.n_strata(); ++v)
        if (v != vk) out += weights.cross_weight(v) * sums.by_stratum.col(v);
      return out;
    }
  }
  throw config_error("loo_mean: unknown variant");
}

}  // namespace

Eigen::VectorXd loo_mean(const SmootherWeightMatrix& w, const ObservationMatrix& obs,
                         const CvWeights& weights, int exclude_pos) {
  if (static_cast<int>(obs.values.rows()) != weights.sample_size())
    throw config_error("loo_mean: observation rows != sample size");
  if (exclude_pos < 0 || exclude_pos >= weights.sample_size())
    throw config_error("loo_mean: excluded position out of range");
  const Eigen::MatrixXd smoothed = smooth_rows(obs.values, w);
  return loo_from_sums(smoothed, make_sums(smoothed, weights), weights, exclude_pos);
}

double wcv_score(const SmootherWeightMatrix& w, const ObservationMatrix& obs,
                 const CvWeights& weights) {
  check_eval_on_source(w, obs);
  return wcv_score(smooth_rows(obs.values, w), obs, weights);
}

double wcv_score(const Eigen::MatrixXd& smoothed, const ObservationMatrix& obs,
                 const CvWeights& weights) {
  if (static_cast<int>(obs.values.rows()) != weights.sample_size() ||
      smoothed.rows() != obs.values.rows() || smoothed.cols() != obs.values.cols())
    throw config_error("wcv_score: smoothed/observation/sample dimensions disagree");
  const LooSums sums = make_sums(smoothed, weights);
  double score = 0.0;
  for (int k = 0; k < weights.sample_size(); ++k) {
    const Eigen::VectorXd loo = loo_from_sums(smoothed, sums, weights, k);
    score += weights.base(k) * (obs.values.row(k).transpose() - loo).squaredNorm();
  }
  return score;
}

void BandwidthGrid::validate() const {
  if (values.empty()) throw config_error("BandwidthGrid: no candidates");
  for (size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0)) throw config_error("BandwidthGrid: bandwidths must be > 0");
    if (i > 0 && !(values[i] > values[i - 1]))
      throw config_error("BandwidthGrid: candidates must be strictly increasing");
  }
}

BandwidthGrid default_bandwidth_grid(const TimeGrid& grid, int count) {
  if (count < 1) throw config_error("default_bandwidth_grid: count must be >= 1");
  const double lo = 2.0 * grid.max_spacing();
  const double hi = grid.t_max() / 4.0;
  BandwidthGrid out;
  if (!(lo < hi) || count == 1) {
    out.values.push_back(lo);
    return out;
  }
  for (int i = 0; i < count; ++i)
    out.values.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) *
                                                     static_cast<double>(i) / (count - 1)));
  out.validate();
  return out;
}

BandwidthSelection select_bandwidth(const std::vector<SmootherWeightMatrix>& smoothers,
                                    const ObservationMatrix& obs,
                                    const CvWeights& weights) {
  if (smoothers.empty()) throw config_error("select_bandwidth: no candidates");
  BandwidthSelection out;
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < smoothers.size(); ++i) {
    const double score = wcv_score(smoothers[i], obs, weights);
    out.scores.emplace_back(smoothers[i].bandwidth, score);
    if (std::isfinite(score) && score < best) {  // ties keep the smaller h
      best = score;
      out.index = static_cast<int>(i);
      out.bandwidth = smoothers[i].bandwidth;
    }
  }
  if (out.index < 0) throw numerical_error("select_bandwidth: no finite WCV score");
  return out;
}

BandwidthSelection select_bandwidth(const BandwidthGrid& grid, Kernel kernel,
                                    const ObservationMatrix& obs,
                                    const CvWeights& weights) {
  grid.validate();
  std::vector<SmootherWeightMatrix> smoothers;
  smoothers.reserve(grid.values.size());
  for (double h : grid.values) smoothers.push_back(local_linear_weights(obs.grid, h, kernel));
  return select_bandwidth(smoothers, obs, weights);
}

double oracle_loss(const MeanEstimate& est, const MeanEstimate& oracle) {
  if (!(est.grid == oracle.grid)) throw config_error("oracle_loss: grid mismatch");
  const Eigen::VectorXd diff = est.values - oracle.values;
  return trapezoid(Eigen::VectorXd(diff.cwiseProduct(diff)), est.grid);
}

double r_loss(const MeanEstimate& est, const Eigen::VectorXd& truth) {
  if (est.values.size() != truth.size()) throw config_error("r_loss: length mismatch");
  const Eigen::VectorXd diff = est.values - truth;
  return trapezoid(Eigen::VectorXd(diff.cwiseProduct(diff)), est.grid);
}

}  // namespace fsurvey
