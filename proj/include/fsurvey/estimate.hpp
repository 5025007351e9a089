#pragma once

// Horvitz-Thompson estimators of the mean curve and of its covariance
// function, plus the design-exact covariance used for validation.

#include <Eigen/Core>
#include <optional>
#include <string>

#include "fsurvey/design.hpp"
#include "fsurvey/numerics.hpp"
#include "fsurvey/population.hpp"
#include "fsurvey/smooth.hpp"

namespace fsurvey {

struct MeanEstimate {
  TimeGrid grid;
  Eigen::VectorXd values;
  std::string method;        // "lin", bandwidth tag, ...
  double bandwidth = 0.0;    // 0 when not a kernel smoother
  int sample_size = 0;
  int population_size = 0;
};

struct CovarianceEstimate {
  TimeGrid grid;
  SymmetricMatrix gamma;  // gamma_hat(t_i, t_j); symmetric, not necessarily PSD
  std::string method;
  int sample_size = 0;
  int population_size = 0;
};

/// mu_hat(t) = N^-1 sum_{k in s} Xhat_k(t) / pi_k. Rows of `smoothed` must be
/// aligned with draw.units.
MeanEstimate ht_mean(const Eigen::MatrixXd& smoothed, const TimeGrid& grid,
                     const SampleDraw& draw, const InclusionProbabilities& probs);

/// Covariance estimator over sampled pairs, with the k = l convention
/// Delta_kk / pi_kk = 1 - pi_k. For SRSWOR / stratified designs the pair
/// coefficient is constant per stratum, so the double sum collapses into
/// per-stratum curve sums plus a diagonal correction.
CovarianceEstimate ht_covariance(const Eigen::MatrixXd& smoothed, const TimeGrid& grid,
                                 const SampleDraw& draw,
                                 const InclusionProbabilities& probs);

/// Design-exact gamma_N over the full population of smoothed curves,
/// optionally adding the measurement-error term. `noise_second_moment` is the
/// smoothed error second moment E(eps~(s) eps~(t)) = W V W^T on the eval grid.
SymmetricMatrix exact_gamma(const Eigen::MatrixXd& smoothed_population,
                            const InclusionProbabilities& probs,
                            const std::optional<Eigen::MatrixXd>& noise_second_moment);

/// W V W^T for the given weight matrix and noise model (V includes delta^2).
Eigen::MatrixXd smoothed_noise_second_moment(const SmootherWeightMatrix& w,
                                             const NoiseModel& noise,
                                             const CurvePopulation& pop);

struct VarianceCurve {
  Eigen::VectorXd sigma;  // sqrt(max(gamma(t,t), 0))
  int clipped = 0;        // number of negative diagonal entries clipped
};

VarianceCurve variance_curve(const CovarianceEstimate& cov);

}  // namespace fsurvey
