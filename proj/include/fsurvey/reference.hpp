#pragma once

// Serial reference implementations written as direct transcriptions of the
// defining formulas. They are slow on purpose and exist so the fast kernels
// can be checked against them (and timed against them in tools/bench).

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "fsurvey/bandwidth.hpp"
#include "fsurvey/design.hpp"
#include "fsurvey/estimate.hpp"
#include "fsurvey/numerics.hpp"
#include "fsurvey/smooth.hpp"

namespace fsurvey::ref {

/// Row-by-row, coefficient-by-coefficient smoothing (triple loop).
Eigen::MatrixXd smooth_rows_serial(const Eigen::MatrixXd& obs,
                                   const SmootherWeightMatrix& w);

/// gamma_hat by the literal double sum over sampled pairs, using the
/// pi/pi2/delta accessors instead of the per-stratum factorization.
SymmetricMatrix ht_covariance_naive(const Eigen::MatrixXd& smoothed,
                                    const SampleDraw& draw,
                                    const InclusionProbabilities& probs);

/// gamma_N by the literal double sum over all population pairs.
SymmetricMatrix exact_gamma_naive(const Eigen::MatrixXd& smoothed_population,
                                  const InclusionProbabilities& probs,
                                  const std::optional<Eigen::MatrixXd>& noise_second_moment);

/// WCV by explicit leave-one-out sums (no shared per-stratum accumulators).
double wcv_naive(const SmootherWeightMatrix& w, const ObservationMatrix& obs,
                 const CvWeights& weights);

/// The unweighted Rice-Silverman criterion written from its own definition:
/// sum_k n^-1 sum_j (Y_jk - (n-1)^-1 sum_{l != k} Xhat_l(t_j))^2.
double rice_silverman_cv(const SmootherWeightMatrix& w, const ObservationMatrix& obs);

/// Same draws and supremum as simulate_sup_ratios, single-threaded.
std::vector<double> sup_ratios_serial(const SymmetricMatrix& gamma, int n_draws,
                                      const RngStream& stream);

}  // namespace fsurvey::ref
