#pragma once

// Bandwidth selection: design-weighted leave-one-out cross validation with
// several leave-one-out weight schemes, plus the loss functionals used to
// rank estimators against the oracle.

#include <Eigen/Core>
#include <vector>

#include "fsurvey/design.hpp"
#include "fsurvey/estimate.hpp"
#include "fsurvey/population.hpp"
#include "fsurvey/smooth.hpp"

namespace fsurvey {

enum class CvVariant {
  OpsomerMiller,       // w~_{lk} = w_l / (1 - w_k)
  StratifiedRescaled,  // stratum-aware weights that keep the design consistency
  Unweighted,          // w~_{lk} = 1/(n-1) (Rice-Silverman leave-one-out mean)
};

/// Cross-validation weights for one realized sample. Base weights are always
/// the design weights w_k = (N pi_k)^-1 of the criterion; the variant selects
/// the leave-one-out weights w~_{lk}. Positions index draw.units.
class CvWeights {
 public:
  CvWeights(CvVariant variant, const SampleDraw& draw,
            const InclusionProbabilities& probs);

  CvVariant variant() const { return variant_; }
  int sample_size() const { return static_cast<int>(base_.size()); }
  double base(int pos) const { return base_[static_cast<size_t>(pos)]; }
  double loo(int l_pos, int k_pos) const;
  int stratum_of_pos(int pos) const { return stratum_[static_cast<size_t>(pos)]; }
  int n_strata() const { return static_cast<int>(within_.size()); }

  /// Per-stratum coefficients of the stratified scheme (exposed for tests).
  double within_weight(int stratum) const { return within_[static_cast<size_t>(stratum)]; }
  double cross_weight(int stratum_of_l) const { return cross_[static_cast<size_t>(stratum_of_l)]; }

 private:
  CvVariant variant_;
  std::vector<double> base_;     // w_k per sample position
  std::vector<int> stratum_;     // stratum id per sample position
  std::vector<double> within_;   // per stratum: weight of l != k, same stratum
  std::vector<double> cross_;    // per stratum of l: weight when k is elsewhere
};

/// Leave-one-out weights of the stratified scheme, with the sum-to-one check.
CvWeights stratified_loo_weights(const SampleDraw& draw,
                                 const InclusionProbabilities& probs);

/// mu_hat^{-k} = sum_{l != k} w~_{lk} Xhat_l evaluated on the grid.
Eigen::VectorXd loo_mean(const SmootherWeightMatrix& w, const ObservationMatrix& obs,
                         const CvWeights& weights, int exclude_pos);

/// WCV(h) = sum_k w_k sum_j (Y_jk - mu_hat^{-k}(t_j))^2.
double wcv_score(const SmootherWeightMatrix& w, const ObservationMatrix& obs,
                 const CvWeights& weights);

/// Same criterion over an already-smoothed sample (rows aligned with obs).
double wcv_score(const Eigen::MatrixXd& smoothed, const ObservationMatrix& obs,
                 const CvWeights& weights);

/// Candidate bandwidths, strictly increasing.
struct BandwidthGrid {
  std::vector<double> values;
  void validate() const;
};

/// 20 log-spaced candidates from 2 * (grid spacing) to T/4.
BandwidthGrid default_bandwidth_grid(const TimeGrid& grid, int count = 20);

struct BandwidthSelection {
  int index = -1;
  double bandwidth = 0.0;
  std::vector<std::pair<double, double>> scores;  // (h, WCV(h)) in grid order
};

/// Argmin of the WCV score over precomputed weight matrices (one per h);
/// ties break toward the smaller bandwidth.
BandwidthSelection select_bandwidth(const std::vector<SmootherWeightMatrix>& smoothers,
                                    const ObservationMatrix& obs, const CvWeights& weights);
BandwidthSelection select_bandwidth(const BandwidthGrid& grid, Kernel kernel,
                                    const ObservationMatrix& obs, const CvWeights& weights);

/// ∫ (est - oracle)^2 dt against the oracle HT estimator built from true curves.
double oracle_loss(const MeanEstimate& est, const MeanEstimate& oracle);

/// ∫ (est - truth)^2 dt against the population mean curve.
double r_loss(const MeanEstimate& est, const Eigen::VectorXd& truth);

}  // namespace fsurvey
