#pragma once

// Simultaneous confidence bands via simulation of Gaussian processes with the
// estimated covariance.

#include <Eigen/Core>
#include <vector>

#include "fsurvey/estimate.hpp"
#include "fsurvey/numerics.hpp"

namespace fsurvey {

struct PsdDiagnostics {
  double clipped_mass = 0.0;  // sum|negative eigenvalues| / sum|eigenvalues|
  int n_clipped = 0;
  double min_eigenvalue = 0.0;
};

struct PsdFactor {
  Eigen::MatrixXd factor;  // L with L L^T = nearest PSD matrix (eigen-clip)
  PsdDiagnostics diagnostics;
};

/// Project a symmetric matrix onto the PSD cone by clipping negative
/// eigenvalues, returning a factor L with L L^T = A+.
PsdFactor psd_project(const SymmetricMatrix& a);

/// B supremum norms of simulated paths of Ghat / sigma_hat. Grid points with
/// sigma_hat < 1e-12 * max sigma_hat are excluded from the supremum. The
/// matrix is divided by its largest diagonal entry before factorization, so
/// the ratios are invariant under rescaling of the covariance (the common
/// factor cancels exactly in the division). Draw b uses normal draws
/// [b*d, (b+1)*d) of the stream, so results do not depend on the number of
/// OpenMP workers.
std::vector<double> simulate_sup_ratios(const SymmetricMatrix& gamma, int n_draws,
                                        const RngStream& stream);
std::vector<double> simulate_sup_ratios(const CovarianceEstimate& cov, int n_draws,
                                        const RngStream& stream);

/// (1-alpha) empirical quantile of the simulated supremum ratios.
double band_threshold(const std::vector<double>& sup_ratios, double alpha);

struct ConfidenceBand {
  TimeGrid grid;
  Eigen::VectorXd center;
  Eigen::VectorXd halfwidth;  // c * sigma_hat(t) / sqrt(N)
  double threshold = 0.0;     // c
  double level = 0.0;         // 1 - alpha
  int n_draws = 0;            // B
  int population_size = 0;
  PsdDiagnostics psd;
  int sigma_clipped = 0;  // negative diagonal entries clipped for sigma_hat
};

ConfidenceBand build_band(const MeanEstimate& mean, const CovarianceEstimate& cov,
                          double alpha, int n_draws, const RngStream& stream);

/// Band area in the convention of the summary tables: ∫ 2 c sigma_hat dt.
double band_area(const ConfidenceBand& band);
/// Literal area between the band edges: ∫ 2 c sigma_hat / sqrt(N) dt.
double band_area_literal(const ConfidenceBand& band);

/// True iff |truth - center| <= halfwidth at every grid point.
bool covers(const ConfidenceBand& band, const Eigen::VectorXd& truth);

}  // namespace fsurvey
