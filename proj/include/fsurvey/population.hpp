#pragma once

// Finite populations of discretized curves and noisy observation of
// sampled units under heteroscedastic or AR(3) measurement error.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

#include "fsurvey/numerics.hpp"

namespace fsurvey {

/// One variation mode: a curve tabulated on the grid plus its score variance.
struct ModeSpec {
  Eigen::VectorXd values;
  double variance = 0.0;
};

struct PopulationConfig {
  int n_units = 0;
  TimeGrid grid;
  Eigen::VectorXd mean_curve;   // tabulated on grid
  std::vector<ModeSpec> modes;  // orthonormal under the trapezoid inner product
  uint64_t seed = 0;

  /// Throws config_error on violated invariants (N >= 2, orthonormality 1e-6).
  void validate() const;
};

/// N true trajectories evaluated on a common time grid.
struct CurvePopulation {
  TimeGrid grid;
  Eigen::MatrixXd curves;  // N x d, row k holds X_k(t_1..t_d)

  int n_units() const { return static_cast<int>(curves.rows()); }
};

struct NoiseModel {
  enum class Kind { Heteroscedastic, Ar3 };

  Kind kind = Kind::Heteroscedastic;
  std::array<double, 3> ar_coeffs = {0.89, 0.3, -0.4};
  double delta = 0.0;  // noise scale; 0 disables noise

  void validate() const;  // stationarity of the AR coefficients, delta >= 0
};

/// Noisy recordings Y_jk for the sampled units, rows aligned with `units`.
struct ObservationMatrix {
  TimeGrid grid;
  Eigen::MatrixXd values;  // n x d
  std::vector<int> units;  // population indices, same order as rows
};

/// X_k(t_j) = mu(t_j) + sum_l Z_kl v_l(t_j), Z_kl ~ N(0, sigma_l^2).
/// Reproducible per config.seed.
CurvePopulation synthesize_population(const PopulationConfig& config);

/// Exact column means (the target mean trajectory of the population).
Eigen::VectorXd population_mean(const CurvePopulation& pop);

/// Unbiased per-time variance across the population (N-1 denominator).
Eigen::VectorXd population_variance_at(const CurvePopulation& pop);

/// Observe the selected units under the noise model. The noise variance is
/// tied to the population: heteroscedastic errors have variance v(t_j) =
/// population_variance_at, AR(3) paths have stationary variance equal to the
/// time-average of v. Returned values are X_k(t_j) + delta * eps_jk.
ObservationMatrix observe(const CurvePopulation& pop, const std::vector<int>& units,
                          const NoiseModel& noise, const RngStream& stream);

/// Innovation variance sigma_eta^2 making a stationary AR(3) with the given
/// coefficients have variance `target_variance` (4x4 Yule-Walker solve).
double ar3_innovation_variance(const std::array<double, 3>& coeffs,
                               double target_variance);

/// Stationary autocovariances gamma(0..max_lag) of the AR(3) process with
/// innovation variance sigma_eta2.
std::vector<double> ar3_autocovariance(const std::array<double, 3>& coeffs,
                                       double sigma_eta2, int max_lag);

/// d x d second-moment matrix V of the measurement error delta * eps
/// (diagonal for heteroscedastic noise, Toeplitz for AR(3)).
Eigen::MatrixXd noise_covariance(const NoiseModel& noise, const CurvePopulation& pop);

/// Default synthetic family: a bump-plus-trend mean and three orthonormal
/// modes built by Gram-Schmidt under the trapezoid inner product.
PopulationConfig default_population_config(int n_units, const TimeGrid& grid,
                                           uint64_t seed);

/// Orthonormalize the given curves under the trapezoid inner product.
std::vector<Eigen::VectorXd> gram_schmidt(const std::vector<Eigen::VectorXd>& seeds,
                                          const TimeGrid& grid);

}  // namespace fsurvey
