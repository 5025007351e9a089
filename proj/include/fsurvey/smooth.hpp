#pragma once

// Kernel evaluation, local-linear weight construction, curve smoothing and
// the linear-interpolation baseline.

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "fsurvey/numerics.hpp"

namespace fsurvey {

enum class Kernel { Epanechnikov, Triangular, Uniform };

double kernel_eval(Kernel kernel, double u);

/// Local-linear weights W_j(t) for every evaluation point. Rows sum to 1 and
/// satisfy the first moment condition sum_j W_j(t)(t_j - t) = 0, except rows
/// flagged as fallback (too few in-window points or a degenerate denominator,
/// in which case Nadaraya-Watson weights are used at that point).
struct SmootherWeightMatrix {
  TimeGrid eval_grid;
  TimeGrid source_grid;
  double bandwidth = 0.0;
  Kernel kernel = Kernel::Epanechnikov;
  Eigen::MatrixXd weights;             // m x d, row i holds W_j(eval_i)
  std::vector<uint8_t> fallback_rows;  // 1 where the fallback path was taken

  int n_eval() const { return static_cast<int>(weights.rows()); }
  int n_source() const { return static_cast<int>(weights.cols()); }
  int n_fallback() const;
};

SmootherWeightMatrix local_linear_weights(const TimeGrid& source_grid,
                                          const TimeGrid& eval_grid, double h,
                                          Kernel kernel);

/// Convenience: evaluation on the source grid itself (the usual case).
SmootherWeightMatrix local_linear_weights(const TimeGrid& source_grid, double h,
                                          Kernel kernel);

/// Smooth one discretized curve: returns W * row.
Eigen::VectorXd smooth_curve(const Eigen::VectorXd& obs_row,
                             const SmootherWeightMatrix& w);

/// Smooth many curves at once (rows of `obs`); OpenMP-parallel over rows.
/// Row r of the result equals smooth_curve(obs.row(r), w) exactly.
Eigen::MatrixXd smooth_rows(const Eigen::MatrixXd& obs, const SmootherWeightMatrix& w);

/// Piecewise-linear interpolation through (t_j, row_j), evaluated on eval_grid.
Eigen::VectorXd linear_interpolate(const Eigen::VectorXd& obs_row,
                                   const TimeGrid& source_grid,
                                   const TimeGrid& eval_grid);

}  // namespace fsurvey
