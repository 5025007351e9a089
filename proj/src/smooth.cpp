#include "fsurvey/smooth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fsurvey {

double kernel_eval(Kernel kernel, double u) {
  const double a = std::abs(u);
  if (a > 1.0) return 0.0;
  switch (kernel) {
    case Kernel::Epanechnikov:
      return 0.75 * (1.0 - u * u);
    case Kernel::Triangular:
      return 1.0 - a;
    case Kernel::Uniform:
      return 0.5;
  }
  return 0.0;
}

int SmootherWeightMatrix::n_fallback() const {
  int n = 0;
  for (uint8_t f : fallback_rows) n += f;
  return n;
}

SmootherWeightMatrix local_linear_weights(const TimeGrid& source_grid,
                                          const TimeGrid& eval_grid, double h,
                                          Kernel kernel) {
  if (!(h > 0.0)) throw config_error("local_linear_weights: bandwidth must be > 0");
  const int d = source_grid.size();
  const int m = eval_grid.size();

  SmootherWeightMatrix out{eval_grid, source_grid, h, kernel,
                           Eigen::MatrixXd::Zero(m, d),
                           std::vector<uint8_t>(static_cast<size_t>(m), 0)};

  std::vector<double> k_values(static_cast<size_t>(d));
  for (int i = 0; i < m; ++i) {
    const double t = eval_grid[i];
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    int in_window = 0;
    double max_offset2 = 0.0;
    for (int j = 0; j < d; ++j) {
      const double offset = source_grid[j] - t;
      const double k = kernel_eval(kernel, offset / h);
      k_values[static_cast<size_t>(j)] = k;
      if (k > 0.0) {
        ++in_window;
        max_offset2 = std::max(max_offset2, offset * offset);
        s0 += k;
        s1 += offset * k;
        s2 += offset * offset * k;
      }
    }
    const double scale = 1.0 / (d * h);
    s0 *= scale;
    s1 *= scale;
    s2 *= scale;

    const double denom = s2 * s0 - s1 * s1;
    if (in_window >= 2 && denom > 1e-12 * s0 * max_offset2) {
      for (int j = 0; j < d; ++j) {
        const double k = k_values[static_cast<size_t>(j)];
        if (k == 0.0) continue;
        const double offset = source_grid[j] - t;
        out.weights(i, j) = scale * (s2 - offset * s1) * k / denom;
      }
      continue;
    }

    // Fallback: Nadaraya-Watson weights at this evaluation point. With no
    // in-window point at all, widen the window to the two nearest design points.
    out.fallback_rows[static_cast<size_t>(i)] = 1;
    if (in_window == 0) {
      double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
      for (int j = 0; j < d; ++j) {
        const double dist = std::abs(source_grid[j] - t);
        if (dist < d1) {
          d2 = d1;
          d1 = dist;
        } else if (dist < d2) {
          d2 = dist;
        }
      }
      const double widened = d2 * (1.0 + 1e-9) + 1e-300;
      double total = 0.0;
      for (int j = 0; j < d; ++j) {
        const double k = kernel_eval(kernel, (source_grid[j] - t) / widened);
        k_values[static_cast<size_t>(j)] = k;
        total += k;
      }
      for (int j = 0; j < d; ++j) out.weights(i, j) = k_values[static_cast<size_t>(j)] / total;
    } else {
      double total = 0.0;
      for (int j = 0; j < d; ++j) total += k_values[static_cast<size_t>(j)];
      for (int j = 0; j < d; ++j) out.weights(i, j) = k_values[static_cast<size_t>(j)] / total;
    }
  }
  return out;
}

SmootherWeightMatrix local_linear_weights(const TimeGrid& source_grid, double h,
                                          Kernel kernel) {
  return local_linear_weights(source_grid, source_grid, h, kernel);
}

Eigen::VectorXd smooth_curve(const Eigen::VectorXd& obs_row,
                             const SmootherWeightMatrix& w) {
  if (obs_row.size() != w.weights.cols())
    throw config_error("smooth_curve: row length != source grid length");
  return w.weights * obs_row;
}

Eigen::MatrixXd smooth_rows(const Eigen::MatrixXd& obs, const SmootherWeightMatrix& w) {
  if (obs.cols() != w.weights.cols())
    throw config_error("smooth_rows: column count != source grid length");
  const int n = static_cast<int>(obs.rows());
  Eigen::MatrixXd out(n, w.weights.rows());
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r)
    out.row(r) = (w.weights * obs.row(r).transpose()).transpose();
  return out;
}

Eigen::VectorXd linear_interpolate(const Eigen::VectorXd& obs_row,
                                   const TimeGrid& source_grid,
                                   const TimeGrid& eval_grid) {
  if (obs_row.size() != source_grid.size())
    throw config_error("linear_interpolate: row length != source grid length");
  if (eval_grid.t_max() > source_grid.t_max())
    throw config_error("linear_interpolate: evaluation point outside [0, T]");
  const int d = source_grid.size();
  Eigen::VectorXd out(eval_grid.size());
  int j = 0;
  for (int i = 0; i < eval_grid.size(); ++i) {
    const double t = eval_grid[i];
    while (j + 2 < d && source_grid[j + 1] < t) ++j;
    const double t0 = source_grid[j], t1 = source_grid[j + 1];
    const double w = (t - t0) / (t1 - t0);
    out[i] = (1.0 - w) * obs_row[j] + w * obs_row[j + 1];
  }
  return out;
}

}  // namespace fsurvey
