#pragma once

// Shared numerical kernels: time grids, trapezoid quadrature, empirical
// quantiles, symmetric eigendecomposition and reproducible RNG streams.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

#include "fsurvey/errors.hpp"

namespace fsurvey {

/// Ordered discretization points 0 = t_1 < t_2 < ... < t_d = T.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> points);

  /// Uniform grid of d points on [0, T].
  static TimeGrid uniform(int d, double t_max);

  int size() const { return static_cast<int>(points_.size()); }
  double operator[](int j) const { return points_[static_cast<size_t>(j)]; }
  const std::vector<double>& points() const { return points_; }
  double t_max() const { return points_.back(); }

  /// max spacing / min spacing; quasi-uniformity degrades above ~10.
  double spacing_ratio() const { return spacing_ratio_; }
  double max_spacing() const { return max_spacing_; }

  bool operator==(const TimeGrid& other) const { return points_ == other.points_; }

 private:
  std::vector<double> points_;
  double spacing_ratio_ = 1.0;
  double max_spacing_ = 0.0;
};

/// Trapezoid rule for ∫ v dt over the grid. Exact on piecewise-linear inputs.
double trapezoid(const std::vector<double>& values, const TimeGrid& grid);
double trapezoid(const Eigen::VectorXd& values, const TimeGrid& grid);

/// ceil(p*B)-th order statistic of the samples (type-1 / inverse-CDF quantile).
/// p must lie in (0,1); samples must be nonempty.
double empirical_quantile(std::vector<double> samples, double p);

/// Symmetric matrix stored as the row-major lower triangle.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(int order);
  static SymmetricMatrix from_dense(const Eigen::MatrixXd& dense,
                                    double symmetry_tol = 1e-12);

  int order() const { return order_; }
  double operator()(int i, int j) const { return entries_[index(i, j)]; }
  void set(int i, int j, double value) { entries_[index(i, j)] = value; }

  Eigen::MatrixXd to_dense() const;
  Eigen::VectorXd diagonal() const;
  double max_abs() const;

  const std::vector<double>& entries() const { return entries_; }

 private:
  size_t index(int i, int j) const {
    if (j > i) std::swap(i, j);
    return static_cast<size_t>(i) * (static_cast<size_t>(i) + 1) / 2 +
           static_cast<size_t>(j);
  }

  int order_;
  std::vector<double> entries_;  // lower triangle, row-major
};

struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;  // descending
  Eigen::MatrixXd eigenvectors; // columns, orthonormal; A = V diag(l) V^T
};

/// Full eigendecomposition of a symmetric matrix.
/// Reconstruction error is at most 1e-8 * max|A| entrywise.
EigenDecomposition sym_eig(const SymmetricMatrix& a);

/// Descriptor of a reproducible random stream. Distinct stream ids give
/// statistically independent sequences; the same (seed, stream_id) always
/// reproduces the same draws. Backed by the counter-based Philox4x32-10
/// generator, so any draw index can be computed directly.
struct RngStream {
  uint64_t seed = 0;
  uint64_t stream_id = 0;
};

namespace detail {
/// Philox4x32-10 block function: (seed, stream, block index) -> 4 x u32.
std::array<uint32_t, 4> philox_block(uint64_t seed, uint64_t stream_id,
                                     uint64_t block_index);
}  // namespace detail

/// The i-th N(0,1) draw of the stream (Box-Muller on Philox uniforms).
double standard_normal_at(const RngStream& stream, uint64_t index);

/// count i.i.d. N(0,1) draws, starting at draw index `first`.
std::vector<double> standard_normals(const RngStream& stream, int64_t count,
                                     uint64_t first = 0);

/// Sequential view over a stream for variable-consumption use
/// (integer draws for sampling). Deterministic per stream.
class RngSequence {
 public:
  explicit RngSequence(RngStream stream) : stream_(stream) {}

  uint64_t next_u64();
  /// Uniform integer in [0, bound), bound >= 1. Unbiased (rejection method).
  uint64_t next_below(uint64_t bound);
  /// Uniform double in (0, 1].
  double next_unit();

 private:
  RngStream stream_;
  uint64_t word_index_ = 0;
};

}  // namespace fsurvey
