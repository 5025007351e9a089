#include "fsurvey/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fsurvey {

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw config_error("TimeGrid needs at least 2 points");
  if (points_.front() != 0.0) throw config_error("TimeGrid must start at 0");
  double min_sp = std::numeric_limits<double>::infinity();
  double max_sp = 0.0;
  for (size_t j = 0; j + 1 < points_.size(); ++j) {
    const double sp = points_[j + 1] - points_[j];
    if (!(sp > 0.0) || !std::isfinite(sp))
      throw config_error("TimeGrid points must be finite and strictly increasing");
    min_sp = std::min(min_sp, sp);
    max_sp = std::max(max_sp, sp);
  }
  spacing_ratio_ = max_sp / min_sp;
  max_spacing_ = max_sp;
}

TimeGrid TimeGrid::uniform(int d, double t_max) {
  if (d < 2) throw config_error("uniform grid needs d >= 2");
  if (!(t_max > 0.0)) throw config_error("uniform grid needs T > 0");
  std::vector<double> pts(static_cast<size_t>(d));
  for (int j = 0; j < d; ++j)
    pts[static_cast<size_t>(j)] = t_max * static_cast<double>(j) / (d - 1);
  pts.front() = 0.0;
  pts.back() = t_max;
  return TimeGrid(std::move(pts));
}

double trapezoid(const std::vector<double>& values, const TimeGrid& grid) {
  if (static_cast<int>(values.size()) != grid.size())
    throw config_error("trapezoid: values/grid length mismatch");
  double acc = 0.0;
  for (int j = 0; j + 1 < grid.size(); ++j) {
    acc += (grid[j + 1] - grid[j]) *
           (values[static_cast<size_t>(j)] + values[static_cast<size_t>(j) + 1]) / 2.0;
  }
  return acc;
}

double trapezoid(const Eigen::VectorXd& values, const TimeGrid& grid) {
  if (static_cast<int>(values.size()) != grid.size())
    throw config_error("trapezoid: values/grid length mismatch");
  double acc = 0.0;
  for (int j = 0; j + 1 < grid.size(); ++j)
    acc += (grid[j + 1] - grid[j]) * (values[j] + values[j + 1]) / 2.0;
  return acc;
}

double empirical_quantile(std::vector<double> samples, double p) {
  if (samples.empty()) throw config_error("empirical_quantile: empty sample");
  if (!(p > 0.0 && p < 1.0)) throw config_error("empirical_quantile: p must be in (0,1)");
  const auto b = samples.size();
  auto rank = static_cast<size_t>(std::ceil(p * static_cast<double>(b)));
  rank = std::clamp<size_t>(rank, 1, b);
  std::nth_element(samples.begin(), samples.begin() + static_cast<long>(rank - 1),
                   samples.end());
  return samples[rank - 1];
}

SymmetricMatrix::SymmetricMatrix(int order)
    : order_(order),
      entries_(static_cast<size_t>(order) * (static_cast<size_t>(order) + 1) / 2, 0.0) {
  if (order < 1) throw config_error("SymmetricMatrix order must be >= 1");
}

SymmetricMatrix SymmetricMatrix::from_dense(const Eigen::MatrixXd& dense,
                                            double symmetry_tol) {
  if (dense.rows() != dense.cols())
    throw config_error("SymmetricMatrix::from_dense: matrix not square");
  const int n = static_cast<int>(dense.rows());
  const double scale = std::max(1.0, dense.cwiseAbs().maxCoeff());
  SymmetricMatrix out(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double a = dense(i, j), b = dense(j, i);
      if (std::abs(a - b) > symmetry_tol * scale)
        throw config_error("SymmetricMatrix::from_dense: matrix not symmetric");
      out.set(i, j, (a + b) / 2.0);
    }
  }
  return out;
}

Eigen::MatrixXd SymmetricMatrix::to_dense() const {
  Eigen::MatrixXd m(order_, order_);
  for (int i = 0; i < order_; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = (*this)(i, j);
  return m;
}

Eigen::VectorXd SymmetricMatrix::diagonal() const {
  Eigen::VectorXd d(order_);
  for (int i = 0; i < order_; ++i) d[i] = (*this)(i, i);
  return d;
}

double SymmetricMatrix::max_abs() const {
  double m = 0.0;
  for (double v : entries_) m = std::max(m, std::abs(v));
  return m;
}

EigenDecomposition sym_eig(const SymmetricMatrix& a) {
  for (double v : a.entries())
    if (!std::isfinite(v)) throw config_error("sym_eig: non-finite entry");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.to_dense());
  if (solver.info() != Eigen::Success)
    throw numerical_error("sym_eig: eigendecomposition did not converge (order " +
                          std::to_string(a.order()) + ")");
  // Eigen returns ascending order; flip to descending.
  EigenDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

namespace detail {

namespace {
inline void philox_round(std::array<uint32_t, 4>& ctr, const std::array<uint32_t, 2>& key) {
  constexpr uint64_t kMul0 = 0xD2511F53u;
  constexpr uint64_t kMul1 = 0xCD9E8D57u;
  const uint64_t p0 = kMul0 * ctr[0];
  const uint64_t p1 = kMul1 * ctr[2];
  const auto hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
  const auto hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}
}  // namespace

std::array<uint32_t, 4> philox_block(uint64_t seed, uint64_t stream_id,
                                     uint64_t block_index) {
  std::array<uint32_t, 4> ctr = {
      static_cast<uint32_t>(block_index), static_cast<uint32_t>(block_index >> 32),
      static_cast<uint32_t>(stream_id), static_cast<uint32_t>(stream_id >> 32)};
  std::array<uint32_t, 2> key = {static_cast<uint32_t>(seed),
                                 static_cast<uint32_t>(seed >> 32)};
  constexpr uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    philox_round(ctr, key);
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

}  // namespace detail

namespace {
// Uniform in (0, 1] from a 64-bit word: 53-bit mantissa, never zero.
inline double unit_from_u64(uint64_t w) {
  return static_cast<double>((w >> 11) + 1) * 0x1.0p-53;
}

inline uint64_t join(uint32_t hi, uint32_t lo) {
  return (static_cast<uint64_t>(hi) << 32) | lo;
}
}  // namespace

double standard_normal_at(const RngStream& stream, uint64_t index) {
  const auto block = detail::philox_block(stream.seed, stream.stream_id, index);
  const double u1 = unit_from_u64(join(block[0], block[1]));
  const double u2 = unit_from_u64(join(block[2], block[3]));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<double> standard_normals(const RngStream& stream, int64_t count,
                                     uint64_t first) {
  if (count < 0) throw config_error("standard_normals: count must be >= 0");
  std::vector<double> out(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i)
    out[static_cast<size_t>(i)] = standard_normal_at(stream, first + static_cast<uint64_t>(i));
  return out;
}

uint64_t RngSequence::next_u64() {
  const uint64_t block_index = word_index_ >> 1;
  const auto block = detail::philox_block(stream_.seed, stream_.stream_id, block_index);
  const uint64_t w = (word_index_ & 1) ? join(block[2], block[3]) : join(block[0], block[1]);
  ++word_index_;
  return w;
}

uint64_t RngSequence::next_below(uint64_t bound) {
  if (bound == 0) throw config_error("RngSequence::next_below: bound must be >= 1");
  // Rejection sampling on the top multiple of bound; unbiased.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  for (;;) {
    const uint64_t w = next_u64();
    if (w < limit) return w % bound;
  }
}

double RngSequence::next_unit() { return unit_from_u64(next_u64()); }

}  // namespace fsurvey
