#include "fsurvey/population.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

namespace fsurvey {

namespace {

constexpr int kAr3BurnIn = 1000;

// Stream id reserved for mode scores; replicate-level streams (sampling,
// noise, band simulation) live in disjoint id ranges below 2^41.
constexpr uint64_t kScoreStream = 1ull << 41;

bool ar3_is_stationary(const std::array<double, 3>& a) {
  // Stationary iff the companion-matrix eigenvalues lie inside the unit circle.
  Eigen::Matrix3d companion;
  companion << a[0], a[1], a[2],
               1.0,  0.0,  0.0,
               0.0,  1.0,  0.0;
  Eigen::EigenSolver<Eigen::Matrix3d> solver(companion, false);
  for (int i = 0; i < 3; ++i)
    if (std::abs(solver.eigenvalues()[i]) >= 1.0 - 1e-12) return false;
  return true;
}

}  // namespace

void PopulationConfig::validate() const {
  if (n_units < 2) throw config_error("PopulationConfig: N must be >= 2");
  const int d = grid.size();
  if (static_cast<int>(mean_curve.size()) != d)
    throw config_error("PopulationConfig: mean curve length != grid length");
  if (!mean_curve.allFinite())
    throw config_error("PopulationConfig: mean curve has non-finite values");
  for (const auto& mode : modes) {
    if (static_cast<int>(mode.values.size()) != d)
      throw config_error("PopulationConfig: mode length != grid length");
    if (!(mode.variance >= 0.0))
      throw config_error("PopulationConfig: mode variance must be >= 0");
  }
  constexpr double kTol = 1e-6;
  for (size_t a = 0; a < modes.size(); ++a) {
    for (size_t b = 0; b <= a; ++b) {
      const Eigen::VectorXd prod = modes[a].values.cwiseProduct(modes[b].values);
      const double ip = trapezoid(prod, grid);
      const double want = (a == b) ? 1.0 : 0.0;
      if (std::abs(ip - want) > kTol)
        throw config_error("PopulationConfig: modes not orthonormal under the grid inner product");
    }
  }
}

void NoiseModel::validate() const {
  if (!(delta >= 0.0)) throw config_error("NoiseModel: delta must be >= 0");
  if (kind == Kind::Ar3 && !ar3_is_stationary(ar_coeffs))
    throw config_error("NoiseModel: AR(3) coefficients are not stationary");
}

CurvePopulation synthesize_population(const PopulationConfig& config) {
  config.validate();
  const int n = config.n_units;
  const int d = config.grid.size();
  const int n_modes = static_cast<int>(config.modes.size());

  Eigen::MatrixXd curves = config.mean_curve.transpose().replicate(n, 1);
  if (n_modes > 0) {
    const RngStream scores{config.seed, kScoreStream};
    Eigen::MatrixXd z(n, n_modes);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n_modes; ++l)
        z(k, l) = std::sqrt(config.modes[static_cast<size_t>(l)].variance) *
                  standard_normal_at(scores, static_cast<uint64_t>(k) *
                                                 static_cast<uint64_t>(n_modes) +
                                             static_cast<uint64_t>(l));
    Eigen::MatrixXd basis(d, n_modes);
    for (int l = 0; l < n_modes; ++l)
      basis.col(l) = config.modes[static_cast<size_t>(l)].values;
    curves += z * basis.transpose();
  }
  return CurvePopulation{config.grid, std::move(curves)};
}

Eigen::VectorXd population_mean(const CurvePopulation& pop) {
  return pop.curves.colwise().mean();
}

Eigen::VectorXd population_variance_at(const CurvePopulation& pop) {
  const int n = pop.n_units();
  if (n < 2) throw config_error("population_variance_at: needs N >= 2");
  const Eigen::RowVectorXd mean = pop.curves.colwise().mean();
  return (pop.curves.rowwise() - mean).colwise().squaredNorm() / (n - 1);
}

double ar3_innovation_variance(const std::array<double, 3>& coeffs,
                               double target_variance) {
  if (!(target_variance >= 0.0))
    throw config_error("ar3_innovation_variance: target variance must be >= 0");
  const auto acov = ar3_autocovariance(coeffs, 1.0, 0);
  return target_variance / acov[0];
}

std::vector<double> ar3_autocovariance(const std::array<double, 3>& coeffs,
                                       double sigma_eta2, int max_lag) {
  if (!ar3_is_stationary(coeffs))
    throw config_error("ar3_autocovariance: coefficients are not stationary");
  const double a1 = coeffs[0], a2 = coeffs[1], a3 = coeffs[2];
  // Yule-Walker system for (g0, g1, g2, g3) with unit-variance innovations:
  //   g0 = a1 g1 + a2 g2 + a3 g3 + s2
  //   g1 = a1 g0 + a2 g1 + a3 g2
  //   g2 = a1 g1 + a2 g0 + a3 g1
  //   g3 = a1 g2 + a2 g1 + a3 g0
  Eigen::Matrix4d m;
  m << 1.0, -a1, -a2, -a3,
       -a1, 1.0 - a2, -a3, 0.0,
       -a2, -a1 - a3, 1.0, 0.0,
       -a3, -a2, -a1, 1.0;
  Eigen::Vector4d rhs(sigma_eta2, 0.0, 0.0, 0.0);
  const Eigen::Vector4d g = m.fullPivLu().solve(rhs);
  std::vector<double> acov(static_cast<size_t>(max_lag) + 1);
  for (int l = 0; l <= std::min(max_lag, 3); ++l) acov[static_cast<size_t>(l)] = g[l];
  for (int l = 4; l <= max_lag; ++l)
    acov[static_cast<size_t>(l)] = a1 * acov[static_cast<size_t>(l - 1)] +
                                   a2 * acov[static_cast<size_t>(l - 2)] +
                                   a3 * acov[static_cast<size_t>(l - 3)];
  return acov;
}

ObservationMatrix observe(const CurvePopulation& pop, const std::vector<int>& units,
                          const NoiseModel& noise, const RngStream& stream) {
  noise.validate();
  const int d = pop.grid.size();
  const int n = static_cast<int>(units.size());
  for (int u : units)
    if (u < 0 || u >= pop.n_units()) throw config_error("observe: unit index out of range");

  Eigen::MatrixXd values(n, d);
  for (int r = 0; r < n; ++r) values.row(r) = pop.curves.row(units[static_cast<size_t>(r)]);

  if (noise.delta > 0.0) {
    const Eigen::VectorXd v = population_variance_at(pop);
    if (noise.kind == NoiseModel::Kind::Heteroscedastic) {
      const Eigen::VectorXd sd = v.cwiseSqrt();
      for (int r = 0; r < n; ++r) {
        const uint64_t base = static_cast<uint64_t>(r) * static_cast<uint64_t>(d);
        for (int j = 0; j < d; ++j)
          values(r, j) += noise.delta * sd[j] *
                          standard_normal_at(stream, base + static_cast<uint64_t>(j));
      }
    } else {
      const double target = v.mean();
      const double sd_eta = std::sqrt(ar3_innovation_variance(noise.ar_coeffs, target));
      const auto& a = noise.ar_coeffs;
      const uint64_t row_stride = static_cast<uint64_t>(kAr3BurnIn + d);
      for (int r = 0; r < n; ++r) {
        const uint64_t base = static_cast<uint64_t>(r) * row_stride;
        double e1 = 0.0, e2 = 0.0, e3 = 0.0;  // zero initial state, then burn-in
        for (int i = 0; i < kAr3BurnIn + d; ++i) {
          const double e = a[0] * e1 + a[1] * e2 + a[2] * e3 +
                           sd_eta * standard_normal_at(stream, base + static_cast<uint64_t>(i));
          if (i >= kAr3BurnIn) values(r, i - kAr3BurnIn) += noise.delta * e;
          e3 = e2;
          e2 = e1;
          e1 = e;
        }
      }
    }
  }

  return ObservationMatrix{pop.grid, std::move(values), units};
}

Eigen::MatrixXd noise_covariance(const NoiseModel& noise, const CurvePopulation& pop) {
  noise.validate();
  const int d = pop.grid.size();
  const double d2 = noise.delta * noise.delta;
  if (noise.delta == 0.0) return Eigen::MatrixXd::Zero(d, d);
  const Eigen::VectorXd v = population_variance_at(pop);
  if (noise.kind == NoiseModel::Kind::Heteroscedastic)
    return (d2 * v).asDiagonal();
  const double target = v.mean();
  const double s2 = ar3_innovation_variance(noise.ar_coeffs, target);
  const auto acov = ar3_autocovariance(noise.ar_coeffs, s2, d - 1);
  Eigen::MatrixXd out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = d2 * acov[static_cast<size_t>(std::abs(i - j))];
  return out;
}

PopulationConfig default_population_config(int n_units, const TimeGrid& grid,
                                           uint64_t seed) {
  const int d = grid.size();
  const double t_max = grid.t_max();
  Eigen::VectorXd mean(d);
  std::vector<Eigen::VectorXd> seeds(3, Eigen::VectorXd(d));
  for (int j = 0; j < d; ++j) {
    const double t = grid[j] / t_max;  // normalized time in [0,1]
    const double bump = std::exp(-(t - 0.75) * (t - 0.75) / (2.0 * 0.1 * 0.1));
    mean[j] = 140.0 + 80.0 * t + 130.0 * bump;
    seeds[0][j] = 0.6 + std::sin(2.0 * std::numbers::pi * t);
    seeds[1][j] = std::cos(2.0 * std::numbers::pi * t);
    seeds[2][j] = std::sin(4.0 * std::numbers::pi * t);
  }
  const auto basis = gram_schmidt(seeds, grid);
  PopulationConfig config;
  config.n_units = n_units;
  config.grid = grid;
  config.mean_curve = std::move(mean);
  const std::array<double, 3> sigma = {115.0, 60.0, 35.0};
  for (int l = 0; l < 3; ++l)
    config.modes.push_back(ModeSpec{basis[static_cast<size_t>(l)], sigma[static_cast<size_t>(l)] * sigma[static_cast<size_t>(l)]});
  config.seed = seed;
  return config;
}

std::vector<Eigen::VectorXd> gram_schmidt(const std::vector<Eigen::VectorXd>& seeds,
                                          const TimeGrid& grid) {
  std::vector<Eigen::VectorXd> basis;
  basis.reserve(seeds.size());
  for (Eigen::VectorXd candidate : seeds) {
    for (const auto& prev : basis) {
      const double ip = trapezoid(Eigen::VectorXd(candidate.cwiseProduct(prev)), grid);
      candidate -= ip * prev;
    }
    const double norm2 = trapezoid(Eigen::VectorXd(candidate.cwiseProduct(candidate)), grid);
    if (norm2 <= 1e-14)
      throw config_error("gram_schmidt: seed curves are linearly dependent on the grid");
    basis.push_back(candidate / std::sqrt(norm2));
  }
  return basis;
}

}  // namespace fsurvey
