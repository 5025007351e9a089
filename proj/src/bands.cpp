#include "fsurvey/bands.hpp"

#include <cmath>
#include <limits>

namespace fsurvey {

PsdFactor psd_project(const SymmetricMatrix& a) {
  const EigenDecomposition eig = sym_eig(a);
  const int m = a.order();
  PsdFactor out;
  out.diagnostics.min_eigenvalue = eig.eigenvalues[m - 1];
  double negative_mass = 0.0, total_mass = 0.0;
  Eigen::VectorXd clipped(m);
  for (int i = 0; i < m; ++i) {
    const double value = eig.eigenvalues[i];
    total_mass += std::abs(value);
    if (value < 0.0) {
      negative_mass += -value;
      ++out.diagnostics.n_clipped;
      clipped[i] = 0.0;
    } else {
      clipped[i] = std::sqrt(value);
    }
  }
  out.diagnostics.clipped_mass = total_mass > 0.0 ? negative_mass / total_mass : 0.0;
  out.factor = eig.eigenvectors * clipped.asDiagonal();
  return out;
}

namespace {

struct SupRatioPlan {
  Eigen::MatrixXd factor;       // of the max-diagonal-normalized matrix
  Eigen::VectorXd sigma;        // normalized sigma_hat, zero where skipped
  std::vector<int> active;      // grid points entering the supremum
  PsdDiagnostics diagnostics;
};

SupRatioPlan make_plan(const SymmetricMatrix& gamma) {
  const int m = gamma.order();
  double max_diag = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) max_diag = std::max(max_diag, gamma(i, i));
  if (!(max_diag > 0.0))
    throw numerical_error("simulate_sup_ratios: sigma_hat vanishes everywhere, no band can be formed");

  // Dividing by the largest diagonal entry makes every downstream quantity a
  // function of ratios of matrix entries only, so rescaling the covariance by
  // a common factor cancels exactly.
  SymmetricMatrix normalized(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) normalized.set(i, j, gamma(i, j) / max_diag);

  SupRatioPlan plan;
  plan.sigma = Eigen::VectorXd::Zero(m);
  constexpr double kSkip = 1e-12;  // relative to max sigma_hat (= 1 after normalization)
  for (int i = 0; i < m; ++i) {
    const double s = std::sqrt(std::max(normalized(i, i), 0.0));
    if (s >= kSkip) {
      plan.sigma[i] = s;
      plan.active.push_back(i);
    }
  }
  PsdFactor psd = psd_project(normalized);
  plan.factor = std::move(psd.factor);
  plan.diagnostics = psd.diagnostics;
  return plan;
}

std::vector<double> run_plan(const SupRatioPlan& plan, int n_draws,
                             const RngStream& stream) {
  if (n_draws < 1) throw config_error("simulate_sup_ratios: need at least one draw");
  const int m = static_cast<int>(plan.factor.rows());
  std::vector<double> ratios(static_cast<size_t>(n_draws));
#pragma omp parallel for schedule(static)
  for (int b = 0; b < n_draws; ++b) {
    Eigen::VectorXd z(m);
    const uint64_t base = static_cast<uint64_t>(b) * static_cast<uint64_t>(m);
    for (int i = 0; i < m; ++i)
      z[i] = standard_normal_at(stream, base + static_cast<uint64_t>(i));
    const Eigen::VectorXd path = plan.factor * z;
    double sup = 0.0;
    for (int i : plan.active) sup = std::max(sup, std::abs(path[i]) / plan.sigma[i]);
    ratios[static_cast<size_t>(b)] = sup;
  }
  return ratios;
}

}  // namespace

std::vector<double> simulate_sup_ratios(const SymmetricMatrix& gamma, int n_draws,
                                        const RngStream& stream) {
  return run_plan(make_plan(gamma), n_draws, stream);
}

std::vector<double> simulate_sup_ratios(const CovarianceEstimate& cov, int n_draws,
                                        const RngStream& stream) {
  return simulate_sup_ratios(cov.gamma, n_draws, stream);
}

double band_threshold(const std::vector<double>& sup_ratios, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw config_error("band_threshold: alpha must be in (0,1)");
  return empirical_quantile(sup_ratios, 1.0 - alpha);
}

ConfidenceBand build_band(const MeanEstimate& mean, const CovarianceEstimate& cov,
                          double alpha, int n_draws, const RngStream& stream) {
  if (!(mean.grid == cov.grid)) throw config_error("build_band: grids disagree");
  if (mean.population_size < 1)
    throw config_error("build_band: mean estimate lacks the population size");

  const SupRatioPlan plan = make_plan(cov.gamma);
  const std::vector<double> ratios = run_plan(plan, n_draws, stream);
  const double c = band_threshold(ratios, alpha);

  const VarianceCurve sigma = variance_curve(cov);
  ConfidenceBand band;
  band.grid = mean.grid;
  band.center = mean.values;
  band.halfwidth = c / std::sqrt(static_cast<double>(mean.population_size)) * sigma.sigma;
  band.threshold = c;
  band.level = 1.0 - alpha;
  band.n_draws = n_draws;
  band.population_size = mean.population_size;
  band.psd = plan.diagnostics;
  band.sigma_clipped = sigma.clipped;
  return band;
}

double band_area(const ConfidenceBand& band) {
  const double root_n = std::sqrt(static_cast<double>(band.population_size));
  return trapezoid(Eigen::VectorXd(2.0 * root_n * band.halfwidth), band.grid);
}

double band_area_literal(const ConfidenceBand& band) {
  return trapezoid(Eigen::VectorXd(2.0 * band.halfwidth), band.grid);
}

bool covers(const ConfidenceBand& band, const Eigen::VectorXd& truth) {
  if (truth.size() != band.center.size())
    throw config_error("covers: truth length != band length");
  for (int i = 0; i < band.center.size(); ++i)
    if (std::abs(truth[i] - band.center[i]) > band.halfwidth[i]) return false;
  return true;
}

}  // namespace fsurvey
