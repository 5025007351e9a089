#pragma once

// Monte Carlo experiment driver: repeated sampling, estimator comparison
// (lin / cv / wcv / oracle_h / oracle_mu), loss summaries, coverage and
// band-area tables.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fsurvey/bands.hpp"
#include "fsurvey/bandwidth.hpp"
#include "fsurvey/design.hpp"
#include "fsurvey/estimate.hpp"
#include "fsurvey/population.hpp"
#include "fsurvey/smooth.hpp"

namespace fsurvey {

enum class Estimator { Lin, Cv, Wcv, OracleH, OracleMu };
inline constexpr std::array<Estimator, 5> kAllEstimators = {
    Estimator::Lin, Estimator::Cv, Estimator::Wcv, Estimator::OracleH,
    Estimator::OracleMu};

std::string estimator_name(Estimator e);
Estimator estimator_from_name(const std::string& name);

struct ExperimentConfig {
  // population
  int n_units = 2000;
  int grid_points = 100;
  double t_max = 1.0;
  std::vector<double> mode_sigmas = {115.0, 60.0, 35.0};
  std::string population_file;  // load instead of synthesizing
  std::string curves_file;      // tabulated mean + modes: columns t,mu,v1,v2,...

  // designs to run
  std::vector<std::string> designs = {"srswor", "stratified"};
  int sample_size = 200;
  std::vector<double> strata_cuts = {0.5, 0.85};

  // noise
  std::vector<std::string> noises = {"heteroscedastic", "ar3"};
  std::vector<double> deltas = {0.25};
  std::array<double, 3> ar_coeffs = {0.89, 0.3, -0.4};

  // smoothing and bandwidth search
  std::string kernel = "epanechnikov";
  int bandwidth_count = 20;
  double bandwidth_min = 0.0;  // 0 = 2 * grid spacing
  double bandwidth_max = 0.0;  // 0 = T / 4

  // confidence bands
  bool bands = true;
  double alpha = 0.05;
  int gp_draws = 2000;  // B

  // experiment
  int replicates = 200;  // M
  std::vector<std::string> estimators = {"lin", "cv", "wcv", "oracle_h", "oracle_mu"};
  uint64_t seed = 42;
  int workers = 0;  // 0 = OpenMP default
  std::string out_dir = "out";

  void validate() const;
  /// The full-size study layout: N=20000, n=1000, d=200, M=1000, B=10000,
  /// five strata, deltas 5% and 25%.
  void apply_paper_scale();
  static ExperimentConfig from_file(const std::string& path);

  Kernel kernel_enum() const;
  NoiseModel noise_model(const std::string& noise_kind, double delta) const;
};

struct EstimatorOutcome {
  bool ok = false;
  std::string error;
  double r = 0.0;
  double l = 0.0;
  double bandwidth = 0.0;  // 0 for lin / oracle_mu
  double area = 0.0;       // table convention: ∫ 2 c sigma_hat dt
  double area_literal = 0.0;
  double threshold = 0.0;
  double clipped_mass = 0.0;
  int covered = -1;  // 1 / 0; -1 when bands are disabled
};

struct ReplicateResult {
  int index = 0;
  bool failed = false;
  std::string error;
  std::array<std::optional<EstimatorOutcome>, 5> outcomes;  // by Estimator
};

struct EstimatorSummary {
  std::string estimator;
  int n = 0;         // replicates with a value
  int failures = 0;  // missing cells
  double r_mean = 0.0, r_q1 = 0.0, r_median = 0.0, r_q3 = 0.0;
  double l_mean = 0.0, l_q1 = 0.0, l_median = 0.0, l_q3 = 0.0;
  double coverage = -1.0;  // fraction of covering bands; -1 when disabled
  double area_mean = 0.0, area_q1 = 0.0, area_median = 0.0, area_q3 = 0.0;
};

struct SummaryTable {
  std::string noise;
  double delta = 0.0;
  std::string design;
  int failed_replicates = 0;
  std::vector<EstimatorSummary> rows;
};

/// Shared immutable inputs for one (population, design, noise) combination.
struct ExperimentContext {
  const CurvePopulation& pop;
  Eigen::VectorXd mean_truth;  // mu_N
  SamplingDesign design;
  InclusionProbabilities probs;
  NoiseModel noise;
  std::vector<SmootherWeightMatrix> smoothers;  // one per candidate h
  std::vector<Estimator> estimators;
  CvVariant cv_variant = CvVariant::Unweighted;
  bool bands = true;
  double alpha = 0.05;
  int gp_draws = 2000;
  uint64_t seed = 0;
};

/// One Monte Carlo replicate; deterministic per (seed, replicate_index).
ReplicateResult run_replicate(const ExperimentContext& ctx, int replicate_index);

SummaryTable summarize(const std::string& noise, double delta, const std::string& design,
                       const std::vector<Estimator>& estimators,
                       const std::vector<ReplicateResult>& results, bool bands);

struct ComboResult {
  SummaryTable summary;
  std::vector<ReplicateResult> replicates;
};

struct ExperimentResult {
  std::vector<ComboResult> combos;
  bool failed = false;  // some combo lost more than 10% of its replicates
  std::string failure_reason;
};

/// Run every (noise, delta, design) combination of the config, write the
/// summary CSVs, strata table and replicate JSON into config.out_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Pipeline pieces shared with the command-line tool.
CurvePopulation build_population(const ExperimentConfig& config);
SamplingDesign build_design(const ExperimentConfig& config, const std::string& kind,
                            const CurvePopulation& pop);
std::vector<SmootherWeightMatrix> build_smoothers(const ExperimentConfig& config,
                                                  const TimeGrid& grid);
SampleDraw draw_sample(const ExperimentContext& ctx, int replicate_index);

void write_summary_csv(const std::string& path, const SummaryTable& table);
void write_strata_csv(const std::string& path, const SamplingDesign& design);

// Stream-id namespaces (replicate i): sampling 2i, noise 2i+1, band
// simulation kGpStreamBase + 8i + estimator slot.
inline constexpr uint64_t kGpStreamBase = 1ull << 40;

}  // namespace fsurvey
