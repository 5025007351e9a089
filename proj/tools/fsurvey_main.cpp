// Command-line front end: population synthesis, stratification tables,
// single-sample estimation with confidence bands, cross-validation score
// tables and the full Monte Carlo experiment.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "fsurvey/harness.hpp"
#include "fsurvey/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitReplicateFailures = 4;

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  int workers = -1;
  bool paper_scale = false;
};

fsurvey::ExperimentConfig load_config(const CommonOptions& opts) {
  fsurvey::ExperimentConfig config;
  if (!opts.config_path.empty())
    config = fsurvey::ExperimentConfig::from_file(opts.config_path);
  if (opts.paper_scale) config.apply_paper_scale();
  if (opts.seed_set) config.seed = opts.seed;
  if (opts.workers >= 0) config.workers = opts.workers;
  if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
  config.validate();
  std::filesystem::create_directories(config.out_dir);
  return config;
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "configuration file (key = value with [sections])");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "master seed")->each([&](const std::string&) {
    opts.seed_set = true;
  });
  cmd->add_option("--workers", opts.workers, "worker threads (0 = library default)");
  cmd->add_flag("--paper-scale", opts.paper_scale,
                "full-size study: N=20000, n=1000, d=200, M=1000, B=10000");
}

int run_synth(const CommonOptions& opts, const std::string& file) {
  const auto config = load_config(opts);
  const fsurvey::CurvePopulation pop = fsurvey::build_population(config);
  const std::string path = file.empty() ? config.out_dir + "/population.fsrv" : file;
  fsurvey::write_matrix(path, fsurvey::GriddedMatrix{pop.grid, pop.curves});
  std::cout << "wrote " << pop.n_units() << " curves on " << pop.grid.size()
            << " grid points to " << path << "\n";
  return kExitOk;
}

int run_stratify(const CommonOptions& opts) {
  const auto config = load_config(opts);
  const fsurvey::CurvePopulation pop = fsurvey::build_population(config);
  const auto assignment = fsurvey::stratify_by_total(pop, config.strata_cuts);
  const auto strata = fsurvey::strata_from_assignment(assignment);
  const auto allocation = fsurvey::neyman_allocation(pop, strata, config.sample_size);
  const auto design = fsurvey::SamplingDesign::stratified(strata, allocation);

  fsurvey::write_strata_csv(config.out_dir + "/strata.csv", design);
  std::ofstream units(config.out_dir + "/strata_assignment.csv");
  units << "unit,stratum\n";
  for (size_t k = 0; k < assignment.size(); ++k)
    units << k << "," << assignment[k] + 1 << "\n";

  std::cout << "stratum,size,allocation\n";
  for (int v = 0; v < design.n_strata(); ++v)
    std::cout << v + 1 << "," << design.strata[static_cast<size_t>(v)].size() << ","
              << design.sample_sizes[static_cast<size_t>(v)] << "\n";
  return kExitOk;
}

// Shared single-sample pipeline for `estimate` and `cv`.
struct SamplePipeline {
  fsurvey::CurvePopulation pop;
  fsurvey::ExperimentContext ctx;
  fsurvey::SampleDraw draw;
  fsurvey::ObservationMatrix obs;
};

fsurvey::ExperimentContext make_context(const fsurvey::ExperimentConfig& config,
                                        const fsurvey::CurvePopulation& pop,
                                        const std::string& design_kind) {
  const auto design = fsurvey::build_design(config, design_kind, pop);
  return fsurvey::ExperimentContext{
      pop,
      fsurvey::population_mean(pop),
      design,
      fsurvey::InclusionProbabilities(design),
      config.noise_model(config.noises.front(), config.deltas.front()),
      fsurvey::build_smoothers(config, pop.grid),
      {},
      fsurvey::CvVariant::Unweighted,
      config.bands,
      config.alpha,
      config.gp_draws,
      config.seed};
}

int run_estimate(const CommonOptions& opts, const std::string& estimator_name_arg) {
  auto config = load_config(opts);
  const fsurvey::Estimator which = fsurvey::estimator_from_name(estimator_name_arg);
  const fsurvey::CurvePopulation pop = fsurvey::build_population(config);
  auto ctx = make_context(config, pop, config.designs.front());
  ctx.estimators = {which};

  const fsurvey::ReplicateResult result = fsurvey::run_replicate(ctx, 0);
  const auto& cell = result.outcomes[static_cast<size_t>(static_cast<int>(which))];
  if (!cell || !cell->ok) {
    std::cerr << "estimation failed: " << (cell ? cell->error : "no outcome") << "\n";
    return kExitNumerical;
  }

  // Re-run the winning estimator to emit the curve and band files.
  const auto draw = fsurvey::draw_sample(ctx, 0);
  const auto obs = fsurvey::observe(pop, draw.units, ctx.noise, {config.seed, 1});
  Eigen::MatrixXd rows;
  if (which == fsurvey::Estimator::Lin) {
    rows = obs.values;
  } else if (which == fsurvey::Estimator::OracleMu) {
    rows.resize(draw.size(), pop.grid.size());
    for (int r = 0; r < draw.size(); ++r)
      rows.row(r) = pop.curves.row(draw.units[static_cast<size_t>(r)]);
  } else {
    const auto smoother = fsurvey::local_linear_weights(pop.grid, cell->bandwidth,
                                                        config.kernel_enum());
    rows = fsurvey::smooth_rows(obs.values, smoother);
  }
  auto mean = fsurvey::ht_mean(rows, pop.grid, draw, ctx.probs);
  mean.method = estimator_name_arg;
  mean.bandwidth = cell->bandwidth;
  fsurvey::write_curve_csv(config.out_dir + "/mean_" + estimator_name_arg + ".csv",
                           mean.grid, mean.values);

  nlohmann::json summary;
  summary["estimator"] = estimator_name_arg;
  summary["h"] = cell->bandwidth;
  summary["r_loss"] = cell->r;
  summary["l_loss"] = cell->l;
  if (config.bands) {
    const auto cov = fsurvey::ht_covariance(rows, pop.grid, draw, ctx.probs);
    const fsurvey::RngStream gp_stream{config.seed, fsurvey::kGpStreamBase +
                                                        static_cast<uint64_t>(static_cast<int>(which))};
    const auto band = fsurvey::build_band(mean, cov, config.alpha, config.gp_draws, gp_stream);
    fsurvey::write_band_csv(config.out_dir + "/band_" + estimator_name_arg + ".csv", band);
    summary["c"] = band.threshold;
    summary["alpha"] = config.alpha;
    summary["gp_draws"] = band.n_draws;
    summary["area"] = fsurvey::band_area(band);
    summary["area_literal"] = fsurvey::band_area_literal(band);
    summary["clipped_mass"] = band.psd.clipped_mass;
    summary["sigma_clipped"] = band.sigma_clipped;
  }
  std::ofstream json_out(config.out_dir + "/estimate.json");
  json_out << summary.dump(1) << "\n";
  std::cout << summary.dump(1) << "\n";
  return kExitOk;
}

int run_cv(const CommonOptions& opts, const std::string& variant) {
  auto config = load_config(opts);
  const fsurvey::CurvePopulation pop = fsurvey::build_population(config);
  auto ctx = make_context(config, pop, config.designs.front());
  const auto draw = fsurvey::draw_sample(ctx, 0);
  const auto obs = fsurvey::observe(pop, draw.units, ctx.noise, {config.seed, 1});

  auto score_table = [&](fsurvey::CvVariant v) {
    const fsurvey::CvWeights weights(v, draw, ctx.probs);
    const auto selection = fsurvey::select_bandwidth(ctx.smoothers, obs, weights);
    return selection;
  };

  nlohmann::json summary;
  if (variant == "wcv" || variant == "both") {
    const auto sel = score_table(fsurvey::CvVariant::StratifiedRescaled);
    fsurvey::write_scores_csv(config.out_dir + "/cv_scores_wcv.csv", sel.scores);
    summary["h_wcv"] = sel.bandwidth;
  }
  if (variant == "cv" || variant == "both") {
    const auto sel = score_table(fsurvey::CvVariant::Unweighted);
    fsurvey::write_scores_csv(config.out_dir + "/cv_scores_cv.csv", sel.scores);
    summary["h_cv"] = sel.bandwidth;
  }
  if (summary.empty())
    throw fsurvey::config_error("cv: --variant must be wcv, cv or both");
  std::ofstream json_out(config.out_dir + "/cv.json");
  json_out << summary.dump(1) << "\n";
  std::cout << summary.dump(1) << "\n";
  return kExitOk;
}

int run_full_experiment(const CommonOptions& opts) {
  const auto config = load_config(opts);
  const fsurvey::ExperimentResult result = fsurvey::run_experiment(config);
  for (const auto& combo : result.combos) {
    std::cout << combo.summary.noise << " delta=" << combo.summary.delta << " "
              << combo.summary.design << ": ";
    for (const auto& row : combo.summary.rows) {
      std::cout << row.estimator << " R=" << row.r_mean;
      if (row.coverage >= 0.0) std::cout << " cov=" << row.coverage;
      std::cout << "  ";
    }
    std::cout << "\n";
  }
  if (result.failed) {
    std::cerr << "experiment failed: " << result.failure_reason << "\n";
    return kExitReplicateFailures;
  }
  std::cout << "outputs written to " << config.out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"design-based mean-curve estimation with simultaneous confidence bands"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string synth_file, estimator = "wcv", cv_variant = "both";

  auto* synth = app.add_subcommand("synth", "synthesize a population and write it to a file");
  add_common(synth, opts);
  synth->add_option("--file", synth_file, "output path (.csv or binary)");

  auto* stratify = app.add_subcommand("stratify", "stratum sizes and Neyman-like allocation");
  add_common(stratify, opts);

  auto* estimate = app.add_subcommand("estimate", "one sample: mean curve and confidence band");
  add_common(estimate, opts);
  estimate->add_option("--estimator", estimator, "lin | cv | wcv | oracle_h | oracle_mu");

  auto* cv = app.add_subcommand("cv", "cross-validation score table for one sample");
  add_common(cv, opts);
  cv->add_option("--variant", cv_variant, "wcv | cv | both");

  auto* experiment = app.add_subcommand("experiment", "full Monte Carlo study");
  add_common(experiment, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(opts, synth_file);
    if (stratify->parsed()) return run_stratify(opts);
    if (estimate->parsed()) return run_estimate(opts, estimator);
    if (cv->parsed()) return run_cv(opts, cv_variant);
    if (experiment->parsed()) return run_full_experiment(opts);
  } catch (const fsurvey::config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fsurvey::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fsurvey::design_violation& e) {
    std::cerr << "design violation: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
