#include "fsurvey/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fsurvey/io.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fsurvey {

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::Lin: return "lin";
    case Estimator::Cv: return "cv";
    case Estimator::Wcv: return "wcv";
    case Estimator::OracleH: return "oracle_h";
    case Estimator::OracleMu: return "oracle_mu";
  }
  return "?";
}

Estimator estimator_from_name(const std::string& name) {
  for (Estimator e : kAllEstimators)
    if (estimator_name(e) == name) return e;
  throw config_error("unknown estimator: " + name +
                     " (expected lin, cv, wcv, oracle_h or oracle_mu)");
}

void ExperimentConfig::validate() const {
  if (replicates < 1) throw config_error("config: replicates must be >= 1");
  if (sample_size < 2) throw config_error("config: sample_size must be >= 2");
  if (grid_points < 2) throw config_error("config: grid_points must be >= 2");
  if (!(t_max > 0.0)) throw config_error("config: t_max must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("config: alpha must be in (0,1)");
  if (gp_draws < 1) throw config_error("config: gp_draws must be >= 1");
  if (bandwidth_count < 1) throw config_error("config: bandwidth_count must be >= 1");
  if (estimators.empty()) throw config_error("config: estimator list is empty");
  for (const auto& name : estimators) estimator_from_name(name);
  for (const auto& kind : designs)
    if (kind != "srswor" && kind != "stratified")
      throw config_error("config: unknown design kind: " + kind);
  if (designs.empty()) throw config_error("config: no designs requested");
  for (const auto& kind : noises)
    if (kind != "heteroscedastic" && kind != "ar3")
      throw config_error("config: unknown noise kind: " + kind);
  if (noises.empty()) throw config_error("config: no noise models requested");
  if (deltas.empty()) throw config_error("config: no noise levels requested");
  for (double d : deltas)
    if (!(d >= 0.0)) throw config_error("config: deltas must be >= 0");
  kernel_enum();
}

void ExperimentConfig::apply_paper_scale() {
  n_units = 20000;
  grid_points = 200;
  sample_size = 1000;
  strata_cuts = {0.5, 0.7, 0.85, 0.95};
  deltas = {0.05, 0.25};
  replicates = 1000;
  gp_draws = 10000;
}

Kernel ExperimentConfig::kernel_enum() const {
  if (kernel == "epanechnikov") return Kernel::Epanechnikov;
  if (kernel == "triangular") return Kernel::Triangular;
  if (kernel == "uniform") return Kernel::Uniform;
  throw config_error("config: unknown kernel: " + kernel);
}

NoiseModel ExperimentConfig::noise_model(const std::string& noise_kind,
                                         double delta) const {
  NoiseModel noise;
  noise.kind = noise_kind == "ar3" ? NoiseModel::Kind::Ar3
                                   : NoiseModel::Kind::Heteroscedastic;
  noise.ar_coeffs = ar_coeffs;
  noise.delta = delta;
  noise.validate();
  return noise;
}

namespace {

// --- key = value config files with [section] headers ---------------------

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

using ConfigMap = std::map<std::string, std::string>;  // "section.key" -> value

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  ConfigMap map;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error(path + ":" + std::to_string(line_no) + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw config_error(path + ":" + std::to_string(line_no) + ": empty key");
    map[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
  }
  return map;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class ConfigReader {
 public:
  explicit ConfigReader(ConfigMap map) : map_(std::move(map)) {}

  void get(const std::string& key, int& into) {
    if (auto v = take(key)) into = std::stoi(*v);
  }
  void get(const std::string& key, double& into) {
    if (auto v = take(key)) into = std::stod(*v);
  }
  void get(const std::string& key, uint64_t& into) {
    if (auto v = take(key)) into = std::stoull(*v);
  }
  void get(const std::string& key, bool& into) {
    if (auto v = take(key)) {
      if (*v == "true" || *v == "1") into = true;
      else if (*v == "false" || *v == "0") into = false;
      else throw config_error("config: boolean expected for " + key);
    }
  }
  void get(const std::string& key, std::string& into) {
    if (auto v = take(key)) into = *v;
  }
  void get(const std::string& key, std::vector<std::string>& into) {
    if (auto v = take(key)) into = split_list(*v);
  }
  void get(const std::string& key, std::vector<double>& into) {
    if (auto v = take(key)) {
      into.clear();
      for (const auto& item : split_list(*v)) into.push_back(std::stod(item));
    }
  }
  void get(const std::string& key, std::array<double, 3>& into) {
    if (auto v = take(key)) {
      const auto items = split_list(*v);
      if (items.size() != 3) throw config_error("config: " + key + " needs 3 values");
      for (int i = 0; i < 3; ++i) into[static_cast<size_t>(i)] = std::stod(items[static_cast<size_t>(i)]);
    }
  }

  void finish() const {
    if (!map_.empty()) throw config_error("config: unknown key: " + map_.begin()->first);
  }

 private:
  std::optional<std::string> take(const std::string& key) {
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    std::string value = it->second;
    map_.erase(it);
    return value;
  }

  ConfigMap map_;
};

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  ConfigReader reader(parse_config_file(path));
  ExperimentConfig c;
  reader.get("population.units", c.n_units);
  reader.get("population.grid_points", c.grid_points);
  reader.get("population.t_max", c.t_max);
  reader.get("population.sigmas", c.mode_sigmas);
  reader.get("population.file", c.population_file);
  reader.get("population.curves_file", c.curves_file);
  reader.get("design.kinds", c.designs);
  reader.get("design.sample_size", c.sample_size);
  reader.get("design.cuts", c.strata_cuts);
  reader.get("noise.kinds", c.noises);
  reader.get("noise.deltas", c.deltas);
  reader.get("noise.ar_coeffs", c.ar_coeffs);
  reader.get("smooth.kernel", c.kernel);
  reader.get("bandwidth.count", c.bandwidth_count);
  reader.get("bandwidth.min", c.bandwidth_min);
  reader.get("bandwidth.max", c.bandwidth_max);
  reader.get("bands.enabled", c.bands);
  reader.get("bands.alpha", c.alpha);
  reader.get("bands.draws", c.gp_draws);
  reader.get("experiment.replicates", c.replicates);
  reader.get("experiment.estimators", c.estimators);
  reader.get("experiment.seed", c.seed);
  reader.get("experiment.workers", c.workers);
  reader.get("experiment.out", c.out_dir);
  reader.finish();
  c.validate();
  return c;
}

namespace {

// Tabulated curves: CSV with header t,mu,v1,v2,... The basis columns must be
// orthonormal under the trapezoid inner product (validated downstream).
PopulationConfig population_from_curve_table(const ExperimentConfig& config) {
  std::ifstream in(config.curves_file);
  if (!in) throw config_error("cannot open curves file: " + config.curves_file);
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 4) != "t,mu")
    throw config_error("curves file must start with header t,mu,v1,...");
  std::vector<std::vector<double>> columns;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      if (columns.size() <= col) columns.emplace_back();
      columns[col].push_back(std::stod(cell));
      ++col;
    }
  }
  if (columns.size() < 2) throw config_error("curves file needs at least t and mu columns");
  for (const auto& c : columns)
    if (c.size() != columns[0].size()) throw config_error("ragged curves file");

  PopulationConfig pop_config;
  pop_config.n_units = config.n_units;
  pop_config.grid = TimeGrid(columns[0]);
  pop_config.mean_curve =
      Eigen::Map<const Eigen::VectorXd>(columns[1].data(), static_cast<long>(columns[1].size()));
  const size_t n_modes = columns.size() - 2;
  if (config.mode_sigmas.size() != n_modes)
    throw config_error("config: sigmas must list one value per basis column");
  for (size_t l = 0; l < n_modes; ++l) {
    ModeSpec mode;
    mode.values = Eigen::Map<const Eigen::VectorXd>(columns[l + 2].data(),
                                                    static_cast<long>(columns[l + 2].size()));
    mode.variance = config.mode_sigmas[l] * config.mode_sigmas[l];
    pop_config.modes.push_back(std::move(mode));
  }
  pop_config.seed = config.seed;
  return pop_config;
}

}  // namespace

CurvePopulation build_population(const ExperimentConfig& config) {
  if (!config.population_file.empty()) {
    GriddedMatrix loaded = read_matrix(config.population_file);
    if (loaded.values.rows() < 2)
      throw config_error("population file has fewer than 2 units");
    return CurvePopulation{loaded.grid, std::move(loaded.values)};
  }
  if (!config.curves_file.empty())
    return synthesize_population(population_from_curve_table(config));
  const TimeGrid grid = TimeGrid::uniform(config.grid_points, config.t_max);
  PopulationConfig pop_config = default_population_config(config.n_units, grid, config.seed);
  if (!config.mode_sigmas.empty()) {
    if (config.mode_sigmas.size() != pop_config.modes.size())
      throw config_error("config: sigmas must list one value per mode");
    for (size_t l = 0; l < pop_config.modes.size(); ++l)
      pop_config.modes[l].variance = config.mode_sigmas[l] * config.mode_sigmas[l];
  }
  return synthesize_population(pop_config);
}

SamplingDesign build_design(const ExperimentConfig& config, const std::string& kind,
                            const CurvePopulation& pop) {
  if (kind == "srswor")
    return SamplingDesign::srswor(pop.n_units(), config.sample_size);
  if (kind != "stratified") throw config_error("unknown design kind: " + kind);
  const auto assignment = stratify_by_total(pop, config.strata_cuts);
  const auto strata = strata_from_assignment(assignment);
  const auto allocation = neyman_allocation(pop, strata, config.sample_size);
  return SamplingDesign::stratified(strata, allocation);
}

std::vector<SmootherWeightMatrix> build_smoothers(const ExperimentConfig& config,
                                                  const TimeGrid& grid) {
  BandwidthGrid candidates = default_bandwidth_grid(grid, config.bandwidth_count);
  if (config.bandwidth_min > 0.0 || config.bandwidth_max > 0.0) {
    const double lo = config.bandwidth_min > 0.0 ? config.bandwidth_min
                                                 : candidates.values.front();
    const double hi = config.bandwidth_max > 0.0 ? config.bandwidth_max
                                                 : candidates.values.back();
    if (!(lo <= hi)) throw config_error("config: bandwidth_min > bandwidth_max");
    candidates.values.clear();
    if (config.bandwidth_count == 1 || lo == hi) {
      candidates.values.push_back(lo);
    } else {
      for (int i = 0; i < config.bandwidth_count; ++i)
        candidates.values.push_back(
            std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) *
                                        static_cast<double>(i) /
                                        (config.bandwidth_count - 1)));
    }
    candidates.validate();
  }
  std::vector<SmootherWeightMatrix> smoothers;
  smoothers.reserve(candidates.values.size());
  for (double h : candidates.values)
    smoothers.push_back(local_linear_weights(grid, h, config.kernel_enum()));
  return smoothers;
}

SampleDraw draw_sample(const ExperimentContext& ctx, int replicate_index) {
  const RngStream stream{ctx.seed, 2ull * static_cast<uint64_t>(replicate_index)};
  if (ctx.design.kind == SamplingDesign::Kind::Srswor)
    return srswor_draw(ctx.design.population_size, ctx.design.sample_sizes[0], stream);
  return stratified_draw(ctx.design, stream);
}

namespace {

int slot(Estimator e) { return static_cast<int>(e); }

bool wants(const ExperimentContext& ctx, Estimator e) {
  return std::find(ctx.estimators.begin(), ctx.estimators.end(), e) != ctx.estimators.end();
}

// Mean estimate + band + losses for one candidate set of reconstructed rows.
EstimatorOutcome finish_estimator(const ExperimentContext& ctx, int replicate_index,
                                  Estimator which, const Eigen::MatrixXd& rows,
                                  const SampleDraw& draw, const MeanEstimate& mean,
                                  const MeanEstimate& oracle, double bandwidth) {
  EstimatorOutcome out;
  out.bandwidth = bandwidth;
  out.r = r_loss(mean, ctx.mean_truth);
  out.l = which == Estimator::OracleMu ? 0.0 : oracle_loss(mean, oracle);
  if (ctx.bands) {
    const CovarianceEstimate cov = ht_covariance(rows, ctx.pop.grid, draw, ctx.probs);
    const RngStream gp_stream{ctx.seed, kGpStreamBase +
                                            8ull * static_cast<uint64_t>(replicate_index) +
                                            static_cast<uint64_t>(slot(which))};
    const ConfidenceBand band = build_band(mean, cov, ctx.alpha, ctx.gp_draws, gp_stream);
    out.area = band_area(band);
    out.area_literal = band_area_literal(band);
    out.threshold = band.threshold;
    out.clipped_mass = band.psd.clipped_mass;
    out.covered = covers(band, ctx.mean_truth) ? 1 : 0;
  }
  out.ok = true;
  return out;
}

}  // namespace

ReplicateResult run_replicate(const ExperimentContext& ctx, int replicate_index) {
  ReplicateResult result;
  result.index = replicate_index;

  const SampleDraw draw = draw_sample(ctx, replicate_index);
  const RngStream noise_stream{ctx.seed, 2ull * static_cast<uint64_t>(replicate_index) + 1};
  const ObservationMatrix obs = observe(ctx.pop, draw.units, ctx.noise, noise_stream);
  const int n = draw.size();
  const int d = ctx.pop.grid.size();

  Eigen::MatrixXd true_rows(n, d);
  for (int r = 0; r < n; ++r)
    true_rows.row(r) = ctx.pop.curves.row(draw.units[static_cast<size_t>(r)]);
  MeanEstimate oracle = ht_mean(true_rows, ctx.pop.grid, draw, ctx.probs);
  oracle.method = "oracle_mu";

  const bool needs_search = wants(ctx, Estimator::Cv) || wants(ctx, Estimator::Wcv) ||
                            wants(ctx, Estimator::OracleH);

  // One pass over the candidate bandwidths serves every criterion. Weight
  // construction can fail for one criterion only (e.g. a stratum sampled
  // once); that poisons the corresponding estimator, not the replicate.
  std::vector<Eigen::MatrixXd> smoothed_by_h;
  std::vector<double> cv_scores, wcv_scores, l_scores;
  std::string cv_error, wcv_error;
  if (needs_search) {
    std::optional<CvWeights> cv_weights, wcv_weights;
    if (wants(ctx, Estimator::Cv)) {
      try {
        cv_weights.emplace(ctx.cv_variant, draw, ctx.probs);
      } catch (const std::exception& e) {
        cv_error = e.what();
      }
    }
    if (wants(ctx, Estimator::Wcv)) {
      try {
        wcv_weights.emplace(CvVariant::StratifiedRescaled, draw, ctx.probs);
      } catch (const std::exception& e) {
        wcv_error = e.what();
      }
    }
    smoothed_by_h.reserve(ctx.smoothers.size());
    for (const auto& smoother : ctx.smoothers) {
      smoothed_by_h.push_back(smooth_rows(obs.values, smoother));
      const Eigen::MatrixXd& smoothed = smoothed_by_h.back();
      if (cv_weights) cv_scores.push_back(wcv_score(smoothed, obs, *cv_weights));
      if (wcv_weights) wcv_scores.push_back(wcv_score(smoothed, obs, *wcv_weights));
      if (wants(ctx, Estimator::OracleH)) {
        MeanEstimate mean_h = ht_mean(smoothed, ctx.pop.grid, draw, ctx.probs);
        l_scores.push_back(oracle_loss(mean_h, oracle));
      }
    }
  }

  auto argmin = [&](const std::vector<double>& scores, const std::string& error) {
    if (!error.empty()) throw numerical_error(error);
    int best = -1;
    double best_value = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < scores.size(); ++i)
      if (std::isfinite(scores[i]) && scores[i] < best_value) {
        best_value = scores[i];
        best = static_cast<int>(i);
      }
    if (best < 0) throw numerical_error("bandwidth search: no finite score");
    return best;
  };

  for (Estimator which : ctx.estimators) {
    try {
      const Eigen::MatrixXd* rows = nullptr;
      double bandwidth = 0.0;
      int pick = -1;
      switch (which) {
        case Estimator::Lin:
          rows = &obs.values;  // evaluation on the observation grid
          break;
        case Estimator::Cv:
          pick = argmin(cv_scores, cv_error);
          break;
        case Estimator::Wcv:
          pick = argmin(wcv_scores, wcv_error);
          break;
        case Estimator::OracleH:
          pick = argmin(l_scores, {});
          break;
        case Estimator::OracleMu:
          rows = &true_rows;
          break;
      }
      if (pick >= 0) {
        bandwidth = ctx.smoothers[static_cast<size_t>(pick)].bandwidth;
        rows = &smoothed_by_h[static_cast<size_t>(pick)];
      }
      MeanEstimate mean = which == Estimator::OracleMu
                              ? oracle
                              : ht_mean(*rows, ctx.pop.grid, draw, ctx.probs);
      mean.method = estimator_name(which);
      mean.bandwidth = bandwidth;
      result.outcomes[static_cast<size_t>(slot(which))] = finish_estimator(
          ctx, replicate_index, which, *rows, draw, mean, oracle, bandwidth);
    } catch (const std::exception& e) {
      EstimatorOutcome failed;
      failed.ok = false;
      failed.error = e.what();
      result.outcomes[static_cast<size_t>(slot(which))] = failed;
    }
  }
  return result;
}

namespace {

struct Quartiles {
  double mean = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0;
};

Quartiles quartiles(const std::vector<double>& values) {
  Quartiles q;
  if (values.empty()) return q;
  double total = 0.0;
  for (double v : values) total += v;
  q.mean = total / static_cast<double>(values.size());
  q.q1 = empirical_quantile(values, 0.25);
  q.median = empirical_quantile(values, 0.5);
  q.q3 = empirical_quantile(values, 0.75);
  return q;
}

}  // namespace

SummaryTable summarize(const std::string& noise, double delta, const std::string& design,
                       const std::vector<Estimator>& estimators,
                       const std::vector<ReplicateResult>& results, bool bands) {
  if (results.empty()) throw config_error("summarize: no replicates");
  SummaryTable table;
  table.noise = noise;
  table.delta = delta;
  table.design = design;
  for (const auto& rep : results) table.failed_replicates += rep.failed ? 1 : 0;

  for (Estimator which : estimators) {
    EstimatorSummary row;
    row.estimator = estimator_name(which);
    std::vector<double> r_values, l_values, areas;
    int covered = 0, with_band = 0;
    for (const auto& rep : results) {
      const auto& cell = rep.outcomes[static_cast<size_t>(static_cast<int>(which))];
      if (!cell || !cell->ok) {
        ++row.failures;
        continue;
      }
      ++row.n;
      r_values.push_back(cell->r);
      l_values.push_back(cell->l);
      if (bands) {
        areas.push_back(cell->area);
        ++with_band;
        covered += cell->covered == 1 ? 1 : 0;
      }
    }
    const Quartiles r = quartiles(r_values);
    row.r_mean = r.mean; row.r_q1 = r.q1; row.r_median = r.median; row.r_q3 = r.q3;
    const Quartiles l = quartiles(l_values);
    row.l_mean = l.mean; row.l_q1 = l.q1; row.l_median = l.median; row.l_q3 = l.q3;
    if (bands && with_band > 0) {
      row.coverage = static_cast<double>(covered) / static_cast<double>(with_band);
      const Quartiles a = quartiles(areas);
      row.area_mean = a.mean; row.area_q1 = a.q1; row.area_median = a.median; row.area_q3 = a.q3;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_summary_csv(const std::string& path, const SummaryTable& table) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open for writing: " + path);
  out << "estimator,n,failures,r_mean,r_q1,r_median,r_q3,"
         "l_mean,l_q1,l_median,l_q3,coverage,area_mean,area_q1,area_median,area_q3\n";
  for (const auto& row : table.rows) {
    out << row.estimator << "," << row.n << "," << row.failures << ","
        << format_double(row.r_mean) << "," << format_double(row.r_q1) << ","
        << format_double(row.r_median) << "," << format_double(row.r_q3) << ","
        << format_double(row.l_mean) << "," << format_double(row.l_q1) << ","
        << format_double(row.l_median) << "," << format_double(row.l_q3) << ","
        << format_double(row.coverage) << "," << format_double(row.area_mean) << ","
        << format_double(row.area_q1) << "," << format_double(row.area_median) << ","
        << format_double(row.area_q3) << "\n";
  }
}

void write_strata_csv(const std::string& path, const SamplingDesign& design) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open for writing: " + path);
  out << "stratum,size,allocation\n";
  for (int v = 0; v < design.n_strata(); ++v)
    out << (v + 1) << "," << design.strata[static_cast<size_t>(v)].size() << ","
        << design.sample_sizes[static_cast<size_t>(v)] << "\n";
}

namespace {

std::string delta_label(double delta) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", delta);
  std::string label(buf);
  for (char& c : label)
    if (c == '.') c = 'p';
  return label;
}

std::string noise_label(const std::string& noise) {
  return noise == "heteroscedastic" ? "het" : noise;
}

nlohmann::json outcome_json(const EstimatorOutcome& cell, bool bands) {
  nlohmann::json j;
  j["ok"] = cell.ok;
  if (!cell.ok) {
    j["error"] = cell.error;
    return j;
  }
  j["r"] = cell.r;
  j["l"] = cell.l;
  j["h"] = cell.bandwidth;
  if (bands) {
    j["area"] = cell.area;
    j["area_literal"] = cell.area_literal;
    j["c"] = cell.threshold;
    j["covered"] = cell.covered == 1;
    j["clipped_mass"] = cell.clipped_mass;
  }
  return j;
}

nlohmann::json summary_json(const SummaryTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json j;
    j["estimator"] = row.estimator;
    j["n"] = row.n;
    j["failures"] = row.failures;
    j["r"] = {{"mean", row.r_mean}, {"q1", row.r_q1}, {"median", row.r_median}, {"q3", row.r_q3}};
    j["l"] = {{"mean", row.l_mean}, {"q1", row.l_q1}, {"median", row.l_median}, {"q3", row.l_q3}};
    if (row.coverage >= 0.0) {
      j["coverage"] = row.coverage;
      j["area"] = {{"mean", row.area_mean}, {"q1", row.area_q1},
                   {"median", row.area_median}, {"q3", row.area_q3}};
    }
    rows.push_back(std::move(j));
  }
  return rows;
}

nlohmann::json config_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["population"] = {{"units", c.n_units}, {"grid_points", c.grid_points},
                     {"t_max", c.t_max},   {"sigmas", c.mode_sigmas},
                     {"file", c.population_file}, {"curves_file", c.curves_file}};
  j["design"] = {{"kinds", c.designs}, {"sample_size", c.sample_size}, {"cuts", c.strata_cuts}};
  j["noise"] = {{"kinds", c.noises}, {"deltas", c.deltas}, {"ar_coeffs", c.ar_coeffs}};
  j["smooth"] = {{"kernel", c.kernel}};
  j["bandwidth"] = {{"count", c.bandwidth_count}, {"min", c.bandwidth_min}, {"max", c.bandwidth_max}};
  j["bands"] = {{"enabled", c.bands}, {"alpha", c.alpha}, {"draws", c.gp_draws}};
  j["experiment"] = {{"replicates", c.replicates}, {"estimators", c.estimators},
                     {"seed", c.seed}, {"workers", c.workers}, {"out", c.out_dir}};
  return j;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);

#ifdef _OPENMP
  if (config.workers > 0) omp_set_num_threads(config.workers);
#endif

  const CurvePopulation pop = build_population(config);
  const Eigen::VectorXd mean_truth = population_mean(pop);
  const auto smoothers = build_smoothers(config, pop.grid);

  std::vector<Estimator> estimators;
  for (const auto& name : config.estimators) estimators.push_back(estimator_from_name(name));

  ExperimentResult result;
  nlohmann::json combos_json = nlohmann::json::array();

  for (const auto& design_kind : config.designs) {
    const SamplingDesign design = build_design(config, design_kind, pop);
    if (design.kind == SamplingDesign::Kind::Stratified)
      write_strata_csv(config.out_dir + "/strata.csv", design);
    const InclusionProbabilities probs(design);

    for (const auto& noise_kind : config.noises) {
      for (double delta : config.deltas) {
        ExperimentContext ctx{pop,
                              mean_truth,
                              design,
                              probs,
                              config.noise_model(noise_kind, delta),
                              smoothers,
                              estimators,
                              CvVariant::Unweighted,
                              config.bands,
                              config.alpha,
                              config.gp_draws,
                              config.seed};

        std::vector<ReplicateResult> replicates(static_cast<size_t>(config.replicates));
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < config.replicates; ++i) {
          try {
            replicates[static_cast<size_t>(i)] = run_replicate(ctx, i);
          } catch (const std::exception& e) {
            ReplicateResult failed;
            failed.index = i;
            failed.failed = true;
            failed.error = e.what();
            replicates[static_cast<size_t>(i)] = std::move(failed);
          }
        }

        SummaryTable summary = summarize(noise_kind, delta, design_kind, estimators,
                                         replicates, config.bands);
        write_summary_csv(config.out_dir + "/summary_" + noise_label(noise_kind) +
                              "_delta" + delta_label(delta) + "_" + design_kind + ".csv",
                          summary);

        if (summary.failed_replicates * 10 > config.replicates) {
          result.failed = true;
          result.failure_reason = "more than 10% replicate failures (" +
                                  noise_label(noise_kind) + ", delta " +
                                  delta_label(delta) + ", " + design_kind + ")";
        }

        nlohmann::json combo;
        combo["noise"] = noise_kind;
        combo["delta"] = delta;
        combo["design"] = design_kind;
        combo["failed_replicates"] = summary.failed_replicates;
        combo["summary"] = summary_json(summary);
        nlohmann::json reps = nlohmann::json::array();
        for (const auto& rep : replicates) {
          nlohmann::json r;
          r["index"] = rep.index;
          if (rep.failed) {
            r["failed"] = true;
            r["error"] = rep.error;
          } else {
            nlohmann::json cells;
            for (Estimator which : estimators) {
              const auto& cell = rep.outcomes[static_cast<size_t>(static_cast<int>(which))];
              if (cell) cells[estimator_name(which)] = outcome_json(*cell, config.bands);
            }
            r["estimators"] = std::move(cells);
          }
          reps.push_back(std::move(r));
        }
        combo["replicates"] = std::move(reps);
        combos_json.push_back(std::move(combo));

        result.combos.push_back(ComboResult{std::move(summary), std::move(replicates)});
      }
    }
  }

  nlohmann::json root;
  root["config"] = config_json(config);
  root["combos"] = std::move(combos_json);
  root["failed"] = result.failed;
  std::ofstream json_out(config.out_dir + "/replicates.json");
  if (!json_out) throw config_error("cannot open for writing: " + config.out_dir + "/replicates.json");
  json_out << root.dump(1) << "\n";

  return result;
}

}  // namespace fsurvey
