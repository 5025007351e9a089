#include "fsurvey/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fsurvey {

SamplingDesign SamplingDesign::srswor(int population_size, int sample_size) {
  SamplingDesign d;
  d.kind = Kind::Srswor;
  d.population_size = population_size;
  std::vector<int> all(static_cast<size_t>(population_size));
  std::iota(all.begin(), all.end(), 0);
  d.strata.push_back(std::move(all));
  d.sample_sizes.push_back(sample_size);
  d.validate();
  return d;
}

SamplingDesign SamplingDesign::stratified(std::vector<std::vector<int>> strata,
                                          std::vector<int> sample_sizes) {
  SamplingDesign d;
  d.kind = Kind::Stratified;
  d.population_size = 0;
  for (const auto& s : strata) d.population_size += static_cast<int>(s.size());
  d.strata = std::move(strata);
  d.sample_sizes = std::move(sample_sizes);
  d.validate();
  return d;
}

int SamplingDesign::total_sample_size() const {
  return std::accumulate(sample_sizes.begin(), sample_sizes.end(), 0);
}

void SamplingDesign::validate() const {
  if (population_size < 1) throw config_error("SamplingDesign: empty population");
  if (strata.empty() || strata.size() != sample_sizes.size())
    throw config_error("SamplingDesign: strata/sample_sizes mismatch");
  std::vector<char> seen(static_cast<size_t>(population_size), 0);
  for (size_t v = 0; v < strata.size(); ++v) {
    if (strata[v].empty()) throw config_error("SamplingDesign: empty stratum");
    const int nv = sample_sizes[v];
    if (nv < 1 || nv > static_cast<int>(strata[v].size()))
      throw config_error("SamplingDesign: stratum sample size out of range");
    for (int k : strata[v]) {
      if (k < 0 || k >= population_size || seen[static_cast<size_t>(k)])
        throw config_error("SamplingDesign: strata must partition the population");
      seen[static_cast<size_t>(k)] = 1;
    }
  }
  for (char c : seen)
    if (!c) throw config_error("SamplingDesign: strata must partition the population");
}

InclusionProbabilities::InclusionProbabilities(const SamplingDesign& design) {
  design.validate();
  stratum_of_.assign(static_cast<size_t>(design.population_size), -1);
  for (size_t v = 0; v < design.strata.size(); ++v) {
    const auto nv = static_cast<double>(design.sample_sizes[v]);
    const auto size = static_cast<double>(design.strata[v].size());
    stratum_sizes_.push_back(static_cast<int>(design.strata[v].size()));
    stratum_samples_.push_back(design.sample_sizes[v]);
    pi_by_stratum_.push_back(nv / size);
    pi2_within_.push_back(size >= 2.0 ? nv * (nv - 1.0) / (size * (size - 1.0)) : 0.0);
    for (int k : design.strata[v]) stratum_of_[static_cast<size_t>(k)] = static_cast<int>(v);
  }
}

double InclusionProbabilities::pi2(int k, int l) const {
  if (k == l) return pi(k);
  const int vk = stratum_of(k), vl = stratum_of(l);
  if (vk != vl) return pi(k) * pi(l);  // independent draws across strata
  return pi2_within_[static_cast<size_t>(vk)];
}

double InclusionProbabilities::delta(int k, int l) const {
  return pi2(k, l) - pi(k) * pi(l);
}

int InclusionProbabilities::sample_size() const {
  return std::accumulate(stratum_samples_.begin(), stratum_samples_.end(), 0);
}

namespace {

// SRSWOR within one unit list, appended to `out` (partial Fisher-Yates).
void srswor_into(const std::vector<int>& pool, int n, RngSequence& rng,
                 std::vector<int>& out) {
  std::vector<int> work(pool);
  const auto size = static_cast<uint64_t>(work.size());
  for (int i = 0; i < n; ++i) {
    const uint64_t j = static_cast<uint64_t>(i) + rng.next_below(size - static_cast<uint64_t>(i));
    std::swap(work[static_cast<size_t>(i)], work[static_cast<size_t>(j)]);
    out.push_back(work[static_cast<size_t>(i)]);
  }
}

}  // namespace

SampleDraw srswor_draw(int population_size, int sample_size, const RngStream& stream) {
  auto design = std::make_shared<SamplingDesign>(
      SamplingDesign::srswor(population_size, sample_size));
  RngSequence rng(stream);
  std::vector<int> units;
  units.reserve(static_cast<size_t>(sample_size));
  srswor_into(design->strata[0], sample_size, rng, units);
  std::sort(units.begin(), units.end());
  return SampleDraw{std::move(units), std::move(design)};
}

SampleDraw stratified_draw(const SamplingDesign& design, const RngStream& stream) {
  design.validate();
  RngSequence rng(stream);
  std::vector<int> units;
  units.reserve(static_cast<size_t>(design.total_sample_size()));
  for (size_t v = 0; v < design.strata.size(); ++v)
    srswor_into(design.strata[v], design.sample_sizes[v], rng, units);
  std::sort(units.begin(), units.end());
  return SampleDraw{std::move(units), std::make_shared<SamplingDesign>(design)};
}

InclusionProbabilities inclusion_probabilities(const SamplingDesign& design) {
  return InclusionProbabilities(design);
}

std::vector<int> stratify_by_total(const CurvePopulation& pop,
                                   const std::vector<double>& cut_probs) {
  for (size_t i = 0; i < cut_probs.size(); ++i) {
    if (!(cut_probs[i] > 0.0 && cut_probs[i] < 1.0))
      throw config_error("stratify_by_total: cut probabilities must lie in (0,1)");
    if (i > 0 && !(cut_probs[i] > cut_probs[i - 1]))
      throw config_error("stratify_by_total: cut probabilities must be strictly increasing");
  }
  const int n = pop.n_units();
  std::vector<double> totals(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k)
    totals[static_cast<size_t>(k)] = trapezoid(Eigen::VectorXd(pop.curves.row(k)), pop.grid);

  std::vector<double> cuts;
  cuts.reserve(cut_probs.size());
  for (double p : cut_probs) cuts.push_back(empirical_quantile(totals, p));

  const int n_strata = static_cast<int>(cut_probs.size()) + 1;
  std::vector<int> assignment(static_cast<size_t>(n));
  std::vector<int> counts(static_cast<size_t>(n_strata), 0);
  for (int k = 0; k < n; ++k) {
    int g = 0;
    while (g < n_strata - 1 && totals[static_cast<size_t>(k)] > cuts[static_cast<size_t>(g)]) ++g;
    assignment[static_cast<size_t>(k)] = g;
    ++counts[static_cast<size_t>(g)];
  }
  for (int g = 0; g < n_strata; ++g)
    if (counts[static_cast<size_t>(g)] == 0)
      throw config_error("stratify_by_total: stratum " + std::to_string(g + 1) +
                         " is empty (degenerate totals)");
  return assignment;
}

std::vector<std::vector<int>> strata_from_assignment(const std::vector<int>& assignment) {
  int n_strata = 0;
  for (int g : assignment) n_strata = std::max(n_strata, g + 1);
  std::vector<std::vector<int>> strata(static_cast<size_t>(n_strata));
  for (size_t k = 0; k < assignment.size(); ++k)
    strata[static_cast<size_t>(assignment[k])].push_back(static_cast<int>(k));
  return strata;
}

std::vector<double> stratum_dispersions(const CurvePopulation& pop,
                                        const std::vector<std::vector<int>>& strata) {
  std::vector<double> s2(strata.size(), 0.0);
  for (size_t v = 0; v < strata.size(); ++v) {
    const auto& units = strata[v];
    if (units.size() < 2) continue;  // a singleton stratum has zero dispersion
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(pop.grid.size());
    for (int k : units) mean += pop.curves.row(k).transpose();
    mean /= static_cast<double>(units.size());
    double acc = 0.0;
    for (int k : units) {
      const Eigen::VectorXd diff = pop.curves.row(k).transpose() - mean;
      acc += trapezoid(Eigen::VectorXd(diff.cwiseProduct(diff)), pop.grid);
    }
    s2[v] = acc / (static_cast<double>(units.size()) - 1.0);
  }
  return s2;
}

namespace {

double allocation_variance(const std::vector<std::vector<int>>& strata,
                           const std::vector<double>& s2, const std::vector<int>& n) {
  double v = 0.0;
  for (size_t i = 0; i < strata.size(); ++i) {
    const double size = static_cast<double>(strata[i].size());
    v += size * size * (1.0 / n[i] - 1.0 / size) * s2[i];
  }
  return v;
}

}  // namespace

std::vector<int> neyman_allocation(const CurvePopulation& pop,
                                   const std::vector<std::vector<int>>& strata, int n) {
  const int n_strata = static_cast<int>(strata.size());
  if (n < n_strata)
    throw config_error("neyman_allocation: n must be >= the number of strata");
  for (const auto& s : strata)
    if (s.empty()) throw config_error("neyman_allocation: empty stratum");

  const std::vector<double> s2 = stratum_dispersions(pop, strata);
  std::vector<double> weight(static_cast<size_t>(n_strata));
  double weight_sum = 0.0;
  for (int v = 0; v < n_strata; ++v) {
    weight[static_cast<size_t>(v)] =
        static_cast<double>(strata[static_cast<size_t>(v)].size()) * std::sqrt(s2[static_cast<size_t>(v)]);
    weight_sum += weight[static_cast<size_t>(v)];
  }
  if (weight_sum <= 0.0) {
    // No dispersion anywhere: allocate proportionally to stratum size.
    weight_sum = 0.0;
    for (int v = 0; v < n_strata; ++v) {
      weight[static_cast<size_t>(v)] = static_cast<double>(strata[static_cast<size_t>(v)].size());
      weight_sum += weight[static_cast<size_t>(v)];
    }
  }

  // Largest-remainder rounding of the proportional allocation.
  std::vector<int> alloc(static_cast<size_t>(n_strata));
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (int v = 0; v < n_strata; ++v) {
    const double exact = n * weight[static_cast<size_t>(v)] / weight_sum;
    alloc[static_cast<size_t>(v)] = static_cast<int>(std::floor(exact));
    assigned += alloc[static_cast<size_t>(v)];
    remainders.emplace_back(exact - std::floor(exact), v);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (int i = 0; i < n - assigned; ++i)
    ++alloc[static_cast<size_t>(remainders[static_cast<size_t>(i) % remainders.size()].second)];

  // Clamp to 1 <= n_v <= N_v, redistributing the slack.
  auto cap = [&](int v) { return static_cast<int>(strata[static_cast<size_t>(v)].size()); };
  for (int v = 0; v < n_strata; ++v)
    alloc[static_cast<size_t>(v)] = std::clamp(alloc[static_cast<size_t>(v)], 1, cap(v));
  int total = std::accumulate(alloc.begin(), alloc.end(), 0);
  while (total != n) {
    if (total < n) {
      int best = -1;
      double best_gain = -1.0;
      for (int v = 0; v < n_strata; ++v) {
        if (alloc[static_cast<size_t>(v)] >= cap(v)) continue;
        const double m = alloc[static_cast<size_t>(v)];
        const double gain = static_cast<double>(cap(v)) * cap(v) * s2[static_cast<size_t>(v)] / (m * (m + 1.0));
        if (gain > best_gain) { best_gain = gain; best = v; }
      }
      if (best < 0) throw config_error("neyman_allocation: n exceeds the population size");
      ++alloc[static_cast<size_t>(best)];
      ++total;
    } else {
      int best = -1;
      double best_cost = std::numeric_limits<double>::infinity();
      for (int v = 0; v < n_strata; ++v) {
        if (alloc[static_cast<size_t>(v)] <= 1) continue;
        const double m = alloc[static_cast<size_t>(v)];
        const double cost = static_cast<double>(cap(v)) * cap(v) * s2[static_cast<size_t>(v)] / (m * (m - 1.0));
        if (cost < best_cost) { best_cost = cost; best = v; }
      }
      if (best < 0) throw config_error("neyman_allocation: n below the number of strata");
      --alloc[static_cast<size_t>(best)];
      --total;
    }
  }

  // Single-unit exchange refinement. The variance is separable and convex in
  // the allocation, so a local optimum under one-unit moves is globally optimal.
  bool improved = true;
  while (improved) {
    improved = false;
    double base = allocation_variance(strata, s2, alloc);
    int best_from = -1, best_to = -1;
    double best_var = base;
    for (int from = 0; from < n_strata; ++from) {
      if (alloc[static_cast<size_t>(from)] <= 1) continue;
      for (int to = 0; to < n_strata; ++to) {
        if (to == from || alloc[static_cast<size_t>(to)] >= cap(to)) continue;
        --alloc[static_cast<size_t>(from)];
        ++alloc[static_cast<size_t>(to)];
        const double v = allocation_variance(strata, s2, alloc);
        ++alloc[static_cast<size_t>(from)];
        --alloc[static_cast<size_t>(to)];
        if (v < best_var - 1e-12 * std::max(1.0, std::abs(base))) {
          best_var = v;
          best_from = from;
          best_to = to;
        }
      }
    }
    if (best_from >= 0) {
      --alloc[static_cast<size_t>(best_from)];
      ++alloc[static_cast<size_t>(best_to)];
      improved = true;
    }
  }
  return alloc;
}

}  // namespace fsurvey
