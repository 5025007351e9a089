#pragma once

// Sampling designs (SRSWOR and stratified SRSWOR), inclusion probabilities,
// membership-indicator covariances and Neyman-like allocation.

#include <memory>
#include <vector>

#include "fsurvey/numerics.hpp"
#include "fsurvey/population.hpp"

namespace fsurvey {

/// Fixed-size sampling design. SRSWOR is represented as a single stratum;
/// stratified designs carry one unit list and sample size per stratum.
struct SamplingDesign {
  enum class Kind { Srswor, Stratified };

  Kind kind = Kind::Srswor;
  int population_size = 0;
  std::vector<std::vector<int>> strata;  // partition of {0..N-1}
  std::vector<int> sample_sizes;         // n_v per stratum, 1 <= n_v <= N_v

  static SamplingDesign srswor(int population_size, int sample_size);
  static SamplingDesign stratified(std::vector<std::vector<int>> strata,
                                   std::vector<int> sample_sizes);

  int n_strata() const { return static_cast<int>(strata.size()); }
  int total_sample_size() const;
  void validate() const;
};

/// First/second-order inclusion probabilities and Delta_kl accessors,
/// computed in O(1) from stratum membership (never materialized as N x N).
class InclusionProbabilities {
 public:
  explicit InclusionProbabilities(const SamplingDesign& design);

  double pi(int k) const { return pi_by_stratum_[static_cast<size_t>(stratum_of_[static_cast<size_t>(k)])]; }
  /// pi_kl with the convention pi_kk = pi_k.
  double pi2(int k, int l) const;
  /// Delta_kl = pi_kl - pi_k pi_l; Delta_kk = pi_k (1 - pi_k).
  double delta(int k, int l) const;

  int stratum_of(int k) const { return stratum_of_[static_cast<size_t>(k)]; }
  int n_strata() const { return static_cast<int>(pi_by_stratum_.size()); }
  int stratum_size(int v) const { return stratum_sizes_[static_cast<size_t>(v)]; }
  int stratum_sample_size(int v) const { return stratum_samples_[static_cast<size_t>(v)]; }
  int population_size() const { return static_cast<int>(stratum_of_.size()); }
  int sample_size() const;

 private:
  std::vector<int> stratum_of_;
  std::vector<int> stratum_sizes_;
  std::vector<int> stratum_samples_;
  std::vector<double> pi_by_stratum_;
  std::vector<double> pi2_within_;  // pi_kl for distinct units of one stratum
};

/// A realized sample: sorted distinct unit indices plus its design.
struct SampleDraw {
  std::vector<int> units;
  std::shared_ptr<const SamplingDesign> design;

  int size() const { return static_cast<int>(units.size()); }
};

/// Uniform draw over all C(N, n) subsets via partial Fisher-Yates.
SampleDraw srswor_draw(int population_size, int sample_size, const RngStream& stream);

/// Independent SRSWOR within every stratum; indices returned sorted.
SampleDraw stratified_draw(const SamplingDesign& design, const RngStream& stream);

InclusionProbabilities inclusion_probabilities(const SamplingDesign& design);

/// Assign units to strata by quantiles of the total ∫ X_k dt. cut_probs are
/// strictly increasing quantile levels in (0,1); H = cut_probs.size() + 1.
/// Throws config_error if any stratum ends up empty (degenerate totals).
std::vector<int> stratify_by_total(const CurvePopulation& pop,
                                   const std::vector<double>& cut_probs);

/// Group a stratum assignment into unit lists.
std::vector<std::vector<int>> strata_from_assignment(const std::vector<int>& assignment);

/// Neyman-like allocation: n_v proportional to N_v * S_v with S_v^2 the
/// integrated within-stratum dispersion, rounded by largest remainder,
/// clamped to [1, N_v], then refined by single-unit exchanges so the exact
/// stratified HT variance sum_v N_v^2 (1/n_v - 1/N_v) S_v^2 is minimal.
std::vector<int> neyman_allocation(const CurvePopulation& pop,
                                   const std::vector<std::vector<int>>& strata, int n);

/// Integrated within-stratum dispersion S_v^2 for each stratum.
std::vector<double> stratum_dispersions(const CurvePopulation& pop,
                                        const std::vector<std::vector<int>>& strata);

}  // namespace fsurvey
