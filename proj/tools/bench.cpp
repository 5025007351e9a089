// Timings of the parallel kernels against their serial reference
// implementations: multi-curve smoothing, the factored covariance estimator
// vs the literal pair sum, Gaussian sup-ratio simulation, and the replicate
// loop at two worker counts.

#include <chrono>
#include <cmath>
#include <cstdio>

#include "fsurvey/harness.hpp"
#include "fsurvey/reference.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(const char* name, double serial, double fast, double check) {
  std::printf("%-34s serial %8.3fs   fast %8.3fs   speedup %5.2fx   max|diff| %.3g\n",
              name, serial, fast, serial / fast, check);
}

}  // namespace

int main() {
  using namespace fsurvey;
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#endif

  const TimeGrid grid = TimeGrid::uniform(200, 1.0);
  const PopulationConfig pop_config = default_population_config(4000, grid, 7);
  const CurvePopulation pop = synthesize_population(pop_config);

  NoiseModel noise;
  noise.delta = 0.25;
  const SampleDraw draw = srswor_draw(pop.n_units(), 400, RngStream{7, 2});
  const ObservationMatrix obs = observe(pop, draw.units, noise, RngStream{7, 3});
  const SmootherWeightMatrix smoother = local_linear_weights(grid, 0.05, Kernel::Epanechnikov);

  {  // multi-curve smoothing
    auto t0 = Clock::now();
    const Eigen::MatrixXd slow = ref::smooth_rows_serial(obs.values, smoother);
    const double serial = seconds_since(t0);
    t0 = Clock::now();
    const Eigen::MatrixXd fast = smooth_rows(obs.values, smoother);
    const double parallel = seconds_since(t0);
    report("smooth_rows", serial, parallel, (slow - fast).cwiseAbs().maxCoeff());
  }

  const Eigen::MatrixXd smoothed = smooth_rows(obs.values, smoother);
  const InclusionProbabilities probs(*draw.design);

  {  // covariance estimator: factored vs literal pair sum
    auto t0 = Clock::now();
    const SymmetricMatrix slow = ref::ht_covariance_naive(smoothed, draw, probs);
    const double serial = seconds_since(t0);
    t0 = Clock::now();
    const CovarianceEstimate fast = ht_covariance(smoothed, grid, draw, probs);
    const double factored = seconds_since(t0);
    double diff = 0.0;
    for (int i = 0; i < slow.order(); ++i)
      for (int j = 0; j <= i; ++j) diff = std::max(diff, std::abs(slow(i, j) - fast.gamma(i, j)));
    report("ht_covariance (pair sum vs factored)", serial, factored, diff);
  }

  {  // Gaussian sup-ratio simulation
    const CovarianceEstimate cov = ht_covariance(smoothed, grid, draw, probs);
    const RngStream stream{7, kGpStreamBase};
    auto t0 = Clock::now();
    const auto slow = ref::sup_ratios_serial(cov.gamma, 20000, stream);
    const double serial = seconds_since(t0);
    t0 = Clock::now();
    const auto fast = simulate_sup_ratios(cov, 20000, stream);
    const double parallel = seconds_since(t0);
    double diff = 0.0;
    for (size_t b = 0; b < slow.size(); ++b) diff = std::max(diff, std::abs(slow[b] - fast[b]));
    report("simulate_sup_ratios", serial, parallel, diff);
  }

  {  // replicate loop at one vs all workers
    ExperimentConfig config;
    config.n_units = 1000;
    config.grid_points = 100;
    config.sample_size = 100;
    config.replicates = 24;
    config.gp_draws = 1000;
    config.designs = {"stratified"};
    config.noises = {"heteroscedastic"};
    config.out_dir = "bench_out";
    config.seed = 7;
    config.workers = 1;
    auto t0 = Clock::now();
    run_experiment(config);
    const double serial = seconds_since(t0);
    config.workers = 0;
#ifdef _OPENMP
    omp_set_num_threads(omp_get_num_procs());
#endif
    t0 = Clock::now();
    run_experiment(config);
    const double parallel = seconds_since(t0);
    report("experiment replicate loop", serial, parallel, 0.0);
  }

  return 0;
}
