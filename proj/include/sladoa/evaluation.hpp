#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "sladoa/array_signal.hpp"
#include "sladoa/estimators.hpp"
#include "sladoa/network.hpp"

namespace sladoa {

// Monte-Carlo benchmarking: accuracy (MSE vs SNR), separability (hit rate vs
// angular separation), timing, and spectrum showcases. Trials are
// independent, each drawing from its own (seed, trial-index) substream, so
// any reported trial can be replayed bit-exactly and reports are identical
// at any parallelism level.

/// Common estimator surface. estimate() defaults to peak_search over
/// spectrum(); the nearest-grid oracle overrides it and has no spectrum.
class Estimator {
public:
    virtual ~Estimator() = default;

    const std::string& name() const { return name_; }
    virtual bool has_spectrum() const { return true; }
    virtual Spectrum spectrum(const Snapshot& snapshot) const = 0;
    virtual std::vector<double> estimate(const Snapshot& snapshot, int k,
                                         const SourceScene& truth) const;
    /// Trainable parameter count; 0 for closed-form estimators.
    virtual Eigen::Index parameter_count() const { return 0; }

protected:
    explicit Estimator(std::string name) : name_(std::move(name)) {}

private:
    std::string name_;
};

std::unique_ptr<Estimator> make_dbf_estimator(const ScanGrid& grid);
std::unique_ptr<Estimator> make_iaa_estimator(const ScanGrid& grid, int max_iters = 15);
/// Wraps a trained model (either kind). The manifold is cached for the
/// reference element positions; snapshots must share those positions (their
/// masks may differ).
std::unique_ptr<Estimator> make_network_estimator(ModelParams params,
                                                  const ArrayGeometry& reference,
                                                  const ScanGrid& grid, std::string name);
/// Returns the grid angle nearest each true DOA: the grid-induced error
/// floor, used to calibrate the whole harness.
std::unique_ptr<Estimator> make_oracle_estimator(const ScanGrid& grid);

enum class GeometryPolicy { fixed, random_sla };
enum class ScenePolicy { single_offgrid, two_offgrid, symmetric_pair };

struct TrialSpec {
    GeometryPolicy geometry_policy = GeometryPolicy::fixed;
    double sla_sparsity = 0.3; // random_sla: floor(sparsity * N) removals per trial
    ScenePolicy scene_policy = ScenePolicy::single_offgrid;
    double delta_deg = 0.0;    // symmetric_pair separation
    double snr_db = 20.0;
    int trials = 5000;
    std::uint64_t seed = 1;
};

struct TrialOutcome {
    SourceScene scene;
    ArrayGeometry geometry = ArrayGeometry::ula(10);
    std::vector<double> estimates;      // raw estimator output
    std::vector<double> abs_errors_deg; // after optimal assignment, per truth
    double mse_deg2 = 0.0;              // mean over targets
    bool hit = false;                   // all errors within 1 degree
};

/// One fully deterministic trial: scene draw, geometry draw, synthesis,
/// estimation, assignment. Estimator failures are rethrown with the trial
/// index and seed so the trial can be replayed.
TrialOutcome run_single_trial(const TrialSpec& spec, const Estimator& estimator,
                              const ArrayGeometry& reference, const ScanGrid& grid,
                              std::uint64_t trial_index);

struct AccuracySummary {
    int trials = 0;
    double mse_deg2 = 0.0;
    double mse_std_error = 0.0; // standard error of the MSE estimate
    double hit_rate = 0.0;
    double hit_std_error = 0.0;
};

/// Runs spec.trials independent trials and aggregates. Deterministic at any
/// thread count.
AccuracySummary evaluate_accuracy(const TrialSpec& spec, const Estimator& estimator,
                                  const ArrayGeometry& reference, const ScanGrid& grid,
                                  unsigned threads);

struct TimingSummary {
    std::string name;
    int trials = 0;
    double mean_seconds = 0.0;
    double std_seconds = 0.0;
    Eigen::Index parameter_count = 0;
};

/// Per-inference wall clock on identical pregenerated single-target inputs,
/// after `warmup` unmeasured calls. Single-threaded by construction.
std::vector<TimingSummary> timing_benchmark(const std::vector<const Estimator*>& estimators,
                                            const ArrayGeometry& geometry, const ScanGrid& grid,
                                            int trials, int warmup, double snr_db,
                                            std::uint64_t seed);

struct ShowcaseTable {
    ScanGrid grid = ScanGrid::reference();
    std::vector<std::string> names;
    std::vector<Eigen::VectorXd> spectra; // peak-normalized, one per name
    std::vector<double> truth_angles_deg;
};

/// Evaluates every estimator's spectrum on one snapshot, normalized to peak
/// 1 for plotting side by side.
ShowcaseTable spectrum_showcase(const Snapshot& snapshot,
                                const std::vector<const Estimator*>& estimators,
                                const std::vector<double>& truth_angles_deg);

/// CSV rendering: angle_deg, one column per estimator, then a 0/1 truth
/// marker for bins nearest a true DOA. One row per grid bin plus the header.
std::string showcase_csv(const ShowcaseTable& table);

/// Mean-square rounding error of a uniform angle on this grid: step^2 / 12.
double grid_mse_floor(const ScanGrid& grid);

// Report rows and their CSV renderings. The CLI builds the rows; rendering
// lives here so artifacts are reproducible through the library alone.

struct AccuracyRow {
    std::string estimator;
    std::string geometry; // "ula" | "sla"
    std::string scene;    // "single" | "two"
    double snr_db = 0.0;
    AccuracySummary summary;
};

struct HitRateRow {
    std::string estimator;
    std::string geometry;
    double delta_deg = 0.0;
    double snr_db = 0.0;
    AccuracySummary summary;
};

/// Columns: estimator,geometry,scene,snr_db,trials,mse_deg2,mse_std_error,
/// hit_rate,hit_std_error,grid_floor_mse_deg2.
std::string accuracy_csv(const std::vector<AccuracyRow>& rows, double grid_floor);

/// Columns: estimator,geometry,delta_deg,snr_db,trials,hit_rate,
/// hit_std_error,mse_deg2.
std::string hitrate_csv(const std::vector<HitRateRow>& rows);

/// Columns: estimator,trials,mean_seconds,std_seconds,parameter_count.
std::string timing_csv(const std::vector<TimingSummary>& rows);

/// Exhaustive minimum-total-squared-error matching of estimates to truths
/// (at most 3! permutations). errors[i] is the absolute error of truth i.
struct Assignment {
    std::vector<double> abs_errors_deg;
    double total_squared = 0.0;
};
Assignment optimal_assignment(const std::vector<double>& estimates,
                              const std::vector<double>& truths);

} // namespace sladoa
