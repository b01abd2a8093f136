#include "sladoa/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "sladoa/errors.hpp"
#include "sladoa/features.hpp"
#include "sladoa/io.hpp"
#include "sladoa/parallel.hpp"

namespace sladoa {

std::vector<double> Estimator::estimate(const Snapshot& snapshot, int k,
                                        const SourceScene&) const {
    return peak_search(spectrum(snapshot), k);
}

namespace {

class DbfEstimator final : public Estimator {
public:
    explicit DbfEstimator(const ScanGrid& grid) : Estimator("dbf"), grid_(grid) {}
    Spectrum spectrum(const Snapshot& snapshot) const override {
        return dbf_spectrum(snapshot, grid_);
    }

private:
    ScanGrid grid_;
};

class IaaEstimator final : public Estimator {
public:
    IaaEstimator(const ScanGrid& grid, int max_iters)
        : Estimator("iaa"), grid_(grid), max_iters_(max_iters) {}
    Spectrum spectrum(const Snapshot& snapshot) const override {
        return iaa_spectrum(snapshot, grid_, max_iters_);
    }

private:
    ScanGrid grid_;
    int max_iters_;
};

class NetworkEstimator final : public Estimator {
public:
    NetworkEstimator(ModelParams params, const ArrayGeometry& reference, const ScanGrid& grid,
                     std::string name)
        : Estimator(std::move(name)), params_(std::move(params)),
          positions_(reference.positions()), grid_(grid),
          manifold_(steering_matrix(reference, grid)) {
        if (params_.arch().n_elements != reference.size())
            throw shape_error("network estimator: model expects " +
                              std::to_string(params_.arch().n_elements) +
                              " elements, reference array has " + std::to_string(reference.size()));
        if (params_.arch().grid_size != grid.size())
            throw shape_error("network estimator: model outputs " +
                              std::to_string(params_.arch().grid_size) + " bins, grid has " +
                              std::to_string(grid.size()));
        if (params_.arch().kind == ModelKind::augmented) aug_ = params_.aug_layer();
    }

    Spectrum spectrum(const Snapshot& snapshot) const override {
        if (snapshot.geometry.positions() != positions_)
            throw shape_error("network estimator: snapshot element positions differ from the "
                              "reference array the manifold was built for");
        const SparseMask mask = SparseMask::from_geometry(snapshot.geometry);
        if (params_.arch().kind == ModelKind::augmented)
            return Spectrum{forward_probabilities(
                                params_, assemble_features(snapshot, mask, aug_, manifold_)),
                            grid_};
        Eigen::VectorXcd masked = snapshot.values;
        for (int i = 0; i < masked.size(); ++i)
            if (!mask.flags[static_cast<std::size_t>(i)]) masked[i] = 0.0;
        return Spectrum{forward_probabilities(params_, pack_complex(masked)), grid_};
    }

    Eigen::Index parameter_count() const override { return count_parameters(params_); }

private:
    ModelParams params_;
    std::vector<double> positions_;
    ScanGrid grid_;
    Eigen::MatrixXcd manifold_;
    DenseLayer aug_;
};

class OracleEstimator final : public Estimator {
public:
    explicit OracleEstimator(const ScanGrid& grid) : Estimator("nearest-grid-oracle"), grid_(grid) {}
    bool has_spectrum() const override { return false; }
    Spectrum spectrum(const Snapshot&) const override {
        throw config_error("the nearest-grid oracle has no spectrum");
    }
    std::vector<double> estimate(const Snapshot&, int k, const SourceScene& truth) const override {
        if (k != truth.source_count())
            throw shape_error("nearest-grid oracle: k must equal the true source count");
        std::vector<double> out;
        out.reserve(truth.angles_deg.size());
        for (const double angle : truth.angles_deg)
            out.push_back(grid_.angle(grid_.nearest_index(angle)));
        return out;
    }

private:
    ScanGrid grid_;
};

} // namespace

std::unique_ptr<Estimator> make_dbf_estimator(const ScanGrid& grid) {
    return std::make_unique<DbfEstimator>(grid);
}

std::unique_ptr<Estimator> make_iaa_estimator(const ScanGrid& grid, int max_iters) {
    return std::make_unique<IaaEstimator>(grid, max_iters);
}

std::unique_ptr<Estimator> make_network_estimator(ModelParams params,
                                                  const ArrayGeometry& reference,
                                                  const ScanGrid& grid, std::string name) {
    return std::make_unique<NetworkEstimator>(std::move(params), reference, grid, std::move(name));
}

std::unique_ptr<Estimator> make_oracle_estimator(const ScanGrid& grid) {
    return std::make_unique<OracleEstimator>(grid);
}

Assignment optimal_assignment(const std::vector<double>& estimates,
                              const std::vector<double>& truths) {
    if (estimates.size() != truths.size())
        throw shape_error("optimal_assignment: estimate and truth counts differ");
    if (estimates.empty()) throw shape_error("optimal_assignment: empty input");

    std::vector<std::size_t> perm(estimates.size());
    std::iota(perm.begin(), perm.end(), 0);
    Assignment best;
    best.total_squared = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < truths.size(); ++i) {
            const double e = estimates[perm[i]] - truths[i];
            total += e * e;
        }
        if (total < best.total_squared) {
            best.total_squared = total;
            best.abs_errors_deg.resize(truths.size());
            for (std::size_t i = 0; i < truths.size(); ++i)
                best.abs_errors_deg[i] = std::abs(estimates[perm[i]] - truths[i]);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

namespace {

SourceScene draw_trial_scene(const TrialSpec& spec, const ScanGrid& grid, RngStream& rng) {
    SourceScene scene;
    switch (spec.scene_policy) {
    case ScenePolicy::single_offgrid:
        scene.angles_deg = {rng.uniform(grid.angle(0), grid.angle(grid.size() - 1))};
        break;
    case ScenePolicy::two_offgrid:
        scene.angles_deg = {rng.uniform(-0.6, 0.4), rng.uniform(9.6, 10.4)};
        break;
    case ScenePolicy::symmetric_pair:
        if (!(spec.delta_deg > 0.0))
            throw config_error("symmetric_pair scenes need a positive separation");
        scene.angles_deg = {-spec.delta_deg / 2.0, spec.delta_deg / 2.0};
        break;
    }
    for (std::size_t i = 0; i < scene.angles_deg.size(); ++i)
        scene.amplitudes.push_back(rng.uniform(0.5, 1.0));
    for (std::size_t i = 0; i < scene.angles_deg.size(); ++i)
        scene.phases.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
    scene.snr_db = spec.snr_db;
    return scene;
}

ArrayGeometry draw_trial_geometry(const TrialSpec& spec, const ArrayGeometry& reference,
                                  RngStream& rng) {
    if (spec.geometry_policy == GeometryPolicy::fixed) return reference;
    if (!(spec.sla_sparsity >= 0.0 && spec.sla_sparsity < 1.0))
        throw config_error("sla_sparsity must lie in [0, 1)");
    const int n = reference.size();
    const int removals = static_cast<int>(std::floor(spec.sla_sparsity * n));
    std::vector<int> mask(static_cast<std::size_t>(n), 1);
    for (const auto idx : rng.distinct_indices(static_cast<std::size_t>(n),
                                               static_cast<std::size_t>(removals)))
        mask[idx] = 0;
    return reference.with_mask(std::move(mask));
}

} // namespace

TrialOutcome run_single_trial(const TrialSpec& spec, const Estimator& estimator,
                              const ArrayGeometry& reference, const ScanGrid& grid,
                              std::uint64_t trial_index) {
    RngStream rng(spec.seed, RngDomain::trial, trial_index);
    TrialOutcome out;
    out.scene = draw_trial_scene(spec, grid, rng);
    out.geometry = draw_trial_geometry(spec, reference, rng);
    const Snapshot snapshot = synthesize_snapshot(out.geometry, out.scene, rng);

    try {
        out.estimates = estimator.estimate(snapshot, out.scene.source_count(), out.scene);
    } catch (const std::exception& e) {
        throw numeric_error("estimator '" + estimator.name() + "' failed at trial " +
                            std::to_string(trial_index) + " (seed " + std::to_string(spec.seed) +
                            "): " + e.what());
    }
    if (out.estimates.size() != out.scene.angles_deg.size())
        throw shape_error("estimator '" + estimator.name() + "' returned " +
                          std::to_string(out.estimates.size()) + " angles for " +
                          std::to_string(out.scene.angles_deg.size()) + " sources");

    Assignment assignment = optimal_assignment(out.estimates, out.scene.angles_deg);
    out.mse_deg2 = assignment.total_squared / static_cast<double>(assignment.abs_errors_deg.size());
    out.hit = std::all_of(assignment.abs_errors_deg.begin(), assignment.abs_errors_deg.end(),
                          [](double e) { return e <= 1.0 + 1e-12; });
    out.abs_errors_deg = std::move(assignment.abs_errors_deg);
    return out;
}

AccuracySummary evaluate_accuracy(const TrialSpec& spec, const Estimator& estimator,
                                  const ArrayGeometry& reference, const ScanGrid& grid,
                                  unsigned threads) {
    if (spec.trials < 1) throw config_error("evaluate_accuracy: trials must be positive");
    const std::size_t n = static_cast<std::size_t>(spec.trials);
    std::vector<double> mse(n);
    std::vector<char> hits(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const TrialOutcome t = run_single_trial(spec, estimator, reference, grid, i);
        mse[i] = t.mse_deg2;
        hits[i] = t.hit ? 1 : 0;
    });

    AccuracySummary s;
    s.trials = spec.trials;
    double sum = 0.0;
    std::size_t hit_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += mse[i];
        hit_count += static_cast<std::size_t>(hits[i]);
    }
    s.mse_deg2 = sum / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = mse[i] - s.mse_deg2;
        var += d * d;
    }
    var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
    s.mse_std_error = std::sqrt(var / static_cast<double>(n));
    s.hit_rate = static_cast<double>(hit_count) / static_cast<double>(n);
    // Binomial standard error.
    s.hit_std_error = std::sqrt(s.hit_rate * (1.0 - s.hit_rate) / static_cast<double>(n));
    return s;
}

std::vector<TimingSummary> timing_benchmark(const std::vector<const Estimator*>& estimators,
                                            const ArrayGeometry& geometry, const ScanGrid& grid,
                                            int trials, int warmup, double snr_db,
                                            std::uint64_t seed) {
    if (trials < 1) throw config_error("timing_benchmark: trials must be positive");
    if (warmup < 0) throw config_error("timing_benchmark: warmup must be non-negative");

    // Identical inputs for every estimator: single off-grid targets.
    TrialSpec spec;
    spec.scene_policy = ScenePolicy::single_offgrid;
    spec.snr_db = snr_db;
    spec.seed = seed;
    std::vector<Snapshot> inputs;
    std::vector<SourceScene> scenes;
    inputs.reserve(static_cast<std::size_t>(trials));
    scenes.reserve(static_cast<std::size_t>(trials));
    for (int i = 0; i < trials; ++i) {
        RngStream rng(seed, RngDomain::trial, static_cast<std::uint64_t>(i));
        SourceScene scene = draw_trial_scene(spec, grid, rng);
        inputs.push_back(synthesize_snapshot(geometry, scene, rng));
        scenes.push_back(std::move(scene));
    }

    std::vector<TimingSummary> out;
    std::vector<double> seconds(static_cast<std::size_t>(trials));
    for (const Estimator* est : estimators) {
        for (int i = 0; i < warmup; ++i) {
            const std::size_t j = static_cast<std::size_t>(i % trials);
            (void)est->estimate(inputs[j], 1, scenes[j]);
        }
        for (int i = 0; i < trials; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            (void)est->estimate(inputs[static_cast<std::size_t>(i)], 1,
                                scenes[static_cast<std::size_t>(i)]);
            const auto t1 = std::chrono::steady_clock::now();
            seconds[static_cast<std::size_t>(i)] =
                std::chrono::duration<double>(t1 - t0).count();
        }
        TimingSummary t;
        t.name = est->name();
        t.trials = trials;
        const double mean =
            std::accumulate(seconds.begin(), seconds.end(), 0.0) / static_cast<double>(trials);
        double var = 0.0;
        for (const double s : seconds) var += (s - mean) * (s - mean);
        t.mean_seconds = mean;
        t.std_seconds = trials > 1 ? std::sqrt(var / static_cast<double>(trials - 1)) : 0.0;
        t.parameter_count = est->parameter_count();
        out.push_back(std::move(t));
    }
    return out;
}

ShowcaseTable spectrum_showcase(const Snapshot& snapshot,
                                const std::vector<const Estimator*>& estimators,
                                const std::vector<double>& truth_angles_deg) {
    if (estimators.empty()) throw config_error("spectrum_showcase: no estimators");
    ShowcaseTable table;
    bool grid_set = false;
    for (const Estimator* est : estimators) {
        if (!est->has_spectrum())
            throw config_error("spectrum_showcase: estimator '" + est->name() +
                               "' has no spectrum");
        Spectrum s = est->spectrum(snapshot);
        if (!grid_set) {
            table.grid = s.grid;
            grid_set = true;
        } else if (!(s.grid == table.grid)) {
            throw shape_error("spectrum_showcase: estimators disagree on the scan grid");
        }
        const double peak = s.values.maxCoeff();
        if (peak > 0.0) s.values /= peak;
        table.names.push_back(est->name());
        table.spectra.push_back(std::move(s.values));
    }
    table.truth_angles_deg = truth_angles_deg;
    return table;
}

std::string showcase_csv(const ShowcaseTable& table) {
    std::vector<int> truth_bins;
    truth_bins.reserve(table.truth_angles_deg.size());
    for (const double angle : table.truth_angles_deg)
        truth_bins.push_back(table.grid.nearest_index(angle));

    std::string out = "angle_deg";
    for (const auto& name : table.names) {
        out += ',';
        out += name;
    }
    out += ",truth\n";
    for (int m = 0; m < table.grid.size(); ++m) {
        out += format_double(table.grid.angle(m));
        for (const auto& spectrum : table.spectra) {
            out += ',';
            out += format_double(spectrum[m]);
        }
        out += ',';
        out += std::find(truth_bins.begin(), truth_bins.end(), m) != truth_bins.end() ? '1' : '0';
        out += '\n';
    }
    return out;
}

double grid_mse_floor(const ScanGrid& grid) {
    return grid.step_deg() * grid.step_deg() / 12.0;
}

std::string accuracy_csv(const std::vector<AccuracyRow>& rows, double grid_floor) {
    std::string out = "estimator,geometry,scene,snr_db,trials,mse_deg2,mse_std_error,"
                      "hit_rate,hit_std_error,grid_floor_mse_deg2\n";
    for (const auto& r : rows) {
        out += r.estimator + ',' + r.geometry + ',' + r.scene + ',' + format_double(r.snr_db) +
               ',' + std::to_string(r.summary.trials) + ',' + format_double(r.summary.mse_deg2) +
               ',' + format_double(r.summary.mse_std_error) + ',' +
               format_double(r.summary.hit_rate) + ',' + format_double(r.summary.hit_std_error) +
               ',' + format_double(grid_floor) + '\n';
    }
    return out;
}

std::string hitrate_csv(const std::vector<HitRateRow>& rows) {
    std::string out = "estimator,geometry,delta_deg,snr_db,trials,hit_rate,hit_std_error,mse_deg2\n";
    for (const auto& r : rows) {
        out += r.estimator + ',' + r.geometry + ',' + format_double(r.delta_deg) + ',' +
               format_double(r.snr_db) + ',' + std::to_string(r.summary.trials) + ',' +
               format_double(r.summary.hit_rate) + ',' + format_double(r.summary.hit_std_error) +
               ',' + format_double(r.summary.mse_deg2) + '\n';
    }
    return out;
}

std::string timing_csv(const std::vector<TimingSummary>& rows) {
    std::string out = "estimator,trials,mean_seconds,std_seconds,parameter_count\n";
    for (const auto& r : rows) {
        out += r.name + ',' + std::to_string(r.trials) + ',' + format_double(r.mean_seconds) +
               ',' + format_double(r.std_seconds) + ',' + std::to_string(r.parameter_count) + '\n';
    }
    return out;
}

} // namespace sladoa
