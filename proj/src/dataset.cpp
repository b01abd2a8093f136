#include "sladoa/dataset.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

#include "sladoa/errors.hpp"
#include "sladoa/io.hpp"
#include "sladoa/parallel.hpp"

namespace sladoa {

namespace {

constexpr const char* kDatasetFormat = "sladoa-dataset";
constexpr const char* kCaptureFormat = "sladoa-capture";
constexpr int kDatasetVersion = 1;
constexpr int kCaptureVersion = 1;

SourceScene draw_scene(const DatasetConfig& config, const ScanGrid& grid, RngStream& rng) {
    const int k = config.k_min + static_cast<int>(rng.uniform_index(
                                     static_cast<std::uint64_t>(config.k_max - config.k_min + 1)));
    const auto bins = rng.distinct_indices(static_cast<std::size_t>(grid.size()),
                                           static_cast<std::size_t>(k));
    SourceScene scene;
    scene.angles_deg.reserve(bins.size());
    for (const auto bin : bins) scene.angles_deg.push_back(grid.angle(static_cast<int>(bin)));
    for (int i = 0; i < k; ++i)
        scene.amplitudes.push_back(rng.uniform(config.amplitude_min, config.amplitude_max));
    for (int i = 0; i < k; ++i) scene.phases.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
    return scene;
}

void fill_sample(const DatasetConfig& config, const ArrayGeometry& geometry, const ScanGrid& grid,
                 LabeledDataset& out, int column, RngStream& rng, double snr_db, bool draw_snr) {
    SourceScene scene = draw_scene(config, grid, rng);
    scene.snr_db = draw_snr
                       ? config.snr_levels_db[rng.uniform_index(config.snr_levels_db.size())]
                       : snr_db;
    scene.validate(grid.angle(0), grid.angle(grid.size() - 1), grid.step_deg());
    const Snapshot snap = synthesize_snapshot(geometry, scene, rng);
    out.snapshots.col(column) = snap.values;
    out.labels.col(column).setZero();
    for (int k = 0; k < scene.source_count(); ++k)
        out.labels(grid.index_of(scene.angles_deg[static_cast<std::size_t>(k)]), column) =
            scene.amplitudes[static_cast<std::size_t>(k)];
    out.scenes[static_cast<std::size_t>(column)] = std::move(scene);
}

} // namespace

LabeledDataset generate_dataset(const DatasetConfig& config, const ArrayGeometry& geometry,
                                const ScanGrid& grid, std::uint64_t seed) {
    if (config.train_count < 0 || config.val_per_level < 0)
        throw config_error("generate_dataset: negative sample count");
    if (config.k_min < 1 || config.k_max < config.k_min)
        throw config_error("generate_dataset: source count range must satisfy 1 <= k_min <= k_max");
    if (config.k_max > grid.size())
        throw config_error("generate_dataset: more sources than grid bins");
    if (config.snr_levels_db.empty())
        throw config_error("generate_dataset: at least one SNR level required");
    if (!(config.amplitude_min > 0.0) || config.amplitude_max > 1.0 ||
        config.amplitude_min > config.amplitude_max)
        throw config_error("generate_dataset: amplitude range must lie in (0, 1]");

    const int val_count = config.val_per_level * static_cast<int>(config.snr_levels_db.size());
    const int total = config.train_count + val_count;

    LabeledDataset out;
    out.geometry = geometry;
    out.grid = grid;
    out.snapshots.resize(geometry.size(), total);
    out.labels.resize(grid.size(), total);
    out.scenes.resize(static_cast<std::size_t>(total));
    out.train_count = config.train_count;
    out.val_count = val_count;
    out.seed = seed;
    out.snr_levels_db = config.snr_levels_db;

    // Each column is written by exactly one work item, so results do not
    // depend on scheduling.
    parallel_for(static_cast<std::size_t>(total), config.threads, [&](std::size_t i) {
        const int column = static_cast<int>(i);
        if (column < config.train_count) {
            RngStream rng(seed, RngDomain::dataset_sample, i);
            fill_sample(config, geometry, grid, out, column, rng, 0.0, true);
        } else {
            const int vi = column - config.train_count;
            const int level = vi / config.val_per_level;
            RngStream rng(seed, RngDomain::dataset_validation, static_cast<std::uint64_t>(vi));
            fill_sample(config, geometry, grid, out, column, rng,
                        config.snr_levels_db[static_cast<std::size_t>(level)], false);
        }
    });
    return out;
}

void save_dataset(const std::filesystem::path& path, const LabeledDataset& dataset,
                  const json& config_echo) {
    const int n = dataset.geometry.size();
    const int m = dataset.grid.size();
    const int count = dataset.count();

    json manifest;
    manifest["format"] = kDatasetFormat;
    manifest["version"] = kDatasetVersion;
    manifest["elements"] = n;
    manifest["positions_wavelengths"] = dataset.geometry.positions();
    manifest["mask"] = dataset.geometry.mask();
    manifest["grid"] = {{"min_deg", dataset.grid.angle(0)},
                        {"max_deg", dataset.grid.angle(m - 1)},
                        {"step_deg", dataset.grid.step_deg()}};
    manifest["count"] = count;
    manifest["train_count"] = dataset.train_count;
    manifest["val_count"] = dataset.val_count;
    manifest["seed"] = dataset.seed;
    manifest["snr_levels_db"] = dataset.snr_levels_db;
    json scenes = json::array();
    for (const auto& scene : dataset.scenes) {
        json s;
        s["angles_deg"] = scene.angles_deg;
        s["amplitudes"] = scene.amplitudes;
        s["phases"] = scene.phases;
        if (std::isinf(scene.snr_db))
            s["snr_db"] = "inf";
        else
            s["snr_db"] = scene.snr_db;
        scenes.push_back(std::move(s));
    }
    if (!config_echo.is_null()) manifest["config"] = config_echo;
    manifest["scenes"] = std::move(scenes);

    std::vector<double> payload(static_cast<std::size_t>(count) *
                                (2 * static_cast<std::size_t>(n) + static_cast<std::size_t>(m)));
    // Snapshot block: per sample, elements in order, each as (re, im).
    // std::complex<double> is layout-compatible with double[2], so the
    // column-major complex matrix is copied directly.
    static_assert(sizeof(std::complex<double>) == 2 * sizeof(double));
    std::memcpy(payload.data(), dataset.snapshots.data(),
                static_cast<std::size_t>(count) * static_cast<std::size_t>(n) *
                    sizeof(std::complex<double>));
    std::memcpy(payload.data() + static_cast<std::size_t>(count) * 2 * static_cast<std::size_t>(n),
                dataset.labels.data(),
                static_cast<std::size_t>(count) * static_cast<std::size_t>(m) * sizeof(double));
    write_container(path, manifest, payload);
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
    Container c = read_container(path);
    expect_format(c.manifest, kDatasetFormat, kDatasetVersion);

    const int n = c.manifest.at("elements").get<int>();
    const int count = c.manifest.at("count").get<int>();
    const auto& grid_spec = c.manifest.at("grid");
    const ScanGrid grid(grid_spec.at("min_deg").get<double>(), grid_spec.at("max_deg").get<double>(),
                        grid_spec.at("step_deg").get<double>());
    const int m = grid.size();

    const std::size_t expected =
        static_cast<std::size_t>(count) * (2 * static_cast<std::size_t>(n) + static_cast<std::size_t>(m));
    if (c.payload.size() != expected)
        throw io_error("dataset payload truncated or oversized: expected " +
                       std::to_string(expected * sizeof(double)) + " bytes, found " +
                       std::to_string(c.payload.size() * sizeof(double)) + " bytes");

    LabeledDataset out;
    out.geometry = ArrayGeometry(c.manifest.at("positions_wavelengths").get<std::vector<double>>(),
                                 c.manifest.at("mask").get<std::vector<int>>());
    if (out.geometry.size() != n) throw io_error("dataset manifest: elements/positions mismatch");
    out.grid = grid;
    out.train_count = c.manifest.at("train_count").get<int>();
    out.val_count = c.manifest.at("val_count").get<int>();
    if (out.train_count + out.val_count != count)
        throw io_error("dataset manifest: train/validation split does not sum to count");
    out.seed = c.manifest.at("seed").get<std::uint64_t>();
    out.snr_levels_db = c.manifest.at("snr_levels_db").get<std::vector<double>>();

    out.snapshots.resize(n, count);
    out.labels.resize(m, count);
    std::memcpy(out.snapshots.data(), c.payload.data(),
                static_cast<std::size_t>(count) * static_cast<std::size_t>(n) *
                    sizeof(std::complex<double>));
    std::memcpy(out.labels.data(),
                c.payload.data() + static_cast<std::size_t>(count) * 2 * static_cast<std::size_t>(n),
                static_cast<std::size_t>(count) * static_cast<std::size_t>(m) * sizeof(double));
    if (!out.snapshots.allFinite() || !out.labels.allFinite())
        throw io_error("dataset payload contains non-finite values");

    const auto& scenes = c.manifest.at("scenes");
    if (static_cast<int>(scenes.size()) != count)
        throw io_error("dataset manifest: scene list length does not match count");
    out.scenes.reserve(scenes.size());
    for (const auto& s : scenes) {
        SourceScene scene;
        scene.angles_deg = s.at("angles_deg").get<std::vector<double>>();
        scene.amplitudes = s.at("amplitudes").get<std::vector<double>>();
        scene.phases = s.at("phases").get<std::vector<double>>();
        if (s.at("snr_db").is_string())
            scene.snr_db = std::numeric_limits<double>::infinity();
        else
            scene.snr_db = s.at("snr_db").get<double>();
        out.scenes.push_back(std::move(scene));
    }
    return out;
}

Eigen::VectorXcd superpose_measurements(const std::vector<Eigen::VectorXcd>& vectors) {
    if (vectors.empty()) throw shape_error("superpose_measurements: empty input");
    Eigen::VectorXcd sum = vectors.front();
    for (std::size_t i = 1; i < vectors.size(); ++i) {
        if (vectors[i].size() != sum.size())
            throw shape_error("superpose_measurements: length mismatch at vector " +
                              std::to_string(i) + " (" + std::to_string(vectors[i].size()) +
                              " vs " + std::to_string(sum.size()) + ")");
        sum += vectors[i];
    }
    return sum;
}

void save_capture(const std::filesystem::path& path, const Eigen::MatrixXcd& records,
                  const std::vector<double>& angles_deg, const json& config_echo) {
    if (static_cast<std::size_t>(records.cols()) != angles_deg.size())
        throw shape_error("save_capture: one angle tag per record required");
    json manifest;
    manifest["format"] = kCaptureFormat;
    manifest["version"] = kCaptureVersion;
    manifest["elements"] = static_cast<int>(records.rows());
    manifest["record_count"] = static_cast<int>(records.cols());
    manifest["angles_deg"] = angles_deg;
    if (!config_echo.is_null()) manifest["config"] = config_echo;

    std::vector<double> payload(static_cast<std::size_t>(records.size()) * 2);
    std::memcpy(payload.data(), records.data(),
                static_cast<std::size_t>(records.size()) * sizeof(std::complex<double>));
    write_container(path, manifest, payload);
}

ImportedCapture import_real(const std::filesystem::path& path) {
    Container c = read_container(path);
    expect_format(c.manifest, kCaptureFormat, kCaptureVersion);

    ImportedCapture out;
    out.n_elements = c.manifest.at("elements").get<int>();
    const int count = c.manifest.at("record_count").get<int>();
    out.angles_deg = c.manifest.at("angles_deg").get<std::vector<double>>();
    if (out.n_elements <= 0 || count < 0) throw io_error("capture manifest: invalid dimensions");
    if (static_cast<int>(out.angles_deg.size()) != count)
        throw io_error("capture manifest: angle tag count does not match record count");

    const std::size_t expected =
        2 * static_cast<std::size_t>(out.n_elements) * static_cast<std::size_t>(count);
    if (c.payload.size() != expected)
        throw io_error("capture payload truncated or oversized: expected " +
                       std::to_string(expected * sizeof(double)) + " bytes, found " +
                       std::to_string(c.payload.size() * sizeof(double)) + " bytes");

    out.records.resize(out.n_elements, count);
    std::memcpy(out.records.data(), c.payload.data(), expected * sizeof(double));

    out.active_counts.resize(static_cast<std::size_t>(count));
    for (int r = 0; r < count; ++r) {
        const auto column = out.records.col(r);
        if (!column.allFinite())
            throw io_error("capture record " + std::to_string(r) + " contains non-finite values");
        const double scale = column.cwiseAbs().maxCoeff();
        int active = 0;
        for (int i = 0; i < out.n_elements; ++i)
            if (std::abs(column(i)) > 1e-6 * scale) ++active;
        out.active_counts[static_cast<std::size_t>(r)] = active;
        if (!(out.angles_deg[static_cast<std::size_t>(r)] >= -90.0 &&
              out.angles_deg[static_cast<std::size_t>(r)] <= 90.0))
            throw io_error("capture record " + std::to_string(r) + " has angle tag outside [-90, 90]");
    }
    return out;
}

ImportedCapture make_demo_capture(int records, const ArrayGeometry& geometry, double snr_db,
                                  std::uint64_t seed) {
    if (records < 1) throw config_error("make_demo_capture: records must be positive");
    ImportedCapture out;
    out.n_elements = geometry.size();
    out.records.resize(geometry.size(), records);
    out.angles_deg.resize(static_cast<std::size_t>(records));
    out.active_counts.resize(static_cast<std::size_t>(records));

    // Angle tags sweep the field of view uniformly; amplitudes and phases
    // vary record to record like separate physical captures would.
    for (int r = 0; r < records; ++r) {
        RngStream rng(seed, RngDomain::capture_demo, static_cast<std::uint64_t>(r));
        const double frac = records == 1 ? 0.5 : static_cast<double>(r) / (records - 1);
        SourceScene scene;
        scene.angles_deg = {-30.0 + 60.0 * frac};
        scene.amplitudes = {rng.uniform(0.5, 1.0)};
        scene.phases = {rng.uniform(0.0, 2.0 * std::numbers::pi)};
        scene.snr_db = snr_db;
        out.records.col(r) = synthesize_snapshot(geometry, scene, rng).values;
        out.angles_deg[static_cast<std::size_t>(r)] = scene.angles_deg[0];
        out.active_counts[static_cast<std::size_t>(r)] = geometry.active_count();
    }
    return out;
}

} // namespace sladoa
