// Command-line front end: dataset generation, training, Monte-Carlo
// evaluation, single-snapshot inference, capture import, and showcase
// reports. Configuration comes from an optional JSON file; flags win over
// file values. Every artifact embeds the effective config and seed.

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "sladoa/array_signal.hpp"
#include "sladoa/dataset.hpp"
#include "sladoa/errors.hpp"
#include "sladoa/estimators.hpp"
#include "sladoa/evaluation.hpp"
#include "sladoa/features.hpp"
#include "sladoa/io.hpp"
#include "sladoa/network.hpp"
#include "sladoa/rng.hpp"

namespace fs = std::filesystem;
using sladoa::json;

namespace {

struct GridConfig {
    double min_deg = -30.0;
    double max_deg = 30.0;
    double step_deg = 1.0;
};

struct ArrayConfig {
    int elements = 10;
    double spacing_wavelengths = 0.5;
};

struct TrainSection {
    std::string model = "augmented"; // "augmented" | "mlp_baseline"
    int hidden = 384;
    int epochs = 200;
    int batch_size = 1024;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double max_sparsity = 0.3;
    std::string precision = "float64";
};

struct EvalSection {
    int trials = 5000;
    std::vector<double> snr_levels_db = {0, 5, 10, 15, 20, 25, 30};
    std::vector<std::string> estimators = {"dbf", "iaa", "network"};
    std::vector<std::string> geometries = {"ula", "sla"};
    double sla_sparsity = 0.3;
    int iaa_iters = 15;
    std::vector<double> delta_deg = {1, 2, 3, 4, 5, 6, 8, 10, 20};
    double hitrate_snr_db = 40.0;
    bool timing = true;
    int timing_trials = 5000;
    int timing_warmup = 100;
};

struct ReportSection {
    double angle_a_deg = 0.0;
    double angle_b_deg = 7.0;
    double phase_b_rad = 0.0;
    double snr_db = std::numeric_limits<double>::infinity();
    int sla_count = 3;
};

struct RunConfig {
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out_dir = "out";
    GridConfig grid;
    ArrayConfig array;
    sladoa::DatasetConfig dataset;
    TrainSection train;
    EvalSection eval;
    ReportSection report;
};

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known)
            throw sladoa::config_error("config: unknown key \"" + key + "\" in " + where);
    }
}

template <typename T>
void read_key(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        obj.at(key).get_to(out);
    } catch (const json::exception& e) {
        throw sladoa::config_error("config: bad value for \"" + std::string(key) +
                                   "\": " + e.what());
    }
}

double read_snr(const json& value, const char* key) {
    if (value.is_string()) {
        if (value.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw sladoa::config_error("config: \"" + std::string(key) +
                                   "\" must be a number or \"inf\"");
    }
    return value.get<double>();
}

RunConfig parse_config_json(const json& root) {
    RunConfig cfg;
    check_keys(root, "the top level",
               {"seed", "threads", "out_dir", "grid", "array", "dataset", "train", "eval",
                "report"});
    read_key(root, "seed", cfg.seed);
    read_key(root, "threads", cfg.threads);
    read_key(root, "out_dir", cfg.out_dir);

    if (root.contains("grid")) {
        const json& g = root.at("grid");
        check_keys(g, "\"grid\"", {"min_deg", "max_deg", "step_deg"});
        read_key(g, "min_deg", cfg.grid.min_deg);
        read_key(g, "max_deg", cfg.grid.max_deg);
        read_key(g, "step_deg", cfg.grid.step_deg);
    }
    if (root.contains("array")) {
        const json& a = root.at("array");
        check_keys(a, "\"array\"", {"elements", "spacing_wavelengths"});
        read_key(a, "elements", cfg.array.elements);
        read_key(a, "spacing_wavelengths", cfg.array.spacing_wavelengths);
    }
    if (root.contains("dataset")) {
        const json& d = root.at("dataset");
        check_keys(d, "\"dataset\"",
                   {"train_count", "val_per_level", "snr_levels_db", "k_min", "k_max",
                    "amplitude_min", "amplitude_max"});
        read_key(d, "train_count", cfg.dataset.train_count);
        read_key(d, "val_per_level", cfg.dataset.val_per_level);
        read_key(d, "snr_levels_db", cfg.dataset.snr_levels_db);
        read_key(d, "k_min", cfg.dataset.k_min);
        read_key(d, "k_max", cfg.dataset.k_max);
        read_key(d, "amplitude_min", cfg.dataset.amplitude_min);
        read_key(d, "amplitude_max", cfg.dataset.amplitude_max);
    }
    if (root.contains("train")) {
        const json& t = root.at("train");
        check_keys(t, "\"train\"",
                   {"model", "hidden", "epochs", "batch_size", "learning_rate", "beta1", "beta2",
                    "adam_epsilon", "max_sparsity", "precision"});
        read_key(t, "model", cfg.train.model);
        read_key(t, "hidden", cfg.train.hidden);
        read_key(t, "epochs", cfg.train.epochs);
        read_key(t, "batch_size", cfg.train.batch_size);
        read_key(t, "learning_rate", cfg.train.learning_rate);
        read_key(t, "beta1", cfg.train.beta1);
        read_key(t, "beta2", cfg.train.beta2);
        read_key(t, "adam_epsilon", cfg.train.adam_epsilon);
        read_key(t, "max_sparsity", cfg.train.max_sparsity);
        read_key(t, "precision", cfg.train.precision);
        if (cfg.train.model != "augmented" && cfg.train.model != "mlp_baseline")
            throw sladoa::config_error(
                "config: \"train.model\" must be \"augmented\" or \"mlp_baseline\"");
        if (cfg.train.precision != "float64" && cfg.train.precision != "float32")
            throw sladoa::config_error(
                "config: \"train.precision\" must be \"float64\" or \"float32\"");
    }
    if (root.contains("eval")) {
        const json& e = root.at("eval");
        check_keys(e, "\"eval\"",
                   {"trials", "snr_levels_db", "estimators", "geometries", "sla_sparsity",
                    "iaa_iters", "delta_deg", "hitrate_snr_db", "timing", "timing_trials",
                    "timing_warmup"});
        read_key(e, "trials", cfg.eval.trials);
        read_key(e, "snr_levels_db", cfg.eval.snr_levels_db);
        read_key(e, "estimators", cfg.eval.estimators);
        read_key(e, "geometries", cfg.eval.geometries);
        read_key(e, "sla_sparsity", cfg.eval.sla_sparsity);
        read_key(e, "iaa_iters", cfg.eval.iaa_iters);
        read_key(e, "delta_deg", cfg.eval.delta_deg);
        read_key(e, "hitrate_snr_db", cfg.eval.hitrate_snr_db);
        read_key(e, "timing", cfg.eval.timing);
        read_key(e, "timing_trials", cfg.eval.timing_trials);
        read_key(e, "timing_warmup", cfg.eval.timing_warmup);
    }
    if (root.contains("report")) {
        const json& r = root.at("report");
        check_keys(r, "\"report\"",
                   {"angle_a_deg", "angle_b_deg", "phase_b_rad", "snr_db", "sla_count"});
        read_key(r, "angle_a_deg", cfg.report.angle_a_deg);
        read_key(r, "angle_b_deg", cfg.report.angle_b_deg);
        read_key(r, "phase_b_rad", cfg.report.phase_b_rad);
        if (r.contains("snr_db")) cfg.report.snr_db = read_snr(r.at("snr_db"), "report.snr_db");
        read_key(r, "sla_count", cfg.report.sla_count);
    }
    return cfg;
}

json config_echo(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["out_dir"] = cfg.out_dir;
    j["grid"] = {{"min_deg", cfg.grid.min_deg},
                 {"max_deg", cfg.grid.max_deg},
                 {"step_deg", cfg.grid.step_deg}};
    j["array"] = {{"elements", cfg.array.elements},
                  {"spacing_wavelengths", cfg.array.spacing_wavelengths}};
    j["dataset"] = {{"train_count", cfg.dataset.train_count},
                    {"val_per_level", cfg.dataset.val_per_level},
                    {"snr_levels_db", cfg.dataset.snr_levels_db},
                    {"k_min", cfg.dataset.k_min},
                    {"k_max", cfg.dataset.k_max},
                    {"amplitude_min", cfg.dataset.amplitude_min},
                    {"amplitude_max", cfg.dataset.amplitude_max}};
    j["train"] = {{"model", cfg.train.model},
                  {"hidden", cfg.train.hidden},
                  {"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"learning_rate", cfg.train.learning_rate},
                  {"beta1", cfg.train.beta1},
                  {"beta2", cfg.train.beta2},
                  {"adam_epsilon", cfg.train.adam_epsilon},
                  {"max_sparsity", cfg.train.max_sparsity},
                  {"precision", cfg.train.precision}};
    j["eval"] = {{"trials", cfg.eval.trials},
                 {"snr_levels_db", cfg.eval.snr_levels_db},
                 {"estimators", cfg.eval.estimators},
                 {"geometries", cfg.eval.geometries},
                 {"sla_sparsity", cfg.eval.sla_sparsity},
                 {"iaa_iters", cfg.eval.iaa_iters},
                 {"delta_deg", cfg.eval.delta_deg},
                 {"hitrate_snr_db", cfg.eval.hitrate_snr_db},
                 {"timing", cfg.eval.timing},
                 {"timing_trials", cfg.eval.timing_trials},
                 {"timing_warmup", cfg.eval.timing_warmup}};
    j["report"] = {{"angle_a_deg", cfg.report.angle_a_deg},
                   {"angle_b_deg", cfg.report.angle_b_deg},
                   {"phase_b_rad", cfg.report.phase_b_rad},
                   {"snr_db", std::isinf(cfg.report.snr_db) ? json("inf") : json(cfg.report.snr_db)},
                   {"sla_count", cfg.report.sla_count}};
    return j;
}

struct FlagOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
    std::optional<int> count;
    std::optional<int> epochs;
    std::optional<int> batch;
    std::optional<double> lr;
    std::optional<double> max_sparsity;
    std::optional<int> trials;
    std::vector<double> snr;
    std::vector<std::string> estimators;
    std::optional<std::string> model;
};

RunConfig effective_config(const std::string& config_path, const FlagOverrides& f,
                           const std::string& active_command) {
    json root = json::object();
    if (!config_path.empty()) {
        const std::string text = sladoa::read_text_file(config_path);
        try {
            root = json::parse(text);
        } catch (const json::exception& e) {
            throw sladoa::config_error("config file " + config_path + ": " + e.what());
        }
        if (!root.is_object())
            throw sladoa::config_error("config file " + config_path + ": top level must be an object");
    }
    RunConfig cfg = parse_config_json(root);
    if (f.seed) cfg.seed = *f.seed;
    if (f.threads) cfg.threads = *f.threads;
    if (f.out) cfg.out_dir = *f.out;
    if (f.count) cfg.dataset.train_count = *f.count;
    if (f.epochs) cfg.train.epochs = *f.epochs;
    if (f.batch) cfg.train.batch_size = *f.batch;
    if (f.lr) cfg.train.learning_rate = *f.lr;
    if (f.max_sparsity) {
        cfg.train.max_sparsity = *f.max_sparsity;
        cfg.eval.sla_sparsity = *f.max_sparsity;
    }
    if (f.trials) cfg.eval.trials = *f.trials;
    if (!f.snr.empty()) {
        if (active_command == "dataset")
            cfg.dataset.snr_levels_db = f.snr;
        else
            cfg.eval.snr_levels_db = f.snr;
    }
    if (!f.estimators.empty()) cfg.eval.estimators = f.estimators;
    if (f.model) cfg.train.model = *f.model;
    if (f.model && *f.model != "augmented" && *f.model != "mlp_baseline")
        throw sladoa::config_error("--model must be \"augmented\" or \"mlp_baseline\"");
    return cfg;
}

sladoa::ScanGrid make_grid(const RunConfig& cfg) {
    try {
        return sladoa::ScanGrid(cfg.grid.min_deg, cfg.grid.max_deg, cfg.grid.step_deg);
    } catch (const sladoa::error& e) {
        throw sladoa::config_error(std::string("config: bad grid: ") + e.what());
    }
}

sladoa::ArrayGeometry make_array(const RunConfig& cfg) {
    try {
        return sladoa::ArrayGeometry::ula(cfg.array.elements, cfg.array.spacing_wavelengths);
    } catch (const sladoa::error& e) {
        throw sladoa::config_error(std::string("config: bad array: ") + e.what());
    }
}

fs::path prepare_out_dir(const RunConfig& cfg) {
    fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw sladoa::io_error("cannot create output directory " + dir.string());
    return dir;
}

sladoa::Precision parse_precision(const std::string& name) {
    return name == "float32" ? sladoa::Precision::float32 : sladoa::Precision::float64;
}

// ---- dataset ----------------------------------------------------------

int run_dataset(const RunConfig& cfg) {
    const auto grid = make_grid(cfg);
    const auto geometry = make_array(cfg);
    const auto dir = prepare_out_dir(cfg);

    sladoa::DatasetConfig dcfg = cfg.dataset;
    dcfg.threads = cfg.threads;
    const auto dataset = sladoa::generate_dataset(dcfg, geometry, grid, cfg.seed);
    const auto path = dir / "dataset.bin";
    sladoa::save_dataset(path, dataset, config_echo(cfg));

    std::vector<int> per_k(static_cast<std::size_t>(dcfg.k_max) + 1, 0);
    std::map<double, int> per_snr;
    for (int i = 0; i < dataset.train_count; ++i) {
        const auto& scene = dataset.scenes[static_cast<std::size_t>(i)];
        ++per_k[static_cast<std::size_t>(scene.source_count())];
        ++per_snr[scene.snr_db];
    }
    std::cout << "dataset: " << dataset.count() << " samples (" << dataset.train_count
              << " train, " << dataset.val_count << " validation) -> " << path.string() << "\n";
    for (int k = dcfg.k_min; k <= dcfg.k_max; ++k)
        std::cout << "  train K=" << k << ": " << per_k[static_cast<std::size_t>(k)] << "\n";
    for (const auto& [snr, count] : per_snr)
        std::cout << "  train SNR " << snr << " dB: " << count << "\n";
    std::cout << "  validation: " << cfg.dataset.val_per_level << " per SNR level\n";
    return 0;
}

// ---- train -------------------------------------------------------------

int run_train(const RunConfig& cfg, const std::string& dataset_path) {
    const auto dir = prepare_out_dir(cfg);
    const auto dataset = sladoa::load_dataset(dataset_path);

    sladoa::Architecture arch =
        cfg.train.model == "augmented"
            ? sladoa::Architecture::proposed(dataset.geometry.size(), cfg.train.hidden,
                                             dataset.grid.size())
            : sladoa::Architecture::baseline(dataset.geometry.size(), dataset.grid.size());
    sladoa::ModelParams init = sladoa::ModelParams::initialized(arch, cfg.seed);

    sladoa::TrainConfig tcfg;
    tcfg.epochs = cfg.train.epochs;
    tcfg.batch_size = cfg.train.batch_size;
    tcfg.learning_rate = cfg.train.learning_rate;
    tcfg.beta1 = cfg.train.beta1;
    tcfg.beta2 = cfg.train.beta2;
    tcfg.adam_epsilon = cfg.train.adam_epsilon;
    tcfg.max_sparsity = cfg.train.max_sparsity;
    tcfg.seed = cfg.seed;
    tcfg.precision = parse_precision(cfg.train.precision);
    tcfg.threads = cfg.threads;

    std::cout << "training " << cfg.train.model << " (" << sladoa::count_parameters(init)
              << " parameters) on " << dataset.train_count << " samples, " << cfg.train.epochs
              << " epochs\n";
    sladoa::TrainResult result = sladoa::train(dataset, init, tcfg);

    json info = result.params.training_info();
    info["dataset"] = {{"path", dataset_path},
                       {"seed", dataset.seed},
                       {"train_count", dataset.train_count},
                       {"val_count", dataset.val_count}};
    info["config"] = config_echo(cfg);
    result.params.set_training_info(std::move(info));

    const auto ckpt_path = dir / "checkpoint.bin";
    sladoa::save_checkpoint(ckpt_path, result.params);

    std::string log = "epoch,train_loss,val_loss\n";
    for (const auto& row : result.log)
        log += std::to_string(row.epoch) + ',' + sladoa::format_double(row.train_loss) + ',' +
               sladoa::format_double(row.val_loss) + '\n';
    sladoa::write_text_file(dir / "training_log.csv", log);

    std::cout << "best epoch " << result.best_epoch << " (validation loss "
              << result.best_val_loss << ") -> " << ckpt_path.string() << "\n";
    return 0;
}

// ---- eval --------------------------------------------------------------

struct EstimatorSet {
    std::vector<std::unique_ptr<sladoa::Estimator>> owned;
    std::vector<const sladoa::Estimator*> ordered;
};

EstimatorSet build_estimators(const RunConfig& cfg, const sladoa::ArrayGeometry& geometry,
                              const sladoa::ScanGrid& grid, const std::string& checkpoint,
                              const std::string& mlp_checkpoint) {
    EstimatorSet set;
    for (const auto& id : cfg.eval.estimators) {
        std::unique_ptr<sladoa::Estimator> est;
        if (id == "dbf") {
            est = sladoa::make_dbf_estimator(grid);
        } else if (id == "iaa") {
            est = sladoa::make_iaa_estimator(grid, cfg.eval.iaa_iters);
        } else if (id == "network") {
            if (checkpoint.empty())
                throw sladoa::config_error("estimator \"network\" requires --checkpoint");
            est = sladoa::make_network_estimator(sladoa::load_checkpoint(checkpoint), geometry,
                                                 grid, "network");
        } else if (id == "mlp") {
            if (mlp_checkpoint.empty())
                throw sladoa::config_error("estimator \"mlp\" requires --mlp-checkpoint");
            est = sladoa::make_network_estimator(sladoa::load_checkpoint(mlp_checkpoint),
                                                 geometry, grid, "mlp");
        } else if (id == "oracle") {
            est = sladoa::make_oracle_estimator(grid);
        } else {
            throw sladoa::config_error("unknown estimator \"" + id +
                                       "\" (expected dbf, iaa, network, mlp, or oracle)");
        }
        set.ordered.push_back(est.get());
        set.owned.push_back(std::move(est));
    }
    if (set.ordered.empty()) throw sladoa::config_error("no estimators selected");
    return set;
}

int run_eval(const RunConfig& cfg, const std::string& checkpoint,
             const std::string& mlp_checkpoint) {
    const auto grid = make_grid(cfg);
    const auto geometry = make_array(cfg);
    const auto dir = prepare_out_dir(cfg);
    EstimatorSet set = build_estimators(cfg, geometry, grid, checkpoint, mlp_checkpoint);

    for (const auto& g : cfg.eval.geometries)
        if (g != "ula" && g != "sla")
            throw sladoa::config_error("unknown geometry policy \"" + g +
                                       "\" (expected ula or sla)");

    const double floor = sladoa::grid_mse_floor(grid);
    std::vector<sladoa::AccuracyRow> accuracy;
    const std::vector<std::pair<std::string, sladoa::ScenePolicy>> scenes = {
        {"single", sladoa::ScenePolicy::single_offgrid},
        {"two", sladoa::ScenePolicy::two_offgrid}};

    for (const auto& geom : cfg.eval.geometries) {
        for (const auto& [scene_name, scene_policy] : scenes) {
            for (const double snr : cfg.eval.snr_levels_db) {
                sladoa::AccuracyRow floor_row;
                floor_row.estimator = "grid_floor";
                floor_row.geometry = geom;
                floor_row.scene = scene_name;
                floor_row.snr_db = snr;
                floor_row.summary.trials = 0;
                floor_row.summary.mse_deg2 = floor;
                floor_row.summary.hit_rate = 1.0;
                accuracy.push_back(floor_row);

                sladoa::TrialSpec spec;
                spec.geometry_policy = geom == "ula" ? sladoa::GeometryPolicy::fixed
                                                     : sladoa::GeometryPolicy::random_sla;
                spec.sla_sparsity = cfg.eval.sla_sparsity;
                spec.scene_policy = scene_policy;
                spec.snr_db = snr;
                spec.trials = cfg.eval.trials;
                spec.seed = cfg.seed;
                for (const auto* est : set.ordered) {
                    sladoa::AccuracyRow row;
                    row.estimator = est->name();
                    row.geometry = geom;
                    row.scene = scene_name;
                    row.snr_db = snr;
                    row.summary =
                        sladoa::evaluate_accuracy(spec, *est, geometry, grid, cfg.threads);
                    accuracy.push_back(std::move(row));
                }
                std::cout << "accuracy " << geom << "/" << scene_name << " @ " << snr
                          << " dB done\n";
            }
        }
    }

    std::vector<sladoa::HitRateRow> hitrate;
    for (const auto& geom : cfg.eval.geometries) {
        for (const double delta : cfg.eval.delta_deg) {
            sladoa::TrialSpec spec;
            spec.geometry_policy = geom == "ula" ? sladoa::GeometryPolicy::fixed
                                                 : sladoa::GeometryPolicy::random_sla;
            spec.sla_sparsity = cfg.eval.sla_sparsity;
            spec.scene_policy = sladoa::ScenePolicy::symmetric_pair;
            spec.delta_deg = delta;
            spec.snr_db = cfg.eval.hitrate_snr_db;
            spec.trials = cfg.eval.trials;
            spec.seed = cfg.seed;
            for (const auto* est : set.ordered) {
                sladoa::HitRateRow row;
                row.estimator = est->name();
                row.geometry = geom;
                row.delta_deg = delta;
                row.snr_db = cfg.eval.hitrate_snr_db;
                row.summary = sladoa::evaluate_accuracy(spec, *est, geometry, grid, cfg.threads);
                hitrate.push_back(std::move(row));
            }
            std::cout << "hit rate " << geom << " @ delta " << delta << " deg done\n";
        }
    }

    sladoa::write_text_file(dir / "accuracy.csv", sladoa::accuracy_csv(accuracy, floor));
    sladoa::write_text_file(dir / "hitrate.csv", sladoa::hitrate_csv(hitrate));

    // Timing is environment-dependent measurement; it goes in its own file so
    // the deterministic artifacts stay byte-reproducible.
    if (cfg.eval.timing) {
        std::vector<const sladoa::Estimator*> timed;
        for (const auto* est : set.ordered)
            if (est->has_spectrum()) timed.push_back(est);
        if (!timed.empty()) {
            const auto rows =
                sladoa::timing_benchmark(timed, geometry, grid, cfg.eval.timing_trials,
                                         cfg.eval.timing_warmup, 20.0, cfg.seed);
            sladoa::write_text_file(dir / "timing.csv", sladoa::timing_csv(rows));
            for (const auto& r : rows)
                std::cout << "timing " << r.name << ": " << r.mean_seconds * 1e3 << " ms mean ("
                          << r.parameter_count << " parameters)\n";
        }
    }

    json report;
    report["format"] = "sladoa-eval-report";
    report["version"] = 1;
    report["seed"] = cfg.seed;
    report["config"] = config_echo(cfg);
    report["grid_floor_mse_deg2"] = floor;
    json acc = json::array();
    for (const auto& r : accuracy)
        acc.push_back({{"estimator", r.estimator},
                       {"geometry", r.geometry},
                       {"scene", r.scene},
                       {"snr_db", r.snr_db},
                       {"trials", r.summary.trials},
                       {"mse_deg2", r.summary.mse_deg2},
                       {"mse_std_error", r.summary.mse_std_error},
                       {"hit_rate", r.summary.hit_rate},
                       {"hit_std_error", r.summary.hit_std_error}});
    report["accuracy"] = std::move(acc);
    json hits = json::array();
    for (const auto& r : hitrate)
        hits.push_back({{"estimator", r.estimator},
                        {"geometry", r.geometry},
                        {"delta_deg", r.delta_deg},
                        {"snr_db", r.snr_db},
                        {"trials", r.summary.trials},
                        {"hit_rate", r.summary.hit_rate},
                        {"hit_std_error", r.summary.hit_std_error},
                        {"mse_deg2", r.summary.mse_deg2}});
    report["hit_rate"] = std::move(hits);
    report["artifacts"] = {{"accuracy_csv", "accuracy.csv"},
                           {"hitrate_csv", "hitrate.csv"},
                           {"timing_csv", cfg.eval.timing ? json("timing.csv") : json(nullptr)}};
    sladoa::write_text_file(dir / "report.json", report.dump() + "\n");
    std::cout << "report -> " << (dir / "report.json").string() << "\n";
    return 0;
}

// ---- infer -------------------------------------------------------------

Eigen::VectorXcd read_snapshot_csv(const std::string& path) {
    const std::string text = sladoa::read_text_file(path);
    std::vector<std::string> lines;
    std::string cur;
    for (const char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) {
        if (cur.back() == '\r') cur.pop_back();
        lines.push_back(cur);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();

    if (lines.empty()) throw sladoa::io_error("snapshot CSV " + path + " is empty");
    if (lines[0] != "re,im")
        throw sladoa::io_error("snapshot CSV line 1: expected header \"re,im\", found \"" +
                               lines[0] + "\"");
    if (lines.size() < 2) throw sladoa::io_error("snapshot CSV " + path + " has no data rows");

    auto parse_field = [&](const std::string& field, std::size_t line_no) {
        double value = 0.0;
        const char* begin = field.data();
        const char* end = begin + field.size();
        const auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc() || ptr != end)
            throw sladoa::io_error("snapshot CSV line " + std::to_string(line_no) +
                                   ": cannot parse \"" + field + "\" as a number");
        if (!std::isfinite(value))
            throw sladoa::io_error("snapshot CSV line " + std::to_string(line_no) +
                                   ": non-finite value");
        return value;
    };

    Eigen::VectorXcd values(static_cast<Eigen::Index>(lines.size()) - 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw sladoa::io_error("snapshot CSV line " + std::to_string(i + 1) +
                                   ": expected exactly two comma-separated fields");
        values[static_cast<Eigen::Index>(i - 1)] = std::complex<double>(
            parse_field(line.substr(0, comma), i + 1), parse_field(line.substr(comma + 1), i + 1));
    }
    return values;
}

std::vector<int> infer_mask_flags(const Eigen::VectorXcd& values, int n_active) {
    const int n = static_cast<int>(values.size());
    std::vector<int> flags(static_cast<std::size_t>(n), 0);
    if (n_active > 0) {
        if (n_active > n)
            throw sladoa::config_error("--n-active exceeds the snapshot length " +
                                       std::to_string(n));
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return std::abs(values[a]) > std::abs(values[b]);
        });
        for (int i = 0; i < n_active; ++i) flags[static_cast<std::size_t>(order[i])] = 1;
        return flags;
    }
    const double scale = values.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i)
        if (std::abs(values[i]) > 1e-6 * scale) flags[static_cast<std::size_t>(i)] = 1;
    return flags;
}

int run_infer(const RunConfig& cfg, const std::string& checkpoint, const std::string& input,
              int k, int n_active) {
    const auto grid = make_grid(cfg);
    const auto geometry = make_array(cfg);
    const auto dir = prepare_out_dir(cfg);

    sladoa::ModelParams params = sladoa::load_checkpoint(checkpoint);
    Eigen::VectorXcd values = read_snapshot_csv(input);
    if (values.size() != params.arch().n_elements)
        throw sladoa::io_error("snapshot has " + std::to_string(values.size()) +
                               " elements but the model expects " +
                               std::to_string(params.arch().n_elements));
    if (values.cwiseAbs().maxCoeff() <= 0.0)
        throw sladoa::numeric_error("snapshot is identically zero");

    const auto flags = infer_mask_flags(values, n_active);
    for (int i = 0; i < values.size(); ++i)
        if (!flags[static_cast<std::size_t>(i)]) values[i] = 0.0;
    const sladoa::Snapshot snapshot{values, geometry.with_mask(flags)};

    const auto estimator =
        sladoa::make_network_estimator(std::move(params), geometry, grid, "network");
    const sladoa::Spectrum spectrum = estimator->spectrum(snapshot);

    std::string csv = "angle_deg,value\n";
    for (int m = 0; m < grid.size(); ++m)
        csv += sladoa::format_double(grid.angle(m)) + ',' +
               sladoa::format_double(spectrum.values[m]) + '\n';
    sladoa::write_text_file(dir / "spectrum.csv", csv);

    const auto peaks = sladoa::peak_search(spectrum, k);
    std::cout << "active elements: " << snapshot.geometry.active_count() << " of "
              << snapshot.geometry.size() << (n_active > 0 ? " (forced)" : " (auto threshold)")
              << "\n";
    for (std::size_t i = 0; i < peaks.size(); ++i)
        std::cout << "peak " << i + 1 << ": " << peaks[i] << " deg (value "
                  << spectrum.values[grid.index_of(peaks[i])] << ")\n";
    std::cout << "spectrum -> " << (dir / "spectrum.csv").string() << "\n";
    return 0;
}

// ---- import-real -------------------------------------------------------

int run_import(const RunConfig& cfg, const std::string& input, int synthesize) {
    const auto dir = prepare_out_dir(cfg);
    std::string path = input;
    if (synthesize > 0) {
        const auto geometry = make_array(cfg);
        const auto demo = sladoa::make_demo_capture(synthesize, geometry, 40.0, cfg.seed);
        const auto demo_path = dir / "capture_demo.bin";
        sladoa::save_capture(demo_path, demo.records, demo.angles_deg, config_echo(cfg));
        std::cout << "synthesized stand-in capture -> " << demo_path.string() << "\n";
        path = demo_path.string();
    }
    if (path.empty())
        throw sladoa::config_error("import-real needs --in FILE (or --synthesize N)");

    const sladoa::ImportedCapture capture = sladoa::import_real(path);
    int min_active = capture.n_elements, max_active = 0;
    for (const int a : capture.active_counts) {
        min_active = std::min(min_active, a);
        max_active = std::max(max_active, a);
    }
    double min_angle = 0.0, max_angle = 0.0;
    if (!capture.angles_deg.empty()) {
        min_angle = *std::min_element(capture.angles_deg.begin(), capture.angles_deg.end());
        max_angle = *std::max_element(capture.angles_deg.begin(), capture.angles_deg.end());
    }
    std::cout << "imported " << capture.records.cols() << " records of " << capture.n_elements
              << " elements; angle tags " << min_angle << " to " << max_angle
              << " deg; active elements " << min_active << " to " << max_active << "\n";

    const auto out_path = dir / "capture_normalized.bin";
    sladoa::save_capture(out_path, capture.records, capture.angles_deg, config_echo(cfg));
    std::cout << "normalized capture -> " << out_path.string() << "\n";
    return 0;
}

// ---- report ------------------------------------------------------------

json maxima_analysis(const sladoa::ShowcaseTable& table, double angle_a, double angle_b) {
    json out = json::array();
    for (std::size_t e = 0; e < table.names.size(); ++e) {
        const auto maxima = sladoa::local_maxima(table.spectra[e]);
        std::vector<double> angles;
        angles.reserve(maxima.size());
        for (const int m : maxima) angles.push_back(table.grid.angle(m));
        auto near = [&](double target) {
            return std::any_of(angles.begin(), angles.end(),
                               [&](double a) { return std::abs(a - target) <= 1.0 + 1e-12; });
        };
        int in_window = 0;
        for (const double a : angles)
            if (a >= angle_a - 2.0 && a <= angle_b + 2.0) ++in_window;
        out.push_back({{"estimator", table.names[e]},
                       {"local_maxima_deg", angles},
                       {"maxima_in_window", in_window},
                       {"resolves_both", near(angle_a) && near(angle_b)}});
    }
    return out;
}

int run_report(const RunConfig& cfg, const std::string& checkpoint,
               const std::string& mlp_checkpoint, const std::string& capture_path) {
    const auto grid = make_grid(cfg);
    const auto geometry = make_array(cfg);
    const auto dir = prepare_out_dir(cfg);
    if (checkpoint.empty()) throw sladoa::config_error("report requires --checkpoint");

    const double angle_a = cfg.report.angle_a_deg;
    const double angle_b = cfg.report.angle_b_deg;

    // The showcase snapshot is a superposition of two independently obtained
    // single-target measurements, synthetic by default, from a capture file
    // when one is provided.
    Eigen::VectorXcd superposed;
    if (!capture_path.empty()) {
        const auto capture = sladoa::import_real(capture_path);
        if (capture.n_elements != geometry.size())
            throw sladoa::io_error("capture has " + std::to_string(capture.n_elements) +
                                   " elements, config expects " + std::to_string(geometry.size()));
        auto nearest_record = [&](double target) {
            int best = 0;
            double best_err = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < capture.angles_deg.size(); ++i) {
                const double err = std::abs(capture.angles_deg[i] - target);
                if (err < best_err) {
                    best_err = err;
                    best = static_cast<int>(i);
                }
            }
            return best;
        };
        const int ia = nearest_record(angle_a);
        const int ib = nearest_record(angle_b);
        superposed = sladoa::superpose_measurements(
            {capture.records.col(ia), capture.records.col(ib)});
        std::cout << "superposing capture records at " << capture.angles_deg[ia] << " and "
                  << capture.angles_deg[ib] << " deg tags\n";
    } else {
        const sladoa::SourceScene scene_a{{angle_a}, {1.0}, {0.0}, cfg.report.snr_db};
        const sladoa::SourceScene scene_b{
            {angle_b}, {1.0}, {cfg.report.phase_b_rad}, cfg.report.snr_db};
        sladoa::RngStream rng_a(cfg.seed, sladoa::RngDomain::general, 101);
        sladoa::RngStream rng_b(cfg.seed, sladoa::RngDomain::general, 102);
        superposed = sladoa::superpose_measurements(
            {sladoa::synthesize_snapshot(geometry, scene_a, rng_a).values,
             sladoa::synthesize_snapshot(geometry, scene_b, rng_b).values});
    }

    RunConfig est_cfg = cfg;
    est_cfg.eval.estimators = {"dbf", "iaa", "network"};
    if (!mlp_checkpoint.empty()) est_cfg.eval.estimators.push_back("mlp");
    EstimatorSet set = build_estimators(est_cfg, geometry, grid, checkpoint, mlp_checkpoint);

    const std::vector<double> truth = {angle_a, angle_b};
    const sladoa::Snapshot full{superposed, geometry};
    const auto ula_table = sladoa::spectrum_showcase(full, set.ordered, truth);
    sladoa::write_text_file(dir / "showcase_ula.csv", sladoa::showcase_csv(ula_table));
    const json ula_analysis = maxima_analysis(ula_table, angle_a, angle_b);

    // Sparse variants: the same superposed snapshot with elements knocked
    // out, as if those antennas had failed after the capture.
    const int n = geometry.size();
    const int removals =
        static_cast<int>(std::floor(cfg.eval.sla_sparsity * static_cast<double>(n)));
    json sla_reports = json::array();
    json artifact_list = json::array();
    artifact_list.push_back("showcase_ula.csv");
    int network_resolved = 0;
    for (int i = 1; i <= cfg.report.sla_count; ++i) {
        sladoa::RngStream rng(cfg.seed, sladoa::RngDomain::general,
                              static_cast<std::uint64_t>(i));
        const auto removed = rng.distinct_indices(static_cast<std::size_t>(n),
                                                  static_cast<std::size_t>(removals));
        std::vector<int> flags(static_cast<std::size_t>(n), 1);
        for (const auto idx : removed) flags[idx] = 0;
        Eigen::VectorXcd masked = superposed;
        for (const auto idx : removed) masked[static_cast<Eigen::Index>(idx)] = 0.0;
        const sladoa::Snapshot snapshot{masked, geometry.with_mask(flags)};

        const auto table = sladoa::spectrum_showcase(snapshot, set.ordered, truth);
        const std::string filename = "showcase_sla_" + std::to_string(i) + ".csv";
        sladoa::write_text_file(dir / filename, sladoa::showcase_csv(table));
        artifact_list.push_back(filename);

        const json analysis = maxima_analysis(table, angle_a, angle_b);
        for (const auto& entry : analysis)
            if (entry.at("estimator") == "network" && entry.at("resolves_both").get<bool>())
                ++network_resolved;
        std::vector<int> removed_out(removed.begin(), removed.end());
        std::sort(removed_out.begin(), removed_out.end());
        sla_reports.push_back({{"sla_index", i},
                               {"removed_elements", removed_out},
                               {"active_elements", n - removals},
                               {"estimators", analysis}});
    }

    json report;
    report["format"] = "sladoa-showcase-report";
    report["version"] = 1;
    report["seed"] = cfg.seed;
    report["config"] = config_echo(cfg);
    report["truth_angles_deg"] = truth;
    report["source"] = capture_path.empty() ? json("synthetic") : json(capture_path);
    report["ula"] = {{"estimators", ula_analysis}};
    report["sla"] = std::move(sla_reports);
    report["network_resolved_slas"] = network_resolved;
    report["artifacts"] = std::move(artifact_list);
    sladoa::write_text_file(dir / "report.json", report.dump() + "\n");

    for (const auto& entry : ula_analysis)
        std::cout << "ula " << entry.at("estimator").get<std::string>() << ": "
                  << entry.at("local_maxima_deg").size() << " local maxima, resolves both: "
                  << (entry.at("resolves_both").get<bool>() ? "yes" : "no") << "\n";
    std::cout << "network resolved " << network_resolved << " of " << cfg.report.sla_count
              << " sparse variants\n";
    std::cout << "report -> " << (dir / "report.json").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-snapshot direction finding on sparse linear arrays"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    FlagOverrides flags;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed", flags.seed, "master seed (overrides config)");
    app.add_option("--threads", flags.threads, "worker thread count");
    app.add_option("--out", flags.out, "output directory");

    auto* cmd_dataset = app.add_subcommand("dataset", "generate a labeled training dataset");
    cmd_dataset->add_option("--count", flags.count, "training sample count");
    cmd_dataset->add_option("--snr", flags.snr, "SNR levels in dB")->delimiter(',');

    auto* cmd_train = app.add_subcommand("train", "train an estimator on a dataset");
    std::string dataset_path;
    cmd_train->add_option("--dataset", dataset_path, "dataset file")->required();
    cmd_train->add_option("--model", flags.model, "augmented | mlp_baseline");
    cmd_train->add_option("--epochs", flags.epochs, "training epochs");
    cmd_train->add_option("--batch", flags.batch, "mini-batch size");
    cmd_train->add_option("--lr", flags.lr, "Adam learning rate");
    cmd_train->add_option("--max-sparsity", flags.max_sparsity,
                          "augmentation mask sparsity ceiling");

    auto* cmd_eval = app.add_subcommand("eval", "Monte-Carlo accuracy, hit-rate, and timing");
    std::string checkpoint_path, mlp_checkpoint_path;
    cmd_eval->add_option("--checkpoint", checkpoint_path, "trained model checkpoint");
    cmd_eval->add_option("--mlp-checkpoint", mlp_checkpoint_path, "baseline model checkpoint");
    cmd_eval->add_option("--trials", flags.trials, "Monte-Carlo trials per condition");
    cmd_eval->add_option("--snr", flags.snr, "SNR sweep in dB")->delimiter(',');
    cmd_eval->add_option("--estimators", flags.estimators,
                         "estimators to run (dbf, iaa, network, mlp, oracle)")
        ->delimiter(',');

    auto* cmd_infer = app.add_subcommand("infer", "run one snapshot through a trained model");
    std::string infer_in;
    int infer_k = 2;
    int infer_n_active = 0;
    cmd_infer->add_option("--checkpoint", checkpoint_path, "trained model checkpoint")
        ->required();
    cmd_infer->add_option("--in", infer_in, "snapshot CSV (header re,im)")->required();
    cmd_infer->add_option("--k", infer_k, "number of peaks to report")
        ->check(CLI::PositiveNumber);
    auto* n_active_opt = cmd_infer->add_option(
        "--n-active", infer_n_active, "treat exactly the N largest-magnitude elements as active");
    auto* auto_thresh_opt = cmd_infer->add_flag(
        "--auto-threshold", "infer active elements by magnitude threshold (default)");
    n_active_opt->excludes(auto_thresh_opt);

    auto* cmd_import = app.add_subcommand("import-real", "validate and normalize a capture file");
    std::string import_in;
    int synthesize = 0;
    cmd_import->add_option("--in", import_in, "capture file");
    cmd_import->add_option("--synthesize", synthesize,
                           "generate an N-record stand-in capture instead of reading one");

    auto* cmd_report = app.add_subcommand("report", "two-target resolution showcase");
    std::string capture_path;
    cmd_report->add_option("--checkpoint", checkpoint_path, "trained model checkpoint")
        ->required();
    cmd_report->add_option("--mlp-checkpoint", mlp_checkpoint_path, "baseline model checkpoint");
    cmd_report->add_option("--capture", capture_path, "superpose records from this capture file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        const std::string active = app.get_subcommands().front()->get_name();
        const RunConfig cfg = effective_config(config_path, flags, active);
        if (*cmd_dataset) return run_dataset(cfg);
        if (*cmd_train) return run_train(cfg, dataset_path);
        if (*cmd_eval) return run_eval(cfg, checkpoint_path, mlp_checkpoint_path);
        if (*cmd_infer) return run_infer(cfg, checkpoint_path, infer_in, infer_k, infer_n_active);
        if (*cmd_import) return run_import(cfg, import_in, synthesize);
        if (*cmd_report) return run_report(cfg, checkpoint_path, mlp_checkpoint_path, capture_path);
        return 2;
    } catch (const sladoa::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const sladoa::io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const sladoa::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
