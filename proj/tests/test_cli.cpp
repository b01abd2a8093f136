#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "sladoa/array_signal.hpp"
#include "sladoa/io.hpp"

using namespace sladoa;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout followed by stderr
};

fs::path temp_dir() {
    const auto dir = fs::temp_directory_path() / "sladoa_test_cli";
    fs::create_directories(dir);
    return dir;
}

RunResult run(const std::string& args) {
    const auto log = temp_dir() / "last_run.log";
    const std::string cmd = std::string(SLADOA_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.output = read_text_file(log);
    return r;
}

std::string file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_snapshot_csv(const fs::path& path, const Eigen::VectorXcd& y) {
    std::string text = "re,im\n";
    for (Eigen::Index i = 0; i < y.size(); ++i)
        text += format_double(y[i].real()) + ',' + format_double(y[i].imag()) + '\n';
    write_text_file(path, text);
}

/// Shared fixture: config, dataset, and a small trained checkpoint, built
/// once through the real CLI.
struct Workspace {
    fs::path dir = temp_dir() / "ws";
    fs::path config = dir / "config.json";
    fs::path dataset = dir / "data" / "dataset.bin";
    fs::path checkpoint = dir / "model" / "checkpoint.bin";

    Workspace() {
        fs::create_directories(dir);
        write_text_file(config, R"({
  "dataset": {"train_count": 60, "val_per_level": 10, "snr_levels_db": [20.0, 30.0]},
  "train": {"hidden": 32, "epochs": 3, "batch_size": 16, "learning_rate": 0.001},
  "eval": {"trials": 8, "snr_levels_db": [10.0], "estimators": ["dbf"],
           "delta_deg": [2.0, 10.0], "timing": false}
})");
    }

    void build_dataset() {
        if (fs::exists(dataset)) return;
        const auto r = run("--config " + config.string() + " --seed 5 --out " +
                           dataset.parent_path().string() + " dataset");
        REQUIRE(r.exit_code == 0);
        REQUIRE(fs::exists(dataset));
    }

    void build_checkpoint() {
        build_dataset();
        if (fs::exists(checkpoint)) return;
        const auto r = run("--config " + config.string() + " --seed 5 --out " +
                           checkpoint.parent_path().string() + " train --dataset " +
                           dataset.string());
        REQUIRE(r.exit_code == 0);
        REQUIRE(fs::exists(checkpoint));
    }
};

Workspace& workspace() {
    static Workspace ws;
    return ws;
}

} // namespace

TEST_CASE("help and usage errors") {
    CHECK(run("--help").exit_code == 0);
    CHECK(run("dataset --help").exit_code == 0);
    CHECK(run("").exit_code == 2);                  // a subcommand is required
    CHECK(run("dataset --nonsense 3").exit_code == 2);
    CHECK(run("frobnicate").exit_code == 2);
}

TEST_CASE("config file problems exit with code 2 and a diagnostic") {
    const auto dir = temp_dir();

    const auto bad_json = dir / "bad.json";
    write_text_file(bad_json, "{\"seed\": ");
    auto r = run("--config " + bad_json.string() + " dataset");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("config error") != std::string::npos);

    const auto unknown_key = dir / "unknown.json";
    write_text_file(unknown_key, R"({"train": {"hiden": 64}})");
    r = run("--config " + unknown_key.string() + " dataset");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("hiden") != std::string::npos);

    r = run("--config " + (dir / "does_not_exist.json").string() + " dataset");
    CHECK(r.exit_code == 3);
}

TEST_CASE("dataset generation is reproducible") {
    auto& ws = workspace();
    ws.build_dataset();
    const auto first = file_bytes(ws.dataset);

    // Rerunning with identical config and seed overwrites with identical bytes.
    const auto rerun = run("--config " + ws.config.string() + " --seed 5 --out " +
                           ws.dataset.parent_path().string() + " dataset");
    REQUIRE(rerun.exit_code == 0);
    CHECK(file_bytes(ws.dataset) == first);
    CHECK(rerun.output.find("dataset:") != std::string::npos);

    // A different destination changes only the echoed out_dir, not the data.
    const auto second = ws.dir / "data2";
    const auto r = run("--config " + ws.config.string() + " --seed 5 --out " + second.string() +
                       " dataset");
    REQUIRE(r.exit_code == 0);
    auto a = read_container(ws.dataset);
    auto b = read_container(second / "dataset.bin");
    CHECK(a.payload == b.payload);
    a.manifest["config"].erase("out_dir");
    b.manifest["config"].erase("out_dir");
    CHECK(a.manifest == b.manifest);

    // A different seed changes the samples.
    const auto third = ws.dir / "data3";
    const auto other =
        run("--config " + ws.config.string() + " --seed 6 --out " + third.string() + " dataset");
    REQUIRE(other.exit_code == 0);
    CHECK(a.payload != read_container(third / "dataset.bin").payload);
}

TEST_CASE("train writes a checkpoint and a per-epoch log") {
    auto& ws = workspace();
    ws.build_checkpoint();

    const auto log = read_text_file(ws.checkpoint.parent_path() / "training_log.csv");
    CHECK(log.rfind("epoch,train_loss,val_loss\n", 0) == 0);
    CHECK(std::count(log.begin(), log.end(), '\n') == 4); // header + 3 epochs

    const auto missing = run("--config " + ws.config.string() + " --out " +
                             (ws.dir / "t2").string() + " train --dataset " +
                             (ws.dir / "no_such_dataset.bin").string());
    CHECK(missing.exit_code == 3);
}

TEST_CASE("infer renders the spectrum and reports peaks") {
    auto& ws = workspace();
    ws.build_checkpoint();
    const auto g = ArrayGeometry::ula(10);

    const auto csv = ws.dir / "snapshot.csv";
    write_snapshot_csv(csv, steering_vector(g, 10.0));

    const auto out = ws.dir / "infer";
    const auto r = run("--out " + out.string() + " infer --checkpoint " + ws.checkpoint.string() +
                       " --in " + csv.string() + " --k 1");
    REQUIRE(r.exit_code == 0);
    const auto spectrum = read_text_file(out / "spectrum.csv");
    CHECK(spectrum.rfind("angle_deg,value\n", 0) == 0);
    CHECK(std::count(spectrum.begin(), spectrum.end(), '\n') == 62);
    CHECK(r.output.find("peak") != std::string::npos);
    CHECK(r.output.find("(auto threshold)") != std::string::npos);

    SUBCASE("forcing the active count is reported") {
        const auto forced =
            run("--out " + out.string() + " infer --checkpoint " + ws.checkpoint.string() +
                " --in " + csv.string() + " --k 1 --n-active 7");
        REQUIRE(forced.exit_code == 0);
        CHECK(forced.output.find("(forced)") != std::string::npos);
    }

    SUBCASE("the two mask options exclude each other") {
        const auto both =
            run("--out " + out.string() + " infer --checkpoint " + ws.checkpoint.string() +
                " --in " + csv.string() + " --n-active 7 --auto-threshold");
        CHECK(both.exit_code == 2);
    }

    SUBCASE("malformed rows are reported with their line number") {
        const auto broken = ws.dir / "broken.csv";
        write_text_file(broken, "re,im\n0.5,0.1\nnot,numbers\n");
        const auto r2 = run("--out " + out.string() + " infer --checkpoint " +
                            ws.checkpoint.string() + " --in " + broken.string());
        CHECK(r2.exit_code == 3);
        CHECK(r2.output.find("line 3") != std::string::npos);
    }

    SUBCASE("an all-zero snapshot is a numeric error") {
        const auto zeros = ws.dir / "zeros.csv";
        write_snapshot_csv(zeros, Eigen::VectorXcd::Zero(10));
        const auto r2 = run("--out " + out.string() + " infer --checkpoint " +
                            ws.checkpoint.string() + " --in " + zeros.string());
        CHECK(r2.exit_code == 4);
    }

    SUBCASE("a snapshot of the wrong length is rejected") {
        const auto short_csv = ws.dir / "short.csv";
        write_snapshot_csv(short_csv, Eigen::VectorXcd::Ones(7));
        const auto r2 = run("--out " + out.string() + " infer --checkpoint " +
                            ws.checkpoint.string() + " --in " + short_csv.string());
        CHECK(r2.exit_code != 0);
        CHECK(r2.output.find("10") != std::string::npos);
    }
}

TEST_CASE("eval writes the report artifacts") {
    auto& ws = workspace();
    const auto out = ws.dir / "eval";
    const auto r = run("--config " + ws.config.string() + " --seed 3 --out " + out.string() +
                       " eval");
    REQUIRE(r.exit_code == 0);

    const auto accuracy = read_text_file(out / "accuracy.csv");
    CHECK(accuracy.rfind("estimator,geometry,scene,snr_db,", 0) == 0);
    // grid_floor + dbf, 2 geometries x 2 scenes x 1 snr, plus the header.
    CHECK(std::count(accuracy.begin(), accuracy.end(), '\n') == 9);
    CHECK(accuracy.find("grid_floor") != std::string::npos);

    const auto hitrate = read_text_file(out / "hitrate.csv");
    // dbf, 2 geometries x 2 separations, plus the header.
    CHECK(std::count(hitrate.begin(), hitrate.end(), '\n') == 5);

    CHECK(!fs::exists(out / "timing.csv")); // disabled in the config

    const auto report = json::parse(read_text_file(out / "report.json"));
    CHECK(report.at("format") == "sladoa-eval-report");
    CHECK(report.at("config").at("seed") == 3);
    CHECK(report.at("accuracy").is_array());
    CHECK(report.at("hit_rate").is_array());

    SUBCASE("requesting the network estimator without a checkpoint fails") {
        const auto r2 = run("--config " + ws.config.string() + " --out " + out.string() +
                            " eval --estimators network --trials 2");
        CHECK(r2.exit_code == 2);
        CHECK(r2.output.find("checkpoint") != std::string::npos);
    }

    SUBCASE("unknown estimator ids are rejected") {
        const auto r2 = run("--config " + ws.config.string() + " --out " + out.string() +
                            " eval --estimators music --trials 2");
        CHECK(r2.exit_code == 2);
    }
}

TEST_CASE("import-real synthesizes, validates, and normalizes captures") {
    auto& ws = workspace();
    const auto out = ws.dir / "import";
    const auto r = run("--out " + out.string() + " --seed 8 import-real --synthesize 5");
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(out / "capture_demo.bin"));
    CHECK(fs::exists(out / "capture_normalized.bin"));
    CHECK(r.output.find("5 records") != std::string::npos);

    const auto again = run("--out " + (ws.dir / "import2").string() + " import-real --in " +
                           (out / "capture_normalized.bin").string());
    CHECK(again.exit_code == 0);

    const auto missing = run("--out " + (ws.dir / "import3").string() + " import-real --in " +
                             (ws.dir / "nope.bin").string());
    CHECK(missing.exit_code == 3);

    const auto neither = run("--out " + (ws.dir / "import4").string() + " import-real");
    CHECK(neither.exit_code == 2);
}
