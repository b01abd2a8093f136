#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "sladoa/array_signal.hpp"
#include "sladoa/io.hpp"

namespace sladoa {

// Training data follows the grid-labeling rule: a label vector has one
// nonzero bin per source, at the source's grid angle, holding the source
// amplitude. Snapshots are synthesized on the full reference array; sparse
// masking is applied later, during training, so one dataset serves any mask
// distribution.

struct DatasetConfig {
    int train_count = 100000;
    int val_per_level = 1000;
    std::vector<double> snr_levels_db = {0, 5, 10, 15, 20, 25, 30};
    int k_min = 1;
    int k_max = 3;
    double amplitude_min = 0.5;
    double amplitude_max = 1.0;
    unsigned threads = 1;
};

struct LabeledDataset {
    ArrayGeometry geometry = ArrayGeometry::ula(10); // generation array (full ULA)
    ScanGrid grid = ScanGrid::reference();
    Eigen::MatrixXcd snapshots; // N x count, train columns first, then validation
    Eigen::MatrixXd labels;     // M x count
    std::vector<SourceScene> scenes;
    int train_count = 0;
    int val_count = 0;
    std::uint64_t seed = 0;
    std::vector<double> snr_levels_db;

    int count() const { return static_cast<int>(snapshots.cols()); }
};

/// Draws K, on-grid angles (distinct), amplitudes, phases, and an SNR level
/// per sample; synthesizes on the full array; labels by the grid rule.
/// Validation samples are generated per SNR level, val_per_level each, in
/// level order. Deterministic for a given seed at any thread count.
LabeledDataset generate_dataset(const DatasetConfig& config, const ArrayGeometry& geometry,
                                const ScanGrid& grid, std::uint64_t seed);

/// Container: JSON manifest line + payload of interleaved (re, im) snapshot
/// values followed by label values, all little-endian float64. A non-null
/// config_echo is embedded in the manifest verbatim.
void save_dataset(const std::filesystem::path& path, const LabeledDataset& dataset,
                  const json& config_echo = nullptr);
LabeledDataset load_dataset(const std::filesystem::path& path);

/// Elementwise complex sum of equal-length measurement vectors.
Eigen::VectorXcd superpose_measurements(const std::vector<Eigen::VectorXcd>& vectors);

/// A captured measurement file: single-target records with angle tags.
struct ImportedCapture {
    int n_elements = 0;
    Eigen::MatrixXcd records;        // N x record_count
    std::vector<double> angles_deg;  // tag per record
    std::vector<int> active_counts;  // inferred by thresholding
};

/// Reads and validates a capture file (JSON manifest + complex payload).
ImportedCapture import_real(const std::filesystem::path& path);

/// Writes a capture file from explicit records.
void save_capture(const std::filesystem::path& path, const Eigen::MatrixXcd& records,
                  const std::vector<double>& angles_deg, const json& config_echo = nullptr);

/// Synthesizes a schema-conformant stand-in capture: `records` high-SNR
/// single-target measurements with angle tags covering the field of view.
ImportedCapture make_demo_capture(int records, const ArrayGeometry& geometry, double snr_db,
                                  std::uint64_t seed);

} // namespace sladoa
