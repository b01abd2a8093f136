#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "sladoa/dataset.hpp"
#include "sladoa/estimators.hpp"
#include "sladoa/features.hpp"
#include "sladoa/io.hpp"

namespace sladoa {

// Fully connected estimator head shared by the two model kinds. The
// augmented kind runs the snapshot through the feature assembly (trainable
// signal branch + fixed grid-domain embeddings) before the core; the
// baseline consumes the packed snapshot directly. All parameters live in one
// flat float64 vector whose layout (per layer: column-major weights, then
// biases) is also the checkpoint payload layout.

enum class ModelKind { augmented, mlp_baseline };

struct Architecture {
    ModelKind kind = ModelKind::augmented;
    int n_elements = 10;
    int hidden_aug = 384; // signal-branch width H; unused by the baseline
    int grid_size = 61;
    std::vector<int> core_widths = {2048, 1024, 512, 256, 128, 61};

    static Architecture proposed(int n = 10, int hidden = 384, int m = 61);
    static Architecture baseline(int n = 10, int m = 61);

    /// Width of the core input: H + 4M (augmented) or 2N (baseline).
    int core_input_width() const;
    Eigen::Index parameter_count() const;
    void validate() const;

    bool operator==(const Architecture&) const = default;
};

/// Offsets of one layer's tensors inside the flat parameter vector.
struct LayerShape {
    Eigen::Index out = 0;
    Eigen::Index in = 0;
    Eigen::Index weight_offset = 0;
    Eigen::Index bias_offset = 0;
};

std::vector<LayerShape> layer_shapes(const Architecture& arch);

class ModelParams {
public:
    ModelParams() = default;
    ModelParams(Architecture arch, Eigen::VectorXd flat_data, std::uint64_t init_seed = 0);

    /// Uniform fan-in initialization (+-sqrt(6/fan_in)), zero biases; layer l
    /// draws from its own stream so widths of other layers do not shift it.
    static ModelParams initialized(const Architecture& arch, std::uint64_t seed);

    const Architecture& arch() const { return arch_; }
    const std::vector<LayerShape>& layers() const { return shapes_; }
    int layer_count() const { return static_cast<int>(shapes_.size()); }
    /// Index of the first core layer (1 when an augmentation branch exists).
    int core_begin() const { return arch_.kind == ModelKind::augmented ? 1 : 0; }

    Eigen::Map<const Eigen::MatrixXd> weights(int layer) const;
    Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
    Eigen::Map<Eigen::MatrixXd> weights(int layer);
    Eigen::Map<Eigen::VectorXd> bias(int layer);

    /// The signal-branch layer as a standalone DenseLayer (augmented only).
    DenseLayer aug_layer() const;

    const Eigen::VectorXd& flat() const { return data_; }
    Eigen::VectorXd& flat() { return data_; }

    std::uint64_t init_seed() const { return init_seed_; }
    const json& training_info() const { return training_info_; }
    void set_training_info(json info) { training_info_ = std::move(info); }

private:
    Architecture arch_;
    std::vector<LayerShape> shapes_;
    Eigen::VectorXd data_;
    std::uint64_t init_seed_ = 0;
    json training_info_;
};

Eigen::Index count_parameters(const ModelParams& params);

/// Core network on an assembled feature vector; returns per-bin sigmoid
/// probabilities (length grid_size).
Eigen::VectorXd forward_probabilities(const ModelParams& params, const Eigen::VectorXd& features);

/// forward_probabilities paired with the scan grid as a Spectrum.
Spectrum forward(const ModelParams& params, const Eigen::VectorXd& features, const ScanGrid& grid);

/// Snapshot-to-probabilities inference: feature assembly for the augmented
/// kind, packed (masked) snapshot for the baseline. The manifold must be the
/// unmasked steering matrix of the snapshot's element positions.
Eigen::VectorXd infer_probabilities(const ModelParams& params, const Snapshot& snapshot,
                                    const SparseMask& mask, const Eigen::MatrixXcd& manifold);

/// Mean binary cross-entropy between probabilities and targets, with
/// predictions clamped to [1e-7, 1 - 1e-7].
double bce_loss(const Eigen::VectorXd& prediction, const Eigen::VectorXd& target);

/// Checkpoint container: manifest (architecture, seed, training summary) +
/// the flat parameter vector as payload. save -> load -> save is
/// byte-identical.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

enum class Precision { float64, float32 };

struct TrainConfig {
    int epochs = 200;
    int batch_size = 1024;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double max_sparsity = 0.3; // augmentation law; the baseline ignores it
    std::uint64_t seed = 1;
    Precision precision = Precision::float64;
    unsigned threads = 1;
};

struct EpochLog {
    int epoch = 0; // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    ModelParams params; // parameters of the best-validation epoch
    int best_epoch = 0;
    double best_val_loss = 0.0;
    std::vector<EpochLog> log;
};

/// Mini-batch Adam on BCE. Augmented kind: every (epoch, sample) pair draws a
/// fresh mask; validation uses per-sample masks drawn once up front so the
/// selection metric is stable across epochs. Baseline kind trains and
/// validates on the unmasked data. Bit-identical results at any thread count.
TrainResult train(const LabeledDataset& dataset, const ModelParams& init, const TrainConfig& config);

/// A batch in the exact form the trainer consumes, for direct loss/gradient
/// evaluation (finite-difference verification and unit tests).
struct SampleBatch {
    Eigen::MatrixXcd snapshots; // N x B, mask already applied or full-array
    std::vector<SparseMask> masks;
    Eigen::MatrixXd targets; // M x B
};

/// Mean BCE of the batch; when grad is non-null it receives the gradient
/// with respect to the flat parameter vector (same layout as ModelParams).
double batch_loss(const ModelParams& params, const SampleBatch& batch,
                  const Eigen::MatrixXcd& manifold, Eigen::VectorXd* grad = nullptr);

} // namespace sladoa
