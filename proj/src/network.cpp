#include "sladoa/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sladoa/errors.hpp"
#include "sladoa/parallel.hpp"

namespace sladoa {

namespace {

constexpr const char* kCheckpointFormat = "sladoa-checkpoint";
constexpr int kCheckpointVersion = 1;

// Gradient sub-batch width. Mini-batches are cut into fixed-width strips and
// per-strip gradients are reduced in strip order, so the result is the same
// for any thread count.
constexpr int kSubBatch = 128;

const char* kind_name(ModelKind kind) {
    return kind == ModelKind::augmented ? "augmented" : "mlp_baseline";
}

ModelKind kind_from_name(const std::string& name) {
    if (name == "augmented") return ModelKind::augmented;
    if (name == "mlp_baseline") return ModelKind::mlp_baseline;
    throw io_error("checkpoint manifest: unknown model kind \"" + name + "\"");
}

} // namespace

Architecture Architecture::proposed(int n, int hidden, int m) {
    Architecture a;
    a.kind = ModelKind::augmented;
    a.n_elements = n;
    a.hidden_aug = hidden;
    a.grid_size = m;
    a.core_widths = {2048, 1024, 512, 256, 128, m};
    a.validate();
    return a;
}

Architecture Architecture::baseline(int n, int m) {
    Architecture a;
    a.kind = ModelKind::mlp_baseline;
    a.n_elements = n;
    a.hidden_aug = 0;
    a.grid_size = m;
    a.core_widths = {2048, 1024, 512, 256, 128, m};
    a.validate();
    return a;
}

int Architecture::core_input_width() const {
    return kind == ModelKind::augmented ? hidden_aug + 4 * grid_size : 2 * n_elements;
}

Eigen::Index Architecture::parameter_count() const {
    Eigen::Index total = 0;
    for (const auto& s : layer_shapes(*this)) total += s.out * s.in + s.out;
    return total;
}

void Architecture::validate() const {
    if (n_elements < 1) throw config_error("architecture: n_elements must be positive");
    if (grid_size < 1) throw config_error("architecture: grid_size must be positive");
    if (core_widths.empty()) throw config_error("architecture: no core layers");
    for (const int w : core_widths)
        if (w < 1) throw config_error("architecture: non-positive layer width");
    if (core_widths.back() != grid_size)
        throw config_error("architecture: output width " + std::to_string(core_widths.back()) +
                           " does not match grid size " + std::to_string(grid_size));
    if (kind == ModelKind::augmented && hidden_aug < 1)
        throw config_error("architecture: augmented kind requires a positive hidden width");
}

std::vector<LayerShape> layer_shapes(const Architecture& arch) {
    std::vector<LayerShape> out;
    Eigen::Index offset = 0;
    auto push = [&](Eigen::Index rows, Eigen::Index cols) {
        out.push_back({rows, cols, offset, offset + rows * cols});
        offset += rows * cols + rows;
    };
    if (arch.kind == ModelKind::augmented) push(arch.hidden_aug, 2 * arch.n_elements);
    Eigen::Index prev = arch.core_input_width();
    for (const int w : arch.core_widths) {
        push(w, prev);
        prev = w;
    }
    return out;
}

ModelParams::ModelParams(Architecture arch, Eigen::VectorXd flat_data, std::uint64_t init_seed)
    : arch_(std::move(arch)), shapes_(layer_shapes(arch_)), data_(std::move(flat_data)),
      init_seed_(init_seed) {
    arch_.validate();
    if (data_.size() != arch_.parameter_count())
        throw shape_error("model parameters: expected " + std::to_string(arch_.parameter_count()) +
                          " values, got " + std::to_string(data_.size()));
}

ModelParams ModelParams::initialized(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    Eigen::VectorXd data(arch.parameter_count());
    const auto shapes = layer_shapes(arch);
    for (std::size_t l = 0; l < shapes.size(); ++l) {
        const auto& s = shapes[l];
        RngStream rng(seed, RngDomain::weight_init, static_cast<std::uint64_t>(l));
        const double limit = std::sqrt(6.0 / static_cast<double>(s.in));
        auto w = data.segment(s.weight_offset, s.out * s.in);
        for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.uniform(-limit, limit);
        data.segment(s.bias_offset, s.out).setZero();
    }
    return ModelParams(arch, std::move(data), seed);
}

Eigen::Map<const Eigen::MatrixXd> ModelParams::weights(int layer) const {
    const auto& s = shapes_[static_cast<std::size_t>(layer)];
    return {data_.data() + s.weight_offset, s.out, s.in};
}

Eigen::Map<const Eigen::VectorXd> ModelParams::bias(int layer) const {
    const auto& s = shapes_[static_cast<std::size_t>(layer)];
    return {data_.data() + s.bias_offset, s.out};
}

Eigen::Map<Eigen::MatrixXd> ModelParams::weights(int layer) {
    const auto& s = shapes_[static_cast<std::size_t>(layer)];
    return {data_.data() + s.weight_offset, s.out, s.in};
}

Eigen::Map<Eigen::VectorXd> ModelParams::bias(int layer) {
    const auto& s = shapes_[static_cast<std::size_t>(layer)];
    return {data_.data() + s.bias_offset, s.out};
}

DenseLayer ModelParams::aug_layer() const {
    if (arch_.kind != ModelKind::augmented)
        throw config_error("aug_layer: model has no augmentation branch");
    return DenseLayer{weights(0), bias(0)};
}

Eigen::Index count_parameters(const ModelParams& params) { return params.flat().size(); }

Eigen::VectorXd forward_probabilities(const ModelParams& params, const Eigen::VectorXd& features) {
    if (features.size() != params.arch().core_input_width())
        throw shape_error("forward: feature width " + std::to_string(features.size()) +
                          " does not match core input width " +
                          std::to_string(params.arch().core_input_width()));
    const int begin = params.core_begin();
    const int end = params.layer_count();
    Eigen::VectorXd act = features;
    for (int l = begin; l < end; ++l) {
        Eigen::VectorXd z = params.weights(l) * act + params.bias(l);
        if (l + 1 < end)
            act = z.cwiseMax(0.0);
        else
            act = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    }
    return act;
}

Spectrum forward(const ModelParams& params, const Eigen::VectorXd& features, const ScanGrid& grid) {
    if (grid.size() != params.arch().grid_size)
        throw shape_error("forward: grid has " + std::to_string(grid.size()) +
                          " bins but the model outputs " + std::to_string(params.arch().grid_size));
    return Spectrum{forward_probabilities(params, features), grid};
}

Eigen::VectorXd infer_probabilities(const ModelParams& params, const Snapshot& snapshot,
                                    const SparseMask& mask, const Eigen::MatrixXcd& manifold) {
    if (params.arch().kind == ModelKind::augmented)
        return forward_probabilities(
            params, assemble_features(snapshot, mask, params.aug_layer(), manifold));
    Eigen::VectorXcd masked = snapshot.values;
    for (int i = 0; i < masked.size(); ++i)
        if (!mask.flags[static_cast<std::size_t>(i)]) masked[i] = 0.0;
    return forward_probabilities(params, pack_complex(masked));
}

double bce_loss(const Eigen::VectorXd& prediction, const Eigen::VectorXd& target) {
    if (prediction.size() != target.size())
        throw shape_error("bce_loss: prediction and target lengths differ");
    if (prediction.size() == 0) throw shape_error("bce_loss: empty input");
    const auto p = prediction.array().min(1.0 - 1e-7).max(1e-7);
    const auto t = target.array();
    return -(t * p.log() + (1.0 - t) * (1.0 - p).log()).mean();
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
    const Architecture& a = params.arch();
    json manifest;
    manifest["format"] = kCheckpointFormat;
    manifest["version"] = kCheckpointVersion;
    manifest["kind"] = kind_name(a.kind);
    manifest["elements"] = a.n_elements;
    manifest["hidden"] = a.hidden_aug;
    manifest["grid_size"] = a.grid_size;
    manifest["core_widths"] = a.core_widths;
    manifest["parameter_count"] = static_cast<std::int64_t>(a.parameter_count());
    manifest["init_seed"] = params.init_seed();
    manifest["training"] = params.training_info().is_null() ? json(nullptr) : params.training_info();
    // Payload layout: layers in order, each as column-major weights then bias.
    std::vector<double> payload(params.flat().data(), params.flat().data() + params.flat().size());
    write_container(path, manifest, payload);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    Container c = read_container(path);
    expect_format(c.manifest, kCheckpointFormat, kCheckpointVersion);

    Architecture a;
    a.kind = kind_from_name(c.manifest.at("kind").get<std::string>());
    a.n_elements = c.manifest.at("elements").get<int>();
    a.hidden_aug = c.manifest.at("hidden").get<int>();
    a.grid_size = c.manifest.at("grid_size").get<int>();
    a.core_widths = c.manifest.at("core_widths").get<std::vector<int>>();
    try {
        a.validate();
    } catch (const config_error& e) {
        throw io_error(std::string("checkpoint manifest: ") + e.what());
    }

    const Eigen::Index expected = a.parameter_count();
    const auto declared = c.manifest.at("parameter_count").get<std::int64_t>();
    if (declared != static_cast<std::int64_t>(expected))
        throw io_error("checkpoint manifest: declared parameter_count " + std::to_string(declared) +
                       " does not match the architecture's " + std::to_string(expected));
    if (static_cast<Eigen::Index>(c.payload.size()) != expected)
        throw io_error("checkpoint payload truncated or oversized: expected " +
                       std::to_string(expected * static_cast<Eigen::Index>(sizeof(double))) +
                       " bytes, found " + std::to_string(c.payload.size() * sizeof(double)) +
                       " bytes");

    Eigen::VectorXd data = Eigen::Map<const Eigen::VectorXd>(c.payload.data(),
                                                             static_cast<Eigen::Index>(c.payload.size()));
    if (!data.allFinite()) throw io_error("checkpoint payload contains non-finite values");
    ModelParams params(a, std::move(data), c.manifest.at("init_seed").get<std::uint64_t>());
    if (!c.manifest.at("training").is_null()) params.set_training_info(c.manifest.at("training"));
    return params;
}

namespace {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S>
struct FlatModel {
    Architecture arch;
    std::vector<LayerShape> shapes;
    int core_begin = 0;
    VecX<S> data;

    static FlatModel from_params(const ModelParams& p) {
        FlatModel m;
        m.arch = p.arch();
        m.shapes = p.layers();
        m.core_begin = p.core_begin();
        m.data = p.flat().template cast<S>();
        return m;
    }

    Eigen::Map<const MatX<S>> weights(int l) const {
        const auto& s = shapes[static_cast<std::size_t>(l)];
        return {data.data() + s.weight_offset, s.out, s.in};
    }
    Eigen::Map<const VecX<S>> bias(int l) const {
        const auto& s = shapes[static_cast<std::size_t>(l)];
        return {data.data() + s.bias_offset, s.out};
    }
};

// Per-strip scratch. Everything a strip touches lives here so concurrent
// strips never share writable state.
template <typename S>
struct Workspace {
    Eigen::MatrixXcd snaps;  // N x b raw snapshot columns
    std::vector<SparseMask> masks;
    Eigen::MatrixXcd masked; // N x b
    Eigen::MatrixXcd flags;  // N x b
    Eigen::MatrixXcd embed;  // M x b
    Eigen::MatrixXcd posenc; // M x b
    Eigen::VectorXd inv_n;   // b
    MatX<S> pack;            // 2N x b
    MatX<S> za, aa;          // H x b
    MatX<S> x;               // core input height x b
    std::vector<MatX<S>> z;  // core pre-activations
    std::vector<MatX<S>> a;  // core activations; a.back() holds probabilities
    MatX<S> delta, delta_next, gx;
    MatX<S> targets;         // M x b
    VecX<S> grad;            // flat gradient accumulator (lazily sized)
    double loss = 0.0;
};

template <typename S>
class Engine {
public:
    Engine(const Architecture& arch, const Eigen::MatrixXcd& manifold)
        : arch_(arch), adjoint_(manifold.adjoint()), n_(arch.n_elements),
          m_(arch.grid_size), h_(arch.hidden_aug) {
        if (manifold.rows() != n_ || manifold.cols() != m_)
            throw shape_error("training manifold must be n_elements x grid_size");
        core_count_ = static_cast<int>(arch.core_widths.size());
    }

    int core_count() const { return core_count_; }

    // ws.snaps and ws.masks (b entries each) -> ws.x, plus the intermediates
    // backward needs. Matches assemble_features column by column.
    void assemble(Workspace<S>& ws, const FlatModel<S>& model, int b) const {
        ws.masked.resize(n_, b);
        ws.inv_n.resize(b);
        for (int j = 0; j < b; ++j) {
            const SparseMask& mask = ws.masks[static_cast<std::size_t>(j)];
            if (mask.active_count < 1)
                throw numeric_error("feature assembly: mask with no active elements");
            ws.inv_n[j] = 1.0 / static_cast<double>(mask.active_count);
            for (int i = 0; i < n_; ++i)
                ws.masked(i, j) =
                    mask.flags[static_cast<std::size_t>(i)] ? ws.snaps(i, j) : 0.0;
        }
        ws.pack.resize(2 * n_, b);
        ws.pack.topRows(n_) = ws.masked.real().template cast<S>();
        ws.pack.bottomRows(n_) = ws.masked.imag().template cast<S>();

        if (arch_.kind != ModelKind::augmented) {
            ws.x = ws.pack;
            return;
        }

        ws.flags.resize(n_, b);
        for (int j = 0; j < b; ++j) {
            const SparseMask& mask = ws.masks[static_cast<std::size_t>(j)];
            for (int i = 0; i < n_; ++i)
                ws.flags(i, j) = std::complex<double>(
                    mask.flags[static_cast<std::size_t>(i)] ? 1.0 : 0.0, 0.0);
        }
        ws.embed.noalias() = adjoint_ * ws.masked;
        ws.posenc.noalias() = adjoint_ * ws.flags;
        for (int j = 0; j < b; ++j) {
            ws.embed.col(j) *= ws.inv_n[j];
            ws.posenc.col(j) *= ws.inv_n[j];
        }

        ws.za.resize(h_, b);
        ws.za.noalias() = model.weights(0) * ws.pack;
        ws.za.colwise() += model.bias(0);
        ws.aa = ws.za.cwiseMax(S(0));

        ws.x.resize(h_ + 4 * m_, b);
        ws.x.topRows(h_) = ws.aa;
        for (int j = 0; j < b; ++j) ws.x.col(j).head(h_) *= static_cast<S>(ws.inv_n[j]);
        ws.x.middleRows(h_, m_) = ws.embed.real().template cast<S>();
        ws.x.middleRows(h_ + m_, m_) = ws.embed.imag().template cast<S>();
        ws.x.middleRows(h_ + 2 * m_, m_) = ws.posenc.real().template cast<S>();
        ws.x.bottomRows(m_) = ws.posenc.imag().template cast<S>();
    }

    void forward_core(Workspace<S>& ws, const FlatModel<S>& model) const {
        ws.z.resize(static_cast<std::size_t>(core_count_));
        ws.a.resize(static_cast<std::size_t>(core_count_));
        const MatX<S>* cur = &ws.x;
        for (int i = 0; i < core_count_; ++i) {
            const int l = model.core_begin + i;
            auto& z = ws.z[static_cast<std::size_t>(i)];
            z.noalias() = model.weights(l) * (*cur);
            z.colwise() += model.bias(l);
            auto& a = ws.a[static_cast<std::size_t>(i)];
            if (i + 1 < core_count_)
                a = z.cwiseMax(S(0));
            else
                a = (S(1) / (S(1) + (-z.array()).exp())).matrix();
            cur = &a;
        }
    }

    // Sum over columns of the per-sample mean BCE, from logits.
    double loss_from_logits(const MatX<S>& logits, const MatX<S>& targets) const {
        const auto z = logits.array();
        const auto t = targets.array();
        const auto elem = z.max(S(0)) - z * t + (-z.abs()).exp().log1p();
        return static_cast<double>(elem.sum()) / static_cast<double>(m_);
    }

    // Accumulates d(sum of per-sample mean BCE)/d(params) into ws.grad.
    void backward(Workspace<S>& ws, const FlatModel<S>& model, int b) const {
        if (ws.grad.size() != model.data.size()) ws.grad = VecX<S>::Zero(model.data.size());
        auto grad_w = [&](int l) {
            const auto& s = model.shapes[static_cast<std::size_t>(l)];
            return Eigen::Map<MatX<S>>(ws.grad.data() + s.weight_offset, s.out, s.in);
        };
        auto grad_b = [&](int l) {
            const auto& s = model.shapes[static_cast<std::size_t>(l)];
            return Eigen::Map<VecX<S>>(ws.grad.data() + s.bias_offset, s.out);
        };

        const S inv_m = S(1) / static_cast<S>(m_);
        ws.delta = (ws.a.back() - ws.targets) * inv_m;
        for (int i = core_count_ - 1; i >= 0; --i) {
            const int l = model.core_begin + i;
            const MatX<S>& prev = i == 0 ? ws.x : ws.a[static_cast<std::size_t>(i - 1)];
            grad_w(l).noalias() += ws.delta * prev.transpose();
            grad_b(l).noalias() += ws.delta.rowwise().sum();
            if (i > 0) {
                ws.delta_next.resize(prev.rows(), b);
                ws.delta_next.noalias() = model.weights(l).transpose() * ws.delta;
                ws.delta_next.array() *=
                    (ws.z[static_cast<std::size_t>(i - 1)].array() > S(0)).template cast<S>();
                std::swap(ws.delta, ws.delta_next);
            } else if (arch_.kind == ModelKind::augmented) {
                ws.gx.resize(prev.rows(), b);
                ws.gx.noalias() = model.weights(l).transpose() * ws.delta;
                // Signal branch: undo the count normalization, gate by the
                // ReLU, then fold into the branch weights.
                MatX<S> gza = ws.gx.topRows(h_);
                for (int j = 0; j < b; ++j) gza.col(j) *= static_cast<S>(ws.inv_n[j]);
                gza.array() *= (ws.za.array() > S(0)).template cast<S>();
                grad_w(0).noalias() += gza * ws.pack.transpose();
                grad_b(0).noalias() += gza.rowwise().sum();
            }
        }
    }

private:
    Architecture arch_;
    Eigen::MatrixXcd adjoint_; // M x N
    int n_, m_, h_;
    int core_count_ = 0;
};

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw config_error("train: epochs must be positive");
    if (cfg.batch_size < 1) throw config_error("train: batch_size must be positive");
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate))
        throw config_error("train: learning_rate must be finite and non-negative");
    if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0))
        throw config_error("train: Adam betas must lie in [0, 1)");
    if (!(cfg.adam_epsilon > 0.0)) throw config_error("train: adam_epsilon must be positive");
    if (!(cfg.max_sparsity >= 0.0 && cfg.max_sparsity < 1.0))
        throw config_error("train: max_sparsity must lie in [0, 1)");
}

template <typename S>
TrainResult run_training(const LabeledDataset& ds, const ModelParams& init, const TrainConfig& cfg) {
    const Architecture& arch = init.arch();
    if (arch.n_elements != ds.geometry.size())
        throw shape_error("train: model expects " + std::to_string(arch.n_elements) +
                          " elements, dataset has " + std::to_string(ds.geometry.size()));
    if (arch.grid_size != ds.grid.size())
        throw shape_error("train: model outputs " + std::to_string(arch.grid_size) +
                          " bins, dataset labels have " + std::to_string(ds.grid.size()));
    if (ds.train_count < 1) throw config_error("train: dataset has no training samples");
    if (ds.val_count < 1) throw config_error("train: dataset has no validation samples");

    const int n = arch.n_elements;
    const int m = arch.grid_size;
    const int h = arch.hidden_aug;
    const bool augmented = arch.kind == ModelKind::augmented;
    const int train_n = ds.train_count;
    const int val_n = ds.val_count;
    const unsigned threads = std::max(1u, cfg.threads);

    const Eigen::MatrixXcd manifold = steering_matrix(ds.geometry, ds.grid);
    Engine<S> engine(arch, manifold);
    FlatModel<S> model = FlatModel<S>::from_params(init);
    const Eigen::Index pcount = model.data.size();

    // Fixed validation masks: drawn once so the selection metric is stable.
    std::vector<SparseMask> val_masks;
    val_masks.reserve(static_cast<std::size_t>(val_n));
    for (int vi = 0; vi < val_n; ++vi) {
        if (augmented) {
            RngStream rng(cfg.seed, RngDomain::validation_mask, static_cast<std::uint64_t>(vi));
            val_masks.push_back(sample_mask(n, cfg.max_sparsity, rng));
        } else {
            val_masks.push_back(SparseMask::full(n));
        }
    }

    // Validation features depend on the trainable branch, so only the fixed
    // parts are cached: packed masked snapshots, embeddings, counts, targets.
    MatX<S> val_pack(2 * n, val_n);
    MatX<S> val_fixed; // 4M rows, augmented only
    VecX<S> val_inv(val_n);
    MatX<S> val_targets(m, val_n);
    {
        if (augmented) val_fixed.resize(4 * m, val_n);
        const Eigen::MatrixXcd adjoint = manifold.adjoint();
        for (int vi = 0; vi < val_n; ++vi) {
            const int col = train_n + vi;
            const SparseMask& mask = val_masks[static_cast<std::size_t>(vi)];
            Eigen::VectorXcd masked = ds.snapshots.col(col);
            for (int i = 0; i < n; ++i)
                if (!mask.flags[static_cast<std::size_t>(i)]) masked[i] = 0.0;
            val_pack.col(vi).head(n) = masked.real().template cast<S>();
            val_pack.col(vi).tail(n) = masked.imag().template cast<S>();
            val_inv[vi] = S(1) / static_cast<S>(mask.active_count);
            if (augmented) {
                Eigen::VectorXcd flags(n);
                for (int i = 0; i < n; ++i)
                    flags[i] = mask.flags[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
                const Eigen::VectorXcd e =
                    (adjoint * masked) / static_cast<double>(mask.active_count);
                const Eigen::VectorXcd p =
                    (adjoint * flags) / static_cast<double>(mask.active_count);
                val_fixed.col(vi).head(m) = e.real().template cast<S>();
                val_fixed.col(vi).segment(m, m) = e.imag().template cast<S>();
                val_fixed.col(vi).segment(2 * m, m) = p.real().template cast<S>();
                val_fixed.col(vi).tail(m) = p.imag().template cast<S>();
            }
            val_targets.col(vi) = ds.labels.col(col).template cast<S>();
        }
    }

    const int batch = std::min(cfg.batch_size, train_n);
    const int train_slots = (batch + kSubBatch - 1) / kSubBatch;
    const int val_slots = (val_n + kSubBatch - 1) / kSubBatch;
    std::vector<Workspace<S>> workspaces(
        static_cast<std::size_t>(std::max(train_slots, val_slots)));

    VecX<S> adam_m = VecX<S>::Zero(pcount);
    VecX<S> adam_v = VecX<S>::Zero(pcount);
    VecX<S> grad(pcount);
    const S lr = static_cast<S>(cfg.learning_rate);
    const S beta1 = static_cast<S>(cfg.beta1);
    const S beta2 = static_cast<S>(cfg.beta2);
    const S adam_eps = static_cast<S>(cfg.adam_epsilon);
    long step = 0;

    std::vector<int> perm(static_cast<std::size_t>(train_n));
    std::iota(perm.begin(), perm.end(), 0);

    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    VecX<S> best_data = model.data;

    auto validation_loss = [&]() {
        parallel_for(static_cast<std::size_t>(val_slots), threads, [&](std::size_t s) {
            Workspace<S>& ws = workspaces[s];
            const int begin = static_cast<int>(s) * kSubBatch;
            const int b = std::min(kSubBatch, val_n - begin);
            if (augmented) {
                ws.za.resize(h, b);
                ws.za.noalias() = model.weights(0) * val_pack.middleCols(begin, b);
                ws.za.colwise() += model.bias(0);
                ws.x.resize(h + 4 * m, b);
                ws.x.topRows(h) = ws.za.cwiseMax(S(0));
                for (int j = 0; j < b; ++j) ws.x.col(j).head(h) *= val_inv[begin + j];
                ws.x.bottomRows(4 * m) = val_fixed.middleCols(begin, b);
            } else {
                ws.x = val_pack.middleCols(begin, b);
            }
            engine.forward_core(ws, model);
            ws.loss = engine.loss_from_logits(ws.z.back(), val_targets.middleCols(begin, b));
        });
        double total = 0.0;
        for (int s = 0; s < val_slots; ++s) total += workspaces[static_cast<std::size_t>(s)].loss;
        return total / static_cast<double>(val_n);
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        RngStream shuffle_rng(cfg.seed, RngDomain::train_shuffle, static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(perm);

        double epoch_loss = 0.0;
        int batch_index = 0;
        for (int start = 0; start < train_n; start += batch, ++batch_index) {
            const int bsz = std::min(batch, train_n - start);
            const int nslots = (bsz + kSubBatch - 1) / kSubBatch;

            parallel_for(static_cast<std::size_t>(nslots), threads, [&](std::size_t s) {
                Workspace<S>& ws = workspaces[s];
                const int offset = static_cast<int>(s) * kSubBatch;
                const int b = std::min(kSubBatch, bsz - offset);
                ws.snaps.resize(n, b);
                ws.targets.resize(m, b);
                ws.masks.resize(static_cast<std::size_t>(b));
                for (int j = 0; j < b; ++j) {
                    const int col = perm[static_cast<std::size_t>(start + offset + j)];
                    ws.snaps.col(j) = ds.snapshots.col(col);
                    ws.targets.col(j) = ds.labels.col(col).template cast<S>();
                    if (augmented) {
                        RngStream rng(cfg.seed, RngDomain::train_mask,
                                      static_cast<std::uint64_t>(epoch) *
                                              static_cast<std::uint64_t>(train_n) +
                                          static_cast<std::uint64_t>(col));
                        ws.masks[static_cast<std::size_t>(j)] =
                            sample_mask(n, cfg.max_sparsity, rng);
                    } else {
                        ws.masks[static_cast<std::size_t>(j)] = SparseMask::full(n);
                    }
                }
                if (ws.grad.size() != pcount)
                    ws.grad = VecX<S>::Zero(pcount);
                else
                    ws.grad.setZero();
                engine.assemble(ws, model, b);
                engine.forward_core(ws, model);
                ws.loss = engine.loss_from_logits(ws.z.back(), ws.targets);
                engine.backward(ws, model, b);
            });

            double batch_loss_sum = 0.0;
            grad = workspaces[0].grad;
            batch_loss_sum += workspaces[0].loss;
            for (int s = 1; s < nslots; ++s) {
                grad += workspaces[static_cast<std::size_t>(s)].grad;
                batch_loss_sum += workspaces[static_cast<std::size_t>(s)].loss;
            }
            if (!std::isfinite(batch_loss_sum))
                throw numeric_error("training loss became non-finite at epoch " +
                                    std::to_string(epoch + 1) + ", batch " +
                                    std::to_string(batch_index + 1));
            grad /= static_cast<S>(bsz);

            ++step;
            adam_m = beta1 * adam_m + (S(1) - beta1) * grad;
            adam_v = beta2 * adam_v + (S(1) - beta2) * grad.cwiseProduct(grad);
            const S c1 = static_cast<S>(1.0 - std::pow(cfg.beta1, static_cast<double>(step)));
            const S c2 = static_cast<S>(1.0 - std::pow(cfg.beta2, static_cast<double>(step)));
            model.data.array() -=
                lr * (adam_m.array() / c1) / ((adam_v.array() / c2).sqrt() + adam_eps);

            epoch_loss += batch_loss_sum;
        }

        const double train_loss = epoch_loss / static_cast<double>(train_n);
        const double val_loss = validation_loss();
        if (!std::isfinite(val_loss))
            throw numeric_error("validation loss became non-finite at epoch " +
                                std::to_string(epoch + 1));
        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.best_epoch = epoch + 1;
            best_data = model.data;
        }
        result.log.push_back({epoch + 1, train_loss, val_loss});
    }

    result.params = ModelParams(arch, best_data.template cast<double>(), init.init_seed());
    json info;
    info["epochs"] = cfg.epochs;
    info["batch_size"] = cfg.batch_size;
    info["learning_rate"] = cfg.learning_rate;
    info["max_sparsity"] = cfg.max_sparsity;
    info["seed"] = cfg.seed;
    info["precision"] = cfg.precision == Precision::float64 ? "float64" : "float32";
    info["best_epoch"] = result.best_epoch;
    info["best_val_loss"] = result.best_val_loss;
    info["final_train_loss"] = result.log.back().train_loss;
    result.params.set_training_info(std::move(info));
    return result;
}

} // namespace

TrainResult train(const LabeledDataset& dataset, const ModelParams& init, const TrainConfig& config) {
    validate_train_config(config);
    if (config.precision == Precision::float64)
        return run_training<double>(dataset, init, config);
    return run_training<float>(dataset, init, config);
}

double batch_loss(const ModelParams& params, const SampleBatch& batch,
                  const Eigen::MatrixXcd& manifold, Eigen::VectorXd* grad) {
    const int b = static_cast<int>(batch.snapshots.cols());
    if (b < 1) throw shape_error("batch_loss: empty batch");
    if (batch.snapshots.rows() != params.arch().n_elements)
        throw shape_error("batch_loss: snapshot rows do not match model elements");
    if (batch.targets.rows() != params.arch().grid_size || batch.targets.cols() != b)
        throw shape_error("batch_loss: target shape mismatch");
    if (batch.masks.size() != static_cast<std::size_t>(b))
        throw shape_error("batch_loss: one mask per snapshot required");

    Engine<double> engine(params.arch(), manifold);
    FlatModel<double> model = FlatModel<double>::from_params(params);
    Workspace<double> ws;
    ws.snaps = batch.snapshots;
    ws.masks = batch.masks;
    ws.targets = batch.targets;
    engine.assemble(ws, model, b);
    engine.forward_core(ws, model);
    const double loss = engine.loss_from_logits(ws.z.back(), ws.targets) / b;
    if (grad) {
        ws.grad = Eigen::VectorXd::Zero(model.data.size());
        engine.backward(ws, model, b);
        *grad = ws.grad / static_cast<double>(b);
    }
    return loss;
}

} // namespace sladoa
