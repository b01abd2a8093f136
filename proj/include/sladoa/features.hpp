#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sladoa/array_signal.hpp"
#include "sladoa/rng.hpp"

namespace sladoa {

/// One fully connected layer (row-major weights, one bias per output).
struct DenseLayer {
    Eigen::MatrixXd weights; // out x in
    Eigen::VectorXd bias;    // out

    Eigen::Index in_size() const { return weights.cols(); }
    Eigen::Index out_size() const { return weights.rows(); }
    Eigen::Index parameter_count() const { return weights.size() + bias.size(); }
};

/// Binary activity mask produced by the augmentation sampler.
struct SparseMask {
    std::vector<int> flags;
    int active_count = 0;

    static SparseMask full(int n) { return SparseMask{std::vector<int>(static_cast<std::size_t>(n), 1), n}; }
    static SparseMask from_geometry(const ArrayGeometry& g) { return SparseMask{g.mask(), g.active_count()}; }
};

/// Draws z uniformly from {0, ..., floor(max_sparsity*n)}, then zeroes z
/// distinct positions chosen uniformly without replacement.
SparseMask sample_mask(int n, double max_sparsity, RngStream& rng);

/// Elementwise division by the active-element count. n_sla = 0 is an error
/// (degenerate mask).
Eigen::VectorXd normalize_by_active(const Eigen::VectorXd& input, int n_sla);

/// Grid-domain projection: manifold^H * input / n_sla. The manifold column m
/// is the steering vector at grid angle m.
Eigen::VectorXcd frequency_embed(const Eigen::VectorXcd& input,
                                 const Eigen::MatrixXcd& manifold, int n_sla);

/// frequency_embed of the binary mask itself, normalized by its active count.
Eigen::VectorXcd position_encode(const SparseMask& mask, const Eigen::MatrixXcd& manifold);

/// [Re(y); Im(y)] packing of a complex vector (width 2N).
Eigen::VectorXd pack_complex(const Eigen::VectorXcd& values);

/// Active-count estimate for imported measurements: entries above
/// 1e-6 * max|y_i| count as active.
int threshold_active_count(const Eigen::VectorXcd& values);

/// The three feature branches, before concatenation.
struct FeatureParts {
    Eigen::VectorXd signal_branch;   // H: normalize(ReLU(W*pack(y) + b), n_sla)
    Eigen::VectorXcd freq_embedding; // M
    Eigen::VectorXcd pos_encoding;   // M
};

FeatureParts feature_parts(const Snapshot& masked_snapshot, const SparseMask& mask,
                           const DenseLayer& fc, const Eigen::MatrixXcd& manifold);

/// Concatenated feature vector, fixed order:
///   [ signal_branch (H) | Re(freq) (M) | Im(freq) (M) | Re(pos) (M) | Im(pos) (M) ]
/// The mask is applied to the snapshot here, so contributions of inactive
/// elements are zero regardless of the incoming values.
Eigen::VectorXd assemble_features(const Snapshot& masked_snapshot, const SparseMask& mask,
                                  const DenseLayer& fc, const Eigen::MatrixXcd& manifold);

/// Width of the assembled vector: fc output size + 4 * grid size.
Eigen::Index feature_width(const DenseLayer& fc, const Eigen::MatrixXcd& manifold);

} // namespace sladoa
