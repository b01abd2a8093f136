#include "sladoa/features.hpp"

#include <cmath>

#include "sladoa/errors.hpp"

namespace sladoa {

SparseMask sample_mask(int n, double max_sparsity, RngStream& rng) {
    if (n < 1) throw shape_error("sample_mask: n must be >= 1");
    if (!(max_sparsity >= 0.0 && max_sparsity < 1.0)) {
        throw config_error("sample_mask: max_sparsity must be in [0, 1)");
    }
    const int z_max = static_cast<int>(std::floor(max_sparsity * n));
    const int z = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(z_max) + 1));
    SparseMask mask{std::vector<int>(static_cast<std::size_t>(n), 1), n - z};
    for (std::size_t pos : rng.distinct_indices(static_cast<std::size_t>(n), static_cast<std::size_t>(z))) {
        mask.flags[pos] = 0;
    }
    return mask;
}

Eigen::VectorXd normalize_by_active(const Eigen::VectorXd& input, int n_sla) {
    if (n_sla < 1) throw numeric_error("normalize_by_active: degenerate mask (no active elements)");
    return input / static_cast<double>(n_sla);
}

Eigen::VectorXcd frequency_embed(const Eigen::VectorXcd& input,
                                 const Eigen::MatrixXcd& manifold, int n_sla) {
    if (input.size() != manifold.rows()) {
        throw shape_error("frequency_embed: input length " + std::to_string(input.size()) +
                          " does not match manifold rows " + std::to_string(manifold.rows()));
    }
    if (n_sla < 1) throw numeric_error("frequency_embed: degenerate mask (no active elements)");
    return manifold.adjoint() * input / static_cast<double>(n_sla);
}

Eigen::VectorXcd position_encode(const SparseMask& mask, const Eigen::MatrixXcd& manifold) {
    Eigen::VectorXcd flags(static_cast<Eigen::Index>(mask.flags.size()));
    for (std::size_t i = 0; i < mask.flags.size(); ++i) {
        flags[static_cast<Eigen::Index>(i)] = std::complex<double>(mask.flags[i], 0.0);
    }
    return frequency_embed(flags, manifold, mask.active_count);
}

Eigen::VectorXd pack_complex(const Eigen::VectorXcd& values) {
    Eigen::VectorXd packed(2 * values.size());
    packed.head(values.size()) = values.real();
    packed.tail(values.size()) = values.imag();
    return packed;
}

int threshold_active_count(const Eigen::VectorXcd& values) {
    const double peak = values.cwiseAbs().maxCoeff();
    if (peak == 0.0) return 0;
    const double threshold = 1e-6 * peak;
    int count = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (std::abs(values[i]) > threshold) ++count;
    }
    return count;
}

namespace {

Eigen::VectorXcd apply_mask(const Eigen::VectorXcd& values, const SparseMask& mask) {
    if (static_cast<std::size_t>(values.size()) != mask.flags.size()) {
        throw shape_error("mask length does not match snapshot length");
    }
    Eigen::VectorXcd masked = values;
    for (std::size_t i = 0; i < mask.flags.size(); ++i) {
        if (mask.flags[i] == 0) masked[static_cast<Eigen::Index>(i)] = std::complex<double>(0.0, 0.0);
    }
    return masked;
}

} // namespace

FeatureParts feature_parts(const Snapshot& masked_snapshot, const SparseMask& mask,
                           const DenseLayer& fc, const Eigen::MatrixXcd& manifold) {
    const Eigen::VectorXcd y = apply_mask(masked_snapshot.values, mask);
    if (fc.in_size() != 2 * y.size()) {
        throw shape_error("assemble_features: fc layer expects input width " +
                          std::to_string(fc.in_size()) + ", snapshot packs to " +
                          std::to_string(2 * y.size()));
    }
    FeatureParts parts;
    const Eigen::VectorXd pre = fc.weights * pack_complex(y) + fc.bias;
    parts.signal_branch = normalize_by_active(pre.cwiseMax(0.0), mask.active_count);
    parts.freq_embedding = frequency_embed(y, manifold, mask.active_count);
    parts.pos_encoding = position_encode(mask, manifold);
    return parts;
}

Eigen::VectorXd assemble_features(const Snapshot& masked_snapshot, const SparseMask& mask,
                                  const DenseLayer& fc, const Eigen::MatrixXcd& manifold) {
    const FeatureParts parts = feature_parts(masked_snapshot, mask, fc, manifold);
    const Eigen::Index h = parts.signal_branch.size();
    const Eigen::Index m = parts.freq_embedding.size();
    Eigen::VectorXd features(h + 4 * m);
    features.head(h) = parts.signal_branch;
    features.segment(h, m) = parts.freq_embedding.real();
    features.segment(h + m, m) = parts.freq_embedding.imag();
    features.segment(h + 2 * m, m) = parts.pos_encoding.real();
    features.segment(h + 3 * m, m) = parts.pos_encoding.imag();
    return features;
}

Eigen::Index feature_width(const DenseLayer& fc, const Eigen::MatrixXcd& manifold) {
    return fc.out_size() + 4 * manifold.cols();
}

} // namespace sladoa
