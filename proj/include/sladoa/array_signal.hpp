#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "sladoa/rng.hpp"

namespace sladoa {

// Single-snapshot narrowband signal model for linear arrays. Element
// positions are stored in carrier-wavelength units so the phase of element n
// toward angle theta is 2*pi*d_n*sin(theta) with no explicit lambda. A sparse
// array is the reference array plus a binary activity mask; masked elements
// stay in the vector as exact zeros so downstream consumers always see a
// fixed input width.

/// Linear array: element positions (wavelengths from element 0) plus an
/// active-element mask. Both ULAs and SLAs are instances of this.
class ArrayGeometry {
public:
    ArrayGeometry(std::vector<double> positions_wavelengths, std::vector<int> mask);

    /// n-element ULA at half-wavelength spacing, all elements active.
    static ArrayGeometry ula(int n, double spacing_wavelengths = 0.5);

    /// Same positions, different mask (flags are {0,1}, one per element).
    ArrayGeometry with_mask(std::vector<int> mask) const;

    int size() const { return static_cast<int>(positions_.size()); }
    int active_count() const { return active_count_; }
    const std::vector<double>& positions() const { return positions_; }
    const std::vector<int>& mask() const { return mask_; }
    bool is_active(int i) const { return mask_[static_cast<std::size_t>(i)] != 0; }

    /// Indices of active elements, ascending.
    std::vector<int> active_indices() const;

    bool operator==(const ArrayGeometry&) const = default;

private:
    std::vector<double> positions_;
    std::vector<int> mask_;
    int active_count_ = 0;
};

/// Up to three far-field narrowband sources plus the per-scene SNR.
/// snr_db may be +infinity for noiseless synthesis.
struct SourceScene {
    std::vector<double> angles_deg;
    std::vector<double> amplitudes;
    std::vector<double> phases;
    double snr_db = 0.0;

    int source_count() const { return static_cast<int>(angles_deg.size()); }

    /// Complex reflection coefficient of source k.
    std::complex<double> coefficient(int k) const {
        return std::polar(amplitudes[static_cast<std::size_t>(k)], phases[static_cast<std::size_t>(k)]);
    }

    /// Enforces the field-of-view, separation, and amplitude invariants.
    void validate(double fov_min_deg = -30.0, double fov_max_deg = 30.0,
                  double min_separation_deg = 1.0) const;
};

/// One time sample of the array output; masked elements are exact zeros.
struct Snapshot {
    Eigen::VectorXcd values;
    ArrayGeometry geometry;
};

/// Uniform scan grid over the field of view.
class ScanGrid {
public:
    ScanGrid(double min_deg, double max_deg, double step_deg);

    /// Reference configuration: -30..+30 degrees in 1-degree steps (61 bins).
    static ScanGrid reference();

    int size() const { return static_cast<int>(angles_deg_.size()); }
    double angle(int m) const { return angles_deg_[static_cast<std::size_t>(m)]; }
    const std::vector<double>& angles_deg() const { return angles_deg_; }
    double step_deg() const { return step_deg_; }

    /// Index of the grid angle nearest to theta (ties round toward +).
    int nearest_index(double theta_deg) const;

    /// Index of the exactly matching grid angle; shape_error if off-grid.
    int index_of(double theta_deg) const;

    bool operator==(const ScanGrid&) const = default;

private:
    std::vector<double> angles_deg_;
    double step_deg_;
};

/// Array manifold response a(theta): element n is exp(j*2*pi*d_n*sin(theta)).
/// The mask is not applied; this is the pure manifold of the element positions.
Eigen::VectorXcd steering_vector(const ArrayGeometry& geometry, double theta_deg);

/// N x M manifold matrix; column m is steering_vector(geometry, grid.angle(m)).
Eigen::MatrixXcd steering_matrix(const ArrayGeometry& geometry, const ScanGrid& grid);

/// Circular complex white Gaussian vector: per-element variance sigma2,
/// independent real/imag parts with variance sigma2/2 each.
Eigen::VectorXcd complex_awgn(int n, double sigma2, RngStream& rng);

/// Per-element noise variance for a given per-source SNR (reference
/// amplitude 1): sigma2 = 10^(-snr_db/10). +infinity maps to 0.
double noise_variance(double snr_db);

/// y = sum_k a(theta_k) s_k + n, then the geometry mask zeroes inactive
/// elements. Rejects empty scenes.
Snapshot synthesize_snapshot(const ArrayGeometry& geometry, const SourceScene& scene,
                             RngStream& rng);

/// Fraction of missing elements relative to the full position set.
double sparsity(const ArrayGeometry& geometry);

} // namespace sladoa
