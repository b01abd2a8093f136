#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sladoa/array_signal.hpp"

namespace sladoa {

/// Non-negative power values over a scan grid; the common output type of
/// DBF, IAA, and the learned estimators.
struct Spectrum {
    Eigen::VectorXd values;
    ScanGrid grid;
};

/// Matched-filter (beamforming) power spectrum:
/// values[m] = |a(theta_m)^H y|^2 / N_active^2, inner product over active
/// elements (masked entries are zero, so the full-vector product is equal).
/// Throws numeric_error on an all-zero snapshot.
Spectrum dbf_spectrum(const Snapshot& snapshot, const ScanGrid& grid);

/// Single-snapshot iterative adaptive approach on the active subarray.
/// Starts from the DBF spectrum; each iteration rebuilds the model covariance
/// R = A diag(p) A^H (plus diagonal loading eps*trace(R)/N_active) and updates
/// p_m = |a_m^H R^-1 y|^2 / (a_m^H R^-1 a_m)^2. Iterates on an internal grid
/// that continues the scan step across the full visible region (so noise
/// outside the scan sector has bins to land in) and returns the scan-sector
/// slice after max_iters refinements.
Spectrum iaa_spectrum(const Snapshot& snapshot, const ScanGrid& grid, int max_iters = 15);

/// Grid angles of the k largest strict local maxima, ordered by descending
/// value (ties: lower grid index first). Boundary bins compare against their
/// single neighbor. If fewer than k local maxima exist, the result is padded
/// with the largest not-yet-selected bins so exactly k angles come back.
std::vector<double> peak_search(const Spectrum& spectrum, int k);

/// Indices of strict local maxima, ascending. Exposed for spectrum analysis
/// (resolvability checks) as well as peak_search itself.
std::vector<int> local_maxima(const Eigen::VectorXd& values);

} // namespace sladoa
