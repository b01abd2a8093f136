#include "sladoa/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sladoa/errors.hpp"

namespace sladoa {

namespace {

constexpr double kDiagonalLoadingEps = 1e-9;

} // namespace

Spectrum dbf_spectrum(const Snapshot& snapshot, const ScanGrid& grid) {
    if (snapshot.values.size() != snapshot.geometry.size()) {
        throw shape_error("dbf: snapshot length does not match geometry");
    }
    if (snapshot.values.isZero(0.0)) {
        throw numeric_error("dbf: all-zero snapshot (degenerate array)");
    }
    const Eigen::MatrixXcd manifold = steering_matrix(snapshot.geometry, grid);
    const double n_active = snapshot.geometry.active_count();
    Eigen::VectorXd values =
        (manifold.adjoint() * snapshot.values).cwiseAbs2() / (n_active * n_active);
    return Spectrum{std::move(values), grid};
}

Spectrum iaa_spectrum(const Snapshot& snapshot, const ScanGrid& grid, int max_iters) {
    if (max_iters < 1) throw config_error("iaa: max_iters must be >= 1");
    if (snapshot.values.isZero(0.0)) {
        throw numeric_error("iaa: all-zero snapshot (degenerate array)");
    }

    // The internal grid continues the scan grid's own step out to the full
    // visible region. Restricted to the scan sector, the fitted covariance
    // cannot represent the noise components lying outside the sector's
    // steering span, and R^-1 amplifies them by the reciprocal of the
    // loading; out-of-sector bins absorb that power instead.
    const double step = grid.step_deg();
    const int lead = static_cast<int>(std::floor((grid.angle(0) + 90.0) / step + 1e-9));
    const int tail =
        static_cast<int>(std::floor((90.0 - grid.angle(grid.size() - 1)) / step + 1e-9));
    const Eigen::Index m_out = grid.size();
    const Eigen::Index m = m_out + lead + tail;
    std::vector<double> angles(static_cast<std::size_t>(m));
    for (int i = 0; i < lead; ++i)
        angles[static_cast<std::size_t>(i)] = grid.angle(0) - static_cast<double>(lead - i) * step;
    for (int i = 0; i < m_out; ++i) angles[static_cast<std::size_t>(lead + i)] = grid.angle(i);
    for (int i = 0; i < tail; ++i)
        angles[static_cast<std::size_t>(lead + m_out + i)] =
            grid.angle(m_out - 1) + static_cast<double>(i + 1) * step;

    const auto active = snapshot.geometry.active_indices();
    const Eigen::Index n = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXcd manifold(n, m);
    for (Eigen::Index c = 0; c < m; ++c) {
        const Eigen::VectorXcd full =
            steering_vector(snapshot.geometry, angles[static_cast<std::size_t>(c)]);
        for (Eigen::Index r = 0; r < n; ++r) manifold(r, c) = full[active[static_cast<std::size_t>(r)]];
    }
    Eigen::VectorXcd y(n);
    for (Eigen::Index r = 0; r < n; ++r) y[r] = snapshot.values[active[static_cast<std::size_t>(r)]];

    // DBF initialization on the active subarray.
    Eigen::VectorXd p = (manifold.adjoint() * y).cwiseAbs2() / static_cast<double>(n * n);

    Eigen::MatrixXcd scaled(n, m);
    for (int it = 0; it < max_iters; ++it) {
        scaled = manifold * p.cwiseSqrt().asDiagonal();
        Eigen::MatrixXcd r = scaled * scaled.adjoint();
        r.diagonal().array() += kDiagonalLoadingEps * r.trace().real() / static_cast<double>(n);

        Eigen::LDLT<Eigen::MatrixXcd> ldlt(r);
        if (ldlt.info() != Eigen::Success) {
            throw numeric_error("iaa: covariance factorization failed at iteration " +
                                std::to_string(it));
        }
        const Eigen::VectorXcd r_inv_y = ldlt.solve(y);
        const Eigen::MatrixXcd r_inv_a = ldlt.solve(manifold);
        const Eigen::VectorXd numerator = (manifold.adjoint() * r_inv_y).cwiseAbs2();
        const Eigen::VectorXd denominator =
            manifold.conjugate().cwiseProduct(r_inv_a).colwise().sum().real().transpose();
        if (!numerator.allFinite() || !denominator.allFinite() ||
            (denominator.array() <= 0.0).any()) {
            throw numeric_error("iaa: singular covariance at iteration " + std::to_string(it));
        }
        p = numerator.array() / denominator.array().square();
    }
    return Spectrum{p.segment(lead, m_out), grid};
}

std::vector<int> local_maxima(const Eigen::VectorXd& values) {
    const int m = static_cast<int>(values.size());
    std::vector<int> maxima;
    for (int i = 0; i < m; ++i) {
        const bool left_ok = (i == 0) || values[i] > values[i - 1];
        const bool right_ok = (i == m - 1) || values[i] > values[i + 1];
        if (m > 1 && left_ok && right_ok) maxima.push_back(i);
        if (m == 1) maxima.push_back(i);
    }
    return maxima;
}

std::vector<double> peak_search(const Spectrum& spectrum, int k) {
    const int m = static_cast<int>(spectrum.values.size());
    if (k < 1 || k > m) throw config_error("peak_search: k must be in [1, grid size]");

    const auto by_value_then_index = [&](int a, int b) {
        if (spectrum.values[a] != spectrum.values[b]) {
            return spectrum.values[a] > spectrum.values[b];
        }
        return a < b;
    };

    std::vector<int> maxima = local_maxima(spectrum.values);
    std::sort(maxima.begin(), maxima.end(), by_value_then_index);
    if (static_cast<int>(maxima.size()) > k) maxima.resize(static_cast<std::size_t>(k));

    if (static_cast<int>(maxima.size()) < k) {
        std::vector<char> taken(static_cast<std::size_t>(m), 0);
        for (int idx : maxima) taken[static_cast<std::size_t>(idx)] = 1;
        std::vector<int> rest;
        rest.reserve(static_cast<std::size_t>(m) - maxima.size());
        for (int i = 0; i < m; ++i) {
            if (!taken[static_cast<std::size_t>(i)]) rest.push_back(i);
        }
        std::sort(rest.begin(), rest.end(), by_value_then_index);
        for (std::size_t i = 0; maxima.size() < static_cast<std::size_t>(k); ++i) {
            maxima.push_back(rest[i]);
        }
    }

    std::vector<double> angles;
    angles.reserve(static_cast<std::size_t>(k));
    for (int idx : maxima) angles.push_back(spectrum.grid.angle(idx));
    return angles;
}

} // namespace sladoa
