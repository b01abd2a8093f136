#include "sladoa/array_signal.hpp"

#include <cmath>
#include <numbers>

#include "sladoa/errors.hpp"

namespace sladoa {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

ArrayGeometry::ArrayGeometry(std::vector<double> positions_wavelengths, std::vector<int> mask)
    : positions_(std::move(positions_wavelengths)), mask_(std::move(mask)) {
    if (positions_.empty()) throw shape_error("geometry: no elements");
    if (positions_.front() != 0.0) throw shape_error("geometry: first element position must be 0");
    for (std::size_t i = 1; i < positions_.size(); ++i) {
        if (!(positions_[i] > positions_[i - 1])) {
            throw shape_error("geometry: positions must be strictly increasing");
        }
    }
    if (mask_.size() != positions_.size()) {
        throw shape_error("geometry: mask length " + std::to_string(mask_.size()) +
                          " does not match " + std::to_string(positions_.size()) + " positions");
    }
    for (int flag : mask_) {
        if (flag != 0 && flag != 1) throw shape_error("geometry: mask flags must be 0 or 1");
        active_count_ += flag;
    }
    if (active_count_ == 0) throw shape_error("geometry: at least one element must be active");
}

ArrayGeometry ArrayGeometry::ula(int n, double spacing_wavelengths) {
    if (n < 1) throw shape_error("ula: need at least one element");
    std::vector<double> pos(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pos[static_cast<std::size_t>(i)] = spacing_wavelengths * i;
    return ArrayGeometry(std::move(pos), std::vector<int>(static_cast<std::size_t>(n), 1));
}

ArrayGeometry ArrayGeometry::with_mask(std::vector<int> mask) const {
    return ArrayGeometry(positions_, std::move(mask));
}

std::vector<int> ArrayGeometry::active_indices() const {
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(active_count_));
    for (int i = 0; i < size(); ++i) {
        if (is_active(i)) idx.push_back(i);
    }
    return idx;
}

void SourceScene::validate(double fov_min_deg, double fov_max_deg,
                           double min_separation_deg) const {
    const std::size_t k = angles_deg.size();
    if (k == 0) throw shape_error("scene: no sources");
    if (amplitudes.size() != k || phases.size() != k) {
        throw shape_error("scene: angles/amplitudes/phases lengths disagree");
    }
    for (double a : angles_deg) {
        if (!(a >= fov_min_deg && a <= fov_max_deg)) {
            throw numeric_error("scene: angle " + std::to_string(a) + " outside field of view");
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            if (std::abs(angles_deg[i] - angles_deg[j]) < min_separation_deg) {
                throw numeric_error("scene: sources closer than minimum separation");
            }
        }
    }
    for (double a : amplitudes) {
        if (!(a > 0.0 && a <= 1.0)) {
            throw numeric_error("scene: amplitude " + std::to_string(a) + " outside (0, 1]");
        }
    }
}

ScanGrid::ScanGrid(double min_deg, double max_deg, double step_deg) : step_deg_(step_deg) {
    if (!(step_deg > 0.0) || !(max_deg >= min_deg)) throw config_error("grid: invalid range/step");
    const int m = static_cast<int>(std::llround((max_deg - min_deg) / step_deg)) + 1;
    angles_deg_.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) angles_deg_[static_cast<std::size_t>(i)] = min_deg + step_deg * i;
}

ScanGrid ScanGrid::reference() { return ScanGrid(-30.0, 30.0, 1.0); }

int ScanGrid::nearest_index(double theta_deg) const {
    const double lo = angles_deg_.front();
    const double raw = (theta_deg - lo) / step_deg_;
    int idx = static_cast<int>(std::floor(raw + 0.5));
    idx = std::max(0, std::min(size() - 1, idx));
    return idx;
}

int ScanGrid::index_of(double theta_deg) const {
    const int idx = nearest_index(theta_deg);
    if (std::abs(angle(idx) - theta_deg) > 1e-9) {
        throw shape_error("grid: angle " + std::to_string(theta_deg) + " is not a grid point");
    }
    return idx;
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& geometry, double theta_deg) {
    const double s = std::sin(theta_deg * kDegToRad);
    const int n = geometry.size();
    Eigen::VectorXcd a(n);
    for (int i = 0; i < n; ++i) {
        a[i] = std::polar(1.0, 2.0 * std::numbers::pi * geometry.positions()[static_cast<std::size_t>(i)] * s);
    }
    return a;
}

Eigen::MatrixXcd steering_matrix(const ArrayGeometry& geometry, const ScanGrid& grid) {
    Eigen::MatrixXcd manifold(geometry.size(), grid.size());
    for (int m = 0; m < grid.size(); ++m) {
        manifold.col(m) = steering_vector(geometry, grid.angle(m));
    }
    return manifold;
}

double noise_variance(double snr_db) {
    if (std::isinf(snr_db) && snr_db > 0.0) return 0.0;
    return std::pow(10.0, -snr_db / 10.0);
}

Eigen::VectorXcd complex_awgn(int n, double sigma2, RngStream& rng) {
    Eigen::VectorXcd noise(n);
    const double scale = std::sqrt(sigma2 / 2.0);
    for (int i = 0; i < n; ++i) {
        const auto [re, im] = rng.normal_pair();
        noise[i] = std::complex<double>(scale * re, scale * im);
    }
    return noise;
}

Snapshot synthesize_snapshot(const ArrayGeometry& geometry, const SourceScene& scene,
                             RngStream& rng) {
    if (scene.source_count() == 0) throw shape_error("synthesize: empty scene");
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(geometry.size());
    for (int k = 0; k < scene.source_count(); ++k) {
        y += steering_vector(geometry, scene.angles_deg[static_cast<std::size_t>(k)]) *
             scene.coefficient(k);
    }
    const double sigma2 = noise_variance(scene.snr_db);
    if (sigma2 > 0.0) y += complex_awgn(geometry.size(), sigma2, rng);
    for (int i = 0; i < geometry.size(); ++i) {
        if (!geometry.is_active(i)) y[i] = std::complex<double>(0.0, 0.0);
    }
    return Snapshot{std::move(y), geometry};
}

double sparsity(const ArrayGeometry& geometry) {
    return 1.0 - static_cast<double>(geometry.active_count()) / static_cast<double>(geometry.size());
}

} // namespace sladoa
