#include "snse/fft.hpp"

#include <mutex>

namespace snse {

namespace {
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

FourierTransform::FourierTransform(LatticePtr lattice, int grid_factor)
    : lattice_(std::move(lattice)), grid_n_(lattice_->n() * grid_factor) {
    grid_size_ = static_cast<Eigen::Index>(grid_n_) * grid_n_ * grid_n_;

    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        buf_ = fftw_alloc_complex(static_cast<size_t>(grid_size_));
        plan_fwd_ = fftw_plan_dft_3d(grid_n_, grid_n_, grid_n_, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        plan_bwd_ = fftw_plan_dft_3d(grid_n_, grid_n_, grid_n_, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }

    // Map each cube mode to its wrapped slot on the grid. Modes that the grid
    // cannot represent uniquely (|n_i| >= grid_n/2 when grid_factor == 1, the
    // Nyquist shell) are skipped; fields keep them at zero anyway.
    const int h = lattice_->half();
    const int gh = grid_n_ / 2;
    cube_to_grid_.assign(static_cast<size_t>(lattice_->size()), -1);
    Eigen::Index idx = 0;
    for (int k = -h; k <= h; ++k)
        for (int j = -h; j <= h; ++j)
            for (int i = -h; i <= h; ++i, ++idx) {
                if (std::abs(i) >= gh || std::abs(j) >= gh || std::abs(k) >= gh)
                    continue;
                const int gi = (i + grid_n_) % grid_n_;
                const int gj = (j + grid_n_) % grid_n_;
                const int gk = (k + grid_n_) % grid_n_;
                cube_to_grid_[static_cast<size_t>(idx)] =
                    (static_cast<Eigen::Index>(gk) * grid_n_ + gj) * grid_n_ + gi;
            }
}

FourierTransform::~FourierTransform() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan_fwd_);
    fftw_destroy_plan(plan_bwd_);
    fftw_free(buf_);
}

void FourierTransform::to_grid(const Coeffs& cube, Eigen::ArrayXd& grid_values) {
    for (Eigen::Index g = 0; g < grid_size_; ++g)
        buf_[g][0] = buf_[g][1] = 0.0;
    for (Eigen::Index idx = 0; idx < cube.size(); ++idx) {
        const Eigen::Index g = cube_to_grid_[static_cast<size_t>(idx)];
        if (g < 0)
            continue;
        buf_[g][0] = cube[idx].real();
        buf_[g][1] = cube[idx].imag();
    }
    fftw_execute(plan_bwd_);
    grid_values.resize(grid_size_);
    for (Eigen::Index g = 0; g < grid_size_; ++g)
        grid_values[g] = buf_[g][0];
}

const Eigen::ArrayXd& FourierTransform::grid_weights(double alpha) {
    auto it = grid_weight_cache_.find(alpha);
    if (it != grid_weight_cache_.end())
        return it->second;
    Eigen::ArrayXd w(grid_size_);
    Eigen::Index g = 0;
    for (int k = 0; k < grid_n_; ++k)
        for (int j = 0; j < grid_n_; ++j)
            for (int i = 0; i < grid_n_; ++i, ++g) {
                const int fi = i <= grid_n_ / 2 ? i : i - grid_n_;
                const int fj = j <= grid_n_ / 2 ? j : j - grid_n_;
                const int fk = k <= grid_n_ / 2 ? k : k - grid_n_;
                const double nsq = double(fi) * fi + double(fj) * fj + double(fk) * fk;
                w[g] = std::pow(1.0 + nsq, alpha);
            }
    return grid_weight_cache_.emplace(alpha, std::move(w)).first->second;
}

double FourierTransform::spectrum_norm_sq(const Eigen::ArrayXd& grid_values, double alpha) {
    const auto& w = grid_weights(alpha);
    const double scale = 1.0 / static_cast<double>(grid_size_);
    for (Eigen::Index g = 0; g < grid_size_; ++g) {
        buf_[g][0] = grid_values[g];
        buf_[g][1] = 0.0;
    }
    fftw_execute(plan_fwd_);
    double sum = 0.0;
    for (Eigen::Index g = 0; g < grid_size_; ++g) {
        const double re = buf_[g][0] * scale;
        const double im = buf_[g][1] * scale;
        sum += w[g] * (re * re + im * im);
    }
    return sum;
}

void FourierTransform::to_cube(const Eigen::ArrayXd& grid_values, Coeffs& cube) {
    const double scale = 1.0 / static_cast<double>(grid_size_);
    for (Eigen::Index g = 0; g < grid_size_; ++g) {
        buf_[g][0] = grid_values[g];
        buf_[g][1] = 0.0;
    }
    fftw_execute(plan_fwd_);
    cube.resize(lattice_->size());
    cube.setZero();
    for (Eigen::Index idx = 0; idx < cube.size(); ++idx) {
        const Eigen::Index g = cube_to_grid_[static_cast<size_t>(idx)];
        if (g < 0)
            continue;
        cube[idx] = Complex(buf_[g][0] * scale, buf_[g][1] * scale);
    }
}

} // namespace snse
