#pragma once

#include "snse/field.hpp"

#include <fftw3.h>
#include <map>
#include <vector>

namespace snse {

// FFT bridge between the symmetric mode cube and an N^3 collocation grid.
// One instance per worker thread: the grid buffers are scratch space and the
// FFTW plans are executed on them only. Plan creation is serialized globally
// (FFTW planning is not thread-safe); execution is.
//
// Conventions: u(x_m) = sum_n uhat(n) e^{+i n.x_m} on the uniform grid, and
// the forward map divides by N^3, so the pair is exactly inverse on
// Nyquist-free fields and Parseval holds with unit weights.
class FourierTransform {
  public:
    explicit FourierTransform(LatticePtr lattice, int grid_factor = 1);
    ~FourierTransform();

    FourierTransform(const FourierTransform&) = delete;
    FourierTransform& operator=(const FourierTransform&) = delete;

    const LatticePtr& lattice() const { return lattice_; }
    int grid_n() const { return grid_n_; }
    Eigen::Index grid_size() const { return grid_size_; }

    // Mode cube -> real grid values (real part; imaginary part is roundoff
    // for Hermitian-symmetric coefficients).
    void to_grid(const Coeffs& cube, Eigen::ArrayXd& grid_values);

    // Real grid values -> mode cube (modes with any |n_i| > grid capacity are
    // dropped; exact for band-limited data).
    void to_cube(const Eigen::ArrayXd& grid_values, Coeffs& cube);

    void field_to_grid(const SpectralField& f, std::array<Eigen::ArrayXd, 3>& grids) {
        for (int j = 0; j < 3; ++j)
            to_grid(f.c[j], grids[j]);
    }

    // H^alpha mass of grid data over the *entire* grid spectrum (not just the
    // cube). With grid_factor >= 2 this captures quadratic products of cube
    // fields exactly; used by the Sobolev product-inequality verifier.
    double spectrum_norm_sq(const Eigen::ArrayXd& grid_values, double alpha);

  private:
    const Eigen::ArrayXd& grid_weights(double alpha);

    LatticePtr lattice_;
    int grid_n_;
    Eigen::Index grid_size_;
    fftw_complex* buf_;
    fftw_plan plan_fwd_;
    fftw_plan plan_bwd_;
    // cube flat index -> grid flat index, or -1 on the unrepresentable shell.
    std::vector<Eigen::Index> cube_to_grid_;
    std::map<double, Eigen::ArrayXd> grid_weight_cache_;
};

} // namespace snse
