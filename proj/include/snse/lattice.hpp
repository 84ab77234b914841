#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace snse {

// Fractional Sobolev order. The solver only ever uses the small exponent set
// built from the run's delta; keeping it a strong type stops bare doubles
// from drifting between the H^alpha and the dissipation (alpha + 1) scales.
struct SobolevExponent {
    double value = 0.0;

    constexpr SobolevExponent() = default;
    constexpr explicit SobolevExponent(double a) : value(a) {}

    constexpr SobolevExponent shifted(double beta) const { return SobolevExponent(value + beta); }

    static constexpr SobolevExponent l2() { return SobolevExponent(0.0); }
    static constexpr SobolevExponent critical() { return SobolevExponent(0.5); }
    static constexpr SobolevExponent critical_plus(double delta) { return SobolevExponent(0.5 + delta); }
    static constexpr SobolevExponent dissipation() { return SobolevExponent(1.5); }
    static constexpr SobolevExponent dissipation_plus(double delta) { return SobolevExponent(1.5 + delta); }
    static constexpr SobolevExponent dual_forcing(double alpha) { return SobolevExponent(alpha - 0.5); }
};

inline void validate_delta(double delta) {
    if (!(delta > 0.0) || delta > 0.5)
        throw std::invalid_argument("delta must lie in (0, 1/2]");
}

// Truncated Fourier lattice for 2*pi-periodic mean-free fields on the torus.
//
// Modes are the closed cube |n_i| <= N/2 so the stored set is symmetric under
// n -> -n. Physical fields keep the Nyquist shell |n_i| = N/2 identically
// zero; that makes the (N+1)^3 cube map onto an N^3 FFT grid without loss.
// The dealias radius follows the 2/3 rule: 3*kd < N, so quadratic products of
// fields supported in |n_i| <= kd are alias-free on the retained modes.
class ModeLattice {
  public:
    explicit ModeLattice(int n);

    static std::shared_ptr<const ModeLattice> make(int n) {
        return std::make_shared<const ModeLattice>(n);
    }

    int n() const { return n_; }
    int half() const { return n_ / 2; }
    int dealias_radius() const { return kd_; }
    Eigen::Index size() const { return size_; }
    Eigen::Index zero_index() const { return zero_index_; }

    // Flat index of mode (n1,n2,n3), each component in [-N/2, N/2].
    Eigen::Index index(int n1, int n2, int n3) const {
        const int h = half();
        return static_cast<Eigen::Index>((n3 + h) * side_ + (n2 + h)) * side_ + (n1 + h);
    }

    const Eigen::ArrayXi& n1() const { return n1_; }
    const Eigen::ArrayXi& n2() const { return n2_; }
    const Eigen::ArrayXi& n3() const { return n3_; }
    const Eigen::ArrayXd& n_sq() const { return n_sq_; }

    // true where the mode survives the 2/3-rule mask (|n_i| <= kd for all i).
    const Eigen::Array<bool, Eigen::Dynamic, 1>& dealias_mask() const { return dealias_; }
    // true on the Nyquist shell (any |n_i| == N/2); coefficients there stay 0.
    const Eigen::Array<bool, Eigen::Dynamic, 1>& nyquist_mask() const { return nyquist_; }

    // Cached (1+|n|^2)^alpha weights for Sobolev sums.
    const Eigen::ArrayXd& sobolev_weights(double alpha) const;

    Eigen::Index flat_to_mode(Eigen::Index idx, int& n1, int& n2, int& n3) const {
        const int h = half();
        n1 = static_cast<int>(idx % side_) - h;
        n2 = static_cast<int>((idx / side_) % side_) - h;
        n3 = static_cast<int>(idx / (side_ * side_)) - h;
        return idx;
    }

  private:
    int n_;
    int side_;
    int kd_;
    Eigen::Index size_;
    Eigen::Index zero_index_;
    Eigen::ArrayXi n1_, n2_, n3_;
    Eigen::ArrayXd n_sq_;
    Eigen::Array<bool, Eigen::Dynamic, 1> dealias_;
    Eigen::Array<bool, Eigen::Dynamic, 1> nyquist_;

    mutable std::mutex weight_mutex_;
    mutable std::map<double, Eigen::ArrayXd> weight_cache_;
};

using LatticePtr = std::shared_ptr<const ModeLattice>;

} // namespace snse
