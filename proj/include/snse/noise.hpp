#pragma once

#include "snse/rng.hpp"
#include "snse/spectral.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace snse {

// Truncated cylindrical Wiener process: K independent Brownian directions.
// One instance per path; increments are a pure function of the seed.
class WienerBasis {
  public:
    WienerBasis(int k, std::uint64_t seed) : k_(k), seed_(seed), rng_(seed) {}

    int dimensions() const { return k_; }
    std::uint64_t seed() const { return seed_; }
    double time() const { return t_; }

    // K iid Normal(0, dt) increments; advances the internal clock.
    Eigen::ArrayXd sample_increment(double dt) {
        if (!(dt > 0.0))
            throw std::invalid_argument("sample_increment: dt must be positive");
        Eigen::ArrayXd dw(k_);
        const double s = std::sqrt(dt);
        for (int i = 0; i < k_; ++i)
            dw[i] = s * rng_.next_normal();
        t_ += dt;
        return dw;
    }

  private:
    int k_;
    std::uint64_t seed_;
    Rng rng_;
    double t_ = 0.0;
};

enum class NoiseKind { Zero, LinearConvolution };

// Multiplicative noise coefficient sigma(t, u). The linear-convolution kind
// realizes column k as (eps_sigma / C_sigma) P0(phi * Pi_k u), with Pi_k a
// fixed partition of the dealiased modes into K groups and phi a smooth
// convolution kernel given by its Fourier multiplier. C_sigma is calibrated
// at construction by maximizing the Lipschitz ratio over all single-mode
// solenoidal probes, so || sigma(u1) - sigma(u2) ||_{HS, 1/2+a} never
// exceeds eps_sigma ||u1 - u2||_{H^{1/2+a}} for a in {0, delta}.
class NoiseCoefficient {
  public:
    NoiseCoefficient(LatticePtr lattice, NoiseKind kind, double eps_sigma, int k, double delta);

    NoiseKind kind() const { return kind_; }
    double eps_sigma() const { return eps_sigma_; }
    double calibration_constant() const { return c_sigma_; }
    int dimensions() const { return k_; }
    const Eigen::ArrayXd& kernel() const { return kernel_; }

    // sigma(t, u) e_k for all k <= K, materialized as solenoidal fields.
    std::vector<SpectralField> columns(double t, const SpectralField& u) const;

    // sum_k [sigma(t,u) e_k] dW_k without materializing K columns
    // (the mode groups partition the lattice).
    void apply_increment(double t, const SpectralField& u, const Eigen::ArrayXd& dw,
                         SpectralField& out) const;

    // || sigma(t, u) ||^2 in the HS lift of H^alpha, single pass.
    double hs_norm_sq(double t, const SpectralField& u, SobolevExponent alpha) const;

  private:
    LatticePtr lattice_;
    NoiseKind kind_;
    double eps_sigma_;
    int k_;
    double c_sigma_ = 1.0;
    Eigen::ArrayXd kernel_;   // phi-hat(n)
    Eigen::ArrayXi group_;    // mode -> column index, -1 outside the ball
    Eigen::ArrayXd prefactor_; // eps_sigma / C_sigma * kernel, zero off-ball
};

// (sum_k ||col_k||_{H^alpha}^2)^{1/2}
double hs_norm(const std::vector<SpectralField>& columns, SobolevExponent alpha);

struct IsometryReport {
    double mc_estimate = 0.0;   // E[ || int_0^T g dW ||_{L^2}^2 ]
    double exact = 0.0;         // T ||g||_{HS, L^2}^2
    double std_error = 0.0;
    double z_score = 0.0;
    double bdg_ratio = 0.0;     // E[sup_s |int_0^s g dW|_{L^2}] / sqrt(T ||g||^2)
    int paths = 0;
};

// Monte Carlo check of the Ito isometry for a constant (time-independent)
// operator given by `columns`; also records the BDG sup-ratio constant.
IsometryReport ito_integral_check(const std::vector<SpectralField>& columns, double horizon,
                                  int paths, int steps_per_path, std::uint64_t seed);

} // namespace snse
