#pragma once

#include "snse/fft.hpp"

namespace snse {

// --- Fourier-multiplier operations (pure, allocation-light) ---------------

// Leray projection (delta_jk - n_j n_k / |n|^2); zero mode stays zero.
SpectralField leray_project(const SpectralField& f);
void leray_project_in_place(SpectralField& f);

// || f ||_{H^alpha} with the non-homogeneous multiplier (1+|n|^2)^{alpha/2}.
double sobolev_norm(const SpectralField& f, SobolevExponent alpha);
double sobolev_norm_sq(const SpectralField& f, SobolevExponent alpha);

// Homogeneous dissipation seminorm sum |n|^2 |uhat|^2 = ||grad u||_{L^2}^2,
// the exact generator pairing for the discrete energy identity.
double grad_norm_sq(const SpectralField& f);

// Apply Lambda^beta, the multiplier (1+|n|^2)^{beta/2}.
SpectralField lambda_shift(const SpectralField& f, double beta);

// L^2 mode inner product sum_j sum_n re(a_j conj(b_j)).
double inner_product(const SpectralField& a, const SpectralField& b);

// max_n |n . uhat(n)| / max coefficient scale; 0 for the zero field.
double relative_divergence(const SpectralField& f);

void apply_dealias_mask(SpectralField& f);

// --- Pseudo-spectral nonlinearity ------------------------------------------

// P div(u (x) w), the dealiased divergence-form advective term; equals
// P((u.grad)w) for solenoidal u. Inputs are truncated to the 2/3-rule ball,
// the nine pointwise products are formed on the collocation grid, and the
// result is masked and Leray-projected. Throws if u is not solenoidal.
SpectralField advective_term(const SpectralField& u, const SpectralField& w, FourierTransform& xf);

// --- Sobolev product inequality (EQ-style two-sided evaluation) ------------

struct InequalityReport {
    double lhs = 0.0;       // || v (x) w ||_{H^{1/2+alpha}}
    double rhs_core = 0.0;  // product of interpolated norms, without C
    double ratio = 0.0;     // lhs / rhs_core, 0 when both vanish
};

// Evaluates || v (x) w ||_{H^{1/2+a}} against
// ||v||_{H^{1/2+a}}^{(1+a)/2} ||v||_{H^{3/2+a}}^{(1-a)/2} (same in w).
// `xf_padded` must be a transform with grid_factor >= 2 so the tensor
// product spectrum is exact.
InequalityReport verify_product_inequality(const SpectralField& v, const SpectralField& w,
                                           SobolevExponent alpha, FourierTransform& xf_padded);

// --- Field construction helpers --------------------------------------------

class Rng;

// Random solenoidal mean-free field supported on min_nsq < |n|^2 <= max_nsq
// (dealias ball intersected), scaled to the requested H^{1/2} norm.
// Hermitian symmetry is enforced so the field is real-valued.
SpectralField random_solenoidal_field(const LatticePtr& lattice, Rng& rng, double h_half_norm,
                                      double min_nsq = 0.0, double max_nsq = -1.0);

// Classic Taylor-Green velocity (solenoidal, modes |n_i| <= 1).
SpectralField taylor_green_field(const LatticePtr& lattice, double amplitude);

} // namespace snse
