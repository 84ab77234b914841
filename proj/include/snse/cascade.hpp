#pragma once

#include "snse/heat.hpp"

namespace snse {

// Smooth cutoff profile: 1 on [0,1], 0 on [2,inf), quintic-smoothstep blend
// (C^2, monotone) in between.
inline double theta_cutoff(double r) {
    if (r <= 1.0)
        return 1.0;
    if (r >= 2.0)
        return 0.0;
    const double x = r - 1.0;
    const double s = x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
    return 1.0 - s;
}

// --- Decomposition of initial data -----------------------------------------

// Dyadic-shell split of u0 with greedy regrouping: piece k is a union of
// consecutive Littlewood-Paley shells chosen so that
//   ||v0^(0)||_{H^{1/2}} <= 2 eps0   and   ||v0^(k)||_{H^{1/2}} <= eps0/4^k.
// Pieces are frequency-truncated (smooth), divergence- and mean-free, and
// sum to u0 exactly. The tail beyond k_max is folded into the last piece.
struct DataDecomposition {
    std::vector<SpectralField> pieces;
    std::vector<double> h_half_norms;
    std::vector<double> h_half_delta_norms; // the recorded bounds M-bb_k
    std::vector<std::pair<int, int>> shell_ranges; // [lo, hi) dyadic shell indices
    double eps0 = 0.0;
    double delta = 0.0;
};

DataDecomposition decompose(const SpectralField& u0, double eps0, double delta, int k_max);

// --- Cutoff bookkeeping -----------------------------------------------------

// Running Q_{k,alpha}(t) = ||v(t)||_{H^{1/2+a}} + (int_0^t ||v||^2_{H^{3/2+a}})^{1/2}
// for alpha in {0, delta}, plus the evaluated cutoff values.
struct CutoffState {
    double m_k = 0.0;          // psi threshold (0 => zero piece convention)
    double eps_bar_level = 0.0; // eps_bar / 2^k, the phi threshold scale

    double norm_12 = 0.0, norm_12d = 0.0; // current H^{1/2}, H^{1/2+delta}
    double int_32 = 0.0, int_32d = 0.0;   // trapezoidal dissipation integrals
    double prev_32 = 0.0, prev_32d = 0.0;

    double psi = 1.0;
    double phi = 1.0;

    double q0() const { return norm_12 + std::sqrt(int_32); }
    double qd() const { return norm_12d + std::sqrt(int_32d); }

    void start(double n12, double n12d, double n32_sq, double n32d_sq) {
        norm_12 = n12;
        norm_12d = n12d;
        prev_32 = n32_sq;
        prev_32d = n32d_sq;
        evaluate();
    }

    void advance(double dt, double n12, double n12d, double n32_sq, double n32d_sq) {
        int_32 += 0.5 * dt * (prev_32 + n32_sq);
        int_32d += 0.5 * dt * (prev_32d + n32d_sq);
        prev_32 = n32_sq;
        prev_32d = n32d_sq;
        norm_12 = n12;
        norm_12d = n12d;
        evaluate();
    }

    void evaluate() {
        psi = m_k > 0.0 ? theta_cutoff(qd() / m_k) : (qd() > 0.0 ? 0.0 : 1.0);
        phi = theta_cutoff(q0() / eps_bar_level);
    }
};

// --- Lockstep cascade run ---------------------------------------------------

struct LevelStops {
    std::optional<double> tau;  // first Q_{k,0} >= eps_bar / 2^k
    std::optional<double> rho;  // first Q_{k,delta} >= M_k
};

struct StoppingInfo {
    std::vector<LevelStops> levels;
    std::optional<double> tau; // min over levels and kinds
};

struct LevelSeries {
    std::vector<double> q0, qd, psi, phi, zeta;
    std::vector<double> u_h12, u_h12d, u_h32; // norms of the partial sum u^(k)
};

struct CascadeOptions {
    int save_stride = 1;
    int grace_steps = 10;
    bool retain_states = false;       // keep all fields + increments (residual checks)
    bool disable_nonlinearity = false; // heat-only baseline
    double m_rule_factor = 8.0;       // M_k = factor * Mbb_k
    double eps_bar = 0.0;             // required
    // optional preset Brownian increments (shared-path refinement studies)
    const std::vector<Eigen::ArrayXd>* preset_increments = nullptr;
};

struct CascadeResult {
    PathStatus status = PathStatus::Ok;
    int failed_level = -1;
    double failed_at = -1.0;

    std::vector<double> t_series; // save-stride times
    std::vector<LevelSeries> levels;
    std::vector<EnergyLedger> ledger0;      // per level, alpha = 0
    std::vector<EnergyLedger> ledger_delta; // per level, alpha = delta
    std::vector<double> sup_q0, sup_qd;     // per level, full dt resolution
    StoppingInfo stops;

    // u^{(k_max)} functionals at full dt resolution
    std::vector<double> u_h12_sq;       // per step
    std::vector<double> u_h32_sq_int;   // cumulative trapezoid per step
    double last_u_h32_sq = 0.0;
    double dt = 0.0;

    std::vector<SpectralField> final_levels;
    // retained (per step): states[level][step], u_states[step], increments[step]
    std::vector<std::vector<SpectralField>> states;
    std::vector<SpectralField> u_states;
    std::vector<Eigen::ArrayXd> increments;
};

// Advances all cascade levels on one shared time grid and one Brownian
// family. Levels see u^{(k-1)} at the same time point (forcings for every
// level are computed before any state advances). The run stops `grace_steps`
// after the first threshold crossing, or at the horizon.
CascadeResult run_cascade(const DataDecomposition& data, const NoiseCoefficient& sigma,
                          WienerBasis& basis, const HeatStepPlan& plan, FourierTransform& xf,
                          const CascadeOptions& opts);

// --- Picard iteration on a short window --------------------------------------

struct ContractionReport {
    std::vector<double> ratios; // squared-sum ratios X_m / X_{m-1}, m >= 2
    std::vector<double> diffs;  // successive-difference norms (unsquared sum)
    int iterations = 0;
    bool converged = false;
};

struct PicardInput {
    SpectralField v0;
    std::vector<SpectralField> w_traj;   // u^{(k-1)} at grid times; empty => 0
    std::vector<double> zeta_series;     // zeta_{k-1}(t_s); empty => 1
    std::vector<Eigen::ArrayXd> increments; // one per step, reused by all iterates
    const NoiseCoefficient* sigma = nullptr;
    double delta = 0.0;
    double m_k = 0.0;
    double eps_bar_level = 0.0;
    int m_max = 24;
    double tol = 1e-12;
};

struct PicardResult {
    std::vector<SpectralField> trajectory; // converged iterate at grid times
    ContractionReport report;
};

// Fixed-point solve of one level over [0, plan.horizon]: iterate m solves the
// linear SPDE whose cutoff coefficient (psi phi)^2 is frozen from iterate
// m-1's trajectory; iterate 0 is the homogeneous heat flow of v0. Throws when
// the squared-sum ratio stays >= 1 for three consecutive iterates.
PicardResult picard_solve(const PicardInput& input, const HeatStepPlan& plan,
                          FourierTransform& xf);

// --- Reassembly and residuals -------------------------------------------------

struct NonlinearityIdentityReport {
    double residual = 0.0; // relative L^2 residual of the telescoping identity
    double scale = 0.0;
};

// u^{(k)} = sum_j v^(j) plus the spectral check that the per-level advective
// forcings telescope to the full advective term of u^{(k)}.
SpectralField reassemble(const std::vector<const SpectralField*>& levels,
                         NonlinearityIdentityReport* report, FourierTransform& xf);

struct ResidualReport {
    double max_defect = 0.0;
    double state_scale = 0.0;
    int modes_checked = 0;
};

// Discrete weak-form defect of the reassembled trajectory against the SNSE
// pairing with Fourier test modes, evaluated up to t_cap using the recorded
// increments. `include_advection` is off for heat-only baselines.
ResidualReport weak_residual(const std::vector<SpectralField>& u_states,
                             const std::vector<Eigen::ArrayXd>& increments,
                             const NoiseCoefficient& sigma, const HeatStepPlan& plan,
                             double t_cap, const std::vector<std::array<int, 3>>& test_modes,
                             FourierTransform& xf, bool include_advection = true);

} // namespace snse
