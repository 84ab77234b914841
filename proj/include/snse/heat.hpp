#pragma once

#include "snse/noise.hpp"

namespace snse {

enum class HeatScheme { ExponentialEuler, SemiImplicitEuler };

// Per-step integration plan for the stochastic heat flow. The exponential
// scheme applies the exact per-mode semigroup e^{-|n|^2 dt}; the noise and
// forcing enter before the semigroup factor (Ito convention).
struct HeatStepPlan {
    LatticePtr lattice;
    double dt = 0.0;
    double horizon = 0.0;
    HeatScheme scheme = HeatScheme::ExponentialEuler;
    Eigen::ArrayXd factors; // e^{-|n|^2 dt}, or 1/(1+|n|^2 dt) semi-implicit
    double stiffness = 0.0; // dt * (N/2)^2 diagnostic

    HeatStepPlan() = default;
    HeatStepPlan(LatticePtr lat, double step, double t_end,
                 HeatScheme s = HeatScheme::ExponentialEuler)
        : lattice(std::move(lat)), dt(step), horizon(t_end), scheme(s) {
        if (!(dt > 0.0))
            throw std::invalid_argument("heat plan: dt must be positive");
        if (scheme == HeatScheme::ExponentialEuler)
            factors = (-lattice->n_sq() * dt).exp();
        else
            factors = 1.0 / (1.0 + lattice->n_sq() * dt);
        const double half = lattice->n() / 2.0;
        stiffness = dt * half * half;
    }

    int steps() const { return int(std::lround(horizon / dt)); }
};

// uhat <- factor * (uhat + dt * fhat + noise_kick); f and kick optional.
inline void heat_step(SpectralField& u, const SpectralField* f, const SpectralField* noise_kick,
                      const HeatStepPlan& plan) {
    if (u.lattice->n() != plan.lattice->n())
        throw std::invalid_argument("heat_step: lattice mismatch");
    for (int j = 0; j < 3; ++j) {
        if (f)
            u.c[j] += plan.dt * f->c[j];
        if (noise_kick)
            u.c[j] += noise_kick->c[j];
        u.c[j] *= plan.factors;
    }
    if (f && !f->solenoidal)
        u.solenoidal = false;
    if (noise_kick && !noise_kick->solenoidal)
        u.solenoidal = false;
}

// Running functionals of one trajectory at a fixed Sobolev level alpha:
// sup_t ||u||^2_{H^{1/2+a}}, int ||u||^2_{H^{3/2+a}} (trapezoid), and the
// forcing / noise budgets on the right side of the heat estimate.
struct EnergyLedger {
    double alpha = 0.0;
    double initial_sq = 0.0;
    double sup_sq = 0.0;
    double dissipation_integral = 0.0;
    double forcing_budget = 0.0; // int ||f||^2_{H^{a-1/2}}
    double noise_budget = 0.0;   // int ||g||^2_{HS, 1/2+a}

    double prev_diss = 0.0, prev_force = 0.0, prev_noise = 0.0;
    bool started = false;

    void start(double u_sq_low, double u_sq_high, double f_sq, double g_sq) {
        initial_sq = u_sq_low;
        sup_sq = u_sq_low;
        prev_diss = u_sq_high;
        prev_force = f_sq;
        prev_noise = g_sq;
        started = true;
    }

    void accumulate(double dt, double u_sq_low, double u_sq_high, double f_sq, double g_sq) {
        sup_sq = std::max(sup_sq, u_sq_low);
        dissipation_integral += 0.5 * dt * (prev_diss + u_sq_high);
        forcing_budget += 0.5 * dt * (prev_force + f_sq);
        noise_budget += 0.5 * dt * (prev_noise + g_sq);
        prev_diss = u_sq_high;
        prev_force = f_sq;
        prev_noise = g_sq;
    }

    double lhs() const { return sup_sq - initial_sq + dissipation_integral; }
    double rhs() const { return forcing_budget + noise_budget; }
};

enum class PathStatus { Ok, Diverged };

struct HeatSample {
    double t = 0.0;
    double h_half = 0.0;       // ||u||_{H^{1/2}}
    double h_half_delta = 0.0; // ||u||_{H^{1/2+delta}}
    double h_three_half = 0.0; // ||u||_{H^{3/2}}
    EnergyLedger ledger0;
    EnergyLedger ledger_delta;
};

struct HeatRunResult {
    PathStatus status = PathStatus::Ok;
    double failed_at = -1.0;
    SpectralField final_state;
    EnergyLedger ledger0;
    EnergyLedger ledger_delta;
    std::vector<HeatSample> samples;
    std::vector<SpectralField> states;          // populated when retain_states
    std::vector<Eigen::ArrayXd> increments;     // per step, when retain_states
};

struct HeatProblem {
    // forcing at time t, or nullptr
    std::function<const SpectralField*(double t)> forcing;
    // multiplicative/additive noise expressed through a NoiseCoefficient-style
    // triple; all optional (deterministic run when absent)
    std::function<void(double t, const SpectralField& u, const Eigen::ArrayXd& dw,
                       SpectralField& kick)>
        noise_kick;
    std::function<double(double t, const SpectralField& u, SobolevExponent a)> noise_hs_sq;
    WienerBasis* basis = nullptr;
};

// Integrates the stochastic heat equation on [0, plan.horizon]; fills both
// ledgers (alpha = 0, delta), samples norms every `save_stride` steps, aborts
// the path with a diagnostic on NaN/overflow.
HeatRunResult solve_heat(const SpectralField& u0, const HeatProblem& problem,
                         const HeatStepPlan& plan, double delta, int save_stride = 1,
                         bool retain_states = false);

struct EstimateReport {
    double ratio = 0.0;       // mean LHS / mean RHS of the heat estimate
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool inconsistent = false; // zero RHS but nonzero LHS
    bool pass = true;
    int paths = 0;
};

// Empirical constant in the heat energy estimate over an ensemble of ledgers;
// flags a violation when the ratio exceeds `c_max`.
EstimateReport verify_energy_estimate(const std::vector<EnergyLedger>& ledgers, double c_max);

} // namespace snse
