#include "snse/heat.hpp"

namespace snse {

HeatRunResult solve_heat(const SpectralField& u0, const HeatProblem& problem,
                         const HeatStepPlan& plan, double delta, int save_stride,
                         bool retain_states) {
    validate_delta(delta);
    HeatRunResult res;
    SpectralField u = u0;
    u.enforce_mean_free();

    const SobolevExponent a_lo = SobolevExponent::critical();
    const SobolevExponent a_lo_d = SobolevExponent::critical_plus(delta);
    const SobolevExponent a_hi = SobolevExponent::dissipation();
    const SobolevExponent a_hi_d = SobolevExponent::dissipation_plus(delta);
    const SobolevExponent f_lo = SobolevExponent(-0.5);
    const SobolevExponent f_lo_d = SobolevExponent(delta - 0.5);

    res.ledger0.alpha = 0.0;
    res.ledger_delta.alpha = delta;

    const bool has_noise = problem.basis != nullptr && problem.noise_kick != nullptr;
    SpectralField kick(u.lattice);

    auto forcing_at = [&](double t) -> const SpectralField* {
        return problem.forcing ? problem.forcing(t) : nullptr;
    };

    auto budget_terms = [&](double t, const SpectralField* f, double& f0, double& fd, double& g0,
                            double& gd) {
        f0 = f ? sobolev_norm_sq(*f, f_lo) : 0.0;
        fd = f ? sobolev_norm_sq(*f, f_lo_d) : 0.0;
        g0 = 0.0;
        gd = 0.0;
        if (has_noise && problem.noise_hs_sq) {
            g0 = problem.noise_hs_sq(t, u, a_lo);
            gd = problem.noise_hs_sq(t, u, a_lo_d);
        }
    };

    double t = 0.0;
    {
        const SpectralField* f = forcing_at(0.0);
        double f0, fd, g0, gd;
        budget_terms(0.0, f, f0, fd, g0, gd);
        res.ledger0.start(sobolev_norm_sq(u, a_lo), sobolev_norm_sq(u, a_hi), f0, g0);
        res.ledger_delta.start(sobolev_norm_sq(u, a_lo_d), sobolev_norm_sq(u, a_hi_d), fd, gd);
        res.samples.push_back({0.0, std::sqrt(res.ledger0.sup_sq),
                               std::sqrt(res.ledger_delta.sup_sq), sobolev_norm(u, a_hi),
                               res.ledger0, res.ledger_delta});
        if (retain_states)
            res.states.push_back(u);
    }

    const int n_steps = plan.steps();
    for (int s = 0; s < n_steps; ++s) {
        const SpectralField* f = forcing_at(t);
        const SpectralField* kick_ptr = nullptr;
        if (has_noise) {
            const Eigen::ArrayXd dw = problem.basis->sample_increment(plan.dt);
            problem.noise_kick(t, u, dw, kick);
            kick_ptr = &kick;
            if (retain_states)
                res.increments.push_back(dw);
        }
        // budgets are evaluated at the step's left endpoint (Ito convention)
        double f0, fd, g0, gd;
        budget_terms(t, f, f0, fd, g0, gd);

        heat_step(u, f, kick_ptr, plan);
        t += plan.dt;

        const double u_lo = sobolev_norm_sq(u, a_lo);
        if (!std::isfinite(u_lo)) {
            res.status = PathStatus::Diverged;
            res.failed_at = t;
            break;
        }
        res.ledger0.accumulate(plan.dt, u_lo, sobolev_norm_sq(u, a_hi), f0, g0);
        res.ledger_delta.accumulate(plan.dt, sobolev_norm_sq(u, a_lo_d),
                                    sobolev_norm_sq(u, a_hi_d), fd, gd);
        if (retain_states)
            res.states.push_back(u);
        if ((s + 1) % save_stride == 0 || s + 1 == n_steps)
            res.samples.push_back({t, std::sqrt(u_lo), sobolev_norm(u, a_lo_d),
                                   sobolev_norm(u, a_hi), res.ledger0, res.ledger_delta});
    }

    res.final_state = std::move(u);
    return res;
}

EstimateReport verify_energy_estimate(const std::vector<EnergyLedger>& ledgers, double c_max) {
    if (ledgers.size() < 100)
        throw std::invalid_argument("verify_energy_estimate: need at least 100 paths");
    EstimateReport rep;
    rep.paths = int(ledgers.size());
    double lhs_sum = 0.0, rhs_sum = 0.0;
    double lhs_sq = 0.0, rhs_sq = 0.0, cross = 0.0;
    for (const auto& l : ledgers) {
        lhs_sum += l.lhs();
        rhs_sum += l.rhs();
        lhs_sq += l.lhs() * l.lhs();
        rhs_sq += l.rhs() * l.rhs();
        cross += l.lhs() * l.rhs();
    }
    const double m = double(ledgers.size());
    const double lhs_mean = lhs_sum / m;
    const double rhs_mean = rhs_sum / m;

    if (rhs_mean <= 0.0) {
        rep.inconsistent = lhs_mean > 1e-14;
        rep.ratio = 0.0;
        rep.pass = !rep.inconsistent;
        return rep;
    }
    rep.ratio = lhs_mean / rhs_mean;

    // Delta-method CI for the ratio of means.
    const double var_l = lhs_sq / m - lhs_mean * lhs_mean;
    const double var_r = rhs_sq / m - rhs_mean * rhs_mean;
    const double cov = cross / m - lhs_mean * rhs_mean;
    const double g2 = (var_l / (lhs_mean * lhs_mean + 1e-300) +
                       var_r / (rhs_mean * rhs_mean) -
                       2.0 * cov / (lhs_mean * rhs_mean + 1e-300)) /
                      m;
    const double rel = std::sqrt(std::max(0.0, g2));
    rep.ci_low = rep.ratio * (1.0 - 1.96 * rel);
    rep.ci_high = rep.ratio * (1.0 + 1.96 * rel);
    rep.pass = rep.ratio <= c_max;
    return rep;
}

} // namespace snse
