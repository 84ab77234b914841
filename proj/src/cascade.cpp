#include "snse/cascade.hpp"

namespace snse {

namespace {

int shell_of(double nsq) {
    // shell 0: 0 < |n| <= 1; shell j >= 1: 2^{j-1} < |n| <= 2^j
    if (nsq <= 1.0)
        return 0;
    int j = 0;
    double upper = 1.0;
    while (nsq > upper) {
        upper *= 4.0;
        ++j;
    }
    return j;
}

double piece_bound(double eps0, int k) {
    return k == 0 ? 2.0 * eps0 : eps0 / std::pow(4.0, k);
}

} // namespace

DataDecomposition decompose(const SpectralField& u0, double eps0, double delta, int k_max) {
    validate_delta(delta);
    if (!(eps0 > 0.0))
        throw std::invalid_argument("decompose: eps0 must be positive");
    if (k_max < 0)
        throw std::invalid_argument("decompose: k_max must be >= 0");
    if (!u0.solenoidal && relative_divergence(u0) > 1e-10)
        throw std::invalid_argument("decompose: u0 must be solenoidal");

    const auto& lat = *u0.lattice;
    const double total = sobolev_norm(u0, SobolevExponent::critical());
    if (total > eps0 * (1.0 + 1e-12))
        throw std::invalid_argument("decompose: ||u0||_{H^{1/2}} exceeds eps0");

    // Per-shell H^{1/2} mass.
    const auto& w_half = lat.sobolev_weights(0.5);
    const int max_shell = shell_of(lat.n_sq().maxCoeff()) + 1;
    std::vector<double> shell_mass(size_t(max_shell) + 1, 0.0);
    for (Eigen::Index idx = 0; idx < lat.size(); ++idx) {
        if (idx == lat.zero_index())
            continue;
        double m = 0.0;
        for (int j = 0; j < 3; ++j)
            m += std::norm(u0.c[j][idx]);
        shell_mass[size_t(shell_of(lat.n_sq()[idx]))] += w_half[idx] * m;
    }
    std::vector<double> tail_sq(shell_mass.size() + 1, 0.0);
    for (int m = int(shell_mass.size()) - 1; m >= 0; --m)
        tail_sq[size_t(m)] = tail_sq[size_t(m) + 1] + shell_mass[size_t(m)];

    // Greedy regrouping: boundary b_k is the first shell whose tail fits the
    // dyadic budget eps0 / 4^k. The last piece absorbs the whole remainder.
    std::vector<int> bounds(size_t(k_max) + 2, 0);
    for (int k = 1; k <= k_max; ++k) {
        int m = bounds[size_t(k) - 1];
        const double budget = eps0 / std::pow(4.0, k);
        while (m < int(tail_sq.size()) - 1 && std::sqrt(tail_sq[size_t(m)]) > budget)
            ++m;
        bounds[size_t(k)] = m;
    }
    bounds[size_t(k_max) + 1] = int(tail_sq.size()) - 1;

    DataDecomposition dec;
    dec.eps0 = eps0;
    dec.delta = delta;

    for (int k = 0; k <= k_max; ++k) {
        SpectralField piece(u0.lattice, true);
        const int lo = bounds[size_t(k)];
        const int hi = bounds[size_t(k) + 1];
        for (Eigen::Index idx = 0; idx < lat.size(); ++idx) {
            if (idx == lat.zero_index())
                continue;
            const int s = shell_of(lat.n_sq()[idx]);
            if (s < lo || s >= hi)
                continue;
            for (int j = 0; j < 3; ++j)
                piece.c[j][idx] = u0.c[j][idx];
        }
        const double n12 = sobolev_norm(piece, SobolevExponent::critical());
        if (n12 > piece_bound(eps0, k) * (1.0 + 1e-12))
            throw std::runtime_error("decompose: piece bound violated after regrouping "
                                     "(eps0 too small for the lattice tail)");
        dec.h_half_norms.push_back(n12);
        dec.h_half_delta_norms.push_back(sobolev_norm(piece, SobolevExponent::critical_plus(delta)));
        dec.shell_ranges.emplace_back(lo, hi);
        dec.pieces.push_back(std::move(piece));
    }

    // Exact reconstruction is structural (disjoint shells); verify anyway.
    SpectralField sum = SpectralField::zero(u0.lattice);
    for (const auto& p : dec.pieces)
        sum += p;
    sum -= u0;
    if (sobolev_norm(sum, SobolevExponent::critical()) > 1e-12 * std::max(1.0, total))
        throw std::runtime_error("decompose: reconstruction defect exceeds tolerance");
    return dec;
}

namespace {

struct LevelWork {
    SpectralField v;
    CutoffState cut;
    EnergyLedger ledger0;
    EnergyLedger ledger_delta;
    SpectralField forcing;
    SpectralField kick;
    bool has_forcing = false;
    bool has_kick = false;
    double f_sq_0 = 0.0, f_sq_d = 0.0, g_sq_0 = 0.0, g_sq_d = 0.0;
    double sup_q0 = 0.0, sup_qd = 0.0;
    std::optional<double> tau, rho;
    double prev_q0 = 0.0, prev_qd = 0.0;
};

void detect_crossing(std::optional<double>& stop, double t_prev, double dt, double q_prev,
                     double q_new, double threshold) {
    if (stop)
        return;
    const bool crossed = threshold > 0.0 ? q_new >= threshold : q_new > 0.0;
    if (!crossed)
        return;
    double t_hit = t_prev + dt;
    if (threshold > 0.0 && q_new > q_prev && q_prev < threshold) {
        const double frac = (threshold - q_prev) / (q_new - q_prev);
        t_hit = t_prev + frac * dt;
    }
    stop = t_hit;
}

} // namespace

CascadeResult run_cascade(const DataDecomposition& data, const NoiseCoefficient& sigma,
                          WienerBasis& basis, const HeatStepPlan& plan, FourierTransform& xf,
                          const CascadeOptions& opts) {
    if (!(opts.eps_bar > 0.0))
        throw std::invalid_argument("run_cascade: eps_bar must be positive");
    const int k_levels = int(data.pieces.size());
    if (k_levels == 0)
        throw std::invalid_argument("run_cascade: empty decomposition");
    const LatticePtr lattice = data.pieces.front().lattice;
    const auto& lat = *lattice;
    const double delta = data.delta;

    // States must live inside the dealias ball so the pseudo-spectral
    // nonlinearity stays alias-free for the whole run.
    for (const auto& p : data.pieces)
        for (int j = 0; j < 3; ++j) {
            const Coeffs outside = lat.dealias_mask().select(Complex(0.0, 0.0), p.c[j]);
            if (outside.abs().maxCoeff() > 1e-13)
                throw std::invalid_argument("run_cascade: initial data must be band-limited to the dealias ball");
        }

    const SobolevExponent a12 = SobolevExponent::critical();
    const SobolevExponent a12d = SobolevExponent::critical_plus(delta);
    const SobolevExponent a32 = SobolevExponent::dissipation();
    const SobolevExponent a32d = SobolevExponent::dissipation_plus(delta);
    const SobolevExponent f0 = SobolevExponent(-0.5);
    const SobolevExponent fd = SobolevExponent(delta - 0.5);

    std::vector<LevelWork> work(static_cast<size_t>(k_levels));
    CascadeResult res;
    res.dt = plan.dt;
    res.levels.resize(size_t(k_levels));
    res.sup_q0.assign(size_t(k_levels), 0.0);
    res.sup_qd.assign(size_t(k_levels), 0.0);
    res.stops.levels.resize(size_t(k_levels));
    if (opts.retain_states)
        res.states.resize(size_t(k_levels));

    for (int k = 0; k < k_levels; ++k) {
        auto& lw = work[size_t(k)];
        lw.v = data.pieces[size_t(k)];
        lw.cut.m_k = opts.m_rule_factor * data.h_half_delta_norms[size_t(k)];
        lw.cut.eps_bar_level = opts.eps_bar / std::pow(2.0, k);
        lw.cut.start(sobolev_norm(lw.v, a12), sobolev_norm(lw.v, a12d),
                     sobolev_norm_sq(lw.v, a32), sobolev_norm_sq(lw.v, a32d));
        lw.ledger0.alpha = 0.0;
        lw.ledger_delta.alpha = delta;
        lw.ledger0.start(lw.cut.norm_12 * lw.cut.norm_12, lw.cut.prev_32, 0.0, 0.0);
        lw.ledger_delta.start(lw.cut.norm_12d * lw.cut.norm_12d, lw.cut.prev_32d, 0.0, 0.0);
        lw.forcing = SpectralField(lattice, true);
        lw.kick = SpectralField(lattice, true);
        lw.sup_q0 = lw.prev_q0 = lw.cut.q0();
        lw.sup_qd = lw.prev_qd = lw.cut.qd();
        detect_crossing(lw.tau, 0.0, 0.0, lw.prev_q0, lw.prev_q0, lw.cut.eps_bar_level);
        detect_crossing(lw.rho, 0.0, 0.0, lw.prev_qd, lw.prev_qd, lw.cut.m_k);
    }

    const Eigen::ArrayXd n1 = lat.n1().cast<double>();
    const Eigen::ArrayXd n2 = lat.n2().cast<double>();
    const Eigen::ArrayXd n3 = lat.n3().cast<double>();
    const Complex iunit(0.0, 1.0);

    std::array<Eigen::ArrayXd, 3> wg; // partial-sum grids (u^{(k-1)})
    std::array<Eigen::ArrayXd, 3> vg;
    Eigen::ArrayXd prod;
    Coeffs that;
    SpectralField u_partial(lattice, true);

    auto record_point = [&](double t_now) {
        res.t_series.push_back(t_now);
        SpectralField acc(lattice, true);
        double zeta_acc = 1.0;
        for (int k = 0; k < k_levels; ++k) {
            auto& lw = work[size_t(k)];
            auto& ls = res.levels[size_t(k)];
            ls.q0.push_back(lw.cut.q0());
            ls.qd.push_back(lw.cut.qd());
            ls.psi.push_back(lw.cut.psi);
            ls.phi.push_back(lw.cut.phi);
            ls.zeta.push_back(zeta_acc);
            zeta_acc *= lw.cut.psi;
            acc += lw.v;
            ls.u_h12.push_back(sobolev_norm(acc, a12));
            ls.u_h12d.push_back(sobolev_norm(acc, a12d));
            ls.u_h32.push_back(sobolev_norm(acc, a32));
        }
    };

    auto record_u_functionals = [&]() {
        u_partial.set_zero();
        for (int k = 0; k < k_levels; ++k)
            u_partial += work[size_t(k)].v;
        const double h12 = sobolev_norm_sq(u_partial, a12);
        const double h32 = sobolev_norm_sq(u_partial, a32);
        if (res.u_h12_sq.empty()) {
            res.u_h12_sq.push_back(h12);
            res.u_h32_sq_int.push_back(0.0);
        } else {
            const double prev_h32 = res.last_u_h32_sq;
            res.u_h32_sq_int.push_back(res.u_h32_sq_int.back() +
                                       0.5 * plan.dt * (prev_h32 + h32));
            res.u_h12_sq.push_back(h12);
        }
        res.last_u_h32_sq = h32;
        if (opts.retain_states) {
            for (int k = 0; k < k_levels; ++k)
                res.states[size_t(k)].push_back(work[size_t(k)].v);
            res.u_states.push_back(u_partial);
        }
    };

    record_u_functionals();
    record_point(0.0);

    const int n_steps = plan.steps();
    int steps_after_stop = 0;
    double t = 0.0;
    int step = 0;
    for (; step < n_steps; ++step) {
        Eigen::ArrayXd dw;
        if (opts.preset_increments) {
            dw = (*opts.preset_increments)[size_t(step)];
        } else {
            dw = basis.sample_increment(plan.dt);
        }
        if (opts.retain_states)
            res.increments.push_back(dw);

        for (auto& g : wg)
            g = Eigen::ArrayXd::Zero(xf.grid_size());

        double zeta_acc = 1.0;
        for (int k = 0; k < k_levels; ++k) {
            auto& lw = work[size_t(k)];
            const double c = lw.cut.psi * lw.cut.phi;
            const double coef = c * c;
            const double amp = coef * zeta_acc;
            const double v_scale = lw.cut.norm_12d;
            const bool v_live = v_scale > 0.0 || lw.cut.norm_12 > 0.0;

            lw.has_forcing = false;
            lw.has_kick = false;
            lw.f_sq_0 = lw.f_sq_d = lw.g_sq_0 = lw.g_sq_d = 0.0;

            bool have_vg = false;
            if (v_live && (!opts.disable_nonlinearity && coef > 0.0)) {
                xf.field_to_grid(lw.v, vg);
                have_vg = true;
                for (int j = 0; j < 3; ++j) {
                    Coeffs div = Coeffs::Zero(lat.size());
                    for (int m = 0; m < 3; ++m) {
                        prod = vg[m] * vg[j] + zeta_acc * (wg[m] * vg[j] + vg[m] * wg[j]);
                        xf.to_cube(prod, that);
                        const Eigen::ArrayXd& nm = (m == 0) ? n1 : (m == 1) ? n2 : n3;
                        div += iunit * nm * that;
                    }
                    lw.forcing.c[j] = div;
                }
                apply_dealias_mask(lw.forcing);
                leray_project_in_place(lw.forcing);
                lw.forcing *= -coef;
                lw.has_forcing = true;
                lw.f_sq_0 = sobolev_norm_sq(lw.forcing, f0);
                lw.f_sq_d = sobolev_norm_sq(lw.forcing, fd);
            }

            if (v_live && amp > 0.0 && sigma.eps_sigma() > 0.0 &&
                sigma.kind() != NoiseKind::Zero) {
                sigma.apply_increment(t, lw.v, dw, lw.kick);
                lw.kick *= amp;
                lw.has_kick = true;
                lw.g_sq_0 = amp * amp * sigma.hs_norm_sq(t, lw.v, a12);
                lw.g_sq_d = amp * amp * sigma.hs_norm_sq(t, lw.v, a12d);
            }

            // accumulate u^{(k)} grids for the next level's cross terms
            if (v_live) {
                if (!have_vg)
                    xf.field_to_grid(lw.v, vg);
                for (int j = 0; j < 3; ++j)
                    wg[j] += vg[j];
            }
            zeta_acc *= lw.cut.psi;
        }

        for (auto& lw : work)
            heat_step(lw.v, lw.has_forcing ? &lw.forcing : nullptr,
                      lw.has_kick ? &lw.kick : nullptr, plan);
        const double t_prev = t;
        t += plan.dt;

        bool diverged = false;
        for (int k = 0; k < k_levels; ++k) {
            auto& lw = work[size_t(k)];
            const double v12 = sobolev_norm(lw.v, a12);
            if (!std::isfinite(v12)) {
                res.status = PathStatus::Diverged;
                res.failed_level = k;
                res.failed_at = t;
                diverged = true;
                break;
            }
            const double v12d = sobolev_norm(lw.v, a12d);
            const double v32sq = sobolev_norm_sq(lw.v, a32);
            const double v32dsq = sobolev_norm_sq(lw.v, a32d);
            lw.cut.advance(plan.dt, v12, v12d, v32sq, v32dsq);
            lw.ledger0.accumulate(plan.dt, v12 * v12, v32sq, lw.f_sq_0, lw.g_sq_0);
            lw.ledger_delta.accumulate(plan.dt, v12d * v12d, v32dsq, lw.f_sq_d, lw.g_sq_d);

            const double q0 = lw.cut.q0();
            const double qd = lw.cut.qd();
            lw.sup_q0 = std::max(lw.sup_q0, q0);
            lw.sup_qd = std::max(lw.sup_qd, qd);
            detect_crossing(lw.tau, t_prev, plan.dt, lw.prev_q0, q0, lw.cut.eps_bar_level);
            detect_crossing(lw.rho, t_prev, plan.dt, lw.prev_qd, qd, lw.cut.m_k);
            lw.prev_q0 = q0;
            lw.prev_qd = qd;
        }
        if (diverged)
            break;

        record_u_functionals();
        if ((step + 1) % opts.save_stride == 0 || step + 1 == n_steps)
            record_point(t);

        bool stopped = false;
        for (const auto& lw : work)
            if (lw.tau || lw.rho)
                stopped = true;
        if (stopped) {
            ++steps_after_stop;
            if (steps_after_stop > opts.grace_steps) {
                if ((step + 1) % opts.save_stride != 0 && step + 1 != n_steps)
                    record_point(t);
                break;
            }
        }
    }

    for (int k = 0; k < k_levels; ++k) {
        auto& lw = work[size_t(k)];
        res.sup_q0[size_t(k)] = lw.sup_q0;
        res.sup_qd[size_t(k)] = lw.sup_qd;
        res.stops.levels[size_t(k)] = LevelStops{lw.tau, lw.rho};
        res.ledger0.push_back(lw.ledger0);
        res.ledger_delta.push_back(lw.ledger_delta);
        res.final_levels.push_back(std::move(lw.v));
    }
    for (const auto& ls : res.stops.levels) {
        for (const auto& cand : {ls.tau, ls.rho})
            if (cand && (!res.stops.tau || *cand < *res.stops.tau))
                res.stops.tau = cand;
    }
    return res;
}

PicardResult picard_solve(const PicardInput& input, const HeatStepPlan& plan,
                          FourierTransform& xf) {
    const int steps = plan.steps();
    const LatticePtr lattice = input.v0.lattice;
    const auto& lat = *lattice;
    const double delta = input.delta;
    const SobolevExponent a12 = SobolevExponent::critical();
    const SobolevExponent a12d = SobolevExponent::critical_plus(delta);
    const SobolevExponent a32 = SobolevExponent::dissipation();
    const SobolevExponent a32d = SobolevExponent::dissipation_plus(delta);

    if (int(input.increments.size()) < steps)
        throw std::invalid_argument("picard_solve: missing Brownian increments");
    if (!input.w_traj.empty() && int(input.w_traj.size()) < steps + 1)
        throw std::invalid_argument("picard_solve: w trajectory too short");

    const Eigen::ArrayXd n1 = lat.n1().cast<double>();
    const Eigen::ArrayXd n2 = lat.n2().cast<double>();
    const Eigen::ArrayXd n3 = lat.n3().cast<double>();
    const Complex iunit(0.0, 1.0);

    auto zeta_at = [&](int s) {
        return input.zeta_series.empty() ? 1.0 : input.zeta_series[size_t(s)];
    };

    // (psi phi)^2 series along a stored trajectory.
    auto coefficient_series = [&](const std::vector<SpectralField>& traj) {
        std::vector<double> c(size_t(steps) + 1);
        CutoffState cut;
        cut.m_k = input.m_k;
        cut.eps_bar_level = input.eps_bar_level;
        cut.start(sobolev_norm(traj[0], a12), sobolev_norm(traj[0], a12d),
                  sobolev_norm_sq(traj[0], a32), sobolev_norm_sq(traj[0], a32d));
        c[0] = cut.psi * cut.phi * cut.psi * cut.phi;
        for (int s = 1; s <= steps; ++s) {
            cut.advance(plan.dt, sobolev_norm(traj[size_t(s)], a12),
                        sobolev_norm(traj[size_t(s)], a12d),
                        sobolev_norm_sq(traj[size_t(s)], a32),
                        sobolev_norm_sq(traj[size_t(s)], a32d));
            c[size_t(s)] = cut.psi * cut.phi * cut.psi * cut.phi;
        }
        return c;
    };

    // Exact mild-solution weight for piecewise-constant forcing,
    // (1 - e^{-|n|^2 dt}) / |n|^2; differs from the production stepper's
    // e^{-|n|^2 dt} dt by O(dt^2) per step, which keeps the two solution
    // routes independent discretizations of the same equation.
    Eigen::ArrayXd forcing_weight(lat.size());
    for (Eigen::Index i = 0; i < lat.size(); ++i) {
        const double lam = lat.n_sq()[i];
        forcing_weight[i] = lam > 0.0 ? (1.0 - plan.factors[i]) / lam : plan.dt;
    }

    // iterate 0: homogeneous heat flow
    std::vector<SpectralField> prev(size_t(steps) + 1, SpectralField(lattice, true));
    prev[0] = input.v0;
    for (int s = 0; s < steps; ++s) {
        prev[size_t(s) + 1] = prev[size_t(s)];
        heat_step(prev[size_t(s) + 1], nullptr, nullptr, plan);
    }

    PicardResult out;
    std::array<Eigen::ArrayXd, 3> vg, wgrid;
    Eigen::ArrayXd prod;
    Coeffs that;
    SpectralField forcing(lattice, true), kick(lattice, true);

    double prev_x = -1.0;
    int bad_ratios = 0;

    for (int m = 1; m <= input.m_max; ++m) {
        const std::vector<double> coef = coefficient_series(prev);
        std::vector<SpectralField> cur(size_t(steps) + 1, SpectralField(lattice, true));
        cur[0] = input.v0;
        for (int s = 0; s < steps; ++s) {
            const double t_s = s * plan.dt;
            const double c = coef[size_t(s)];
            const double zeta = zeta_at(s);
            const SpectralField& vprev = prev[size_t(s)];

            const SpectralField* fptr = nullptr;
            if (c > 0.0) {
                xf.field_to_grid(vprev, vg);
                if (!input.w_traj.empty())
                    xf.field_to_grid(input.w_traj[size_t(s)], wgrid);
                for (int j = 0; j < 3; ++j) {
                    Coeffs div = Coeffs::Zero(lat.size());
                    for (int mm = 0; mm < 3; ++mm) {
                        if (input.w_traj.empty())
                            prod = vg[mm] * vg[j];
                        else
                            prod = vg[mm] * vg[j] +
                                   zeta * (wgrid[mm] * vg[j] + vg[mm] * wgrid[j]);
                        xf.to_cube(prod, that);
                        const Eigen::ArrayXd& nm = (mm == 0) ? n1 : (mm == 1) ? n2 : n3;
                        div += iunit * nm * that;
                    }
                    forcing.c[j] = div;
                }
                apply_dealias_mask(forcing);
                leray_project_in_place(forcing);
                forcing *= -c;
                fptr = &forcing;
            }

            const SpectralField* kptr = nullptr;
            if (input.sigma && input.sigma->eps_sigma() > 0.0 &&
                input.sigma->kind() != NoiseKind::Zero && c * zeta > 0.0) {
                input.sigma->apply_increment(t_s, vprev, input.increments[size_t(s)], kick);
                kick *= c * zeta;
                kptr = &kick;
            }

            SpectralField& next = cur[size_t(s) + 1];
            next = cur[size_t(s)];
            for (int j = 0; j < 3; ++j) {
                if (kptr)
                    next.c[j] += kptr->c[j];
                next.c[j] *= plan.factors;
                if (fptr)
                    next.c[j] += forcing_weight * fptr->c[j];
            }
        }

        // successive-difference functionals
        double sup_sq = 0.0, int_sq = 0.0, prev_int = 0.0;
        for (int s = 0; s <= steps; ++s) {
            SpectralField diff = cur[size_t(s)];
            diff -= prev[size_t(s)];
            sup_sq = std::max(sup_sq, sobolev_norm_sq(diff, a12d));
            const double d32 = sobolev_norm_sq(diff, a32d);
            if (s > 0)
                int_sq += 0.5 * plan.dt * (prev_int + d32);
            prev_int = d32;
        }
        const double x_m = sup_sq + int_sq;
        const double d_m = std::sqrt(sup_sq) + std::sqrt(int_sq);
        out.report.diffs.push_back(d_m);
        if (prev_x >= 0.0) {
            const double ratio = prev_x > 0.0 ? x_m / prev_x : 0.0;
            out.report.ratios.push_back(ratio);
            bad_ratios = ratio >= 1.0 ? bad_ratios + 1 : 0;
            if (bad_ratios >= 3)
                throw std::runtime_error(
                    "picard_solve: no contraction over 3 consecutive iterates (window too long)");
        }
        prev_x = x_m;
        prev = std::move(cur);
        out.report.iterations = m;
        if (d_m <= input.tol) {
            out.report.converged = true;
            break;
        }
    }

    out.trajectory = std::move(prev);
    return out;
}

SpectralField reassemble(const std::vector<const SpectralField*>& levels,
                         NonlinearityIdentityReport* report, FourierTransform& xf) {
    if (levels.empty())
        throw std::invalid_argument("reassemble: no levels");
    SpectralField u = *levels.front();
    for (size_t k = 1; k < levels.size(); ++k)
        u += *levels[k];

    if (report) {
        SpectralField lhs(u.lattice, true);
        SpectralField u_prev(u.lattice, true);
        for (size_t k = 0; k < levels.size(); ++k) {
            const SpectralField& v = *levels[k];
            lhs += advective_term(v, v, xf);
            if (k > 0) {
                lhs += advective_term(u_prev, v, xf);
                lhs += advective_term(v, u_prev, xf);
            }
            u_prev += v;
        }
        const SpectralField rhs = advective_term(u, u, xf);
        SpectralField diff = lhs;
        diff -= rhs;
        const double scale = sobolev_norm(rhs, SobolevExponent::l2());
        report->scale = scale;
        report->residual =
            scale > 0.0 ? sobolev_norm(diff, SobolevExponent::l2()) / scale
                        : sobolev_norm(diff, SobolevExponent::l2());
    }
    return u;
}

ResidualReport weak_residual(const std::vector<SpectralField>& u_states,
                             const std::vector<Eigen::ArrayXd>& increments,
                             const NoiseCoefficient& sigma, const HeatStepPlan& plan,
                             double t_cap, const std::vector<std::array<int, 3>>& test_modes,
                             FourierTransform& xf, bool include_advection) {
    if (u_states.empty())
        throw std::invalid_argument("weak_residual: empty trajectory");
    const int steps_avail = int(u_states.size()) - 1;
    if (int(increments.size()) < steps_avail && sigma.eps_sigma() > 0.0 &&
        sigma.kind() != NoiseKind::Zero)
        throw std::invalid_argument("weak_residual: missing Brownian increments");

    const LatticePtr lattice = u_states.front().lattice;
    const auto& lat = *lattice;
    int cap = int(std::floor(t_cap / plan.dt + 1e-9));
    cap = std::min(cap, steps_avail);

    std::vector<Eigen::Index> idxs;
    for (const auto& m : test_modes) {
        if (m[0] == 0 && m[1] == 0 && m[2] == 0)
            continue;
        idxs.push_back(lat.index(m[0], m[1], m[2]));
    }

    std::vector<std::array<Complex, 3>> defect(idxs.size(), {Complex(0), Complex(0), Complex(0)});
    SpectralField kick(lattice, true);
    double scale = 0.0;

    for (int s = 0; s < cap; ++s) {
        const SpectralField& u = u_states[size_t(s)];
        scale = std::max(scale, sobolev_norm(u, SobolevExponent::l2()));
        SpectralField adv;
        if (include_advection)
            adv = advective_term(u, u, xf);
        const bool noisy = sigma.eps_sigma() > 0.0 && sigma.kind() != NoiseKind::Zero;
        if (noisy)
            sigma.apply_increment(s * plan.dt, u, increments[size_t(s)], kick);
        for (size_t q = 0; q < idxs.size(); ++q) {
            const Eigen::Index idx = idxs[q];
            const double nsq = lat.n_sq()[idx];
            for (int j = 0; j < 3; ++j) {
                Complex acc = plan.dt * nsq * u.c[j][idx];
                if (include_advection)
                    acc += plan.dt * adv.c[j][idx];
                if (noisy)
                    acc -= kick.c[j][idx];
                defect[q][size_t(j)] += acc;
            }
        }
    }

    ResidualReport rep;
    rep.modes_checked = int(idxs.size());
    rep.state_scale = scale;
    for (size_t q = 0; q < idxs.size(); ++q) {
        const Eigen::Index idx = idxs[q];
        for (int j = 0; j < 3; ++j) {
            const Complex d = u_states[size_t(cap)].c[j][idx] - u_states[0].c[j][idx] +
                              defect[q][size_t(j)];
            rep.max_defect = std::max(rep.max_defect, std::abs(d));
        }
    }
    return rep;
}

} // namespace snse
