#pragma once

// Test-side oracles, kept independent of the implementation paths they check.

#include "snse/cascade.hpp"
#include "snse/rng.hpp"

namespace snse::test {

// Convective form P((u.grad) w): differentiates first, then multiplies on the
// grid. Independent discretization of advective_term's divergence form.
inline SpectralField convective_oracle(const SpectralField& u, const SpectralField& w,
                                       FourierTransform& xf) {
    const auto& lat = *u.lattice;
    SpectralField ut = u, wt = w;
    apply_dealias_mask(ut);
    apply_dealias_mask(wt);

    std::array<Eigen::ArrayXd, 3> ug;
    xf.field_to_grid(ut, ug);

    const Complex iunit(0.0, 1.0);
    SpectralField out(u.lattice);
    Eigen::ArrayXd dgrid, acc;
    Coeffs dcoef, that;
    for (int j = 0; j < 3; ++j) {
        acc = Eigen::ArrayXd::Zero(xf.grid_size());
        for (int m = 0; m < 3; ++m) {
            const Eigen::ArrayXd nm = (m == 0 ? lat.n1() : m == 1 ? lat.n2() : lat.n3()).cast<double>();
            dcoef = iunit * nm * wt.c[j];
            xf.to_grid(dcoef, dgrid);
            acc += ug[m] * dgrid;
        }
        xf.to_cube(acc, that);
        out.c[j] = that;
    }
    apply_dealias_mask(out);
    leray_project_in_place(out);
    return out;
}

// Collocation-grid quadrature of the L^2 norm (normalized measure).
inline double grid_l2_norm(const SpectralField& f, FourierTransform& xf) {
    std::array<Eigen::ArrayXd, 3> g;
    xf.field_to_grid(f, g);
    double sum = 0.0;
    for (int j = 0; j < 3; ++j)
        sum += g[j].square().sum();
    return std::sqrt(sum / double(xf.grid_size()));
}

// Direct triple-loop H^alpha sum, written independently of the weight cache.
inline double direct_sobolev_norm(const SpectralField& f, double alpha) {
    const auto& lat = *f.lattice;
    const int h = lat.half();
    double sum = 0.0;
    for (int k = -h; k <= h; ++k)
        for (int j = -h; j <= h; ++j)
            for (int i = -h; i <= h; ++i) {
                const Eigen::Index idx = lat.index(i, j, k);
                const double nsq = double(i) * i + double(j) * j + double(k) * k;
                double m = 0.0;
                for (int c = 0; c < 3; ++c)
                    m += std::norm(f.c[c][idx]);
                sum += std::pow(1.0 + nsq, alpha) * m;
            }
    return std::sqrt(sum);
}

// Monolithic pseudo-spectral SNSE stepper (no cascade, no cutoffs): the
// cross-method reference for the reassembled cascade.
inline std::vector<SpectralField> monolithic_reference(const SpectralField& u0,
                                                       const NoiseCoefficient& sigma,
                                                       const std::vector<Eigen::ArrayXd>& dws,
                                                       const HeatStepPlan& plan,
                                                       FourierTransform& xf) {
    std::vector<SpectralField> traj;
    SpectralField u = u0;
    traj.push_back(u);
    SpectralField kick(u.lattice, true);
    const int steps = plan.steps();
    for (int s = 0; s < steps; ++s) {
        SpectralField f = advective_term(u, u, xf);
        f *= -1.0;
        const SpectralField* kptr = nullptr;
        if (sigma.eps_sigma() > 0.0 && sigma.kind() != NoiseKind::Zero) {
            sigma.apply_increment(s * plan.dt, u, dws[size_t(s)], kick);
            kptr = &kick;
        }
        heat_step(u, &f, kptr, plan);
        traj.push_back(u);
    }
    return traj;
}

inline std::vector<Eigen::ArrayXd> draw_increments(int steps, int k, double dt,
                                                   std::uint64_t seed) {
    WienerBasis basis(k, seed);
    std::vector<Eigen::ArrayXd> dws;
    for (int s = 0; s < steps; ++s)
        dws.push_back(basis.sample_increment(dt));
    return dws;
}

// Halve the step of a Brownian increment sequence: draw the fine sequence
// first and aggregate pairs for the coarse one, so both grids share a path.
inline std::vector<Eigen::ArrayXd> coarsen_increments(const std::vector<Eigen::ArrayXd>& fine) {
    std::vector<Eigen::ArrayXd> coarse;
    for (size_t s = 0; s + 1 < fine.size(); s += 2)
        coarse.push_back(fine[s] + fine[s + 1]);
    return coarse;
}

} // namespace snse::test
