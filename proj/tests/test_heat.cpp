#include <doctest.h>

#include "snse/record.hpp"
#include "support.hpp"

using namespace snse;

namespace {

// Heat problem wrapper around a NoiseCoefficient (multiplicative sigma(u)).
HeatProblem multiplicative_problem(const NoiseCoefficient& sigma, WienerBasis& basis,
                                   const SpectralField* forcing = nullptr) {
    HeatProblem p;
    if (forcing)
        p.forcing = [forcing](double) { return forcing; };
    p.basis = &basis;
    p.noise_kick = [&sigma](double t, const SpectralField& u, const Eigen::ArrayXd& dw,
                            SpectralField& kick) { sigma.apply_increment(t, u, dw, kick); };
    p.noise_hs_sq = [&sigma](double t, const SpectralField& u, SobolevExponent a) {
        return sigma.hs_norm_sq(t, u, a);
    };
    return p;
}

} // namespace

TEST_CASE("heat plan invariants") {
    auto lat = ModeLattice::make(16);
    const HeatStepPlan plan(lat, 0.01, 1.0);
    CHECK(plan.factors.maxCoeff() == 1.0);
    CHECK(plan.factors.minCoeff() > 0.0);
    int ones = 0;
    for (Eigen::Index i = 0; i < lat->size(); ++i)
        if (plan.factors[i] == 1.0)
            ++ones;
    CHECK(ones == 1); // only the zero mode
    CHECK(plan.stiffness == doctest::Approx(0.01 * 64.0));
    CHECK(plan.steps() == 100);

    const HeatStepPlan semi(lat, 0.01, 1.0, HeatScheme::SemiImplicitEuler);
    CHECK(semi.factors.maxCoeff() == 1.0);
    CHECK(semi.factors.minCoeff() > 0.0);
    CHECK_THROWS_AS(HeatStepPlan(lat, -0.1, 1.0), std::invalid_argument);
}

TEST_CASE("single-mode decay is exact for the exponential scheme") {
    auto lat = ModeLattice::make(8);
    const double dt = 0.05;
    const HeatStepPlan plan(lat, dt, 1.0);
    SpectralField u(lat, true);
    u.c[1][lat->index(1, 0, 0)] = Complex(0.7, 0.2);
    u.c[1][lat->index(-1, 0, 0)] = Complex(0.7, -0.2);
    for (int s = 0; s < 20; ++s)
        heat_step(u, nullptr, nullptr, plan);
    const Complex expected = Complex(0.7, 0.2) * std::exp(-1.0 * 20 * dt);
    CHECK(std::abs(u.c[1][lat->index(1, 0, 0)] - expected) <= 1e-14);
}

TEST_CASE("constant forcing reaches the discrete fixed point f/|n|^2 (1+O(dt))") {
    auto lat = ModeLattice::make(8);
    const double dt = 0.01;
    const HeatStepPlan plan(lat, dt, 40.0);
    SpectralField u(lat, true);
    SpectralField f(lat, true);
    const Eigen::Index idx = lat->index(0, 2, 0);
    const Eigen::Index cidx = lat->index(0, -2, 0);
    f.c[0][idx] = Complex(1.0, 0.0);
    f.c[0][cidx] = Complex(1.0, 0.0);
    for (int s = 0; s < plan.steps(); ++s)
        heat_step(u, &f, nullptr, plan);
    const double lambda = 4.0;
    const double e = std::exp(-lambda * dt);
    const double exact_fixed_point = dt * e / (1.0 - e); // = (1/lambda)(1 + O(dt))
    CHECK(std::abs(u.c[0][idx].real() - exact_fixed_point) <= 1e-12);
    CHECK(exact_fixed_point == doctest::Approx(1.0 / lambda).epsilon(2.5 * dt));
}

TEST_CASE("ornstein-uhlenbeck variance on one mode matches the MC oracle") {
    auto lat = ModeLattice::make(8);
    const double dt = 1.0 / 32.0, horizon = 1.0;
    const HeatStepPlan plan(lat, dt, horizon);
    const Eigen::Index idx = lat->index(1, 0, 0);
    const Eigen::Index cidx = lat->index(-1, 0, 0);

    // two constant columns supported on the same mode
    std::vector<SpectralField> cols(2, SpectralField(lat, true));
    cols[0].c[0][idx] = Complex(0.3, 0.0);
    cols[0].c[0][cidx] = Complex(0.3, 0.0);
    cols[1].c[0][idx] = Complex(0.0, 0.2);
    cols[1].c[0][cidx] = Complex(0.0, -0.2);

    const int paths = 10000;
    double sum = 0.0, sum_sq = 0.0;
    SpectralField u(lat, true);
    SpectralField kick(lat, true);
    for (int p = 0; p < paths; ++p) {
        WienerBasis basis(2, mix_seed(4242, std::uint64_t(p)));
        u.set_zero();
        for (int s = 0; s < plan.steps(); ++s) {
            const Eigen::ArrayXd dw = basis.sample_increment(dt);
            kick.set_zero();
            for (int k = 0; k < 2; ++k)
                for (int c = 0; c < 3; ++c)
                    kick.c[c] += dw[k] * cols[size_t(k)].c[c];
            heat_step(u, nullptr, &kick, plan);
        }
        const double v = std::norm(u.c[0][idx]);
        sum += v;
        sum_sq += v * v;
    }
    const double mc = sum / paths;
    const double se = std::sqrt(std::max(0.0, sum_sq / paths - mc * mc) / paths);
    const double lambda = 1.0;
    const double g_sq = 0.09 + 0.04; // per-mode column mass at +n
    const double exact = g_sq * (1.0 - std::exp(-2.0 * lambda * horizon)) / (2.0 * lambda);
    // discrete OU has a O(dt) bias; compare against the exact discrete value too
    const double e2 = std::exp(-2.0 * lambda * dt);
    const double discrete = g_sq * dt * e2 * (1.0 - std::pow(e2, plan.steps())) / (1.0 - e2);
    CHECK(std::abs(mc - discrete) <= 3.0 * se);
    CHECK(std::abs(mc - exact) <= 3.0 * se + std::abs(discrete - exact));
}

TEST_CASE("zero data, zero forcing, zero noise stays identically zero") {
    auto lat = ModeLattice::make(8);
    const HeatStepPlan plan(lat, 0.01, 0.2);
    const auto res = solve_heat(SpectralField::zero(lat), HeatProblem{}, plan, 0.25, 4);
    CHECK(res.status == PathStatus::Ok);
    CHECK(res.ledger0.lhs() == 0.0);
    CHECK(res.ledger0.rhs() == 0.0);
    CHECK(res.ledger_delta.sup_sq == 0.0);
    for (const auto& s : res.samples) {
        CHECK(s.h_half == 0.0);
        CHECK(s.h_three_half == 0.0);
    }
}

TEST_CASE("deterministic energy identity defect halves with dt (Richardson)") {
    auto lat = ModeLattice::make(8);
    Rng rng(55);
    const SpectralField u0 = random_solenoidal_field(lat, rng, 1.0, 0.0, 5.0);
    const SpectralField f = random_solenoidal_field(lat, rng, 0.5, 0.0, 5.0);
    const double horizon = 0.5;

    auto defect_at = [&](double dt) {
        const HeatStepPlan plan(lat, dt, horizon);
        HeatProblem prob;
        prob.forcing = [&f](double) { return &f; };
        const auto res = solve_heat(u0, prob, plan, 0.25, 1, true);
        // left-endpoint quadrature (the Ito-consistent one): its O(dt) error
        // is sign-definite, so the defect is cleanly first order.
        double diss = 0.0, work = 0.0;
        for (size_t s = 0; s + 1 < res.states.size(); ++s) {
            diss += dt * grad_norm_sq(res.states[s]);
            work += dt * inner_product(f, res.states[s]);
        }
        const double lhs = sobolev_norm_sq(res.final_state, SobolevExponent::l2()) + 2.0 * diss;
        const double rhs = sobolev_norm_sq(u0, SobolevExponent::l2()) + 2.0 * work;
        return std::abs(lhs - rhs);
    };

    const double d1 = defect_at(0.02);
    const double d2 = defect_at(0.01);
    CHECK(d1 > 0.0);
    const double ratio = d2 / d1;
    CHECK(ratio >= 0.4);
    CHECK(ratio <= 0.6);
}

TEST_CASE("solenoidality and mean-freeness drift stays at roundoff") {
    auto lat = ModeLattice::make(16);
    FourierTransform xf(lat);
    Rng rng(66);
    const SpectralField u0 = random_solenoidal_field(lat, rng, 1.0);
    NoiseCoefficient sigma(lat, NoiseKind::LinearConvolution, 0.4, 8, 0.25);
    WienerBasis basis(8, 9001);

    const HeatStepPlan plan(lat, 0.01, 0.5);
    SpectralField u = u0;
    SpectralField kick(lat, true);
    SpectralField f(lat, true);
    for (int s = 0; s < plan.steps(); ++s) {
        f = advective_term(u, u, xf);
        f *= -1.0;
        sigma.apply_increment(s * plan.dt, u, basis.sample_increment(plan.dt), kick);
        heat_step(u, &f, &kick, plan);
        CHECK(relative_divergence(u) <= 1e-12);
    }
    CHECK(std::abs(u.c[0][lat->zero_index()]) <= 1e-9);
}

TEST_CASE("strong order ~1: dt vs dt/2 pathwise error, RMS over paths") {
    auto lat = ModeLattice::make(8);
    Rng rng(77);
    const SpectralField u0 = random_solenoidal_field(lat, rng, 1.0, 0.0, 2.0);
    // constant columns (additive-in-step noise): freeze sigma at u0
    NoiseCoefficient sigma(lat, NoiseKind::LinearConvolution, 0.6, 4, 0.25);
    const auto cols = sigma.columns(0.0, u0);
    const double horizon = 0.25;

    auto run_at = [&](const std::vector<Eigen::ArrayXd>& incr) {
        const double dt = horizon / double(incr.size());
        const HeatStepPlan plan(lat, dt, horizon);
        SpectralField u = u0;
        SpectralField kick(lat, true);
        for (size_t s = 0; s < incr.size(); ++s) {
            kick.set_zero();
            for (int k = 0; k < 4; ++k)
                for (int c = 0; c < 3; ++c)
                    kick.c[c] += incr[s][k] * cols[size_t(k)].c[c];
            heat_step(u, nullptr, &kick, plan);
        }
        return u;
    };

    // e(dt) = || u_dt - u_{dt/2} || on a shared Brownian path, averaged in RMS
    // over paths; the slope of log e against log dt estimates the strong order.
    const int fine_steps = 1024, paths = 24, levels = 4;
    std::vector<double> mse(levels, 0.0);
    for (int p = 0; p < paths; ++p) {
        auto incr = test::draw_increments(fine_steps, 4, horizon / fine_steps,
                                          mix_seed(31337, std::uint64_t(p)));
        SpectralField finer = run_at(incr);
        for (int level = 0; level < levels; ++level) {
            incr = test::coarsen_increments(incr);
            const SpectralField coarser = run_at(incr);
            SpectralField diff = coarser;
            diff -= finer;
            mse[size_t(level)] += sobolev_norm_sq(diff, SobolevExponent::l2());
            finer = coarser;
        }
    }
    // least-squares slope of log2 rms against level (dt doubles per level)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int level = 0; level < levels; ++level) {
        const double x = level;
        const double y = 0.5 * std::log2(mse[size_t(level)] / paths);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (levels * sxy - sx * sy) / (levels * sxx - sx * sx);
    CHECK(slope >= 0.7);
    CHECK(slope <= 1.3);
}

TEST_CASE("heat estimate: fitted constant is modest and T-stable (small ensemble)") {
    auto lat = ModeLattice::make(8);
    const double delta = 0.25;
    Rng rng(88);
    const SpectralField u0 = random_solenoidal_field(lat, rng, 0.5);
    const SpectralField f = random_solenoidal_field(lat, rng, 0.3);
    NoiseCoefficient sigma(lat, NoiseKind::LinearConvolution, 0.5, 8, delta);

    auto ledgers_at = [&](double horizon, int paths) {
        std::vector<EnergyLedger> l0, ld;
        const HeatStepPlan plan(lat, 0.01, horizon);
        for (int p = 0; p < paths; ++p) {
            WienerBasis basis(8, mix_seed(5150, std::uint64_t(p)));
            HeatProblem prob = multiplicative_problem(sigma, basis, &f);
            const auto res = solve_heat(u0, prob, plan, delta, 8);
            REQUIRE(res.status == PathStatus::Ok);
            l0.push_back(res.ledger0);
            ld.push_back(res.ledger_delta);
        }
        return std::make_pair(l0, ld);
    };

    const auto [l0_t1, ld_t1] = ledgers_at(1.0, 120);
    const auto rep0 = verify_energy_estimate(l0_t1, 20.0);
    const auto repd = verify_energy_estimate(ld_t1, 20.0);
    CHECK(rep0.pass);
    CHECK(repd.pass);
    CHECK(rep0.ratio > 0.0);

    const auto [l0_t2, ld_t2] = ledgers_at(2.0, 120);
    const auto rep0_2 = verify_energy_estimate(l0_t2, 20.0);
    CHECK(std::abs(rep0_2.ratio - rep0.ratio) <= 0.25 * rep0.ratio);
}

TEST_CASE("verify_energy_estimate edge cases") {
    std::vector<EnergyLedger> zeros(150);
    const auto rep = verify_energy_estimate(zeros, 10.0);
    CHECK(rep.ratio == 0.0);
    CHECK(!rep.inconsistent);
    CHECK(rep.pass);

    // zero RHS with nonzero LHS is flagged
    std::vector<EnergyLedger> bad(150);
    for (auto& l : bad)
        l.sup_sq = 1.0;
    const auto rep2 = verify_energy_estimate(bad, 10.0);
    CHECK(rep2.inconsistent);
    CHECK(!rep2.pass);

    CHECK_THROWS_AS((void)verify_energy_estimate(std::vector<EnergyLedger>(10), 1.0),
                    std::invalid_argument);
}

TEST_CASE("deterministic forcing-only ensemble: ratio independent of path count") {
    auto lat = ModeLattice::make(8);
    Rng rng(99);
    const SpectralField u0 = random_solenoidal_field(lat, rng, 0.5);
    const SpectralField f = random_solenoidal_field(lat, rng, 0.4);
    const HeatStepPlan plan(lat, 0.01, 1.0);
    HeatProblem prob;
    prob.forcing = [&f](double) { return &f; };
    const auto res = solve_heat(u0, prob, plan, 0.25, 10);

    const std::vector<EnergyLedger> e100(100, res.ledger0);
    const std::vector<EnergyLedger> e500(500, res.ledger0);
    const auto r100 = verify_energy_estimate(e100, 20.0);
    const auto r500 = verify_energy_estimate(e500, 20.0);
    CHECK(r100.ratio == doctest::Approx(r500.ratio).epsilon(1e-12));
    CHECK(r100.ci_high - r100.ci_low <= 1e-12);
}

TEST_CASE("nan forcing aborts the path with a diagnostic") {
    auto lat = ModeLattice::make(8);
    SpectralField bad(lat, true);
    bad.c[0][lat->index(1, 0, 0)] = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
    const HeatStepPlan plan(lat, 0.01, 0.1);
    HeatProblem prob;
    prob.forcing = [&bad](double) { return &bad; };
    const auto res = solve_heat(SpectralField::zero(lat), prob, plan, 0.25);
    CHECK(res.status == PathStatus::Diverged);
    CHECK(res.failed_at > 0.0);
}

TEST_CASE("heat trajectory JSONL emission carries the documented fields") {
    auto lat = ModeLattice::make(8);
    Rng rng(111);
    const SpectralField u0 = random_solenoidal_field(lat, rng, 1.0);
    const HeatStepPlan plan(lat, 0.01, 0.1);
    const auto res = solve_heat(u0, HeatProblem{}, plan, 0.25, 5);
    REQUIRE(res.samples.size() >= 2);
    const auto line = heat_sample_to_json(res.samples.back());
    for (const char* key : {"t", "h12", "h12d", "h32", "ledger0", "ledger_delta"})
        CHECK(line.contains(key));
    CHECK(line["t"].get<double>() == doctest::Approx(0.1));
}
