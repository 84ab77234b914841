#include "snse/ensemble.hpp"

#include "snse/field_io.hpp"

#include <atomic>
#include <thread>

namespace snse {

using nlohmann::json;

SpectralField make_initial_data(const RunConfig& config, const LatticePtr& lattice) {
    const auto& spec = config.initial_data;
    const double target = spec.norm >= 0.0 ? spec.norm : config.eps0;
    Rng rng(mix_seed(spec.seed, 0x1d1dull));

    if (spec.kind == "dyadic_random") {
        // Shell norms z * target / 4^j with z = sqrt(15)/4, so the shell tails
        // are exactly target / 4^m and the greedy decomposition resolves to
        // one shell per piece.
        const double z = std::sqrt(15.0) / 4.0;
        SpectralField u0(lattice, true);
        const double kd_sq = double(lattice->dealias_radius()) * lattice->dealias_radius();
        double lo = 0.0, hi = 1.0;
        for (int j = 0;; ++j) {
            if (lo >= kd_sq)
                break;
            SpectralField shell = random_solenoidal_field(lattice, rng, z * target / std::pow(4.0, j),
                                                          lo, std::min(hi, kd_sq));
            u0 += shell;
            lo = hi;
            hi *= 4.0;
        }
        return u0;
    }
    if (spec.kind == "single_shell")
        return random_solenoidal_field(lattice, rng, target, 0.0, spec.max_nsq);
    if (spec.kind == "taylor_green") {
        SpectralField f = taylor_green_field(lattice, 1.0);
        const double norm = sobolev_norm(f, SobolevExponent::critical());
        f *= target / norm;
        return f;
    }
    if (spec.kind == "file") {
        SpectralField f = load_field(spec.path);
        if (f.lattice->n() != lattice->n())
            throw std::runtime_error("initial data file resolution differs from config N");
        SpectralField g(lattice, f.solenoidal);
        g.c = f.c;
        g.lattice = lattice;
        return g;
    }
    throw std::invalid_argument("unknown initial data kind: " + spec.kind);
}

EnsembleContext EnsembleContext::prepare(const RunConfig& config) {
    config.validate();
    EnsembleContext ctx;
    ctx.config = config;
    ctx.lattice = ModeLattice::make(config.n);
    ctx.u0 = make_initial_data(config, ctx.lattice);
    ctx.decomposition = decompose(ctx.u0, config.eps0, config.delta, config.k_max);
    ctx.sigma = std::make_shared<NoiseCoefficient>(
        ctx.lattice, config.eps_sigma > 0.0 ? NoiseKind::LinearConvolution : NoiseKind::Zero,
        config.eps_sigma, config.k_wiener, config.delta);
    return ctx;
}

CascadeOptions cascade_options_from(const RunConfig& config) {
    CascadeOptions opts;
    opts.save_stride = config.save_stride;
    opts.grace_steps = config.grace_steps;
    opts.m_rule_factor = config.m_rule_factor;
    opts.eps_bar = config.eps_bar;
    return opts;
}

namespace {

PathRecord record_from_result(const EnsembleContext& ctx, const CascadeResult& res, int path_id,
                              std::uint64_t seed) {
    PathRecord rec;
    rec.path_id = path_id;
    rec.seed = seed;
    rec.config_hash = ctx.config.hash();
    rec.status = res.status == PathStatus::Ok ? "ok" : "diverged";
    rec.t = res.t_series;
    rec.tau = res.stops.tau;
    rec.dt = res.dt;
    rec.u_h12_sq = res.u_h12_sq;
    rec.u_h32_sq_int = res.u_h32_sq_int;
    for (size_t k = 0; k < res.levels.size(); ++k) {
        LevelRecord lv;
        lv.k = int(k);
        lv.m_k = ctx.config.m_rule_factor * ctx.decomposition.h_half_delta_norms[k];
        lv.mbb_k = ctx.decomposition.h_half_delta_norms[k];
        lv.piece_h12 = ctx.decomposition.h_half_norms[k];
        lv.series = res.levels[k];
        lv.ledger0 = res.ledger0[k];
        lv.ledger_delta = res.ledger_delta[k];
        lv.sup_q0 = res.sup_q0[k];
        lv.sup_qd = res.sup_qd[k];
        lv.tau = res.stops.levels[k].tau;
        lv.rho = res.stops.levels[k].rho;
        rec.levels.push_back(std::move(lv));
    }
    return rec;
}

} // namespace

PathRecord run_single_path(const EnsembleContext& ctx, FourierTransform& xf, int path_id) {
    const std::uint64_t seed = mix_seed(ctx.config.master_seed, std::uint64_t(path_id));
    WienerBasis basis(ctx.config.k_wiener, seed);
    const HeatStepPlan plan(ctx.lattice, ctx.config.dt, ctx.config.horizon);
    const CascadeOptions opts = cascade_options_from(ctx.config);
    try {
        const CascadeResult res =
            run_cascade(ctx.decomposition, *ctx.sigma, basis, plan, xf, opts);
        return record_from_result(ctx, res, path_id, seed);
    } catch (const std::exception& e) {
        PathRecord rec;
        rec.path_id = path_id;
        rec.seed = seed;
        rec.config_hash = ctx.config.hash();
        rec.status = std::string("error: ") + e.what();
        return rec;
    }
}

std::vector<PathRecord> run_ensemble(const RunConfig& config) {
    const EnsembleContext ctx = EnsembleContext::prepare(config);
    const int workers = std::min(resolve_worker_count(config), config.paths);
    std::vector<PathRecord> out(size_t(config.paths));
    std::atomic<int> next{0};

    auto worker = [&]() {
        FourierTransform xf(ctx.lattice);
        for (int id = next.fetch_add(1); id < config.paths; id = next.fetch_add(1))
            out[size_t(id)] = run_single_path(ctx, xf, id);
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(size_t(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    return out;
}

ReplayOutcome replay_path(const PathRecord& original, const RunConfig& config,
                          int save_stride_override) {
    RunConfig cfg = config;
    if (original.config_hash != config.hash())
        throw std::runtime_error("replay: config hash mismatch, refusing to replay");
    if (save_stride_override > 0)
        cfg.save_stride = save_stride_override;
    const EnsembleContext ctx = EnsembleContext::prepare(cfg);
    FourierTransform xf(ctx.lattice);
    ReplayOutcome out;
    out.record = run_single_path(ctx, xf, original.path_id);
    if (save_stride_override > 0 && save_stride_override != config.save_stride) {
        out.match = false;
        out.divergence = "save_stride differs (emission-only change)";
        return out;
    }
    const json a = path_record_to_json(original);
    const json b = path_record_to_json(out.record);
    out.divergence = first_difference(a, b);
    out.match = out.divergence.empty();
    return out;
}

json verify_records(const RecordsFile& rf_in, double wilson_z) {
    const RunConfig& cfg = rf_in.config;
    RecordsFile rf;
    rf.config = cfg;
    int skipped = 0;
    for (const auto& rec : rf_in.records) {
        if (rec.levels.empty()) {
            ++skipped;
            continue;
        }
        rf.records.push_back(rec);
    }
    const int m = int(rf.records.size());
    if (m == 0)
        throw std::runtime_error("verify: no usable records");
    const int k_levels = int(rf.records.front().levels.size());
    const bool small_noise = cfg.mode == "small-noise";

    json report;
    report["schema"] = "snse-report-v1";
    report["config_hash"] = cfg.hash();
    report["paths"] = m;
    report["skipped_records"] = skipped;
    report["wilson_z"] = wilson_z;
    bool all_pass = true;

    // --- pointwise H^{1/2} control (per level): sup Q_{k,0} <= eps_bar/2^{k-1} + allowance
    {
        json rows = json::array();
        bool pass = true;
        for (int k = 0; k < k_levels; ++k) {
            const double bound = cfg.eps_bar / std::pow(2.0, k - 1);
            const double allowance =
                10.0 * cfg.eps_sigma * bound * std::sqrt(cfg.dt);
            double worst = 0.0;
            int violations = 0;
            for (const auto& rec : rf.records) {
                const double q = rec.levels[size_t(k)].sup_q0;
                worst = std::max(worst, q);
                if (q > bound + allowance)
                    ++violations;
            }
            rows.push_back({{"level", k},
                            {"bound", bound},
                            {"allowance", allowance},
                            {"max_sup_q0", worst},
                            {"violations", violations}});
            if (violations > 0)
                pass = false;
        }
        report["pointwise_control"] = {{"rows", rows}, {"pass", pass}, {"gate", true}};
        all_pass = all_pass && pass;
    }

    // --- level energy control: fitted C per level and alpha, k-uniform within 2x
    {
        json rows = json::array();
        bool pass = true;
        for (int which = 0; which < 2; ++which) {
            double cmin = 0.0, cmax = 0.0;
            bool any = false;
            json fits = json::array();
            for (int k = 0; k < k_levels; ++k) {
                double num = 0.0, den = 0.0;
                for (const auto& rec : rf.records) {
                    const EnergyLedger& l = which == 0 ? rec.levels[size_t(k)].ledger0
                                                       : rec.levels[size_t(k)].ledger_delta;
                    num += l.sup_sq + l.dissipation_integral;
                    den += l.initial_sq;
                }
                if (den <= 0.0) {
                    fits.push_back(nullptr);
                    continue;
                }
                const double c = num / den;
                fits.push_back(c);
                cmin = any ? std::min(cmin, c) : c;
                cmax = any ? std::max(cmax, c) : c;
                any = true;
            }
            const double spread = (any && cmin > 0.0) ? cmax / cmin : 1.0;
            const bool ok = spread <= 2.0;
            rows.push_back({{"alpha", which == 0 ? 0.0 : cfg.delta},
                            {"fitted_c", fits},
                            {"spread", spread},
                            {"pass", ok}});
            pass = pass && ok;
        }
        report["level_energy"] = {{"rows", rows}, {"pass", pass}, {"gate", true}};
        all_pass = all_pass && pass;
    }

    // --- Markov probability budgets (levels k <= min(3, k_levels-1))
    if (m < 400) {
        report["markov_bounds"] = {{"rows", json::array()},
                                   {"pass", true},
                                   {"gate", false},
                                   {"note", "needs at least 400 paths"}};
    } else {
        json rows = json::array();
        bool pass = true;
        const int k_hi = std::min(3, k_levels - 1);
        for (int k = 0; k <= k_hi; ++k) {
            std::vector<double> sup0, supd;
            sup0.reserve(size_t(m));
            supd.reserve(size_t(m));
            double m_k = 0.0;
            for (const auto& rec : rf.records) {
                sup0.push_back(rec.levels[size_t(k)].sup_q0);
                supd.push_back(rec.levels[size_t(k)].sup_qd);
                m_k = rec.levels[size_t(k)].m_k;
            }
            const double thr0 = cfg.eps_bar / std::pow(2.0, k);
            for (int which = 0; which < 2; ++which) {
                const BoundReport br = markov_bound_check(
                    which == 0 ? sup0 : supd, which == 0 ? thr0 : m_k, k,
                    which == 0 ? 0.0 : cfg.delta, cfg.p0, wilson_z);
                rows.push_back({{"level", k},
                                {"alpha", br.alpha},
                                {"exceedances", br.exceedances},
                                {"empirical", br.empirical},
                                {"wilson_upper", br.wilson_upper},
                                {"budget", br.budget},
                                {"markov_bound", br.markov_bound},
                                {"pass", br.pass}});
                pass = pass && br.pass;
            }
        }
        report["markov_bounds"] = {{"rows", rows}, {"pass", pass}, {"gate", small_noise}};
        if (small_noise)
            all_pass = all_pass && pass;
    }

    // --- positivity of tau
    {
        std::vector<std::optional<double>> taus;
        for (const auto& rec : rf.records)
            taus.push_back(rec.tau);
        std::vector<double> grid;
        for (int i = 1; i <= 8; ++i)
            grid.push_back(cfg.horizon * i / 8.0);
        const PositivityReport pr = positivity_check(taus, m, grid, wilson_z);
        const bool pass = pr.intercept_pass && pr.doubling_pass == pr.doubling_checks;
        report["positivity"] = {{"t0", pr.t0},
                                {"cdf", pr.cdf},
                                {"ci_low", pr.ci_low},
                                {"ci_high", pr.ci_high},
                                {"slope", pr.slope},
                                {"intercept", pr.intercept},
                                {"intercept_pass", pr.intercept_pass},
                                {"doubling_checks", pr.doubling_checks},
                                {"doubling_pass", pr.doubling_pass},
                                {"pass", pass},
                                {"gate", true}};
        all_pass = all_pass && pass;
    }

    // --- headline energy functional (single horizon; informational)
    {
        std::vector<HeadlinePathData> hp;
        for (const auto& rec : rf.records)
            hp.push_back({rec.u_h12_sq, rec.u_h32_sq_int, rec.dt, rec.tau});
        const TheoremReport tr = headline_check(hp, cfg.eps0, cfg.horizon);
        report["headline"] = {{"mean_sup_sq", tr.mean_sup_sq},
                              {"mean_integral", tr.mean_integral},
                              {"fitted_c", tr.fitted_c},
                              {"stop_fraction", tr.stop_fraction},
                              {"pass", true},
                              {"gate", false}};
    }

    report["pass"] = all_pass;
    return report;
}

} // namespace snse
