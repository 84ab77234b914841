#include "snse/stopping.hpp"

namespace snse {

namespace {

std::optional<double> first_crossing(const std::vector<double>& t, const std::vector<double>& q,
                                     double threshold) {
    if (q.empty())
        return std::nullopt;
    if (threshold <= 0.0) {
        for (size_t i = 0; i < q.size(); ++i)
            if (q[i] > 0.0)
                return t[i];
        return std::nullopt;
    }
    if (q[0] >= threshold)
        return t[0];
    for (size_t i = 1; i < q.size(); ++i) {
        if (q[i] >= threshold) {
            const double dq = q[i] - q[i - 1];
            if (dq <= 0.0)
                return t[i];
            const double frac = (threshold - q[i - 1]) / dq;
            return t[i - 1] + frac * (t[i] - t[i - 1]);
        }
    }
    return std::nullopt;
}

std::optional<double> opt_min(std::optional<double> a, std::optional<double> b) {
    if (!a)
        return b;
    if (!b)
        return a;
    return std::min(*a, *b);
}

} // namespace

StoppingRecord detect_stops(const std::vector<double>& t,
                            const std::vector<LevelSeries>& levels,
                            const StopThresholds& thresholds, double horizon) {
    if (levels.empty() || t.empty())
        throw std::invalid_argument("detect_stops: missing series");
    if (thresholds.m_k.size() != levels.size())
        throw std::invalid_argument("detect_stops: threshold/level count mismatch");

    StoppingRecord rec;
    rec.horizon = horizon;
    std::optional<double> running;
    for (size_t k = 0; k < levels.size(); ++k) {
        if (levels[k].q0.size() != t.size() || levels[k].qd.size() != t.size())
            throw std::invalid_argument("detect_stops: series length mismatch");
        const double thr0 = thresholds.eps_bar / std::pow(2.0, double(k));
        rec.tau_k.push_back(first_crossing(t, levels[k].q0, thr0));
        rec.rho_k.push_back(first_crossing(t, levels[k].qd, thresholds.m_k[k]));
        running = opt_min(running, opt_min(rec.tau_k.back(), rec.rho_k.back()));
        rec.tau_up_to.push_back(running);
    }
    rec.tau = running;
    return rec;
}

WilsonInterval wilson_interval(int hits, int trials, double z) {
    WilsonInterval w;
    if (trials <= 0)
        return w;
    const double n = double(trials);
    const double p = double(hits) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = p + z2 / (2.0 * n);
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    w.lower = std::max(0.0, (center - half) / denom);
    w.upper = std::min(1.0, (center + half) / denom);
    return w;
}

BoundReport markov_bound_check(const std::vector<double>& sup_q, double threshold, int level,
                               double alpha, double p0, double wilson_z) {
    if (sup_q.size() < 400)
        throw std::invalid_argument("markov_bound_check: need at least 400 paths");
    BoundReport rep;
    rep.level = level;
    rep.alpha = alpha;
    rep.paths = int(sup_q.size());
    double sum_sq = 0.0;
    for (double q : sup_q) {
        const bool hit = threshold > 0.0 ? q >= threshold : q > 0.0;
        rep.exceedances += hit ? 1 : 0;
        sum_sq += q * q;
    }
    rep.empirical = double(rep.exceedances) / double(rep.paths);
    rep.wilson_upper = wilson_interval(rep.exceedances, rep.paths, wilson_z).upper;
    rep.budget = p0 / std::pow(2.0, 2.0 * level + 2.0);
    rep.markov_bound =
        threshold > 0.0 ? (sum_sq / double(rep.paths)) / (threshold * threshold) : 0.0;
    rep.pass = rep.wilson_upper <= rep.budget;
    return rep;
}

PositivityReport positivity_check(const std::vector<std::optional<double>>& taus, int paths,
                                  const std::vector<double>& t0_grid, double wilson_z) {
    PositivityReport rep;
    rep.t0 = t0_grid;
    const double n = double(paths);
    for (double t0 : t0_grid) {
        int hits = 0;
        for (const auto& tau : taus)
            if (tau && *tau < t0)
                ++hits;
        rep.cdf.push_back(double(hits) / n);
        const auto w = wilson_interval(hits, paths, wilson_z);
        rep.ci_low.push_back(w.lower);
        rep.ci_high.push_back(w.upper);
    }

    // Least-squares line through (t0, cdf).
    const size_t m = t0_grid.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < m; ++i) {
        sx += rep.t0[i];
        sy += rep.cdf[i];
        sxx += rep.t0[i] * rep.t0[i];
        sxy += rep.t0[i] * rep.cdf[i];
    }
    const double det = m * sxx - sx * sx;
    if (det > 0.0) {
        rep.slope = (m * sxy - sx * sy) / det;
        rep.intercept = (sy * sxx - sx * sxy) / det;
    }
    rep.intercept_pass = std::abs(rep.intercept) <= 2.0 / n;

    // Doubling consistency: P(2 t0) should be ~2 P(t0) within CI slack.
    for (size_t i = 0; i < m; ++i) {
        for (size_t j = 0; j < m; ++j) {
            if (std::abs(rep.t0[j] - 2.0 * rep.t0[i]) > 1e-12 * rep.t0[i])
                continue;
            ++rep.doubling_checks;
            const double slack = (rep.ci_high[j] - rep.ci_low[j]) +
                                 2.0 * (rep.ci_high[i] - rep.ci_low[i]) + 2.0 / n;
            if (std::abs(rep.cdf[j] - 2.0 * rep.cdf[i]) <= slack)
                ++rep.doubling_pass;
        }
    }
    return rep;
}

TheoremReport headline_check(const std::vector<HeadlinePathData>& paths, double eps0,
                             double horizon) {
    TheoremReport rep;
    rep.paths = int(paths.size());
    if (paths.empty())
        return rep;
    int stopped = 0;
    for (const auto& p : paths) {
        const double t_end = p.tau ? std::min(*p.tau, horizon) : horizon;
        if (p.tau && *p.tau < horizon)
            ++stopped;
        const int cap = std::min(int(std::floor(t_end / p.dt + 1e-9)),
                                 int(p.u_h12_sq.size()) - 1);
        double sup = 0.0;
        for (int s = 0; s <= cap; ++s)
            sup = std::max(sup, p.u_h12_sq[size_t(s)]);
        rep.mean_sup_sq += sup;
        rep.mean_integral += p.u_h32_sq_int[size_t(cap)];
    }
    rep.mean_sup_sq /= double(paths.size());
    rep.mean_integral /= double(paths.size());
    rep.stop_fraction = double(stopped) / double(paths.size());
    rep.fitted_c = eps0 > 0.0 ? (rep.mean_sup_sq + rep.mean_integral) / (eps0 * eps0) : 0.0;
    return rep;
}

} // namespace snse
