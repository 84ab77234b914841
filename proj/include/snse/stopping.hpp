#pragma once

#include "snse/cascade.hpp"

namespace snse {

// Stopping times assembled from recorded Q series. "Never hit within the
// horizon" is an empty optional, never a magic number; censoring is counted
// by the ensemble statistics.
struct StoppingRecord {
    std::vector<std::optional<double>> tau_k; // Q_{k,0} >= eps_bar / 2^k
    std::vector<std::optional<double>> rho_k; // Q_{k,delta} >= M_k
    std::vector<std::optional<double>> tau_up_to; // tau^k = min_{j<=k} tau_j ^ rho_j
    std::optional<double> tau;
    double horizon = 0.0;
};

struct StopThresholds {
    double eps_bar = 0.0;
    std::vector<double> m_k; // per level
};

// First-crossing times by linear interpolation between grid samples of the
// recorded Q series. A zero threshold (zero-piece level) means crossing only
// if Q becomes strictly positive.
StoppingRecord detect_stops(const std::vector<double>& t,
                            const std::vector<LevelSeries>& levels,
                            const StopThresholds& thresholds, double horizon);

// Wilson score interval for a binomial proportion.
struct WilsonInterval {
    double lower = 0.0;
    double upper = 1.0;
};
WilsonInterval wilson_interval(int hits, int trials, double z);

struct BoundReport {
    int level = 0;
    double alpha = 0.0;
    int exceedances = 0;
    int paths = 0;
    double empirical = 0.0;
    double wilson_upper = 0.0;
    double budget = 0.0;       // p0 / 2^{2k+2}
    double markov_bound = 0.0; // E[sup Q^2] / threshold^2, from measured data
    bool pass = false;
};

// Per-level exceedance test against the dyadic probability budget. `sup_q`
// holds each path's sup_t Q_{k,alpha}; `threshold` the crossing level.
BoundReport markov_bound_check(const std::vector<double>& sup_q, double threshold, int level,
                               double alpha, double p0, double wilson_z);

struct PositivityReport {
    std::vector<double> t0;
    std::vector<double> cdf;       // P(tau < t0)
    std::vector<double> ci_low, ci_high;
    double slope = 0.0;
    double intercept = 0.0;
    bool intercept_pass = false;   // |intercept| <= 2/M
    int doubling_checks = 0;
    int doubling_pass = 0;         // |P(2t0) - 2 P(t0)| within combined CI slack
};

PositivityReport positivity_check(const std::vector<std::optional<double>>& taus, int paths,
                                  const std::vector<double>& t0_grid, double wilson_z);

struct TheoremReport {
    double mean_sup_sq = 0.0;   // E[sup_{t<=tau} ||u||^2_{H^{1/2}}]
    double mean_integral = 0.0; // E[int_0^tau ||u||^2_{H^{3/2}}]
    double fitted_c = 0.0;      // (sup + int) / eps0^2
    double stop_fraction = 0.0; // P(tau < horizon)
    int paths = 0;
};

struct HeadlinePathData {
    std::vector<double> u_h12_sq;     // per step
    std::vector<double> u_h32_sq_int; // cumulative per step
    double dt = 0.0;
    std::optional<double> tau;
};

// Headline energy functional E[sup_{t<=tau}||u||^2_{1/2} + int_0^tau ||u||^2_{3/2}]
// evaluated at `horizon` (paths are truncated at min(tau, horizon)).
TheoremReport headline_check(const std::vector<HeadlinePathData>& paths, double eps0,
                             double horizon);

} // namespace snse
