#pragma once

#include "snse/record.hpp"

namespace snse {

// Path-independent pieces of a run: the lattice, the (deterministic) initial
// datum with its decomposition, and the calibrated noise coefficient. Shared
// read-only across workers.
struct EnsembleContext {
    RunConfig config;
    LatticePtr lattice;
    SpectralField u0;
    DataDecomposition decomposition;
    std::shared_ptr<const NoiseCoefficient> sigma;

    static EnsembleContext prepare(const RunConfig& config);
};

SpectralField make_initial_data(const RunConfig& config, const LatticePtr& lattice);

CascadeOptions cascade_options_from(const RunConfig& config);

// One Monte Carlo path, seeded as mix_seed(master, path_id).
PathRecord run_single_path(const EnsembleContext& ctx, FourierTransform& xf, int path_id);

// Full ensemble on a worker pool; output ordering (and bytes) depend only on
// (config, master seed), never on the worker count.
std::vector<PathRecord> run_ensemble(const RunConfig& config);

struct ReplayOutcome {
    PathRecord record;
    bool match = false;
    std::string divergence; // JSON pointer of the first mismatch
};

// Re-runs one recorded path from its seed and compares bit-for-bit. Refuses
// (throws) when the config hash does not match the record.
ReplayOutcome replay_path(const PathRecord& original, const RunConfig& config,
                          int save_stride_override = 0);

// Per-lemma verification report over a records file; `gate` fields tell the
// CLI which failures should produce a nonzero exit.
nlohmann::json verify_records(const RecordsFile& rf, double wilson_z);

} // namespace snse
