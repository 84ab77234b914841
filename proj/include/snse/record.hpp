#pragma once

#include "snse/config.hpp"
#include "snse/stopping.hpp"

namespace snse {

// Per-level slice of a path record: cutoff/threshold metadata, the recorded
// series at save-stride resolution, ledgers, and full-resolution extrema.
struct LevelRecord {
    int k = 0;
    double m_k = 0.0;
    double mbb_k = 0.0;   // recorded H^{1/2+delta} bound of the data piece
    double piece_h12 = 0.0;
    LevelSeries series;
    EnergyLedger ledger0;
    EnergyLedger ledger_delta;
    double sup_q0 = 0.0;
    double sup_qd = 0.0;
    std::optional<double> tau;
    std::optional<double> rho;
};

struct PathRecord {
    int path_id = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string status = "ok";
    std::vector<double> t;
    std::vector<LevelRecord> levels;
    std::optional<double> tau;
    // u^{(k_max)} functionals at full dt resolution (headline checks)
    std::vector<double> u_h12_sq;
    std::vector<double> u_h32_sq_int;
    double dt = 0.0;
};

nlohmann::json path_record_to_json(const PathRecord& rec);
PathRecord path_record_from_json(const nlohmann::json& j);

// One JSONL line per saved heat-trajectory sample:
// {t, ||u||_{H^{1/2}}, ||u||_{H^{1/2+delta}}, ||u||_{H^{3/2}}, ledger snapshot}.
nlohmann::json heat_sample_to_json(const HeatSample& s);

// First JSON-pointer-style location where two records differ, or empty.
std::string first_difference(const nlohmann::json& a, const nlohmann::json& b);

// Records file: header line {schema, config}, then one record per line.
void write_records(const std::string& path, const RunConfig& config,
                   const std::vector<PathRecord>& records);
struct RecordsFile {
    RunConfig config;
    std::vector<PathRecord> records;
};
RecordsFile read_records(const std::string& path);

} // namespace snse
