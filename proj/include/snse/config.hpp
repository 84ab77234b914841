#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>

namespace snse {

struct InitialDataSpec {
    std::string kind = "dyadic_random"; // dyadic_random | single_shell | taylor_green | file
    std::uint64_t seed = 1;
    double norm = -1.0; // H^{1/2} norm; defaults to eps0 when negative
    double max_nsq = 4.0; // single_shell support bound |n|^2
    std::string path;   // for kind == file
};

// Full experiment description; serialized into every output so records are
// self-describing and replayable.
struct RunConfig {
    int n = 16;
    double delta = 0.25;
    double dt = 0.005;
    double horizon = 1.0;
    int k_wiener = 16;
    double eps0 = 0.01;
    double eps_bar = 0.08;
    double eps_sigma = 0.05;
    double p0 = 0.1;
    int k_max = 5;
    double m_rule_factor = 8.0;
    int paths = 8;
    std::uint64_t master_seed = 20240901;
    std::string mode = "small-noise"; // small-noise | fixed-horizon
    int save_stride = 5;
    int grace_steps = 10;
    int workers = 0; // 0 = SNSE_WORKERS env or hardware
    InitialDataSpec initial_data;

    void validate() const;
    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);

    // FNV-1a over the canonical serialization; stored in each record so
    // replay can refuse mismatched configs.
    std::string hash() const;
};

// Reads a config from JSON or (by extension) a flat TOML subset:
// `key = value` pairs, one [initial_data] section, # comments.
RunConfig load_config(const std::string& path);

int resolve_worker_count(const RunConfig& config);

} // namespace snse
