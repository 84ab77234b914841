#include "snse/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace snse {

using nlohmann::json;

void RunConfig::validate() const {
    if (n < 4 || n % 2 != 0)
        throw std::invalid_argument("config: N must be an even integer >= 4");
    if (!(delta > 0.0) || delta > 0.5)
        throw std::invalid_argument("config: delta must lie in (0, 1/2]");
    if (!(dt > 0.0))
        throw std::invalid_argument("config: dt must be positive");
    if (!(horizon > 0.0))
        throw std::invalid_argument("config: T must be positive");
    if (k_wiener < 1)
        throw std::invalid_argument("config: K must be >= 1");
    if (!(eps0 > 0.0))
        throw std::invalid_argument("config: eps0 must be positive");
    if (!(eps_bar > 2.0 * eps0) || !(eps_bar < 1.0))
        throw std::invalid_argument("config: eps_bar must lie in (2*eps0, 1)");
    if (eps_sigma < 0.0)
        throw std::invalid_argument("config: eps_sigma must be >= 0");
    if (!(p0 > 0.0) || p0 > 1.0)
        throw std::invalid_argument("config: p0 must lie in (0, 1]");
    if (k_max < 0)
        throw std::invalid_argument("config: k_max must be >= 0");
    if (m_rule_factor <= 0.0)
        throw std::invalid_argument("config: M-rule factor must be positive");
    if (paths < 1)
        throw std::invalid_argument("config: path count must be >= 1");
    if (save_stride < 1)
        throw std::invalid_argument("config: save stride must be >= 1");
    if (grace_steps < 0)
        throw std::invalid_argument("config: grace steps must be >= 0");
    if (mode != "small-noise" && mode != "fixed-horizon")
        throw std::invalid_argument("config: mode must be small-noise or fixed-horizon");
    const std::string k = initial_data.kind;
    if (k != "dyadic_random" && k != "single_shell" && k != "taylor_green" && k != "file")
        throw std::invalid_argument("config: unknown initial_data kind");
    if (k == "file" && initial_data.path.empty())
        throw std::invalid_argument("config: initial_data.path required for kind=file");
}

json RunConfig::to_json() const {
    json j;
    j["schema"] = "snse-config-v1";
    j["N"] = n;
    j["delta"] = delta;
    j["dt"] = dt;
    j["T"] = horizon;
    j["K"] = k_wiener;
    j["eps0"] = eps0;
    j["eps_bar"] = eps_bar;
    j["eps_sigma"] = eps_sigma;
    j["p0"] = p0;
    j["k_max"] = k_max;
    j["m_rule_factor"] = m_rule_factor;
    j["paths"] = paths;
    j["master_seed"] = master_seed;
    j["mode"] = mode;
    j["save_stride"] = save_stride;
    j["grace_steps"] = grace_steps;
    j["workers"] = workers;
    j["initial_data"] = {{"kind", initial_data.kind},
                         {"seed", initial_data.seed},
                         {"norm", initial_data.norm},
                         {"max_nsq", initial_data.max_nsq},
                         {"path", initial_data.path}};
    return j;
}

RunConfig RunConfig::from_json(const json& j) {
    if (j.contains("schema") && j["schema"] != "snse-config-v1")
        throw std::runtime_error("config: unknown schema");
    RunConfig c;
    c.n = j.value("N", c.n);
    c.delta = j.value("delta", c.delta);
    c.dt = j.value("dt", c.dt);
    c.horizon = j.value("T", c.horizon);
    c.k_wiener = j.value("K", c.k_wiener);
    c.eps0 = j.value("eps0", c.eps0);
    c.eps_bar = j.value("eps_bar", c.eps_bar);
    c.eps_sigma = j.value("eps_sigma", c.eps_sigma);
    c.p0 = j.value("p0", c.p0);
    c.k_max = j.value("k_max", c.k_max);
    c.m_rule_factor = j.value("m_rule_factor", c.m_rule_factor);
    c.paths = j.value("paths", c.paths);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.mode = j.value("mode", c.mode);
    c.save_stride = j.value("save_stride", c.save_stride);
    c.grace_steps = j.value("grace_steps", c.grace_steps);
    c.workers = j.value("workers", c.workers);
    if (j.contains("initial_data")) {
        const auto& d = j["initial_data"];
        c.initial_data.kind = d.value("kind", c.initial_data.kind);
        c.initial_data.seed = d.value("seed", c.initial_data.seed);
        c.initial_data.norm = d.value("norm", c.initial_data.norm);
        c.initial_data.max_nsq = d.value("max_nsq", c.initial_data.max_nsq);
        c.initial_data.path = d.value("path", c.initial_data.path);
    }
    return c;
}

std::string RunConfig::hash() const {
    const std::string s = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

namespace {

// Minimal TOML subset: top-level and one-deep [section] tables, scalar
// values (string, bool, integer, float), full-line or trailing # comments.
json parse_toml_subset(std::istream& in) {
    json root = json::object();
    json* current = &root;
    std::string line;
    while (std::getline(in, line)) {
        // strip comments outside quotes
        bool in_str = false;
        for (size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"')
                in_str = !in_str;
            else if (line[i] == '#' && !in_str) {
                line.erase(i);
                break;
            }
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("toml: malformed section header: " + line);
            const std::string name = trim(line.substr(1, line.size() - 2));
            current = &root[name];
            *current = json::object();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("toml: expected key = value: " + line);
        const std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (val.empty())
            throw std::runtime_error("toml: empty value for key " + key);
        if (val.front() == '"') {
            if (val.size() < 2 || val.back() != '"')
                throw std::runtime_error("toml: unterminated string for key " + key);
            (*current)[key] = val.substr(1, val.size() - 2);
        } else if (val == "true" || val == "false") {
            (*current)[key] = (val == "true");
        } else {
            try {
                if (val.find_first_of(".eE") == std::string::npos && val.find("inf") == std::string::npos)
                    (*current)[key] = std::stoll(val);
                else
                    (*current)[key] = std::stod(val);
            } catch (const std::exception&) {
                throw std::runtime_error("toml: cannot parse value for key " + key + ": " + val);
            }
        }
    }
    return root;
}

} // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config: " + path);
    json j;
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".toml")
        j = parse_toml_subset(in);
    else
        in >> j;
    RunConfig c = RunConfig::from_json(j);
    c.validate();
    return c;
}

int resolve_worker_count(const RunConfig& config) {
    if (config.workers > 0)
        return config.workers;
    if (const char* env = std::getenv("SNSE_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0)
            return w;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? int(hw) : 1;
}

} // namespace snse
