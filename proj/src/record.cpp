#include "snse/record.hpp"

#include <fstream>

namespace snse {

using nlohmann::json;

namespace {

json opt_to_json(const std::optional<double>& v) {
    if (v)
        return *v;
    return nullptr;
}

std::optional<double> opt_from_json(const json& j) {
    if (j.is_null())
        return std::nullopt;
    return j.get<double>();
}

json ledger_to_json(const EnergyLedger& l) {
    return json{{"alpha", l.alpha},
                {"initial_sq", l.initial_sq},
                {"sup_sq", l.sup_sq},
                {"dissipation", l.dissipation_integral},
                {"forcing", l.forcing_budget},
                {"noise", l.noise_budget}};
}

EnergyLedger ledger_from_json(const json& j) {
    EnergyLedger l;
    l.alpha = j.at("alpha").get<double>();
    l.initial_sq = j.at("initial_sq").get<double>();
    l.sup_sq = j.at("sup_sq").get<double>();
    l.dissipation_integral = j.at("dissipation").get<double>();
    l.forcing_budget = j.at("forcing").get<double>();
    l.noise_budget = j.at("noise").get<double>();
    return l;
}

} // namespace

json heat_sample_to_json(const HeatSample& s) {
    return json{{"t", s.t},
                {"h12", s.h_half},
                {"h12d", s.h_half_delta},
                {"h32", s.h_three_half},
                {"ledger0", ledger_to_json(s.ledger0)},
                {"ledger_delta", ledger_to_json(s.ledger_delta)}};
}

json path_record_to_json(const PathRecord& rec) {
    json j;
    j["schema"] = "snse-path-v1";
    j["path_id"] = rec.path_id;
    j["seed"] = rec.seed;
    j["config_hash"] = rec.config_hash;
    j["status"] = rec.status;
    j["t"] = rec.t;
    j["tau"] = opt_to_json(rec.tau);
    j["dt"] = rec.dt;
    j["u_h12_sq"] = rec.u_h12_sq;
    j["u_h32_sq_int"] = rec.u_h32_sq_int;
    json levels = json::array();
    for (const auto& lv : rec.levels) {
        json l;
        l["k"] = lv.k;
        l["M_k"] = lv.m_k;
        l["Mbb_k"] = lv.mbb_k;
        l["piece_h12"] = lv.piece_h12;
        l["q0"] = lv.series.q0;
        l["qd"] = lv.series.qd;
        l["psi"] = lv.series.psi;
        l["phi"] = lv.series.phi;
        l["zeta"] = lv.series.zeta;
        l["u_h12"] = lv.series.u_h12;
        l["u_h12d"] = lv.series.u_h12d;
        l["u_h32"] = lv.series.u_h32;
        l["ledger0"] = ledger_to_json(lv.ledger0);
        l["ledger_delta"] = ledger_to_json(lv.ledger_delta);
        l["sup_q0"] = lv.sup_q0;
        l["sup_qd"] = lv.sup_qd;
        l["tau"] = opt_to_json(lv.tau);
        l["rho"] = opt_to_json(lv.rho);
        levels.push_back(std::move(l));
    }
    j["levels"] = std::move(levels);
    return j;
}

PathRecord path_record_from_json(const json& j) {
    if (j.value("schema", "") != "snse-path-v1")
        throw std::runtime_error("path record: unknown schema");
    PathRecord rec;
    rec.path_id = j.at("path_id").get<int>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.config_hash = j.at("config_hash").get<std::string>();
    rec.status = j.at("status").get<std::string>();
    rec.t = j.at("t").get<std::vector<double>>();
    rec.tau = opt_from_json(j.at("tau"));
    rec.dt = j.at("dt").get<double>();
    rec.u_h12_sq = j.at("u_h12_sq").get<std::vector<double>>();
    rec.u_h32_sq_int = j.at("u_h32_sq_int").get<std::vector<double>>();
    for (const auto& l : j.at("levels")) {
        LevelRecord lv;
        lv.k = l.at("k").get<int>();
        lv.m_k = l.at("M_k").get<double>();
        lv.mbb_k = l.at("Mbb_k").get<double>();
        lv.piece_h12 = l.at("piece_h12").get<double>();
        lv.series.q0 = l.at("q0").get<std::vector<double>>();
        lv.series.qd = l.at("qd").get<std::vector<double>>();
        lv.series.psi = l.at("psi").get<std::vector<double>>();
        lv.series.phi = l.at("phi").get<std::vector<double>>();
        lv.series.zeta = l.at("zeta").get<std::vector<double>>();
        lv.series.u_h12 = l.at("u_h12").get<std::vector<double>>();
        lv.series.u_h12d = l.at("u_h12d").get<std::vector<double>>();
        lv.series.u_h32 = l.at("u_h32").get<std::vector<double>>();
        lv.ledger0 = ledger_from_json(l.at("ledger0"));
        lv.ledger_delta = ledger_from_json(l.at("ledger_delta"));
        lv.sup_q0 = l.at("sup_q0").get<double>();
        lv.sup_qd = l.at("sup_qd").get<double>();
        lv.tau = opt_from_json(l.at("tau"));
        lv.rho = opt_from_json(l.at("rho"));
        rec.levels.push_back(std::move(lv));
    }
    return rec;
}

std::string first_difference(const json& a, const json& b) {
    if (a == b)
        return std::string();
    if (a.type() != b.type())
        return "/";
    if (a.is_object()) {
        for (auto it = a.begin(); it != a.end(); ++it) {
            if (!b.contains(it.key()))
                return "/" + it.key();
            const std::string sub = first_difference(it.value(), b[it.key()]);
            if (!sub.empty())
                return "/" + it.key() + (sub == "/" ? "" : sub);
        }
        for (auto it = b.begin(); it != b.end(); ++it)
            if (!a.contains(it.key()))
                return "/" + it.key();
        return "/";
    }
    if (a.is_array()) {
        const size_t n = std::min(a.size(), b.size());
        for (size_t i = 0; i < n; ++i) {
            const std::string sub = first_difference(a[i], b[i]);
            if (!sub.empty())
                return "/" + std::to_string(i) + (sub == "/" ? "" : sub);
        }
        if (a.size() != b.size())
            return "/" + std::to_string(n);
        return "/";
    }
    return "/";
}

void write_records(const std::string& path, const RunConfig& config,
                   const std::vector<PathRecord>& records) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    json header;
    header["schema"] = "snse-run-v1";
    header["config"] = config.to_json();
    out << header.dump() << "\n";
    for (const auto& rec : records)
        out << path_record_to_json(rec).dump() << "\n";
}

RecordsFile read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty records file: " + path);
    const json header = json::parse(line);
    if (header.value("schema", "") != "snse-run-v1")
        throw std::runtime_error("records file: unknown schema");
    RecordsFile rf;
    rf.config = RunConfig::from_json(header.at("config"));
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        rf.records.push_back(path_record_from_json(json::parse(line)));
    }
    return rf;
}

} // namespace snse
