// snse: pseudo-spectral simulator for the stochastic Navier-Stokes cascade
// construction on the torus.
//
//   snse decompose --in field.json --eps0 E [--delta D --kmax K] --out dir/
//   snse run       --config run.json|run.toml --out records.jsonl
//   snse verify    --records records.jsonl --report report.json [--wilson-z Z]
//   snse replay    --records records.jsonl [--path-id I] [--stride S] [--out rec.json]
//
// Worker count: config "workers", else SNSE_WORKERS, else hardware threads.

#include "snse/ensemble.hpp"
#include "snse/field_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace snse;
using nlohmann::json;

namespace {

int cmd_decompose(const std::string& in_path, double eps0, double delta, int k_max,
                  const std::string& out_dir) {
    double file_delta = 0.0;
    SpectralField u0 = load_field(in_path, &file_delta);
    if (delta <= 0.0)
        delta = file_delta > 0.0 ? file_delta : 0.25;
    if (!u0.solenoidal)
        leray_project_in_place(u0);
    const DataDecomposition dec = decompose(u0, eps0, delta, k_max);

    std::filesystem::create_directories(out_dir);
    json manifest;
    manifest["schema"] = "snse-decomposition-v1";
    manifest["N"] = u0.lattice->n();
    manifest["delta"] = delta;
    manifest["eps0"] = eps0;
    manifest["k_max"] = k_max;
    json pieces = json::array();
    for (size_t k = 0; k < dec.pieces.size(); ++k) {
        const std::string name = "piece_" + std::to_string(k) + ".json";
        save_field(dec.pieces[k], delta, out_dir + "/" + name);
        pieces.push_back({{"k", k},
                          {"file", name},
                          {"shells", {dec.shell_ranges[k].first, dec.shell_ranges[k].second}},
                          {"h_half_norm", dec.h_half_norms[k]},
                          {"bound", k == 0 ? 2.0 * eps0 : eps0 / std::pow(4.0, double(k))},
                          {"Mbb_k", dec.h_half_delta_norms[k]}});
    }
    manifest["pieces"] = std::move(pieces);
    std::ofstream out(out_dir + "/manifest.json");
    out << manifest.dump(2) << "\n";
    std::cout << "decomposed into " << dec.pieces.size() << " pieces -> " << out_dir << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_path) {
    const RunConfig config = load_config(config_path);
    const auto records = run_ensemble(config);
    write_records(out_path, config, records);
    int failures = 0;
    for (const auto& r : records)
        if (r.status != "ok")
            ++failures;
    std::cout << "wrote " << records.size() << " path records (" << failures << " failures) -> "
              << out_path << "\n";
    return 0;
}

int cmd_verify(const std::string& records_path, const std::string& report_path, double wilson_z) {
    const RecordsFile rf = read_records(records_path);
    const json report = verify_records(rf, wilson_z);
    std::ofstream out(report_path);
    out << report.dump(2) << "\n";
    for (const auto& [key, value] : report.items()) {
        if (!value.is_object() || !value.contains("pass"))
            continue;
        std::cout << (value["pass"].get<bool>() ? "[PASS] " : "[FAIL] ") << key
                  << (value.value("gate", false) ? "" : " (informational)") << "\n";
    }
    const bool ok = report["pass"].get<bool>();
    std::cout << (ok ? "verify: PASS" : "verify: FAIL") << " -> " << report_path << "\n";
    return ok ? 0 : 1;
}

int cmd_replay(const std::string& records_path, int path_id, int stride,
               const std::string& out_path) {
    const RecordsFile rf = read_records(records_path);
    const PathRecord* target = nullptr;
    for (const auto& rec : rf.records)
        if (rec.path_id == path_id)
            target = &rec;
    if (!target) {
        std::cerr << "no record with path id " << path_id << "\n";
        return 1;
    }
    const ReplayOutcome outcome = replay_path(*target, rf.config, stride);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << path_record_to_json(outcome.record).dump() << "\n";
    }
    if (stride > 0 && stride != rf.config.save_stride) {
        std::cout << "replayed path " << path_id << " at stride " << stride << "\n";
        return 0;
    }
    if (outcome.match) {
        std::cout << "replay of path " << path_id << " is byte-identical\n";
        return 0;
    }
    std::cerr << "replay mismatch at " << outcome.divergence << "\n";
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic Navier-Stokes cascade simulator"};
    app.require_subcommand(1);

    std::string in_path, out_path, config_path, records_path, report_path;
    double eps0 = 0.01, delta = -1.0, wilson_z = 0.5;
    int k_max = 5, path_id = 0, stride = 0;

    auto* dec = app.add_subcommand("decompose", "split a field snapshot into cascade pieces");
    dec->add_option("--in", in_path, "field snapshot JSON")->required();
    dec->add_option("--eps0", eps0, "H^{1/2} budget")->required();
    dec->add_option("--delta", delta, "Sobolev offset (default: snapshot header)");
    dec->add_option("--kmax", k_max, "number of cascade levels - 1");
    dec->add_option("--out", out_path, "output directory")->required();

    auto* run = app.add_subcommand("run", "run a Monte Carlo ensemble");
    run->add_option("--config", config_path, "run configuration (JSON or TOML)")->required();
    run->add_option("--out", out_path, "records JSONL output")->required();

    auto* ver = app.add_subcommand("verify", "check the estimate suite on recorded paths");
    ver->add_option("--records", records_path, "records JSONL")->required();
    ver->add_option("--report", report_path, "report JSON output")->required();
    ver->add_option("--wilson-z", wilson_z, "Wilson interval z value");

    auto* rep = app.add_subcommand("replay", "re-run one recorded path from its seed");
    rep->add_option("--records", records_path, "records JSONL")->required();
    rep->add_option("--path-id", path_id, "path id (default 0)");
    rep->add_option("--stride", stride, "override save stride");
    rep->add_option("--out", out_path, "write the replayed record");

    CLI11_PARSE(app, argc, argv);

    try {
        if (dec->parsed())
            return cmd_decompose(in_path, eps0, delta, k_max, out_path);
        if (run->parsed())
            return cmd_run(config_path, out_path);
        if (ver->parsed())
            return cmd_verify(records_path, report_path, wilson_z);
        if (rep->parsed())
            return cmd_replay(records_path, path_id, stride, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
