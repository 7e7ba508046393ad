// Command-line front end: run, serve and sweep.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ancsim/log.hpp"
#include "ancsim/remote/server.hpp"
#include "ancsim/sim/run.hpp"
#include "ancsim/sim/scenario.hpp"
#include "ancsim/sim/sweep.hpp"

namespace fs = std::filesystem;
using namespace ancsim;

namespace {

int report_scenario_error(const ScenarioError& e, const std::string& path) {
    std::cerr << path << ": scenario does not match the schema\n";
    for (const auto& i : e.issues()) {
        std::cerr << "  " << (i.pointer.empty() ? "/" : i.pointer) << ": " << i.message << '\n';
    }
    return kExitConfig;
}

int cmd_run(const std::string& path, const std::string& out) {
    std::string text;
    try {
        text = read_file(path);
        const auto r = run_scenario(text, out);
        const auto& s = r.summary;
        log(LogLevel::Info, "wrote " + (fs::path(out) / "summary.json").string());
        for (const auto& u : s.at("units")) {
            std::cout << "unit " << u.at("unit").get<int>() << " " << u.at("final_state").get<std::string>();
            if (u.contains("metrics")) std::cout << " band_mean_reduction_db=" << u.at("metrics").at("band_mean_reduction_db").dump();
            if (u.contains("constraint")) std::cout << " constraint_compliant=" << u.at("constraint").at("compliant").dump();
            if (u.contains("harmonics")) std::cout << " worst_harmonic_db=" << u.at("harmonics").at("worst_db").dump();
            std::cout << '\n';
        }
        for (const auto& m : s.at("monitors")) {
            std::cout << "monitor " << m.at("mic").get<int>() << " band_mean_reduction_db=" << m.at("band_mean_reduction_db").dump()
                      << '\n';
        }
        if (r.exit_code == kExitFault) {
            std::cerr << "controller fault, see " << (fs::path(out) / "fault.json").string() << '\n';
        }
        return r.exit_code;
    } catch (const ScenarioError& e) {
        return report_scenario_error(e, path);
    } catch (const ConfigError& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return kExitConfig;
    }
}

int cmd_serve(const std::string& path, ServeOptions opt) {
    Scenario sc;
    try {
        sc = scenario_from_text(read_file(path));
    } catch (const ScenarioError& e) {
        return report_scenario_error(e, path);
    } catch (const ConfigError& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return kExitConfig;
    }
    opt.handle_signals = true;
    try {
        Server server(std::move(sc), opt);
        server.start();
        std::cout << "serving tcp " << server.tcp_port() << " http " << server.http_port() << std::endl;
        server.wait();
        log(LogLevel::Info, "shutting down");
        server.stop();
    } catch (const PortInUse& e) {
        std::cerr << e.what() << '\n';
        return kExitPortInUse;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}

int cmd_sweep(const std::string& path, const std::string& out, unsigned threads) {
    try {
        const auto j = nlohmann::json::parse(read_file(path));
        auto spec = sweep_spec_from_json(j, fs::path(path).parent_path());
        if (threads) spec.threads = threads;
        const auto rows = run_sweep(spec);
        std::ofstream os(out);
        if (!os) throw ConfigError("cannot write " + out);
        write_sweep_csv(os, rows);
        std::size_t bad = 0;
        for (const auto& r : rows) bad += r.status != "ok";
        std::cout << rows.size() << " points, " << bad << " flagged\n";
        return kExitOk;
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return kExitConfig;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale active noise mitigation simulator"};
    app.require_subcommand(1);

    std::string scenario, out;
    auto* run = app.add_subcommand("run", "Run a scenario headlessly and write artifacts");
    run->add_option("scenario", scenario, "Scenario JSON")->required();
    run->add_option("--out", out, "Output directory")->required();

    ServeOptions so;
    std::string static_dir, log_path;
    auto* serve = app.add_subcommand("serve", "Run a scenario live behind the control plane");
    serve->add_option("scenario", scenario, "Scenario JSON")->required();
    serve->add_option("--tcp", so.tcp_port, "TCP port for newline-delimited JSON")->capture_default_str();
    serve->add_option("--http", so.http_port, "HTTP port (/ws, /log, static files)")->capture_default_str();
    serve->add_option("--speed", so.speed, "Simulated seconds per wall second, 0 pauses")->capture_default_str();
    serve->add_option("--bind", so.bind, "Listen address")->capture_default_str();
    serve->add_option("--static", static_dir, "Directory of dashboard assets");
    serve->add_option("--log", log_path, "Event log (ndjson)");

    std::string grid;
    unsigned threads = 0;
    auto* sweep = app.add_subcommand("sweep", "Run a parameter grid and write one CSV row per point");
    sweep->add_option("grid", grid, "Grid JSON")->required();
    sweep->add_option("--out", out, "Output CSV")->required();
    sweep->add_option("--threads", threads, "Worker threads, 0 for all cores");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    if (*run) return cmd_run(scenario, out);
    if (*serve) {
        so.static_dir = static_dir.empty() && fs::is_directory("dashboard/dist") ? fs::path("dashboard/dist") : fs::path(static_dir);
        so.log_path = log_path.empty() ? fs::path("ancsim-serve.ndjson") : fs::path(log_path);
        return cmd_serve(scenario, so);
    }
    return cmd_sweep(grid, out, threads);
}
