// Command-line front end: validate / analyze / sweep / simulate / sift /
// optimize. Exit codes: 0 success, 2 invalid input, 3 I/O failure,
// 4 protocol failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "qkd/channel_model.hpp"
#include "qkd/config_io.hpp"
#include "qkd/decoy.hpp"
#include "qkd/errors.hpp"
#include "qkd/gains.hpp"
#include "qkd/optimizer.hpp"
#include "qkd/presets.hpp"
#include "qkd/pulse_sim.hpp"
#include "qkd/results_io.hpp"
#include "qkd/sifting.hpp"
#include "qkd/tag_io.hpp"
#include "qkd/validate.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalidInput = 2;
constexpr int kIoFailure = 3;
constexpr int kProtocolFailure = 4;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void print_bounds(std::ostream& out, const qkd::SecurityBounds& b) {
    out << "y0_lower," << fmt(b.y0_lower) << "\n";
    out << "q1_lower," << fmt(b.q1_lower) << "\n";
    out << "eps1_upper," << fmt(b.eps1_upper) << "\n";
    out << "secure_rate_bps," << fmt(b.secure_rate_bps) << "\n";
    out << "raw_rate_bps," << fmt(b.raw_rate_bps) << "\n";
}

int cmd_validate(const std::string& config_path) {
    qkd::SessionConfig cfg = qkd::load_config_file(config_path);
    qkd::print_config(std::cout, cfg);
    return kOk;
}

int cmd_analyze(const std::string& config_path, const std::string& gains_path,
                bool from_table1) {
    qkd::SessionConfig cfg =
        config_path.empty() ? qkd::table1_config() : qkd::load_config_file(config_path);

    qkd::SecurityBounds bounds;
    if (from_table1) {
        bounds = qkd::analyze(qkd::table1_gains(), cfg);
    } else {
        qkd::ResultsFile results = qkd::load_results_file(gains_path);
        if (results.tally) {
            qkd::GainStatistics gains = qkd::tallies_to_gains(*results.tally, cfg.k_sigma);
            double spr = static_cast<double>(
                             results.tally->of(qkd::IntensityClass::Signal).pulses_sent)
                         / results.tally->duration_s;
            bounds = qkd::analyze(gains, cfg, spr);
        } else {
            double spr = qkd::signal_pulse_rate(cfg);
            if (results.signal_pulses && results.duration_s)
                spr = *results.signal_pulses / *results.duration_s;
            bounds = qkd::analyze(*results.gains, cfg, spr);
        }
    }
    print_bounds(std::cout, bounds);
    return kOk;
}

int cmd_sweep(const std::string& config_path, double from_km, double to_km, double step_km,
              const std::string& out_path) {
    qkd::SessionConfig cfg = qkd::load_config_file(config_path);
    std::vector<qkd::SweepPoint> points = qkd::rate_vs_distance(cfg, from_km, to_km, step_km);

    std::ofstream out(out_path);
    if (!out) throw qkd::IoError("cannot open output file: " + out_path);
    out << "distance_km,raw_bps,secure_bps,qber\n";
    for (const qkd::SweepPoint& p : points)
        out << fmt(p.distance_km) << "," << fmt(p.raw_bps) << "," << fmt(p.secure_bps) << ","
            << fmt(p.qber) << "\n";
    if (!out) throw qkd::IoError("failed writing sweep output");

    qkd::CutoffResult cutoff = qkd::find_cutoff_distance(cfg);
    if (cutoff.found)
        std::cout << "cutoff_km," << fmt(cutoff.distance_km) << "\n";
    else
        std::cout << "cutoff_km,>" << fmt(cutoff.search_max_km) << "\n";
    return kOk;
}

int cmd_simulate(const std::string& config_path, std::uint64_t pulses, std::uint64_t seed,
                 const std::string& tags_path, const std::string& out_path,
                 unsigned threads) {
    qkd::SessionConfig cfg = qkd::load_config_file(config_path);
    qkd::SimulateOptions opt;
    opt.record_detections = !tags_path.empty();
    opt.threads = threads;
    qkd::SimulationResult result = qkd::simulate_session(cfg, seed, pulses, opt);

    if (!tags_path.empty()) qkd::write_tag_file(tags_path, result.detections);
    std::ofstream out(out_path);
    if (!out) throw qkd::IoError("cannot open output file: " + out_path);
    qkd::print_tally(out, result.tally);
    if (!out) throw qkd::IoError("failed writing tally output");
    return kOk;
}

int cmd_sift(const std::string& role, const std::string& config_path, int listen_port,
             const std::string& connect_addr, const std::string& tags_path,
             std::uint64_t pulses, std::uint64_t seed, double disclose,
             const std::string& out_path) {
    qkd::SessionConfig cfg = qkd::load_config_file(config_path);
    qkd::sift::SiftOptions opt;
    opt.signal_disclose_fraction = disclose;

    std::unique_ptr<qkd::sift::Transport> transport;
    if (listen_port >= 0) {
        qkd::sift::TcpListener listener(static_cast<std::uint16_t>(listen_port));
        transport = listener.accept();
    } else {
        std::size_t colon = connect_addr.rfind(':');
        if (colon == std::string::npos)
            throw qkd::ConfigError("--connect expects HOST:PORT");
        std::string host = connect_addr.substr(0, colon);
        int port = std::stoi(connect_addr.substr(colon + 1));
        transport = qkd::sift::TcpTransport::connect(host, static_cast<std::uint16_t>(port));
    }

    qkd::SessionTally tally;
    if (role == "alice") {
        qkd::sift::SimulatedPulseSource source(cfg.source, seed, pulses);
        tally = qkd::sift::run_alice_endpoint(source, *transport, cfg, opt);
    } else {
        std::vector<qkd::DetectionRecord> stream = qkd::read_tag_file(tags_path);
        tally = qkd::sift::run_bob_endpoint(stream, *transport, cfg, opt);
    }

    std::ofstream out(out_path);
    if (!out) throw qkd::IoError("cannot open output file: " + out_path);
    qkd::print_tally(out, tally);
    if (!out) throw qkd::IoError("failed writing tally output");
    return kOk;
}

int cmd_optimize(const std::string& config_path) {
    qkd::SessionConfig cfg = qkd::load_config_file(config_path);
    qkd::OptimizeResult r = qkd::optimize_intensities(cfg);
    std::cout << "mu," << fmt(r.mu) << "\n";
    std::cout << "nu1," << fmt(r.nu1) << "\n";
    std::cout << "nu2," << fmt(r.nu2) << "\n";
    std::cout << "predicted_rate_bps," << fmt(r.predicted_rate_bps) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decoy-state BB84 rate analysis and pulse-level simulation"};
    app.require_subcommand(1);

    std::string config_path, gains_path, out_path, tags_path, role, connect_addr;
    bool from_table1 = false;
    double from_km = 0.0, to_km = 0.0, step_km = 1.0, disclose = 1.0;
    std::uint64_t pulses = 0, seed = 1;
    int listen_port = -1;
    unsigned threads = 0;

    CLI::App* validate = app.add_subcommand("validate", "check a configuration file");
    validate->add_option("--config", config_path)->required();

    CLI::App* analyze = app.add_subcommand("analyze", "security bounds from measured gains");
    analyze->add_option("--config", config_path);
    auto* gains_opt = analyze->add_option("--gains", gains_path, "gains or tally file");
    analyze->add_flag("--from-table1", from_table1, "built-in reference gains")
        ->excludes(gains_opt);

    CLI::App* sweep = app.add_subcommand("sweep", "rates versus fiber distance");
    sweep->add_option("--config", config_path)->required();
    sweep->add_option("--from", from_km)->required();
    sweep->add_option("--to", to_km)->required();
    sweep->add_option("--step", step_km)->required();
    sweep->add_option("--out", out_path)->required();

    CLI::App* simulate = app.add_subcommand("simulate", "pulse-level Monte Carlo session");
    simulate->add_option("--config", config_path)->required();
    simulate->add_option("--pulses", pulses)->required();
    simulate->add_option("--seed", seed);
    simulate->add_option("--tags", tags_path, "write the time-tag stream here");
    simulate->add_option("--out", out_path)->required();
    simulate->add_option("--threads", threads);

    CLI::App* sift = app.add_subcommand("sift", "run one sifting endpoint");
    sift->add_option("--role", role)->required()->check(CLI::IsMember({"alice", "bob"}));
    sift->add_option("--config", config_path)->required();
    sift->add_option("--listen", listen_port, "listen on this port (alice)");
    sift->add_option("--connect", connect_addr, "connect to HOST:PORT (bob)");
    sift->add_option("--pulses", pulses, "pulse count of the session (alice)");
    sift->add_option("--seed", seed, "seed of the simulated session (alice)");
    sift->add_option("--tags", tags_path, "time-tag stream file (bob)");
    sift->add_option("--disclose", disclose, "fraction of sifted signal bits disclosed");
    sift->add_option("--out", out_path)->required();

    CLI::App* optimize = app.add_subcommand("optimize", "search intensity settings");
    optimize->add_option("--config", config_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kInvalidInput;
    }

    try {
        if (validate->parsed()) return cmd_validate(config_path);
        if (analyze->parsed()) {
            if (!from_table1 && gains_path.empty())
                throw qkd::ConfigError("analyze needs --gains or --from-table1");
            return cmd_analyze(config_path, gains_path, from_table1);
        }
        if (sweep->parsed()) return cmd_sweep(config_path, from_km, to_km, step_km, out_path);
        if (simulate->parsed()) {
            if (pulses == 0) throw qkd::ConfigError("--pulses must be >= 1");
            return cmd_simulate(config_path, pulses, seed, tags_path, out_path, threads);
        }
        if (sift->parsed()) {
            if (role == "alice" && pulses == 0)
                throw qkd::ConfigError("alice needs --pulses >= 1");
            if (role == "bob" && tags_path.empty())
                throw qkd::ConfigError("bob needs --tags");
            if ((listen_port < 0) == connect_addr.empty())
                throw qkd::ConfigError("exactly one of --listen/--connect is required");
            return cmd_sift(role, config_path, listen_port, connect_addr, tags_path, pulses,
                            seed, disclose, out_path);
        }
        if (optimize->parsed()) return cmd_optimize(config_path);
    } catch (const qkd::ProtocolError& e) {
        std::cerr << "protocol error (message type 0x" << std::hex << int(e.type_code())
                  << std::dec << "): " << e.what() << "\n";
        return kProtocolFailure;
    } catch (const qkd::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoFailure;
    } catch (const qkd::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalidInput;
    } catch (const qkd::ValidityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalidInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalidInput;
    }
    return kOk;
}
