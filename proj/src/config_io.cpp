#include "qkd/config_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "qkd/errors.hpp"
#include "qkd/validate.hpp"

namespace qkd {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key " + key + " has a non-numeric value '" + value + "'");
    }
}

}  // namespace

SessionConfig parse_config(std::istream& in) {
    std::map<std::string, double> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "line " << lineno << " is not a key = value pair";
            throw ConfigError(os.str());
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (kv.count(key)) throw ConfigError("duplicate key " + key);
        kv[key] = to_double(key, value);
    }

    auto take = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError("missing key " + key);
        double v = it->second;
        kv.erase(it);
        return v;
    };

    SessionConfig cfg;
    cfg.source.clock_rate_hz = take("source.clock_rate_hz");
    cfg.source.mu = take("source.mu");
    cfg.source.nu1 = take("source.nu1");
    cfg.source.nu2 = take("source.nu2");
    cfg.source.duty[0] = take("source.duty_signal");
    cfg.source.duty[1] = take("source.duty_decoy1");
    cfg.source.duty[2] = take("source.duty_decoy2");
    cfg.channel.length_km = take("channel.length_km");
    cfg.channel.loss_db_per_km = take("channel.loss_db_per_km");
    cfg.detector.detector_efficiency = take("detector.efficiency");
    cfg.detector.receiver_loss_factor = take("detector.receiver_loss_factor");
    cfg.detector.dark_prob_per_gate = take("detector.dark_prob_per_gate");
    cfg.detector.afterpulse_prob = take("detector.afterpulse_prob");
    double dead = take("detector.dead_time_gates");
    if (dead < 0 || dead != static_cast<std::uint32_t>(dead))
        throw ConfigError("detector.dead_time_gates must be a non-negative integer");
    cfg.detector.dead_time_gates = static_cast<std::uint32_t>(dead);
    cfg.detector.gate_width_s = take("detector.gate_width_s");
    cfg.detector.jitter_fwhm_s = take("detector.jitter_fwhm_s");
    cfg.detector.misalignment_error = take("detector.misalignment_error");
    cfg.duration_s = take("session.duration_s");
    cfg.k_sigma = take("session.k_sigma");
    cfg.f_ec = take("session.f_ec");
    if (kv.count("source.extinction_db")) {
        cfg.source.extinction_db = kv["source.extinction_db"];
        kv.erase("source.extinction_db");
    }
    if (!kv.empty()) throw ConfigError("unknown key " + kv.begin()->first);

    validate_config(cfg);
    return cfg;
}

SessionConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    return parse_config(in);
}

void print_config(std::ostream& out, const SessionConfig& cfg) {
    char buf[64];
    auto emit = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        out << key << " = " << buf << "\n";
    };
    emit("source.clock_rate_hz", cfg.source.clock_rate_hz);
    emit("source.mu", cfg.source.mu);
    emit("source.nu1", cfg.source.nu1);
    emit("source.nu2", cfg.source.nu2);
    emit("source.duty_signal", cfg.source.duty[0]);
    emit("source.duty_decoy1", cfg.source.duty[1]);
    emit("source.duty_decoy2", cfg.source.duty[2]);
    if (cfg.source.extinction_db) emit("source.extinction_db", *cfg.source.extinction_db);
    emit("channel.length_km", cfg.channel.length_km);
    emit("channel.loss_db_per_km", cfg.channel.loss_db_per_km);
    emit("detector.efficiency", cfg.detector.detector_efficiency);
    emit("detector.receiver_loss_factor", cfg.detector.receiver_loss_factor);
    emit("detector.dark_prob_per_gate", cfg.detector.dark_prob_per_gate);
    emit("detector.afterpulse_prob", cfg.detector.afterpulse_prob);
    emit("detector.dead_time_gates", cfg.detector.dead_time_gates);
    emit("detector.gate_width_s", cfg.detector.gate_width_s);
    emit("detector.jitter_fwhm_s", cfg.detector.jitter_fwhm_s);
    emit("detector.misalignment_error", cfg.detector.misalignment_error);
    emit("session.duration_s", cfg.duration_s);
    emit("session.k_sigma", cfg.k_sigma);
    emit("session.f_ec", cfg.f_ec);
}

}  // namespace qkd
