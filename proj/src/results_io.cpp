#include "qkd/results_io.hpp"

#include <cmath>
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

double prob_or_throw(const std::map<std::string, double>& kv, const std::string& key) {
    double v = kv.at(key);
    if (!(v >= 0.0 && v <= 1.0))
        throw ConfigError("results key " + key + " is not a probability in [0,1]");
    return v;
}

std::uint64_t count_or_throw(const std::map<std::string, double>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("results file missing key " + key);
    double v = it->second;
    if (v < 0 || v != std::floor(v))
        throw ConfigError("results key " + key + " must be a non-negative count");
    return static_cast<std::uint64_t>(v);
}

}  // namespace

ResultsFile parse_results(std::istream& in) {
    std::map<std::string, double> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t sep = t.find_first_of("=,");
        if (sep == std::string::npos) {
            std::ostringstream os;
            os << "results line " << lineno << " is neither name = value nor name,value";
            throw ConfigError(os.str());
        }
        std::string key = trim(t.substr(0, sep));
        std::string value = trim(t.substr(sep + 1));
        try {
            std::size_t used = 0;
            double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            kv[key] = v;
        } catch (const std::exception&) {
            throw ConfigError("results key " + key + " has a non-numeric value '" + value + "'");
        }
    }

    ResultsFile out;
    if (kv.count("q_mu")) {
        GainStatistics g;
        g.q_mu = prob_or_throw(kv, "q_mu");
        if (!kv.count("q_nu1") || !kv.count("q_nu2") || !kv.count("eps_mu"))
            throw ConfigError("gains file needs q_mu, q_nu1, q_nu2 and eps_mu");
        g.q_nu1 = prob_or_throw(kv, "q_nu1");
        g.q_nu2 = prob_or_throw(kv, "q_nu2");
        g.eps_mu = prob_or_throw(kv, "eps_mu");
        auto dev = [&](const char* key) {
            auto it = kv.find(key);
            if (it == kv.end()) return 0.0;
            if (it->second < 0.0)
                throw ConfigError(std::string("deviation ") + key + " must be non-negative");
            return it->second;
        };
        g.dev_q_mu = dev("dev_q_mu");
        g.dev_q_nu1 = dev("dev_q_nu1");
        g.dev_q_nu2 = dev("dev_q_nu2");
        g.dev_eps_mu = dev("dev_eps_mu");
        out.gains = g;
        if (kv.count("signal_pulses")) out.signal_pulses = kv["signal_pulses"];
        if (kv.count("duration_s")) out.duration_s = kv["duration_s"];
    } else if (kv.count("pulses_sent_signal")) {
        SessionTally t;
        for (auto c : all_classes()) {
            std::string suffix = std::string("_") + class_name(c);
            ClassTally& ct = t.of(c);
            ct.pulses_sent = count_or_throw(kv, "pulses_sent" + suffix);
            ct.clicks = count_or_throw(kv, "clicks" + suffix);
            ct.sifted = count_or_throw(kv, "sifted" + suffix);
            ct.errors = count_or_throw(kv, "errors" + suffix);
        }
        auto it = kv.find("duration_s");
        if (it == kv.end()) throw ConfigError("tally file missing key duration_s");
        t.duration_s = it->second;
        validate_tally(t);
        out.tally = t;
    } else {
        throw ConfigError("results file carries neither gains (q_mu...) nor tally counts");
    }
    return out;
}

ResultsFile load_results_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open results file: " + path);
    return parse_results(in);
}

void print_tally(std::ostream& out, const SessionTally& tally) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", tally.duration_s);
    out << "duration_s," << buf << "\n";
    for (auto c : all_classes()) {
        const ClassTally& ct = tally.of(c);
        const char* name = class_name(c);
        out << "pulses_sent_" << name << "," << ct.pulses_sent << "\n";
        out << "clicks_" << name << "," << ct.clicks << "\n";
        out << "sifted_" << name << "," << ct.sifted << "\n";
        out << "errors_" << name << "," << ct.errors << "\n";
    }
}

}  // namespace qkd
