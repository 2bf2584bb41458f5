#include "qkd/validate.hpp"

#include <cmath>
#include <sstream>

#include "qkd/errors.hpp"

namespace qkd {

const char* class_name(IntensityClass c) {
    switch (c) {
        case IntensityClass::Signal: return "signal";
        case IntensityClass::Decoy1: return "decoy1";
        default: return "decoy2";
    }
}

double SourceConfig::effective_extinction_db() const {
    if (extinction_db) return *extinction_db;
    return 10.0 * std::log10(mu / nu2);
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

void require_prob(double v, const char* field) {
    std::ostringstream os;
    os << field << " = " << v << " is not a probability in [0,1]";
    require(v >= 0.0 && v <= 1.0, os.str());
}

}  // namespace

const SessionConfig& validate_config(const SessionConfig& cfg) {
    const SourceConfig& s = cfg.source;
    require(s.clock_rate_hz > 0.0, "source.clock_rate_hz must be positive");
    require(s.nu2 >= 0.0, "source.nu2 must be non-negative");
    require(s.mu > s.nu1 && s.nu1 > s.nu2, "intensities must satisfy mu > nu1 > nu2");
    require(s.mu > s.nu1 + s.nu2, "mu <= nu1 + nu2 violates decoy bound validity");
    double duty_sum = 0.0;
    for (auto c : all_classes()) {
        double d = s.duty_of(c);
        std::ostringstream os;
        os << "source.duty_" << class_name(c) << " = " << d << " is not in [0,1]";
        require(d >= 0.0 && d <= 1.0, os.str());
        duty_sum += d;
    }
    require(std::fabs(duty_sum - 1.0) <= 1e-12, "duty cycles must sum to 1");

    const ChannelConfig& ch = cfg.channel;
    require(ch.length_km >= 0.0, "channel.length_km must be non-negative");
    require(ch.loss_db_per_km >= 0.0, "channel.loss_db_per_km must be non-negative");

    const DetectorConfig& d = cfg.detector;
    require_prob(d.detector_efficiency, "detector.efficiency");
    require(d.receiver_loss_factor >= 1.0, "detector.receiver_loss_factor must be >= 1");
    require_prob(d.dark_prob_per_gate, "detector.dark_prob_per_gate");
    require_prob(d.afterpulse_prob, "detector.afterpulse_prob");
    require_prob(d.misalignment_error, "detector.misalignment_error");
    require(d.dead_time_gates >= 1, "detector.dead_time_gates must be >= 1");
    require(d.gate_width_s > 0.0, "detector.gate_width_s must be positive");
    require(d.jitter_fwhm_s >= 0.0, "detector.jitter_fwhm_s must be non-negative");

    require(cfg.duration_s > 0.0, "session.duration_s must be positive");
    require(cfg.k_sigma >= 0.0, "session.k_sigma must be non-negative");
    require(cfg.f_ec >= 1.0, "session.f_ec must be >= 1");

    require(d.gate_width_s <= 1.0 / s.clock_rate_hz,
            "detector.gate_width_s exceeds the clock period");
    return cfg;
}

void validate_tally(const SessionTally& tally) {
    for (auto c : all_classes()) {
        const ClassTally& t = tally.of(c);
        if (!(t.errors <= t.sifted && t.sifted <= t.clicks && t.clicks <= t.pulses_sent)) {
            std::ostringstream os;
            os << "tally ordering violated for class " << class_name(c);
            throw ValidityError(os.str());
        }
    }
}

}  // namespace qkd
