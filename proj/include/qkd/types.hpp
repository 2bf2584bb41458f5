#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace qkd {

/// Intensity class of an emitted pulse. Exactly three classes exist and
/// every pulse belongs to exactly one of them.
enum class IntensityClass : std::uint8_t { Signal = 0, Decoy1 = 1, Decoy2 = 2 };

inline constexpr std::size_t kClassCount = 3;

inline constexpr std::array<IntensityClass, kClassCount> all_classes() {
    return {IntensityClass::Signal, IntensityClass::Decoy1, IntensityClass::Decoy2};
}

const char* class_name(IntensityClass c);

/// Pulsed source: clock rate, the three mean photon numbers and their duty
/// cycles. extinction_db pins the nu2 floor relative to mu for the intensity
/// optimizer; when unset it is derived from the configured mu/nu2 ratio.
struct SourceConfig {
    double clock_rate_hz = 1.036e9;
    double mu = 0.55;
    double nu1 = 0.10;
    double nu2 = 7.5e-4;
    std::array<double, kClassCount> duty{0.80, 0.16, 0.04};
    std::optional<double> extinction_db;

    double flux(IntensityClass c) const {
        switch (c) {
            case IntensityClass::Signal: return mu;
            case IntensityClass::Decoy1: return nu1;
            default: return nu2;
        }
    }
    double duty_of(IntensityClass c) const { return duty[static_cast<std::size_t>(c)]; }
    double effective_extinction_db() const;
};

struct ChannelConfig {
    double length_km = 20.06;
    double loss_db_per_km = 0.20;
};

/// Gated receiver parameters. receiver_loss_factor converts detector
/// efficiency into overall receiver efficiency (2.0 turns 10% into 5%).
struct DetectorConfig {
    double detector_efficiency = 0.10;
    double receiver_loss_factor = 2.0;
    double dark_prob_per_gate = 6.8e-6;
    double afterpulse_prob = 0.047;
    std::uint32_t dead_time_gates = 2;
    double gate_width_s = 0.48e-9;
    double jitter_fwhm_s = 50e-12;
    double misalignment_error = 0.003;
};

struct SessionConfig {
    SourceConfig source;
    ChannelConfig channel;
    DetectorConfig detector;
    double duration_s = 2.3;
    double k_sigma = 10.0;
    double f_ec = 1.10;
};

/// Raw per-class bookkeeping of one session.
struct ClassTally {
    std::uint64_t pulses_sent = 0;
    std::uint64_t clicks = 0;
    std::uint64_t sifted = 0;
    std::uint64_t errors = 0;

    bool operator==(const ClassTally&) const = default;
};

struct SessionTally {
    std::array<ClassTally, kClassCount> per_class{};
    double duration_s = 0.0;

    ClassTally& of(IntensityClass c) { return per_class[static_cast<std::size_t>(c)]; }
    const ClassTally& of(IntensityClass c) const { return per_class[static_cast<std::size_t>(c)]; }
    bool operator==(const SessionTally&) const = default;
};

/// Measured gains and signal QBER with their absolute k-sigma deviations.
struct GainStatistics {
    double q_mu = 0.0;
    double q_nu1 = 0.0;
    double q_nu2 = 0.0;
    double eps_mu = 0.0;
    double dev_q_mu = 0.0;
    double dev_q_nu1 = 0.0;
    double dev_q_nu2 = 0.0;
    double dev_eps_mu = 0.0;
};

/// Output of the decoy security analysis.
struct SecurityBounds {
    double y0_lower = 0.0;
    double q1_lower = 0.0;
    double eps1_upper = 0.0;
    double secure_rate_bps = 0.0;
    double raw_rate_bps = 0.0;
};

}  // namespace qkd
