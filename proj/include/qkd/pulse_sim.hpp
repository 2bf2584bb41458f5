#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qkd/types.hpp"

namespace qkd {

/// Alice's per-pulse choices.
struct PulseRecord {
    std::uint64_t gate_index = 0;
    IntensityClass cls = IntensityClass::Signal;
    std::uint8_t basis = 0;
    std::uint8_t bit = 0;
};

/// One registered click on Bob's side. Double clicks are squashed to a
/// single record whose detector_id carries the coin-resolved bit.
struct DetectionRecord {
    std::uint64_t gate_index = 0;
    std::uint8_t detector_id = 0;
    std::uint8_t bob_basis = 0;
    std::uint16_t arrival_offset_ps = 0;

    bool operator==(const DetectionRecord&) const = default;
};

struct SimulateOptions {
    bool record_detections = true;
    unsigned threads = 0;  // 0 = hardware concurrency
};

struct SimulationResult {
    SessionTally tally;
    std::vector<DetectionRecord> detections;
};

/// Pulse-level Monte Carlo of the transmitter-channel-receiver chain at the
/// gate level: duty-cycled intensity choice, Poisson photon statistics
/// thinned by the system efficiency, misalignment routing, per-detector dark
/// counts, dead time, geometrically decaying afterpulse trains and timing
/// jitter. Bit-reproducible for a fixed (cfg, seed, n_pulses) regardless of
/// thread count.
SimulationResult simulate_session(const SessionConfig& cfg, std::uint64_t seed,
                                  std::uint64_t n_pulses, const SimulateOptions& opt = {});

/// Alice's choices for one gate, identical to what simulate_session draws.
PulseRecord alice_pulse(const SourceConfig& source, std::uint64_t seed,
                        std::uint64_t gate_index);

struct ArrivalHistogram {
    double bin_width_s = 10e-12;
    double span_s = 0.0;          // histogram covers [0, span_s)
    double clock_period_s = 0.0;
    std::vector<std::uint64_t> bins;
    std::uint64_t recorded = 0;
    std::uint64_t dropped = 0;    // photons outside the active gate window

    double drop_fraction() const {
        std::uint64_t n = recorded + dropped;
        return n ? static_cast<double>(dropped) / static_cast<double>(n) : 0.0;
    }
};

/// Photon arrival times around gate centers spaced at the clock period,
/// jittered with the configured Gaussian FWHM, 10 ps bins. Photons falling
/// outside the active gate_width_s window are dropped and counted.
ArrivalHistogram simulate_arrival_histogram(const DetectorConfig& det, double clock_rate_hz,
                                            std::uint64_t n_photons, std::uint64_t seed);

/// Minimum gate separation between consecutive clicks on the same detector.
/// Empty when no detector saw two clicks.
std::optional<std::uint64_t> min_click_separation(std::span<const DetectionRecord> stream);

}  // namespace qkd
