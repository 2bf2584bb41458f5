#pragma once

#include <vector>

#include "qkd/types.hpp"

namespace qkd {

/// Closed-form expected gains and signal QBER of the threshold-detector
/// channel model at one distance.
struct ExpectedStatistics {
    double gain_mu = 0.0;
    double gain_nu1 = 0.0;
    double gain_nu2 = 0.0;
    double qber_mu = 0.0;
    double y0_background = 0.0;
};

/// Overall transmission from source to detection:
///   (detector_efficiency / receiver_loss_factor) * 10^(-length*loss/10)
double system_efficiency(const ChannelConfig& channel, const DetectorConfig& det);

/// Expected statistics with eta = system_efficiency, Y0 = 2*dark_prob,
/// p_a = afterpulse_prob, e_mis = misalignment_error:
///   gain_x  = [1 - (1-Y0) e^(-eta x)] (1 + p_a)
///   qber_mu = [Y0/2 + e_mis (1 - e^(-eta mu))
///              + p_a/2 (1 - (1-Y0) e^(-eta mu))] / gain_mu
ExpectedStatistics expected_statistics(const SessionConfig& cfg);

/// Expected statistics as GainStatistics, with binomial deviations derived
/// from the per-class pulse counts of a cfg.duration_s session at
/// cfg.k_sigma standard deviations.
GainStatistics to_gain_statistics(const ExpectedStatistics& ex, const SessionConfig& cfg);

struct SweepPoint {
    double distance_km = 0.0;
    double raw_bps = 0.0;
    double secure_bps = 0.0;
    double qber = 0.0;
};

/// Modeled rates over [from_km, to_km] in steps of step_km: expected
/// statistics -> gain statistics -> worst-cased decoy analysis per distance.
std::vector<SweepPoint> rate_vs_distance(const SessionConfig& cfg, double from_km,
                                         double to_km, double step_km);

/// Single sweep point (shared scoring path for the sweep and the optimizer).
SweepPoint evaluate_at_distance(const SessionConfig& cfg, double distance_km);

struct CutoffResult {
    bool found = false;        // false: rate still positive at search_max_km
    double distance_km = 0.0;  // largest distance with positive rate (0.1 km)
    double search_max_km = 0.0;
};

/// Bisection for the largest distance with a positive secure rate, to within
/// 0.1 km. Throws ValidityError if the rate is non-positive at 0 km.
CutoffResult find_cutoff_distance(const SessionConfig& cfg, double search_max_km = 200.0);

}  // namespace qkd
