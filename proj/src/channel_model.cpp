#include "qkd/channel_model.hpp"

#include <cmath>

#include "qkd/decoy.hpp"
#include "qkd/errors.hpp"

namespace qkd {

double system_efficiency(const ChannelConfig& channel, const DetectorConfig& det) {
    double fiber = std::pow(10.0, -channel.length_km * channel.loss_db_per_km / 10.0);
    return det.detector_efficiency / det.receiver_loss_factor * fiber;
}

ExpectedStatistics expected_statistics(const SessionConfig& cfg) {
    double eta = system_efficiency(cfg.channel, cfg.detector);
    double y0 = 2.0 * cfg.detector.dark_prob_per_gate;  // two detectors
    double pa = cfg.detector.afterpulse_prob;
    double e_mis = cfg.detector.misalignment_error;

    auto gain = [&](double flux) {
        return (1.0 - (1.0 - y0) * std::exp(-eta * flux)) * (1.0 + pa);
    };

    ExpectedStatistics ex;
    ex.y0_background = y0;
    ex.gain_mu = gain(cfg.source.mu);
    ex.gain_nu1 = gain(cfg.source.nu1);
    ex.gain_nu2 = gain(cfg.source.nu2);
    if (ex.gain_mu > 0.0) {
        double em = eta * cfg.source.mu;
        double noise = 0.5 * y0 + e_mis * (1.0 - std::exp(-em))
                       + 0.5 * pa * (1.0 - (1.0 - y0) * std::exp(-em));
        ex.qber_mu = noise / ex.gain_mu;
    }
    return ex;
}

GainStatistics to_gain_statistics(const ExpectedStatistics& ex, const SessionConfig& cfg) {
    GainStatistics g;
    g.q_mu = ex.gain_mu;
    g.q_nu1 = ex.gain_nu1;
    g.q_nu2 = ex.gain_nu2;
    g.eps_mu = ex.qber_mu;

    double pulses = cfg.source.clock_rate_hz * cfg.duration_s;
    auto dev = [&](double p, double n) {
        return n > 0.0 ? cfg.k_sigma * std::sqrt(p * (1.0 - p) / n) : 0.0;
    };
    double n_mu = pulses * cfg.source.duty_of(IntensityClass::Signal);
    g.dev_q_mu = dev(g.q_mu, n_mu);
    g.dev_q_nu1 = dev(g.q_nu1, pulses * cfg.source.duty_of(IntensityClass::Decoy1));
    g.dev_q_nu2 = dev(g.q_nu2, pulses * cfg.source.duty_of(IntensityClass::Decoy2));
    double sifted = 0.5 * n_mu * g.q_mu;
    g.dev_eps_mu = sifted > 0.0 ? dev(g.eps_mu, sifted) : 0.0;
    return g;
}

SweepPoint evaluate_at_distance(const SessionConfig& cfg, double distance_km) {
    SessionConfig at = cfg;
    at.channel.length_km = distance_km;
    ExpectedStatistics ex = expected_statistics(at);
    GainStatistics gains = to_gain_statistics(ex, at);
    SecurityBounds bounds = analyze(gains, at);
    return {distance_km, bounds.raw_rate_bps, bounds.secure_rate_bps, ex.qber_mu};
}

std::vector<SweepPoint> rate_vs_distance(const SessionConfig& cfg, double from_km,
                                         double to_km, double step_km) {
    if (!(from_km >= 0.0 && from_km <= to_km && step_km > 0.0))
        throw ValidityError("invalid sweep range");
    std::vector<SweepPoint> points;
    // half-step slack so the end point survives accumulation error
    for (double d = from_km; d <= to_km + 0.5 * step_km; d += step_km)
        points.push_back(evaluate_at_distance(cfg, std::min(d, to_km)));
    return points;
}

CutoffResult find_cutoff_distance(const SessionConfig& cfg, double search_max_km) {
    auto rate = [&](double km) { return evaluate_at_distance(cfg, km).secure_bps; };
    if (!(rate(0.0) > 0.0))
        throw ValidityError("secure rate non-positive at 0 km; no key to form");

    CutoffResult res;
    res.search_max_km = search_max_km;
    if (rate(search_max_km) > 0.0) {
        res.found = false;
        res.distance_km = search_max_km;
        return res;
    }
    double lo = 0.0, hi = search_max_km;
    while (hi - lo > 0.1) {
        double mid = 0.5 * (lo + hi);
        if (rate(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    res.found = true;
    res.distance_km = lo;
    return res;
}

}  // namespace qkd
