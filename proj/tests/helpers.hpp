#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "qkd/channel_model.hpp"
#include "qkd/pulse_sim.hpp"
#include "qkd/types.hpp"
#include "qkd/yield_model.hpp"

namespace testutil {

inline bool near_rel(double actual, double expected, double rel) {
    return std::fabs(actual - expected) <= rel * std::fabs(expected);
}

/// z-score of an observed count against a binomial(n, p) expectation.
inline double binomial_z(double observed, double n, double p) {
    double sigma = std::sqrt(p * (1.0 - p) / n);
    return (observed / n - p) / sigma;
}

/// Random yield model: Y_n uniform in [0,1], e_n uniform in [0,1/2],
/// e_0 = 1/2, nmax terms.
inline qkd::YieldModel random_yield_model(std::mt19937& rng, std::size_t nmax = 40) {
    std::uniform_real_distribution<double> uy(0.0, 1.0);
    std::uniform_real_distribution<double> ue(0.0, 0.5);
    qkd::YieldModel m;
    m.yields.resize(nmax + 1);
    m.error_rates.resize(nmax + 1);
    for (std::size_t n = 0; n <= nmax; ++n) {
        m.yields[n] = uy(rng);
        m.error_rates[n] = ue(rng);
    }
    m.error_rates[0] = 0.5;
    return m;
}

/// Random valid intensity triple with mu <= 1, mu > nu1 + nu2, nu1 > nu2 >= 0.
inline void random_intensities(std::mt19937& rng, double& mu, double& nu1, double& nu2) {
    std::uniform_real_distribution<double> umu(0.2, 1.0);
    mu = umu(rng);
    std::uniform_real_distribution<double> unu1(0.02, 0.45 * mu);
    nu1 = unu1(rng);
    std::uniform_real_distribution<double> unu2(0.0, 0.8 * nu1);
    nu2 = unu2(rng);
    if (!(mu > nu1 + nu2)) nu2 = 0.5 * (mu - nu1);  // rare; keep feasible
}

/// Gaussian FWHM estimate from arrival phases relative to the nearest gate
/// center (moment method on the period-folded distribution).
inline double folded_fwhm_s(const qkd::ArrivalHistogram& h) {
    double period = h.clock_period_s;
    double total = 0.0, mean = 0.0;
    std::vector<double> offset(h.bins.size());
    for (std::size_t i = 0; i < h.bins.size(); ++i) {
        double t = (static_cast<double>(i) + 0.5) * h.bin_width_s;
        offset[i] = std::fmod(t, period) - 0.5 * period;  // distance from gate center
        double w = static_cast<double>(h.bins[i]);
        total += w;
        mean += w * offset[i];
    }
    mean /= total;
    double var = 0.0;
    for (std::size_t i = 0; i < h.bins.size(); ++i) {
        double w = static_cast<double>(h.bins[i]);
        var += w * (offset[i] - mean) * (offset[i] - mean);
    }
    var /= total;
    return 2.354820045030949 * std::sqrt(var);
}

/// Fraction of recorded events farther than a quarter period from the
/// nearest gate center (the adjacent-peak overlap metric).
inline double peak_overlap_fraction(const qkd::ArrivalHistogram& h) {
    if (h.recorded == 0) return 0.0;
    double period = h.clock_period_s;
    std::uint64_t stray = 0;
    for (std::size_t i = 0; i < h.bins.size(); ++i) {
        double t = (static_cast<double>(i) + 0.5) * h.bin_width_s;
        double phase = std::fmod(t, period);
        double dist = std::fabs(phase - 0.5 * period);
        if (dist > 0.25 * period) stray += h.bins[i];
    }
    return static_cast<double>(stray) / static_cast<double>(h.recorded);
}

/// Events within one bin of the midpoint between adjacent gate centers.
inline std::uint64_t midpoint_density(const qkd::ArrivalHistogram& h) {
    double period = h.clock_period_s;
    std::uint64_t count = 0;
    for (std::size_t i = 0; i < h.bins.size(); ++i) {
        double t = (static_cast<double>(i) + 0.5) * h.bin_width_s;
        double from_center = std::fabs(std::fmod(t, period) - 0.5 * period);
        if (from_center > 0.5 * period - h.bin_width_s) count += h.bins[i];
    }
    return count;
}

}  // namespace testutil
