#include "qkd/decoy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qkd/errors.hpp"

namespace qkd {

double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        std::ostringstream os;
        os << "binary_entropy argument " << x << " outside [0,1]";
        throw std::domain_error(os.str());
    }
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double y0_lower(double nu1, double nu2, double q_nu1, double q_nu2) {
    if (!(nu1 > nu2 && nu2 >= 0.0))
        throw ValidityError("y0_lower requires nu1 > nu2 >= 0");
    double v = (nu1 * q_nu2 * std::exp(nu2) - nu2 * q_nu1 * std::exp(nu1)) / (nu1 - nu2);
    return std::max(0.0, v);
}

double q1_lower(double mu, double nu1, double nu2, double q_mu, double q_nu1,
                double q_nu2, double y0_l) {
    if (!(nu1 > nu2 && nu2 >= 0.0))
        throw ValidityError("q1_lower requires nu1 > nu2 >= 0");
    if (!(mu > nu1 + nu2))
        throw ValidityError("q1_lower requires mu > nu1 + nu2");
    double denom = mu * nu1 - mu * nu2 - nu1 * nu1 + nu2 * nu2;
    double coef = mu * mu * std::exp(-mu) / denom;
    double bracket = q_nu1 * std::exp(nu1) - q_nu2 * std::exp(nu2)
                     - (nu1 * nu1 - nu2 * nu2) / (mu * mu) * (q_mu * std::exp(mu) - y0_l);
    return std::max(0.0, coef * bracket);
}

double eps1_upper(double mu, double eps_mu, double q_mu, double y0_l, double q1_l) {
    if (!(q1_l > 0.0))
        throw ValidityError("eps1_upper requires a positive single-photon bound");
    double v = (eps_mu * q_mu * std::exp(mu) - 0.5 * y0_l) / (q1_l * std::exp(mu));
    return std::clamp(v, 0.0, 0.5);
}

double signal_pulse_rate(const SessionConfig& cfg) {
    return cfg.source.clock_rate_hz * cfg.source.duty_of(IntensityClass::Signal);
}

RatePair secure_rate(double q1_l, double eps1_u, const GainStatistics& gains,
                     const SessionConfig& cfg, double signal_pulse_rate_hz) {
    double cost = gains.q_mu * cfg.f_ec * binary_entropy(gains.eps_mu);
    double yield = q1_l * (1.0 - binary_entropy(eps1_u));
    RatePair r;
    r.secure_bps = std::max(0.0, 0.5 * signal_pulse_rate_hz * (yield - cost));
    r.raw_bps = 0.5 * signal_pulse_rate_hz * gains.q_mu;
    return r;
}

RatePair secure_rate(double q1_l, double eps1_u, const GainStatistics& gains,
                     const SessionConfig& cfg) {
    return secure_rate(q1_l, eps1_u, gains, cfg, signal_pulse_rate(cfg));
}

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

struct CornerResult {
    SecurityBounds bounds;
    bool rate_positive = false;
};

CornerResult evaluate_corner(double q_mu, double q_nu1, double q_nu2, double eps_mu,
                             const GainStatistics& central, const SessionConfig& cfg,
                             double spr) {
    const SourceConfig& s = cfg.source;
    CornerResult out;
    out.bounds.y0_lower = y0_lower(s.nu1, s.nu2, q_nu1, q_nu2);
    out.bounds.q1_lower = q1_lower(s.mu, s.nu1, s.nu2, q_mu, q_nu1, q_nu2, out.bounds.y0_lower);

    GainStatistics corner = central;
    corner.q_mu = q_mu;
    corner.eps_mu = eps_mu;
    if (out.bounds.q1_lower > 0.0) {
        out.bounds.eps1_upper = eps1_upper(s.mu, eps_mu, q_mu, out.bounds.y0_lower,
                                           out.bounds.q1_lower);
        RatePair r = secure_rate(out.bounds.q1_lower, out.bounds.eps1_upper, corner, cfg, spr);
        out.bounds.secure_rate_bps = r.secure_bps;
        out.rate_positive = r.secure_bps > 0.0;
    } else {
        // error-correction cost exceeds the single-photon yield
        out.bounds.eps1_upper = 0.0;
        out.bounds.secure_rate_bps = 0.0;
    }
    return out;
}

}  // namespace

SecurityBounds analyze(const GainStatistics& gains, const SessionConfig& cfg,
                       double signal_pulse_rate_hz) {
    bool have = false;
    SecurityBounds best{};
    for (int mask = 0; mask < 16; ++mask) {
        double sm = (mask & 1) ? 1.0 : -1.0;
        double s1 = (mask & 2) ? 1.0 : -1.0;
        double s2 = (mask & 4) ? 1.0 : -1.0;
        double se = (mask & 8) ? 1.0 : -1.0;
        CornerResult c = evaluate_corner(clamp01(gains.q_mu + sm * gains.dev_q_mu),
                                         clamp01(gains.q_nu1 + s1 * gains.dev_q_nu1),
                                         clamp01(gains.q_nu2 + s2 * gains.dev_q_nu2),
                                         clamp01(gains.eps_mu + se * gains.dev_eps_mu),
                                         gains, cfg, signal_pulse_rate_hz);
        if (!have || c.bounds.secure_rate_bps < best.secure_rate_bps) {
            best = c.bounds;
            have = true;
        }
    }
    best.raw_rate_bps = 0.5 * signal_pulse_rate_hz * gains.q_mu;
    return best;
}

SecurityBounds analyze(const GainStatistics& gains, const SessionConfig& cfg) {
    return analyze(gains, cfg, signal_pulse_rate(cfg));
}

}  // namespace qkd
