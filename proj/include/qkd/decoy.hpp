#pragma once

#include "qkd/types.hpp"

namespace qkd {

/// Binary Shannon entropy in bits, with the convention 0*log2(0) = 0.
/// Throws std::domain_error for x outside [0,1].
double binary_entropy(double x);

/// Lower bound on the count probability of an empty pulse from the two
/// decoy gains:
///   Y0_L = max(0, (nu1*Q_nu2*e^nu2 - nu2*Q_nu1*e^nu1) / (nu1 - nu2))
/// Requires nu1 > nu2 >= 0.
double y0_lower(double nu1, double nu2, double q_nu1, double q_nu2);

/// Lower bound on the single-photon transmittance:
///   Q1_L = max(0, mu^2 e^-mu / (mu*nu1 - mu*nu2 - nu1^2 + nu2^2) *
///          [Q_nu1 e^nu1 - Q_nu2 e^nu2 - (nu1^2-nu2^2)/mu^2 (Q_mu e^mu - Y0_L)])
/// Requires mu > nu1 + nu2 and nu1 > nu2 >= 0; throws ValidityError naming
/// the failed inequality.
double q1_lower(double mu, double nu1, double nu2, double q_mu, double q_nu1,
                double q_nu2, double y0_l);

/// Upper bound on the single-photon QBER, clamped to [0, 1/2]:
///   eps1_U = (eps_mu*Q_mu*e^mu - Y0_L/2) / (Q1_L * e^mu)
/// Throws ValidityError when q1_l is zero (no single-photon signal).
double eps1_upper(double mu, double eps_mu, double q_mu, double y0_l, double q1_l);

struct RatePair {
    double secure_bps = 0.0;
    double raw_bps = 0.0;
};

/// Secure key rate in bits/second, clamped at zero:
///   R = max(0, 1/2 * (N_mu/t) * [-Q_mu f_EC H2(eps_mu) + Q1_L (1 - H2(eps1_U))])
/// signal_pulse_rate_hz is N_mu/t; the cfg overload derives it as
/// clock_rate * duty_signal. Also reports the raw sifted rate Q_mu/2 * N_mu/t.
RatePair secure_rate(double q1_l, double eps1_u, const GainStatistics& gains,
                     const SessionConfig& cfg, double signal_pulse_rate_hz);
RatePair secure_rate(double q1_l, double eps1_u, const GainStatistics& gains,
                     const SessionConfig& cfg);

/// Full worst-cased pipeline. Evaluates Y0_L -> Q1_L -> eps1_U -> R at all
/// 16 sign corners of (q_mu, q_nu1, q_nu2, eps_mu) +- their deviations, each
/// corner clamped to [0,1], and returns the corner minimizing the secure
/// rate. The raw rate is reported from the central q_mu. If every corner
/// gives zero rate, the returned bounds carry secure_rate_bps = 0.
SecurityBounds analyze(const GainStatistics& gains, const SessionConfig& cfg,
                       double signal_pulse_rate_hz);
SecurityBounds analyze(const GainStatistics& gains, const SessionConfig& cfg);

/// N_mu/t as derived from the configuration.
double signal_pulse_rate(const SessionConfig& cfg);

}  // namespace qkd
