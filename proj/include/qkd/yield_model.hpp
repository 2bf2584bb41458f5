#pragma once

#include <cstddef>
#include <vector>

namespace qkd {

/// Ground-truth photon-number yields and error rates, used as the exact
/// Poisson-mixture oracle when property-testing the decoy bounds.
/// yields[n] is the detection probability of an n-photon pulse,
/// error_rates[n] the QBER of detected n-photon pulses (e0 = 1/2).
struct YieldModel {
    std::vector<double> yields;
    std::vector<double> error_rates;

    std::size_t nmax() const { return yields.empty() ? 0 : yields.size() - 1; }
};

struct ExactGains {
    double gain = 0.0;
    double error_weighted_gain = 0.0;
};

/// Exact gain of an attenuated-laser pulse of the given mean photon number:
///   gain = sum_n e^-flux flux^n / n! * Y_n
/// and the same sum weighted by e_n. The model must extend far enough that
/// the Poisson tail beyond nmax is below 1e-12; otherwise a ValidityError
/// (truncation failure) is thrown.
ExactGains exact_gains(const YieldModel& model, double flux);

/// Smallest truncation order whose Poisson tail is below 1e-12.
std::size_t required_truncation_order(double flux);

}  // namespace qkd
