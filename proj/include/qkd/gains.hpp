#pragma once

#include "qkd/types.hpp"

namespace qkd {

/// Converts raw counts to gains and signal QBER with binomial k-sigma
/// deviations:
///   q_x = clicks_x / pulses_sent_x          dev = k*sqrt(q(1-q)/pulses_sent)
///   eps_mu = errors_signal / sifted_signal  dev = k*sqrt(e(1-e)/sifted)
/// Requires pulses_sent > 0 for every class and sifted signal bits > 0;
/// throws ValidityError naming the empty class otherwise.
GainStatistics tallies_to_gains(const SessionTally& tally, double k_sigma);

}  // namespace qkd
