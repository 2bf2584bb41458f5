#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "qkd/types.hpp"

namespace qkd {

/// A parsed gains/tally results file. Lines are `name = value` or
/// `name,value`; # comments allowed. Either the gain keys (q_mu, q_nu1,
/// q_nu2, eps_mu and optional dev_*) or the tally count keys
/// (pulses_sent_<class>, clicks_<class>, sifted_<class>, errors_<class>,
/// duration_s) must be present.
struct ResultsFile {
    std::optional<GainStatistics> gains;
    std::optional<SessionTally> tally;
    /// N_mu/t override accompanying a gains block (signal_pulses, duration_s).
    std::optional<double> signal_pulses;
    std::optional<double> duration_s;
};

ResultsFile parse_results(std::istream& in);
ResultsFile load_results_file(const std::string& path);

/// Tally in `name,value` form (what `simulate --out` and `sift --out` write).
void print_tally(std::ostream& out, const SessionTally& tally);

}  // namespace qkd
