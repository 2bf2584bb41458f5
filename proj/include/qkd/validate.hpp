#pragma once

#include "qkd/types.hpp"

namespace qkd {

/// Checks every type invariant plus the cross-field condition
/// gate_width_s <= clock period. Returns the config unchanged on success,
/// throws ConfigError naming the first violated invariant otherwise.
const SessionConfig& validate_config(const SessionConfig& cfg);

/// Ordering invariants of a tally: errors <= sifted <= clicks <= pulses_sent
/// per class. Throws ValidityError naming the offending class.
void validate_tally(const SessionTally& tally);

}  // namespace qkd
