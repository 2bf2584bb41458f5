#pragma once

#include "qkd/types.hpp"

namespace qkd {

/// The 20.06 km reference operating point (the CLI's --from-table1 preset):
/// mu 0.55, nu1 0.10, nu2 7.5e-4, duty 0.80/0.16/0.04, 2.3 s session,
/// f_EC 1.10, ten-sigma worst-casing.
SessionConfig table1_config();

/// The measured gains and signal QBER of the same session, with their
/// ten-sigma deviations.
GainStatistics table1_gains();

}  // namespace qkd
