#pragma once

#include "qkd/types.hpp"

namespace qkd {

struct OptimizeResult {
    double mu = 0.0;
    double nu1 = 0.0;
    double nu2 = 0.0;
    double predicted_rate_bps = 0.0;
    // best coarse-grid point, before local refinement
    double grid_mu = 0.0;
    double grid_nu1 = 0.0;
    double grid_rate_bps = 0.0;
};

/// Searches (mu, nu1) for the best worst-cased secure rate at the configured
/// distance, with nu2 pinned by the extinction ratio. Coarse grid over
/// mu in [0.05, 1.0] step 0.05 and nu1 in [0.01, 0.5*mu] step 0.01,
/// feasibility-filtered by mu > nu1 + nu2, then coordinate-descent
/// refinement with step halving down to 1e-4. Ties break toward smaller mu.
/// Throws ValidityError when no grid point is feasible.
OptimizeResult optimize_intensities(const SessionConfig& cfg);

}  // namespace qkd
