#include "qkd/optimizer.hpp"

#include <cmath>

#include "qkd/channel_model.hpp"
#include "qkd/errors.hpp"

namespace qkd {

namespace {

constexpr double kMuLo = 0.05, kMuHi = 1.0, kMuStep = 0.05;
constexpr double kNu1Lo = 0.01, kNu1Step = 0.01;
constexpr double kRefineFloor = 1e-4;

struct Objective {
    SessionConfig base;
    double extinction_factor;  // nu2 = mu * extinction_factor

    /// Worst-cased secure rate of the modeled session; -1 when infeasible.
    double operator()(double mu, double nu1) const {
        double nu2 = mu * extinction_factor;
        if (!(mu > nu1 + nu2 && nu1 > nu2 && nu2 >= 0.0)) return -1.0;
        SessionConfig cfg = base;
        cfg.source.mu = mu;
        cfg.source.nu1 = nu1;
        cfg.source.nu2 = nu2;
        return evaluate_at_distance(cfg, cfg.channel.length_km).secure_bps;
    }
};

}  // namespace

OptimizeResult optimize_intensities(const SessionConfig& cfg) {
    Objective score{cfg, std::pow(10.0, -cfg.source.effective_extinction_db() / 10.0)};

    bool found = false;
    OptimizeResult best;
    for (int i = 0;; ++i) {
        double mu = kMuLo + i * kMuStep;
        if (mu > kMuHi + 1e-12) break;
        for (int j = 0;; ++j) {
            double nu1 = kNu1Lo + j * kNu1Step;
            if (nu1 > 0.5 * mu + 1e-12) break;
            double v = score(mu, nu1);
            if (v < 0.0) continue;
            if (!found || v > best.grid_rate_bps) {  // ascending mu scan: ties keep smaller mu
                best.grid_mu = mu;
                best.grid_nu1 = nu1;
                best.grid_rate_bps = v;
                found = true;
            }
        }
    }
    if (!found) throw ValidityError("no feasible (mu, nu1) grid point");

    double mu = best.grid_mu, nu1 = best.grid_nu1, cur = best.grid_rate_bps;
    double step_mu = kMuStep, step_nu1 = kNu1Step;
    while (step_mu > kRefineFloor || step_nu1 > kRefineFloor) {
        bool improved = false;
        const double moves[4][2] = {
            {-step_mu, 0.0}, {step_mu, 0.0}, {0.0, -step_nu1}, {0.0, step_nu1}};
        for (const auto& mv : moves) {
            double v = score(mu + mv[0], nu1 + mv[1]);
            if (v > cur) {
                mu += mv[0];
                nu1 += mv[1];
                cur = v;
                improved = true;
                break;
            }
        }
        if (!improved) {
            step_mu *= 0.5;
            step_nu1 *= 0.5;
        }
    }

    best.mu = mu;
    best.nu1 = nu1;
    best.nu2 = mu * score.extinction_factor;
    best.predicted_rate_bps = cur;
    return best;
}

}  // namespace qkd
