#include "qkd/yield_model.hpp"

#include <cmath>
#include <sstream>

#include "qkd/errors.hpp"

namespace qkd {

namespace {
constexpr double kTailBound = 1e-12;
}

std::size_t required_truncation_order(double flux) {
    if (flux <= 0.0) return 0;
    // walk the Poisson pmf until the remaining tail drops below the bound
    double term = std::exp(-flux);
    double cum = term;
    std::size_t n = 0;
    while (1.0 - cum >= kTailBound) {
        ++n;
        term *= flux / static_cast<double>(n);
        cum += term;
        if (n > 4096) break;  // unreachable for sane fluxes
    }
    return n;
}

ExactGains exact_gains(const YieldModel& model, double flux) {
    if (flux < 0.0) throw ValidityError("exact_gains requires flux >= 0");
    if (model.yields.size() != model.error_rates.size() || model.yields.empty())
        throw ValidityError("yield model needs matching yields/error_rates");
    std::size_t need = required_truncation_order(flux);
    if (model.nmax() < need) {
        std::ostringstream os;
        os << "yield model truncated at n=" << model.nmax() << " but flux " << flux
           << " needs n=" << need << " for a 1e-12 Poisson tail";
        throw ValidityError(os.str());
    }
    ExactGains out;
    double weight = std::exp(-flux);
    for (std::size_t n = 0; n < model.yields.size(); ++n) {
        if (n > 0) weight *= flux / static_cast<double>(n);
        out.gain += weight * model.yields[n];
        out.error_weighted_gain += weight * model.yields[n] * model.error_rates[n];
    }
    return out;
}

}  // namespace qkd
