#include "qkd/gains.hpp"

#include <cmath>
#include <sstream>

#include "qkd/errors.hpp"
#include "qkd/validate.hpp"

namespace qkd {

namespace {

double binomial_dev(double p, double n, double k_sigma) {
    return k_sigma * std::sqrt(p * (1.0 - p) / n);
}

}  // namespace

GainStatistics tallies_to_gains(const SessionTally& tally, double k_sigma) {
    validate_tally(tally);
    for (auto c : all_classes()) {
        if (tally.of(c).pulses_sent == 0) {
            std::ostringstream os;
            os << "no pulses sent for class " << class_name(c);
            throw ValidityError(os.str());
        }
    }
    const ClassTally& sig = tally.of(IntensityClass::Signal);
    if (sig.sifted == 0) throw ValidityError("no sifted bits for class signal");

    GainStatistics g;
    auto gain = [&](IntensityClass c, double& q, double& dev) {
        const ClassTally& t = tally.of(c);
        double n = static_cast<double>(t.pulses_sent);
        q = static_cast<double>(t.clicks) / n;
        dev = binomial_dev(q, n, k_sigma);
    };
    gain(IntensityClass::Signal, g.q_mu, g.dev_q_mu);
    gain(IntensityClass::Decoy1, g.q_nu1, g.dev_q_nu1);
    gain(IntensityClass::Decoy2, g.q_nu2, g.dev_q_nu2);

    double sifted = static_cast<double>(sig.sifted);
    g.eps_mu = static_cast<double>(sig.errors) / sifted;
    g.dev_eps_mu = binomial_dev(g.eps_mu, sifted, k_sigma);
    return g;
}

}  // namespace qkd
