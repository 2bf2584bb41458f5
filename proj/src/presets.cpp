#include "qkd/presets.hpp"

namespace qkd {

SessionConfig table1_config() {
    SessionConfig cfg;  // field defaults are the reference operating point
    return cfg;
}

GainStatistics table1_gains() {
    GainStatistics g;
    g.q_mu = 8.680e-3;
    g.q_nu1 = 1.970e-3;
    g.q_nu2 = 4.470e-4;
    g.eps_mu = 2.530e-2;
    g.dev_q_mu = 0.025e-3;
    g.dev_q_nu1 = 0.025e-3;
    g.dev_q_nu2 = 0.225e-4;
    g.dev_eps_mu = 0.009e-2;
    return g;
}

}  // namespace qkd
