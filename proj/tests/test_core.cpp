#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "qkd/config_io.hpp"
#include "qkd/errors.hpp"
#include "qkd/gains.hpp"
#include "qkd/presets.hpp"
#include "qkd/validate.hpp"

using namespace qkd;

TEST_CASE("reference configuration is accepted") {
    CHECK_NOTHROW(validate_config(table1_config()));
}

TEST_CASE("intensity ordering violations are rejected with field names") {
    SessionConfig cfg = table1_config();
    cfg.source.mu = 0.1;
    cfg.source.nu1 = 0.06;
    cfg.source.nu2 = 0.05;
    CHECK_THROWS_WITH_AS(validate_config(cfg), "mu <= nu1 + nu2 violates decoy bound validity",
                         ConfigError);

    cfg = table1_config();
    cfg.source.nu1 = 0.6;  // nu1 > mu
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("duty cycles must sum to one") {
    SessionConfig cfg = table1_config();
    cfg.source.duty = {0.5, 0.5, 0.5};
    CHECK_THROWS_WITH_AS(validate_config(cfg), "duty cycles must sum to 1", ConfigError);
}

TEST_CASE("assorted invariant violations") {
    SessionConfig cfg = table1_config();
    cfg.detector.dead_time_gates = 0;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg = table1_config();
    cfg.detector.detector_efficiency = 1.2;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg = table1_config();
    cfg.f_ec = 0.9;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg = table1_config();
    cfg.detector.gate_width_s = 2.0 / cfg.source.clock_rate_hz;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg = table1_config();
    cfg.k_sigma = -1.0;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

namespace {

SessionTally sample_tally() {
    SessionTally t;
    t.duration_s = 2.3;
    t.of(IntensityClass::Signal) = {1906240000, 16546163, 8273081, 209309};
    t.of(IntensityClass::Decoy1) = {381248000, 751058, 375529, 30042};
    t.of(IntensityClass::Decoy2) = {95312000, 42604, 21302, 10651};
    return t;
}

}  // namespace

TEST_CASE("tallies_to_gains central values and deviations") {
    SessionTally t = sample_tally();
    GainStatistics g = tallies_to_gains(t, 10.0);
    CHECK(g.q_mu == doctest::Approx(16546163.0 / 1906240000.0).epsilon(1e-15));
    CHECK(g.eps_mu == doctest::Approx(209309.0 / 8273081.0).epsilon(1e-15));
    // binomial ten-sigma width at the reference session size
    CHECK(g.dev_q_mu == doctest::Approx(2.1246e-5).epsilon(2e-3));
}

TEST_CASE("degenerate binomials give zero deviation") {
    SessionTally t = sample_tally();
    for (auto c : all_classes()) {
        t.of(c).clicks = t.of(c).pulses_sent;
        t.of(c).sifted = t.of(c).clicks;
        t.of(c).errors = 0;
    }
    GainStatistics g = tallies_to_gains(t, 10.0);
    CHECK(g.q_mu == 1.0);
    CHECK(g.dev_q_mu == 0.0);
    CHECK(g.eps_mu == 0.0);
    CHECK(g.dev_eps_mu == 0.0);
}

TEST_CASE("empty classes are reported by name") {
    SessionTally t = sample_tally();
    t.of(IntensityClass::Decoy1) = {};
    CHECK_THROWS_WITH_AS(tallies_to_gains(t, 10.0), "no pulses sent for class decoy1",
                         ValidityError);

    t = sample_tally();
    t.of(IntensityClass::Signal).sifted = 0;
    t.of(IntensityClass::Signal).errors = 0;
    CHECK_THROWS_AS(tallies_to_gains(t, 10.0), ValidityError);
}

TEST_CASE("tally ordering violations carry the class name") {
    SessionTally t = sample_tally();
    t.of(IntensityClass::Decoy2).errors = t.of(IntensityClass::Decoy2).sifted + 1;
    CHECK_THROWS_WITH_AS(validate_tally(t), "tally ordering violated for class decoy2",
                         ValidityError);
}

TEST_CASE("scaling all counts preserves centrals and shrinks deviations by sqrt(c)") {
    std::mt19937 rng(1234);
    std::uniform_int_distribution<std::uint64_t> base(1000, 2000000);
    for (int trial = 0; trial < 50; ++trial) {
        SessionTally t;
        t.duration_s = 1.0;
        for (auto c : all_classes()) {
            ClassTally& ct = t.of(c);
            ct.pulses_sent = base(rng);
            ct.clicks = ct.pulses_sent / 7;
            ct.sifted = ct.clicks / 2;
            ct.errors = ct.sifted / 31;
        }
        constexpr std::uint64_t kScale = 16;
        SessionTally big = t;
        for (auto c : all_classes()) {
            ClassTally& ct = big.of(c);
            ct.pulses_sent *= kScale;
            ct.clicks *= kScale;
            ct.sifted *= kScale;
            ct.errors *= kScale;
        }
        GainStatistics a = tallies_to_gains(t, 10.0);
        GainStatistics b = tallies_to_gains(big, 10.0);
        CHECK(a.q_mu == doctest::Approx(b.q_mu).epsilon(1e-14));
        CHECK(a.eps_mu == doctest::Approx(b.eps_mu).epsilon(1e-14));
        CHECK(b.dev_q_mu == doctest::Approx(a.dev_q_mu / 4.0).epsilon(1e-12));
        CHECK(b.dev_eps_mu == doctest::Approx(a.dev_eps_mu / 4.0).epsilon(1e-12));
    }
}

TEST_CASE("config files round-trip through print and parse") {
    SessionConfig cfg = table1_config();
    std::ostringstream os;
    print_config(os, cfg);
    std::istringstream is(os.str());
    SessionConfig back = parse_config(is);
    CHECK(back.source.mu == cfg.source.mu);
    CHECK(back.source.duty == cfg.source.duty);
    CHECK(back.detector.dead_time_gates == cfg.detector.dead_time_gates);
    CHECK(back.k_sigma == cfg.k_sigma);
}

TEST_CASE("config parser rejects malformed input") {
    auto parse = [](const std::string& text) {
        std::istringstream is(text);
        return parse_config(is);
    };
    CHECK_THROWS_AS(parse("source.mu = 0.55"), ConfigError);  // missing keys
    std::ostringstream os;
    print_config(os, table1_config());
    CHECK_THROWS_AS(parse(os.str() + "bogus.key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse(os.str() + "source.mu = 0.5\n"), ConfigError);  // duplicate
    CHECK_THROWS_AS(parse("source.mu zzz\n"), ConfigError);
    std::string bad = os.str();
    bad.replace(bad.find("0.55"), 4, "oops");
    CHECK_THROWS_AS(parse(bad), ConfigError);
}

TEST_CASE("extinction ratio defaults to the configured mu/nu2 ratio") {
    SessionConfig cfg = table1_config();
    CHECK(cfg.source.effective_extinction_db()
          == doctest::Approx(10.0 * std::log10(0.55 / 7.5e-4)).epsilon(1e-12));
    cfg.source.extinction_db = 29.0;
    CHECK(cfg.source.effective_extinction_db() == 29.0);
}
