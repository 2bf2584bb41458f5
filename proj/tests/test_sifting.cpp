#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <future>
#include <thread>

#include "helpers.hpp"
#include "qkd/errors.hpp"
#include "qkd/presets.hpp"
#include "qkd/pulse_sim.hpp"
#include "qkd/sifting.hpp"

using namespace qkd;
using namespace qkd::sift;

namespace {

struct LoopbackResult {
    SessionTally alice;
    SessionTally bob;
};

LoopbackResult run_loopback(const SessionConfig& cfg, const AlicePulseSource& source,
                            std::span<const DetectionRecord> stream,
                            const SiftOptions& opt = {}) {
    auto [alice_end, bob_end] = MemoryDuplex::make_pair();
    auto alice = std::async(std::launch::async, [&, t = alice_end.get()] {
        return run_alice_endpoint(source, *t, cfg, opt);
    });
    auto bob = std::async(std::launch::async, [&, t = bob_end.get()] {
        return run_bob_endpoint(stream, *t, cfg, opt);
    });
    return {alice.get(), bob.get()};
}

// minimal scripted peer for failure-path tests
void send_raw(Transport& t, std::uint8_t type, const std::vector<std::uint8_t>& payload) {
    std::uint8_t header[5];
    header[0] = type;
    std::uint32_t len = static_cast<std::uint32_t>(payload.size());
    for (int i = 0; i < 4; ++i) header[1 + i] = static_cast<std::uint8_t>(len >> (8 * i));
    t.write_all(header, sizeof(header));
    if (!payload.empty()) t.write_all(payload.data(), payload.size());
}

std::vector<std::uint8_t> valid_hello(const SessionConfig& cfg) {
    std::vector<std::uint8_t> p;
    p.push_back(0x01);
    const double vals[8] = {cfg.source.clock_rate_hz, cfg.source.mu,      cfg.source.nu1,
                            cfg.source.nu2,           cfg.source.duty[0], cfg.source.duty[1],
                            cfg.source.duty[2],       cfg.source.effective_extinction_db()};
    for (double v : vals) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(v));
        for (int i = 0; i < 8; ++i) p.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
    return p;
}

}  // namespace

TEST_CASE("loopback session agrees with the simulator ground truth") {
    SessionConfig cfg = table1_config();
    constexpr std::uint64_t kPulses = 1'000'000;
    constexpr std::uint64_t kSeed = 77;
    SimulationResult sim = simulate_session(cfg, kSeed, kPulses);
    SimulatedPulseSource source(cfg.source, kSeed, kPulses);

    LoopbackResult r = run_loopback(cfg, source, sim.detections);
    CHECK(r.alice == r.bob);
    CHECK(r.alice == sim.tally);  // full disclosure reproduces every error count

    const ClassTally& sig = r.bob.of(IntensityClass::Signal);
    const ClassTally& truth = sim.tally.of(IntensityClass::Signal);
    CHECK(sig.errors == truth.errors);
    CHECK(sig.sifted == truth.sifted);

    std::uint64_t clicks = 0, sifted = 0;
    for (auto c : all_classes()) {
        clicks += r.bob.of(c).clicks;
        sifted += r.bob.of(c).sifted;
    }
    double z = testutil::binomial_z(static_cast<double>(sifted),
                                    static_cast<double>(clicks), 0.5);
    CHECK(std::fabs(z) < 5.0);
}

TEST_CASE("empty detection stream ends cleanly with a zero tally") {
    SessionConfig cfg = table1_config();
    SimulatedPulseSource source(cfg.source, 5, 1000);
    LoopbackResult r = run_loopback(cfg, source, {});
    CHECK(r.alice == r.bob);
    for (auto c : all_classes()) {
        CHECK(r.bob.of(c).clicks == 0);
        CHECK(r.bob.of(c).sifted == 0);
        CHECK(r.bob.of(c).errors == 0);
    }
    CHECK(r.bob.of(IntensityClass::Signal).pulses_sent > 0);
}

TEST_CASE("partial signal disclosure discloses exactly the sampled subset") {
    SessionConfig cfg = table1_config();
    constexpr std::uint64_t kPulses = 400'000;
    SimulationResult sim = simulate_session(cfg, 99, kPulses);
    SimulatedPulseSource source(cfg.source, 99, kPulses);

    SiftOptions opt;
    opt.signal_disclose_fraction = 0.25;
    LoopbackResult r = run_loopback(cfg, source, sim.detections, opt);
    CHECK(r.alice == r.bob);

    const ClassTally& sig = r.bob.of(IntensityClass::Signal);
    const ClassTally& truth = sim.tally.of(IntensityClass::Signal);
    CHECK(sig.sifted == truth.sifted);  // sifting is unaffected by sampling
    CHECK(sig.errors <= truth.errors);
    // a quarter of the sifted bits carries roughly a quarter of the errors
    CHECK(sig.errors > truth.errors / 8);
    // decoy classes stay fully disclosed
    CHECK(r.bob.of(IntensityClass::Decoy1).errors
          == sim.tally.of(IntensityClass::Decoy1).errors);
    CHECK(r.bob.of(IntensityClass::Decoy2).errors
          == sim.tally.of(IntensityClass::Decoy2).errors);
}

TEST_CASE("version mismatch is rejected at hello") {
    SessionConfig cfg = table1_config();
    auto [test_end, bob_end] = MemoryDuplex::make_pair();
    auto bob = std::async(std::launch::async, [&, t = bob_end.get()] {
        std::vector<DetectionRecord> empty;
        return run_bob_endpoint(empty, *t, cfg);
    });
    auto hello = valid_hello(cfg);
    hello[0] = 0x02;  // wrong version byte
    send_raw(*test_end, 0x01, hello);
    CHECK_THROWS_AS(bob.get(), ProtocolError);
}

TEST_CASE("session parameter mismatch is rejected at hello") {
    SessionConfig cfg = table1_config();
    SessionConfig other = cfg;
    other.source.mu = 0.60;
    auto [test_end, bob_end] = MemoryDuplex::make_pair();
    auto bob = std::async(std::launch::async, [&, t = bob_end.get()] {
        std::vector<DetectionRecord> empty;
        return run_bob_endpoint(empty, *t, cfg);
    });
    send_raw(*test_end, 0x01, valid_hello(other));
    CHECK_THROWS_AS(bob.get(), ProtocolError);
}

TEST_CASE("zero decoy duty is rejected at hello") {
    SessionConfig cfg = table1_config();
    cfg.source.duty = {0.8, 0.2, 0.0};
    SimulatedPulseSource source(cfg.source, 1, 1000);
    auto [alice_end, bob_end] = MemoryDuplex::make_pair();
    auto alice = std::async(std::launch::async, [&, t = alice_end.get()] {
        return run_alice_endpoint(source, *t, cfg);
    });
    auto bob = std::async(std::launch::async, [&, t = bob_end.get()] {
        std::vector<DetectionRecord> empty;
        return run_bob_endpoint(empty, *t, cfg);
    });
    CHECK_THROWS_AS(alice.get(), ProtocolError);
    CHECK_THROWS_AS(bob.get(), ProtocolError);
}

TEST_CASE("corrupted length field aborts the session") {
    SessionConfig cfg = table1_config();
    auto [test_end, bob_end] = MemoryDuplex::make_pair();
    auto bob = std::async(std::launch::async, [&, t = bob_end.get()] {
        std::vector<DetectionRecord> empty;
        return run_bob_endpoint(empty, *t, cfg);
    });
    // announce a large payload, deliver a few bytes, hang up
    std::uint8_t header[5] = {0x01, 0xFF, 0xFF, 0x00, 0x00};
    test_end->write_all(header, sizeof(header));
    std::uint8_t junk[3] = {1, 2, 3};
    test_end->write_all(junk, sizeof(junk));
    test_end.reset();  // closes the pipe
    CHECK_THROWS_AS(bob.get(), ProtocolError);
}

TEST_CASE("alice rejects gates she never sent") {
    SessionConfig cfg = table1_config();
    std::vector<PulseRecord> pulses(100);
    for (std::uint64_t g = 0; g < pulses.size(); ++g)
        pulses[g] = alice_pulse(cfg.source, 4, g);
    VectorPulseSource source(std::move(pulses));

    std::vector<DetectionRecord> stream{{1000000001ull, 0, 0, 0}};
    auto [alice_end, bob_end] = MemoryDuplex::make_pair();
    auto alice = std::async(std::launch::async, [&, t = alice_end.get()] {
        return run_alice_endpoint(source, *t, cfg);
    });
    auto bob = std::async(std::launch::async, [&, t = bob_end.get()] {
        return run_bob_endpoint(stream, *t, cfg);
    });
    CHECK_THROWS_AS(alice.get(), ProtocolError);
    alice_end.reset();  // hang up, as a failing process would
    CHECK_THROWS_AS(bob.get(), ProtocolError);
}

TEST_CASE("unsorted detection streams are refused locally") {
    SessionConfig cfg = table1_config();
    std::vector<DetectionRecord> stream{{10, 0, 0, 0}, {9, 0, 0, 0}};
    auto [alice_end, bob_end] = MemoryDuplex::make_pair();
    auto bob = std::async(std::launch::async, [&, t = bob_end.get()] {
        return run_bob_endpoint(stream, *t, cfg);
    });
    auto alice = std::async(std::launch::async, [&, t = alice_end.get()] {
        SimulatedPulseSource source(cfg.source, 1, 100);
        return run_alice_endpoint(source, *t, cfg);
    });
    CHECK_THROWS_AS(bob.get(), ProtocolError);
    bob_end.reset();  // hang up, as a failing process would
    CHECK_THROWS_AS(alice.get(), ProtocolError);
}

TEST_CASE("tally cross-check failure names the report") {
    SessionConfig cfg = table1_config();
    constexpr std::uint64_t kPulses = 2000;
    SimulationResult sim = simulate_session(cfg, 15, kPulses);
    auto [test_end, bob_end] = MemoryDuplex::make_pair();
    auto bob = std::async(std::launch::async, [&, t = bob_end.get()] {
        return run_bob_endpoint(sim.detections, *t, cfg);
    });

    Transport& t = *test_end;
    send_raw(t, 0x01, valid_hello(cfg));
    // swallow bob's hello + detections
    auto read_frame = [&]() {
        std::uint8_t header[5];
        std::size_t got = 0;
        while (got < 5) got += t.read_some(header + got, 5 - got);
        std::uint32_t len = 0;
        for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(header[1 + i]) << (8 * i);
        std::vector<std::uint8_t> payload(len);
        got = 0;
        while (got < len) got += t.read_some(payload.data() + got, len - got);
        return std::pair<std::uint8_t, std::vector<std::uint8_t>>(header[0], payload);
    };
    read_frame();                       // hello
    auto det = read_frame();            // detections
    std::uint64_t n = 0;
    for (int i = 0; i < 8; ++i) n |= static_cast<std::uint64_t>(det.second[i]) << (8 * i);

    // reveal everything as signal class, basis 0
    std::vector<std::uint8_t> basis(8, 0);
    for (int i = 0; i < 8; ++i) basis[i] = static_cast<std::uint8_t>(n >> (8 * i));
    basis.resize(8 + (n + 7) / 8, 0);
    send_raw(t, 0x03, basis);
    std::vector<std::uint8_t> cls(8, 0);
    for (int i = 0; i < 8; ++i) cls[i] = static_cast<std::uint8_t>(n >> (8 * i));
    cls.resize(8 + (n + 3) / 4, 0);
    send_raw(t, 0x04, cls);
    read_frame();  // error sample

    // a tally report whose click counts disagree with bob's view
    std::vector<std::uint8_t> tally(8 + 3 * 4 * 8, 0);
    send_raw(t, 0x06, tally);
    try {
        bob.get();
        FAIL("expected a protocol error");
    } catch (const ProtocolError& e) {
        CHECK(e.type_code() == 0x06);
    }
}

TEST_CASE("sessions run over TCP loopback") {
    SessionConfig cfg = table1_config();
    constexpr std::uint64_t kPulses = 100'000;
    SimulationResult sim = simulate_session(cfg, 23, kPulses);
    SimulatedPulseSource source(cfg.source, 23, kPulses);

    TcpListener listener(0);
    auto alice = std::async(std::launch::async, [&] {
        auto t = listener.accept();
        return run_alice_endpoint(source, *t, cfg);
    });
    auto bob = std::async(std::launch::async, [&] {
        auto t = TcpTransport::connect("127.0.0.1", listener.port());
        return run_bob_endpoint(sim.detections, *t, cfg);
    });
    SessionTally at = alice.get();
    SessionTally bt = bob.get();
    CHECK(at == bt);
    CHECK(at == sim.tally);
}

TEST_CASE("connecting to a vacant port fails with an I/O error") {
    std::uint16_t vacant;
    {
        TcpListener probe(0);
        vacant = probe.port();
    }
    CHECK_THROWS_AS(TcpTransport::connect("127.0.0.1", vacant), IoError);
}
