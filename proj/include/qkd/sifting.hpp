#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "qkd/pulse_sim.hpp"
#include "qkd/types.hpp"

namespace qkd::sift {

/// Wire message types. Frame layout: type_code (1 byte) | length
/// (4-byte little-endian) | payload.
enum class MsgType : std::uint8_t {
    Hello = 0x01,
    Detections = 0x02,
    BasisReveal = 0x03,
    IntensityReveal = 0x04,
    ErrorSample = 0x05,
    TallyReport = 0x06,
    Bye = 0x07,
};

constexpr std::uint8_t kProtocolVersion = 0x01;

/// Reliable ordered byte stream. read_some blocks until at least one byte
/// is available and returns 0 only at end of stream.
class Transport {
  public:
    virtual ~Transport() = default;
    virtual std::size_t read_some(std::uint8_t* data, std::size_t max) = 0;
    virtual void write_all(const std::uint8_t* data, std::size_t size) = 0;
};

/// In-process duplex pipe; make_pair() returns the two connected ends.
class MemoryDuplex {
  public:
    static std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_pair();
};

/// Blocking TCP transport on a connected socket.
class TcpTransport : public Transport {
  public:
    explicit TcpTransport(int fd);
    ~TcpTransport() override;
    TcpTransport(const TcpTransport&) = delete;
    TcpTransport& operator=(const TcpTransport&) = delete;

    std::size_t read_some(std::uint8_t* data, std::size_t max) override;
    void write_all(const std::uint8_t* data, std::size_t size) override;

    static std::unique_ptr<TcpTransport> connect(const std::string& host, std::uint16_t port);

  private:
    int fd_;
};

/// Bound listening socket; port 0 picks an ephemeral port.
class TcpListener {
  public:
    explicit TcpListener(std::uint16_t port);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const { return port_; }
    std::unique_ptr<TcpTransport> accept();

  private:
    int fd_;
    std::uint16_t port_;
};

/// Alice's side of the pulse history, addressable by gate index.
class AlicePulseSource {
  public:
    virtual ~AlicePulseSource() = default;
    virtual std::uint64_t pulse_count() const = 0;
    virtual PulseRecord at(std::uint64_t gate_index) const = 0;
    /// Pulses sent per intensity class over the whole session.
    virtual std::array<std::uint64_t, kClassCount> class_counts() const = 0;
};

/// Regenerates the deterministic pulse stream of simulate_session from the
/// same seed; random access per gate.
class SimulatedPulseSource : public AlicePulseSource {
  public:
    SimulatedPulseSource(const SourceConfig& source, std::uint64_t seed,
                         std::uint64_t n_pulses);
    std::uint64_t pulse_count() const override { return n_pulses_; }
    PulseRecord at(std::uint64_t gate_index) const override;
    std::array<std::uint64_t, kClassCount> class_counts() const override;

  private:
    SourceConfig source_;
    std::uint64_t seed_;
    std::uint64_t n_pulses_;
    mutable std::array<std::uint64_t, kClassCount> counts_{};
    mutable bool counted_ = false;
};

/// Explicit pulse list (protocol unit tests).
class VectorPulseSource : public AlicePulseSource {
  public:
    explicit VectorPulseSource(std::vector<PulseRecord> pulses);
    std::uint64_t pulse_count() const override { return pulses_.size(); }
    PulseRecord at(std::uint64_t gate_index) const override;
    std::array<std::uint64_t, kClassCount> class_counts() const override;

  private:
    std::vector<PulseRecord> pulses_;
};

struct SiftOptions {
    /// Fraction of sifted signal bits disclosed for error estimation.
    /// Decoy-class sifted bits are always fully disclosed.
    double signal_disclose_fraction = 1.0;
};

/// Bob: reports detections, learns bases/intensities, discloses bits,
/// cross-checks Alice's tally report and returns the agreed tally.
/// Throws ProtocolError on version mismatch, malformed frames or
/// inconsistent tallies.
SessionTally run_bob_endpoint(std::span<const DetectionRecord> stream, Transport& transport,
                              const SessionConfig& cfg, const SiftOptions& opt = {});

/// Alice: mirror image of run_bob_endpoint; reveals bases/intensities only
/// for reported gates and computes the error counts from disclosed bits.
SessionTally run_alice_endpoint(const AlicePulseSource& pulses, Transport& transport,
                                const SessionConfig& cfg, const SiftOptions& opt = {});

}  // namespace qkd::sift
