#include "qkd/sifting.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <sstream>

#include "qkd/errors.hpp"

namespace qkd::sift {

namespace {

constexpr std::size_t kMaxFrameBytes = 1u << 30;

std::uint8_t code(MsgType t) { return static_cast<std::uint8_t>(t); }

[[noreturn]] void fail(MsgType t, const std::string& what) {
    throw ProtocolError(code(t), what);
}

// ---- payload encoding -----------------------------------------------------

struct Writer {
    std::vector<std::uint8_t> buf;

    void u8(std::uint8_t v) { buf.push_back(v); }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void packed_bits(const std::vector<std::uint8_t>& bits) {
        std::uint8_t acc = 0;
        int n = 0;
        for (std::uint8_t b : bits) {
            acc |= static_cast<std::uint8_t>((b & 1u) << n);
            if (++n == 8) {
                buf.push_back(acc);
                acc = 0;
                n = 0;
            }
        }
        if (n) buf.push_back(acc);
    }
    void packed_classes(const std::vector<std::uint8_t>& classes) {
        std::uint8_t acc = 0;
        int n = 0;
        for (std::uint8_t c : classes) {
            acc |= static_cast<std::uint8_t>((c & 3u) << (2 * n));
            if (++n == 4) {
                buf.push_back(acc);
                acc = 0;
                n = 0;
            }
        }
        if (n) buf.push_back(acc);
    }
};

struct Reader {
    const std::vector<std::uint8_t>& buf;
    std::size_t pos = 0;
    MsgType type;

    void need(std::size_t n) {
        if (pos + n > buf.size()) fail(type, "payload shorter than declared content");
    }
    std::uint8_t u8() {
        need(1);
        return buf[pos++];
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[pos++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::vector<std::uint8_t> packed_bits(std::size_t count) {
        std::size_t bytes = (count + 7) / 8;
        need(bytes);
        std::vector<std::uint8_t> out(count);
        for (std::size_t i = 0; i < count; ++i)
            out[i] = (buf[pos + i / 8] >> (i % 8)) & 1u;
        pos += bytes;
        return out;
    }
    std::vector<std::uint8_t> packed_classes(std::size_t count) {
        std::size_t bytes = (count + 3) / 4;
        need(bytes);
        std::vector<std::uint8_t> out(count);
        for (std::size_t i = 0; i < count; ++i)
            out[i] = (buf[pos + i / 4] >> (2 * (i % 4))) & 3u;
        pos += bytes;
        return out;
    }
    void done() {
        if (pos != buf.size()) fail(type, "payload longer than declared content");
    }
};

// ---- framing ----------------------------------------------------------------

void read_exact(Transport& t, std::uint8_t* data, std::size_t n, MsgType ctx) {
    std::size_t got = 0;
    while (got < n) {
        std::size_t r = t.read_some(data + got, n - got);
        if (r == 0) fail(ctx, "stream ended inside a frame");
        got += r;
    }
}

void send_frame(Transport& t, MsgType type, const std::vector<std::uint8_t>& payload) {
    std::uint8_t header[5];
    header[0] = code(type);
    std::uint32_t len = static_cast<std::uint32_t>(payload.size());
    for (int i = 0; i < 4; ++i) header[1 + i] = static_cast<std::uint8_t>(len >> (8 * i));
    t.write_all(header, sizeof(header));
    if (!payload.empty()) t.write_all(payload.data(), payload.size());
}

std::pair<MsgType, std::vector<std::uint8_t>> recv_frame(Transport& t) {
    std::uint8_t header[5];
    read_exact(t, header, sizeof(header), MsgType::Hello);
    std::uint8_t tc = header[0];
    if (tc < code(MsgType::Hello) || tc > code(MsgType::Bye))
        throw ProtocolError(tc, "unknown message type");
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(header[1 + i]) << (8 * i);
    if (len > kMaxFrameBytes) throw ProtocolError(tc, "frame length out of bounds");
    std::vector<std::uint8_t> payload(len);
    if (len) read_exact(t, payload.data(), len, static_cast<MsgType>(tc));
    return {static_cast<MsgType>(tc), std::move(payload)};
}

std::vector<std::uint8_t> expect_frame(Transport& t, MsgType want) {
    auto [type, payload] = recv_frame(t);
    if (type != want) {
        std::ostringstream os;
        os << "expected message 0x" << std::hex << int(code(want)) << " got 0x"
           << int(code(type));
        fail(type, os.str());
    }
    return payload;
}

// ---- hello ------------------------------------------------------------------

std::vector<std::uint8_t> hello_payload(const SessionConfig& cfg) {
    Writer w;
    w.u8(kProtocolVersion);
    const SourceConfig& s = cfg.source;
    w.f64(s.clock_rate_hz);
    w.f64(s.mu);
    w.f64(s.nu1);
    w.f64(s.nu2);
    w.f64(s.duty[0]);
    w.f64(s.duty[1]);
    w.f64(s.duty[2]);
    w.f64(s.effective_extinction_db());
    return w.buf;
}

void check_hello(const std::vector<std::uint8_t>& payload, const SessionConfig& cfg) {
    Reader r{payload, 0, MsgType::Hello};
    std::uint8_t version = r.u8();
    if (version != kProtocolVersion) fail(MsgType::Hello, "protocol version mismatch");
    const SourceConfig& s = cfg.source;
    double vals[8] = {s.clock_rate_hz, s.mu,      s.nu1,     s.nu2,
                      s.duty[0],       s.duty[1], s.duty[2], s.effective_extinction_db()};
    const char* names[8] = {"clock_rate_hz", "mu",          "nu1",         "nu2",
                            "duty_signal",   "duty_decoy1", "duty_decoy2", "extinction_db"};
    for (int i = 0; i < 8; ++i) {
        double peer = r.f64();
        if (peer != vals[i])
            fail(MsgType::Hello, std::string("session parameter mismatch: ") + names[i]);
    }
    for (double d : s.duty)
        if (d <= 0.0) fail(MsgType::Hello, "all three intensity classes need a positive duty");
    r.done();
}

// Deterministic sampling rule: bit i of the sifted signal sequence is
// disclosed when the integer fraction counter advances.
bool disclose_signal_bit(std::uint64_t i, double fraction) {
    if (fraction >= 1.0) return true;
    if (fraction <= 0.0) return false;
    return std::floor(static_cast<double>(i + 1) * fraction)
           > std::floor(static_cast<double>(i) * fraction);
}

}  // namespace

// ---- in-process transport ----------------------------------------------------

namespace {

struct Pipe {
    std::mutex m;
    std::condition_variable cv;
    std::deque<std::uint8_t> q;
    bool closed = false;

    void write(const std::uint8_t* data, std::size_t n) {
        std::lock_guard lk(m);
        q.insert(q.end(), data, data + n);
        cv.notify_all();
    }
    std::size_t read_some(std::uint8_t* data, std::size_t max) {
        std::unique_lock lk(m);
        cv.wait(lk, [&] { return !q.empty() || closed; });
        if (q.empty()) return 0;
        std::size_t n = std::min(max, q.size());
        for (std::size_t i = 0; i < n; ++i) {
            data[i] = q.front();
            q.pop_front();
        }
        return n;
    }
    void close() {
        std::lock_guard lk(m);
        closed = true;
        cv.notify_all();
    }
};

class PipeEnd : public Transport {
  public:
    PipeEnd(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out)
        : in_(std::move(in)), out_(std::move(out)) {}
    ~PipeEnd() override {
        in_->close();
        out_->close();
    }
    std::size_t read_some(std::uint8_t* data, std::size_t max) override {
        return in_->read_some(data, max);
    }
    void write_all(const std::uint8_t* data, std::size_t size) override {
        out_->write(data, size);
    }

  private:
    std::shared_ptr<Pipe> in_;
    std::shared_ptr<Pipe> out_;
};

}  // namespace

std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> MemoryDuplex::make_pair() {
    auto a2b = std::make_shared<Pipe>();
    auto b2a = std::make_shared<Pipe>();
    return {std::make_unique<PipeEnd>(b2a, a2b), std::make_unique<PipeEnd>(a2b, b2a)};
}

// ---- TCP transport -----------------------------------------------------------

TcpTransport::TcpTransport(int fd) : fd_(fd) {}

TcpTransport::~TcpTransport() {
    if (fd_ >= 0) ::close(fd_);
}

std::size_t TcpTransport::read_some(std::uint8_t* data, std::size_t max) {
    while (true) {
        ssize_t r = ::recv(fd_, data, max, 0);
        if (r >= 0) return static_cast<std::size_t>(r);
        if (errno == EINTR) continue;
        throw IoError(std::string("socket read failed: ") + std::strerror(errno));
    }
}

void TcpTransport::write_all(const std::uint8_t* data, std::size_t size) {
    std::size_t sent = 0;
    while (sent < size) {
        ssize_t r = ::send(fd_, data + sent, size - sent, MSG_NOSIGNAL);
        if (r < 0) {
            if (errno == EINTR) continue;
            throw IoError(std::string("socket write failed: ") + std::strerror(errno));
        }
        sent += static_cast<std::size_t>(r);
    }
}

TcpListener::TcpListener(std::uint16_t port) : fd_(-1), port_(0) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw IoError("cannot create listening socket");
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        ::close(fd_);
        throw IoError(std::string("bind failed: ") + std::strerror(errno));
    }
    if (::listen(fd_, 1) < 0) {
        ::close(fd_);
        throw IoError("listen failed");
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpTransport> TcpListener::accept() {
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) throw IoError("accept failed");
    return std::make_unique<TcpTransport>(fd);
}

std::unique_ptr<TcpTransport> TcpTransport::connect(const std::string& host,
                                                    std::uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw IoError("cannot create socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    std::string h = (host == "localhost") ? "127.0.0.1" : host;
    if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw IoError("cannot parse host address: " + host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        ::close(fd);
        throw IoError(std::string("connect failed: ") + std::strerror(errno));
    }
    return std::make_unique<TcpTransport>(fd);
}

// ---- pulse sources -----------------------------------------------------------

SimulatedPulseSource::SimulatedPulseSource(const SourceConfig& source, std::uint64_t seed,
                                           std::uint64_t n_pulses)
    : source_(source), seed_(seed), n_pulses_(n_pulses) {}

PulseRecord SimulatedPulseSource::at(std::uint64_t gate_index) const {
    return alice_pulse(source_, seed_, gate_index);
}

std::array<std::uint64_t, kClassCount> SimulatedPulseSource::class_counts() const {
    if (!counted_) {
        counts_ = {};
        for (std::uint64_t g = 0; g < n_pulses_; ++g)
            ++counts_[static_cast<std::size_t>(at(g).cls)];
        counted_ = true;
    }
    return counts_;
}

VectorPulseSource::VectorPulseSource(std::vector<PulseRecord> pulses)
    : pulses_(std::move(pulses)) {}

PulseRecord VectorPulseSource::at(std::uint64_t gate_index) const {
    return pulses_.at(gate_index);
}

std::array<std::uint64_t, kClassCount> VectorPulseSource::class_counts() const {
    std::array<std::uint64_t, kClassCount> counts{};
    for (const PulseRecord& p : pulses_) ++counts[static_cast<std::size_t>(p.cls)];
    return counts;
}

// ---- endpoints ---------------------------------------------------------------

namespace {

struct TallyWire {
    static std::vector<std::uint8_t> encode(const SessionTally& t) {
        Writer w;
        w.f64(t.duration_s);
        for (const ClassTally& c : t.per_class) {
            w.u64(c.pulses_sent);
            w.u64(c.clicks);
            w.u64(c.sifted);
            w.u64(c.errors);
        }
        return w.buf;
    }
    static SessionTally decode(const std::vector<std::uint8_t>& payload) {
        Reader r{payload, 0, MsgType::TallyReport};
        SessionTally t;
        t.duration_s = r.f64();
        for (ClassTally& c : t.per_class) {
            c.pulses_sent = r.u64();
            c.clicks = r.u64();
            c.sifted = r.u64();
            c.errors = r.u64();
        }
        r.done();
        return t;
    }
};

}  // namespace

SessionTally run_bob_endpoint(std::span<const DetectionRecord> stream, Transport& transport,
                              const SessionConfig& cfg, const SiftOptions& opt) {
    send_frame(transport, MsgType::Hello, hello_payload(cfg));
    check_hello(expect_frame(transport, MsgType::Hello), cfg);

    const std::size_t n = stream.size();
    Writer det;
    det.u64(n);
    std::vector<std::uint8_t> bob_bases(n);
    {
        std::uint64_t prev = 0;
        bool first = true;
        for (std::size_t i = 0; i < n; ++i) {
            const DetectionRecord& r = stream[i];
            if (!first && r.gate_index <= prev)
                fail(MsgType::Detections, "detection stream not strictly increasing");
            first = false;
            prev = r.gate_index;
            det.u64(r.gate_index);
            bob_bases[i] = r.bob_basis & 1u;
        }
        det.packed_bits(bob_bases);
    }
    send_frame(transport, MsgType::Detections, det.buf);

    auto basis_payload = expect_frame(transport, MsgType::BasisReveal);
    Reader br{basis_payload, 0, MsgType::BasisReveal};
    if (br.u64() != n) fail(MsgType::BasisReveal, "basis reveal count mismatch");
    std::vector<std::uint8_t> alice_bases = br.packed_bits(n);
    br.done();

    auto cls_payload = expect_frame(transport, MsgType::IntensityReveal);
    Reader cr{cls_payload, 0, MsgType::IntensityReveal};
    if (cr.u64() != n) fail(MsgType::IntensityReveal, "intensity reveal count mismatch");
    std::vector<std::uint8_t> classes = cr.packed_classes(n);
    cr.done();
    for (std::uint8_t c : classes)
        if (c >= kClassCount) fail(MsgType::IntensityReveal, "intensity class out of range");

    SessionTally own;
    Writer sample;
    std::vector<std::uint64_t> sample_gates;
    std::vector<std::uint8_t> sample_bits;
    std::uint64_t sifted_signal_index = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ClassTally& ct = own.per_class[classes[i]];
        ++ct.clicks;
        if (alice_bases[i] != bob_bases[i]) continue;
        ++ct.sifted;
        bool disclose;
        if (classes[i] == static_cast<std::uint8_t>(IntensityClass::Signal)) {
            disclose = disclose_signal_bit(sifted_signal_index, opt.signal_disclose_fraction);
            ++sifted_signal_index;
        } else {
            disclose = true;  // decoy bits carry no key material
        }
        if (disclose) {
            sample_gates.push_back(stream[i].gate_index);
            sample_bits.push_back(stream[i].detector_id & 1u);
        }
    }
    sample.u64(sample_gates.size());
    for (std::uint64_t g : sample_gates) sample.u64(g);
    sample.packed_bits(sample_bits);
    send_frame(transport, MsgType::ErrorSample, sample.buf);

    SessionTally agreed = TallyWire::decode(expect_frame(transport, MsgType::TallyReport));
    for (auto c : all_classes()) {
        const ClassTally& a = agreed.of(c);
        const ClassTally& b = own.of(c);
        if (a.clicks != b.clicks || a.sifted != b.sifted)
            fail(MsgType::TallyReport, std::string("tally cross-check mismatch for class ")
                                           + class_name(c));
        if (a.errors > a.sifted || a.clicks > a.pulses_sent)
            fail(MsgType::TallyReport, "tally report violates count ordering");
    }

    send_frame(transport, MsgType::Bye, {});
    expect_frame(transport, MsgType::Bye);
    return agreed;
}

SessionTally run_alice_endpoint(const AlicePulseSource& pulses, Transport& transport,
                                const SessionConfig& cfg, const SiftOptions&) {
    send_frame(transport, MsgType::Hello, hello_payload(cfg));
    check_hello(expect_frame(transport, MsgType::Hello), cfg);

    auto det_payload = expect_frame(transport, MsgType::Detections);
    Reader dr{det_payload, 0, MsgType::Detections};
    std::uint64_t n = dr.u64();
    std::vector<std::uint64_t> gates(n);
    const std::uint64_t total = pulses.pulse_count();
    for (std::uint64_t i = 0; i < n; ++i) {
        gates[i] = dr.u64();
        if (gates[i] >= total)
            fail(MsgType::Detections, "reported gate index was never sent");
        if (i > 0 && gates[i] <= gates[i - 1])
            fail(MsgType::Detections, "detection stream not strictly increasing");
    }
    std::vector<std::uint8_t> bob_bases = dr.packed_bits(n);
    dr.done();

    std::vector<PulseRecord> sent(n);
    for (std::uint64_t i = 0; i < n; ++i) sent[i] = pulses.at(gates[i]);

    Writer basis;
    basis.u64(n);
    {
        std::vector<std::uint8_t> bits(n);
        for (std::uint64_t i = 0; i < n; ++i) bits[i] = sent[i].basis & 1u;
        basis.packed_bits(bits);
    }
    send_frame(transport, MsgType::BasisReveal, basis.buf);

    Writer cls;
    cls.u64(n);
    {
        std::vector<std::uint8_t> codes(n);
        for (std::uint64_t i = 0; i < n; ++i)
            codes[i] = static_cast<std::uint8_t>(sent[i].cls);
        cls.packed_classes(codes);
    }
    send_frame(transport, MsgType::IntensityReveal, cls.buf);

    SessionTally tally;
    tally.duration_s = static_cast<double>(total) / cfg.source.clock_rate_hz;
    auto counts = pulses.class_counts();
    for (std::size_t c = 0; c < kClassCount; ++c) tally.per_class[c].pulses_sent = counts[c];
    for (std::uint64_t i = 0; i < n; ++i) {
        ClassTally& ct = tally.of(sent[i].cls);
        ++ct.clicks;
        if ((sent[i].basis & 1u) == bob_bases[i]) ++ct.sifted;
    }

    auto sample_payload = expect_frame(transport, MsgType::ErrorSample);
    Reader sr{sample_payload, 0, MsgType::ErrorSample};
    std::uint64_t m = sr.u64();
    std::vector<std::uint64_t> sample_gates(m);
    for (std::uint64_t i = 0; i < m; ++i) sample_gates[i] = sr.u64();
    std::vector<std::uint8_t> sample_bits = sr.packed_bits(m);
    sr.done();

    std::size_t cursor = 0;
    for (std::uint64_t i = 0; i < m; ++i) {
        // disclosed indices arrive in reporting order; locate in the gate list
        while (cursor < n && gates[cursor] < sample_gates[i]) ++cursor;
        if (cursor >= n || gates[cursor] != sample_gates[i])
            fail(MsgType::ErrorSample, "disclosed gate was not reported");
        const PulseRecord& p = sent[cursor];
        if ((p.basis & 1u) != bob_bases[cursor])
            fail(MsgType::ErrorSample, "disclosed gate is not a sifted position");
        if ((sample_bits[i] & 1u) != (p.bit & 1u)) ++tally.of(p.cls).errors;
    }

    send_frame(transport, MsgType::TallyReport, TallyWire::encode(tally));
    expect_frame(transport, MsgType::Bye);
    send_frame(transport, MsgType::Bye, {});
    return tally;
}

}  // namespace qkd::sift
