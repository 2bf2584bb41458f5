#include "qkd/pulse_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "qkd/channel_model.hpp"
#include "qkd/counter_rng.hpp"
#include "qkd/errors.hpp"

namespace qkd {

namespace {

// draw address space per gate
constexpr std::uint32_t kTagGate = 0;    // class selection + joint event uniform
constexpr std::uint32_t kTagBits = 1;    // alice basis/bit, bob basis, squash coin
constexpr std::uint32_t kTagPhoton = 2;  // per arrived photon: routing + jitter
constexpr std::uint32_t kTagAp = 3;      // afterpulse trials, one lane per detector
constexpr std::uint32_t kTagNoise = 4;   // in-gate offsets for noise clicks
constexpr std::uint32_t kTagHist = 5;    // arrival-histogram draws

constexpr std::uint64_t kNone = std::numeric_limits<std::uint64_t>::max();
constexpr std::uint16_t kNoOffset = 0xFFFF;

constexpr double kFwhmToSigma = 2.354820045030949;  // 2*sqrt(2*ln 2)
constexpr int kAfterpulseWindow = 32;

struct ClassParams {
    double lambda = 0.0;      // mean arrived photons per gate
    double p_nothing = 0.0;   // no photon, no dark on either detector
    double exp_neg_lambda = 1.0;
};

struct SimParams {
    std::array<ClassParams, kClassCount> cls;
    double duty0 = 0.0, duty01 = 0.0;
    double dark = 0.0;
    double e_mis = 0.0;
    double sigma_s = 0.0;
    double half_gate_s = 0.0;
    double gate_width_ps = 0.0;
    std::uint32_t dead_gates = 1;
    double ap_scale = 0.0;  // afterpulse_prob / (1 - 2^-32) / 2^32
};

SimParams make_params(const SessionConfig& cfg) {
    SimParams p;
    double eta = system_efficiency(cfg.channel, cfg.detector);
    p.dark = cfg.detector.dark_prob_per_gate;
    double live2 = (1.0 - p.dark) * (1.0 - p.dark);
    for (auto c : all_classes()) {
        ClassParams& cp = p.cls[static_cast<std::size_t>(c)];
        cp.lambda = eta * cfg.source.flux(c);
        cp.exp_neg_lambda = std::exp(-cp.lambda);
        cp.p_nothing = cp.exp_neg_lambda * live2;
    }
    p.duty0 = cfg.source.duty_of(IntensityClass::Signal);
    p.duty01 = p.duty0 + cfg.source.duty_of(IntensityClass::Decoy1);
    p.e_mis = cfg.detector.misalignment_error;
    p.sigma_s = cfg.detector.jitter_fwhm_s / kFwhmToSigma;
    p.half_gate_s = 0.5 * cfg.detector.gate_width_s;
    p.gate_width_ps = cfg.detector.gate_width_s * 1e12;
    p.dead_gates = cfg.detector.dead_time_gates;
    p.ap_scale = cfg.detector.afterpulse_prob / (1.0 - 0x1.0p-32) * 0x1.0p-32;
    return p;
}

IntensityClass pick_class(double u, const SimParams& p) {
    if (u < p.duty0) return IntensityClass::Signal;
    if (u < p.duty01) return IntensityClass::Decoy1;
    return IntensityClass::Decoy2;
}

// Everything state-free that happened at one gate worth remembering:
// photon hits per detector, dark flags, Alice/Bob choices, photon offsets.
struct GateEvent {
    std::uint64_t gate = 0;
    std::uint16_t offset_ps[2] = {kNoOffset, kNoOffset};
    std::uint8_t hits[2] = {0, 0};
    std::uint8_t cls = 0;
    std::uint8_t flags = 0;  // b0 alice_basis, b1 alice_bit, b2 bob_basis, b3 dark0, b4 dark1
};

// Resolves (photons, dark0, dark1) for a gate whose joint uniform exceeded
// the nothing-happened mass, walking the joint CDF in a fixed state order.
void resolve_joint(double u, const ClassParams& cp, double dark, int& n_photons,
                   bool& dark0, bool& dark1) {
    const double pd[2] = {1.0 - dark, dark};
    double pois = cp.exp_neg_lambda;
    double cum = cp.p_nothing;  // state (0,0,0) already excluded by the caller
    for (int n = 0;; ++n) {
        if (n > 0) pois *= cp.lambda / static_cast<double>(n);
        for (int d0 = 0; d0 < 2; ++d0) {
            for (int d1 = 0; d1 < 2; ++d1) {
                if (n == 0 && d0 == 0 && d1 == 0) continue;
                cum += pois * pd[d0] * pd[d1];
                if (u < cum) {
                    n_photons = n;
                    dark0 = d0 != 0;
                    dark1 = d1 != 0;
                    return;
                }
            }
        }
        if (n >= 200) {  // numerically exhausted tail
            n_photons = n;
            dark0 = dark1 = false;
            return;
        }
    }
}

// Phase A: stateless per-gate physics for [first, last). Emits an event for
// every gate with at least one potential cause and tallies pulses per class.
void scan_block(const SimParams& p, std::uint64_t seed, std::uint64_t first,
                std::uint64_t last, std::vector<GateEvent>& events,
                std::array<std::uint64_t, kClassCount>& pulses) {
    events.clear();
    for (std::uint64_t g = first; g < last; ++g) {
        RandomBlock gate_draw = random_block(seed, g, kTagGate);
        IntensityClass cls = pick_class(gate_draw.unit(0), p);
        ++pulses[static_cast<std::size_t>(cls)];

        const ClassParams& cp = p.cls[static_cast<std::size_t>(cls)];
        double u = gate_draw.unit(1);
        if (u < cp.p_nothing) continue;

        int n_photons = 0;
        bool dark0 = false, dark1 = false;
        resolve_joint(u, cp, p.dark, n_photons, dark0, dark1);

        GateEvent ev;
        ev.gate = g;
        ev.cls = static_cast<std::uint8_t>(cls);
        RandomBlock bits = random_block(seed, g, kTagBits);
        std::uint8_t alice_basis = bits.w[0] & 1u;
        std::uint8_t alice_bit = bits.w[1] & 1u;
        std::uint8_t bob_basis = bits.w[2] & 1u;
        ev.flags = static_cast<std::uint8_t>(alice_basis | (alice_bit << 1) | (bob_basis << 2)
                                             | (dark0 ? 0x08 : 0) | (dark1 ? 0x10 : 0));

        for (int k = 0; k < n_photons; ++k) {
            RandomBlock ph = random_block(seed, g, kTagPhoton, static_cast<std::uint32_t>(k));
            double offset_s = p.sigma_s > 0.0
                                  ? p.sigma_s * inverse_normal_cdf(ph.unit_open(1))
                                  : 0.0;
            if (std::fabs(offset_s) > p.half_gate_s) continue;  // outside the gate, lost
            int det;
            double u_route = ph.unit(0);
            if (alice_basis == bob_basis)
                det = alice_bit ^ (u_route < p.e_mis ? 1 : 0);
            else
                det = u_route < 0.5 ? 0 : 1;
            if (ev.hits[det] < 255) ++ev.hits[det];
            if (ev.offset_ps[det] == kNoOffset) {
                double ps = (p.half_gate_s + offset_s) * 1e12;
                ev.offset_ps[det] = static_cast<std::uint16_t>(
                    std::clamp(ps, 0.0, p.gate_width_ps - 1.0));
            }
        }

        if (ev.hits[0] + ev.hits[1] > 0 || dark0 || dark1) events.push_back(ev);
    }
}

// Phase B receiver state: dead time, afterpulse decay mask and the pending
// train injection that starts when the detector re-arms. The mask holds the
// geometric weights of the last 32 gates as a binary fraction (MSB = one
// gate ago), so the trial probability is afterpulse_prob * mask / 2^32
// normalized over the 32-gate window.
struct DetectorState {
    std::uint64_t dead_until = 0;
    std::uint64_t inject_at = kNone;
    std::uint64_t mask_gate = 0;
    std::uint32_t mask = 0;

    void advance(std::uint64_t g) {
        std::uint64_t shift = g - mask_gate;
        mask = shift >= 32 ? 0u : mask >> shift;
        if (inject_at != kNone && inject_at <= g) {
            std::uint64_t age = g - inject_at;
            if (age < 32) mask |= 0x80000000u >> age;
            inject_at = kNone;
        }
        mask_gate = g;
    }

    std::uint64_t next_candidate() const {
        std::uint64_t cand = kNone;
        if (mask >= 2) cand = mask_gate + 1;
        if (inject_at != kNone) cand = std::min(cand, inject_at);
        return cand;
    }
};

class Receiver {
  public:
    Receiver(const SimParams& p, std::uint64_t seed, bool record,
             std::vector<DetectionRecord>& out)
        : params_(p), seed_(seed), record_(record), out_(out) {}

    std::uint64_t next_ap_candidate() const {
        return std::min(det_[0].next_candidate(), det_[1].next_candidate());
    }

    void process_gate(std::uint64_t g, const GateEvent* ev, SessionTally& tally) {
        bool cause[2] = {false, false};
        bool photon_hit[2] = {false, false};
        if (ev) {
            for (int d = 0; d < 2; ++d) {
                photon_hit[d] = ev->hits[d] > 0;
                cause[d] = photon_hit[d] || (ev->flags & (d == 0 ? 0x08 : 0x10));
            }
        }
        bool fire[2] = {false, false};
        for (int d = 0; d < 2; ++d) {
            det_[d].advance(g);
            bool live = g >= det_[d].dead_until;
            if (!live) continue;
            bool c = cause[d];
            if (!c && det_[d].mask != 0) {
                double pr = params_.ap_scale * static_cast<double>(det_[d].mask);
                c = random_block(seed_, g, kTagAp).unit(d) < pr;
            } else if (!c) {
                continue;
            }
            fire[d] = c;
        }
        if (!fire[0] && !fire[1]) return;

        std::uint8_t cls, alice_basis, alice_bit, bob_basis;
        if (ev) {
            cls = ev->cls;
            alice_basis = ev->flags & 1u;
            alice_bit = (ev->flags >> 1) & 1u;
            bob_basis = (ev->flags >> 2) & 1u;
        } else {
            // pure afterpulse gate; regenerate the stateless choices
            RandomBlock gate_draw = random_block(seed_, g, kTagGate);
            cls = static_cast<std::uint8_t>(pick_class(gate_draw.unit(0), params_));
            RandomBlock bits = random_block(seed_, g, kTagBits);
            alice_basis = bits.w[0] & 1u;
            alice_bit = bits.w[1] & 1u;
            bob_basis = bits.w[2] & 1u;
        }

        int detector;
        if (fire[0] && fire[1]) {
            detector = random_block(seed_, g, kTagBits).w[3] & 1u;  // squash coin
        } else {
            detector = fire[1] ? 1 : 0;
        }

        for (int d = 0; d < 2; ++d) {
            if (!fire[d]) continue;
            det_[d].dead_until = g + params_.dead_gates;
            det_[d].inject_at = g + params_.dead_gates;
        }

        ClassTally& ct = tally.per_class[cls];
        ++ct.clicks;
        if (alice_basis == bob_basis) {
            ++ct.sifted;
            if (static_cast<std::uint8_t>(detector) != alice_bit) ++ct.errors;
        }

        if (record_) {
            std::uint16_t off;
            if (ev && photon_hit[detector] && ev->offset_ps[detector] != kNoOffset) {
                off = ev->offset_ps[detector];
            } else {
                double u = random_block(seed_, g, kTagNoise).unit(detector);
                off = static_cast<std::uint16_t>(u * params_.gate_width_ps);
            }
            out_.push_back({g, static_cast<std::uint8_t>(detector), bob_basis, off});
        }
    }

  private:
    SimParams params_;
    std::uint64_t seed_;
    bool record_;
    std::vector<DetectionRecord>& out_;
    DetectorState det_[2];
};

}  // namespace

PulseRecord alice_pulse(const SourceConfig& source, std::uint64_t seed,
                        std::uint64_t gate_index) {
    SimParams p;
    p.duty0 = source.duty_of(IntensityClass::Signal);
    p.duty01 = p.duty0 + source.duty_of(IntensityClass::Decoy1);
    RandomBlock gate_draw = random_block(seed, gate_index, kTagGate);
    RandomBlock bits = random_block(seed, gate_index, kTagBits);
    PulseRecord r;
    r.gate_index = gate_index;
    r.cls = pick_class(gate_draw.unit(0), p);
    r.basis = bits.w[0] & 1u;
    r.bit = bits.w[1] & 1u;
    return r;
}

SimulationResult simulate_session(const SessionConfig& cfg, std::uint64_t seed,
                                  std::uint64_t n_pulses, const SimulateOptions& opt) {
    if (n_pulses == 0) throw ValidityError("simulate_session requires n_pulses >= 1");

    SimParams params = make_params(cfg);
    unsigned threads = opt.threads ? opt.threads : std::thread::hardware_concurrency();
    threads = std::clamp(threads, 1u, 16u);
    constexpr std::uint64_t kBlockGates = 1u << 21;

    SimulationResult result;
    result.tally.duration_s = static_cast<double>(n_pulses) / cfg.source.clock_rate_hz;
    Receiver receiver(params, seed, opt.record_detections, result.detections);

    std::array<std::uint64_t, kClassCount> pulses{};
    std::vector<std::vector<GateEvent>> buffers(threads);
    std::vector<std::array<std::uint64_t, kClassCount>> block_pulses(threads);

    std::uint64_t chunk_start = 0;
    while (chunk_start < n_pulses) {
        // phase A: stateless scan, one block per thread
        unsigned active = 0;
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            std::uint64_t first = chunk_start + t * kBlockGates;
            if (first >= n_pulses) break;
            std::uint64_t last = std::min(first + kBlockGates, n_pulses);
            block_pulses[t] = {};
            ++active;
            pool.emplace_back([&, t, first, last] {
                scan_block(params, seed, first, last, buffers[t], block_pulses[t]);
            });
        }
        for (auto& th : pool) th.join();

        // phase B: sequential resolution of dead time and afterpulsing
        for (unsigned t = 0; t < active; ++t) {
            std::uint64_t first = chunk_start + t * kBlockGates;
            std::uint64_t last = std::min(first + kBlockGates, n_pulses);
            for (std::size_t c = 0; c < kClassCount; ++c) pulses[c] += block_pulses[t][c];

            const std::vector<GateEvent>& events = buffers[t];
            std::size_t ei = 0;
            while (true) {
                std::uint64_t g_event = ei < events.size() ? events[ei].gate : kNone;
                std::uint64_t g_ap = receiver.next_ap_candidate();
                std::uint64_t g = std::min(g_event, g_ap);
                if (g >= last) break;
                if (g < first) {  // afterpulse window left over from earlier blocks
                    receiver.process_gate(g, nullptr, result.tally);
                    continue;
                }
                const GateEvent* ev = (g == g_event) ? &events[ei] : nullptr;
                if (ev) ++ei;
                receiver.process_gate(g, ev, result.tally);
            }
        }
        chunk_start += static_cast<std::uint64_t>(active) * kBlockGates;
    }

    for (std::size_t c = 0; c < kClassCount; ++c)
        result.tally.per_class[c].pulses_sent = pulses[c];
    return result;
}

ArrivalHistogram simulate_arrival_histogram(const DetectorConfig& det, double clock_rate_hz,
                                            std::uint64_t n_photons, std::uint64_t seed) {
    if (!(det.jitter_fwhm_s > 0.0))
        throw ValidityError("arrival histogram requires a positive jitter FWHM");
    if (!(clock_rate_hz > 0.0))
        throw ValidityError("arrival histogram requires a positive clock rate");

    constexpr std::uint64_t kGateSpan = 8;
    ArrivalHistogram h;
    h.clock_period_s = 1.0 / clock_rate_hz;
    h.span_s = kGateSpan * h.clock_period_s;
    h.bins.assign(static_cast<std::size_t>(h.span_s / h.bin_width_s) + 1, 0);

    double sigma = det.jitter_fwhm_s / kFwhmToSigma;
    double half_gate = 0.5 * det.gate_width_s;
    for (std::uint64_t i = 0; i < n_photons; ++i) {
        RandomBlock blk = random_block(seed, i, kTagHist);
        std::uint64_t gate = blk.u64(0) % kGateSpan;
        double offset = sigma * inverse_normal_cdf(blk.unit_open(1));
        if (std::fabs(offset) > half_gate) {
            ++h.dropped;
            continue;
        }
        double t = (static_cast<double>(gate) + 0.5) * h.clock_period_s + offset;
        if (t < 0.0 || t >= h.span_s) {
            ++h.dropped;
            continue;
        }
        ++h.bins[static_cast<std::size_t>(t / h.bin_width_s)];
        ++h.recorded;
    }
    return h;
}

std::optional<std::uint64_t> min_click_separation(std::span<const DetectionRecord> stream) {
    std::uint64_t last[2];
    bool seen[2] = {false, false};
    std::optional<std::uint64_t> best;
    for (const DetectionRecord& r : stream) {
        int d = r.detector_id & 1;
        if (seen[d]) {
            std::uint64_t gap = r.gate_index - last[d];
            if (!best || gap < *best) best = gap;
        }
        seen[d] = true;
        last[d] = r.gate_index;
    }
    return best;
}

}  // namespace qkd
