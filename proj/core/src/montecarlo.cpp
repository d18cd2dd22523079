#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <thread>

#include "qpon/errors.hpp"
#include "qpon/qkdlink.hpp"

namespace qpon {

BitPattern parse_bit_pattern(std::string_view name) {
    if (name == "prbs7") return BitPattern::prbs7;
    if (name == "random") return BitPattern::random;
    throw ConfigError("unknown bit pattern '" + std::string(name) + "' (expected prbs7 or random)");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// x^7 + x^6 + 1, all-ones seed.
std::array<std::uint8_t, 127> prbs7_table() {
    std::array<std::uint8_t, 127> out{};
    unsigned state = 0x7F;
    for (auto& bit : out) {
        const unsigned fb = ((state >> 6) ^ (state >> 5)) & 1U;
        bit = static_cast<std::uint8_t>(state & 1U);
        state = ((state << 1) | fb) & 0x7FU;
    }
    return out;
}

enum Kind : std::uint8_t { kSignal, kDark, kRaman, kLeakage };

struct Event {
    std::uint64_t slot;
    std::uint8_t kind;
    std::uint8_t error;
};

struct SlotModel {
    double p_signal;
    double p_noise;
    double p_any;
    double noise_split[3];   // cumulative share of dark, raman, leakage
    double intrinsic_error;
    BitPattern pattern;
    std::uint64_t seed;
};

class AliceBits {
public:
    AliceBits(BitPattern p, std::uint64_t seed) : pattern_(p), seed_(seed), table_(prbs7_table()) {}
    int at(std::uint64_t slot) const {
        if (pattern_ == BitPattern::prbs7) return table_[slot % table_.size()];
        return static_cast<int>(splitmix64(seed_ ^ splitmix64(slot ^ 0xA11CEULL)) & 1U);
    }

private:
    BitPattern pattern_;
    std::uint64_t seed_;
    std::array<std::uint8_t, 127> table_;
};

void generate_chunk(const SlotModel& m, const AliceBits& alice, std::uint64_t chunk, std::uint64_t end_slot,
                    std::vector<Event>& out) {
    std::mt19937_64 rng(splitmix64(m.seed ^ splitmix64(chunk)));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::geometric_distribution<std::uint64_t> gap(m.p_any);
    const std::uint64_t begin = chunk * kMcChunkSlots;
    const std::uint64_t end = std::min(end_slot, begin + kMcChunkSlots);
    const double p_sig_only = m.p_signal * (1.0 - m.p_noise) / m.p_any;
    const double p_both = m.p_signal * m.p_noise / m.p_any;
    std::uint64_t slot = begin;
    while (true) {
        slot += gap(rng);
        if (slot >= end) break;
        const double u = uni(rng);
        // A slot with both a signal photon and a noise click registers one of them at random.
        bool signal = u < p_sig_only || (u < p_sig_only + p_both && uni(rng) < 0.5);
        const int a = alice.at(slot);
        int bob;
        std::uint8_t kind = kSignal;
        if (signal) {
            bob = a ^ (uni(rng) < m.intrinsic_error ? 1 : 0);
        } else {
            const double v = uni(rng);
            kind = v < m.noise_split[0] ? kDark : (v < m.noise_split[1] ? kRaman : kLeakage);
            bob = uni(rng) < 0.5 ? 1 : 0;
        }
        out.push_back({slot, kind, static_cast<std::uint8_t>(bob != a)});
        ++slot;
    }
}

}  // namespace

LinkReport monte_carlo_link(const LinkInputs& in, const McOptions& opt) {
    validate_source(in.source);
    validate_detector(in.detector);
    validate_interferometer(in.interferometer);
    if (opt.pulses == 0) throw ConfigError("pulse count must be positive");

    LinkReport r;
    r.engine = "mc";
    r.total_loss_db = quantum_path_loss_db(in);
    const NoiseBudget noise = noise_budget(in);
    r.raman_rate_hz = noise.raman_hz;
    r.leakage_rate_hz = noise.leakage_hz;

    const double rate = in.source.symbol_rate_hz;
    const ClickRates c = click_rates(in.source, r.total_loss_db, in.detector, noise.total());
    SlotModel m{};
    m.p_signal = c.signal_in_gate / rate;
    m.p_noise = -std::expm1(-c.noise_in_gate / rate);
    m.p_any = 1.0 - (1.0 - m.p_signal) * (1.0 - m.p_noise);
    const double nt = noise.total();
    m.noise_split[0] = nt > 0.0 ? noise.dark_hz / nt : 1.0;
    m.noise_split[1] = nt > 0.0 ? (noise.dark_hz + noise.raman_hz) / nt : 1.0;
    m.noise_split[2] = 1.0;
    m.intrinsic_error = combined_intrinsic_error(in.source, in.interferometer);
    m.pattern = opt.pattern;
    m.seed = opt.seed;
    if (!(m.p_any > 0.0)) throw InsufficientStatistics("no clicks possible: zero signal and zero noise");

    const AliceBits alice(opt.pattern, opt.seed);
    const std::uint64_t chunks = (opt.pulses + kMcChunkSlots - 1) / kMcChunkSlots;
    std::vector<std::vector<Event>> events(chunks);
    unsigned threads = opt.threads ? opt.threads : std::max(1U, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, chunks));
    {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (std::uint64_t ch = t; ch < chunks; ch += threads)
                    generate_chunk(m, alice, ch, opt.pulses, events[ch]);
            });
        for (auto& th : pool) th.join();
    }

    // Non-paralyzable dead time over the merged timeline, strictly in slot order.
    const double dead_slots = in.detector.dead_time_s * rate;
    std::array<std::uint64_t, 4> registered{};
    std::uint64_t errors = 0, clicks = 0;
    bool any = false;
    std::uint64_t last = 0;
    for (const auto& chunk : events) {
        for (const auto& e : chunk) {
            if (any && static_cast<double>(e.slot - last) < dead_slots) continue;
            any = true;
            last = e.slot;
            ++registered[e.kind];
            ++clicks;
            errors += e.error;
        }
    }

    const double duration = static_cast<double>(opt.pulses) / rate;
    std::uint64_t afterpulses = 0;
    if (in.detector.afterpulse_factor > 0.0 && clicks > 0) {
        const double occupancy = static_cast<double>(clicks) * in.detector.dead_time_s / duration;
        const double p_after = std::min(1.0, in.detector.afterpulse_factor * occupancy);
        std::mt19937_64 rng(splitmix64(opt.seed ^ 0xAF7E5ULL));
        std::bernoulli_distribution spawn(p_after), flip(0.5);
        for (std::uint64_t i = 0; i < clicks; ++i) {
            if (!spawn(rng)) continue;
            ++afterpulses;
            errors += flip(rng) ? 1 : 0;
        }
    }
    clicks += afterpulses;
    if (clicks == 0) throw InsufficientStatistics("Monte Carlo run registered zero clicks; increase the pulse count");

    r.pulses = opt.pulses;
    r.clicks = clicks;
    r.errors = errors;
    r.acquisition_s = duration;
    r.counts.signal = registered[kSignal] / duration;
    r.counts.dark = registered[kDark] / duration;
    r.counts.raman = registered[kRaman] / duration;
    r.counts.leakage = registered[kLeakage] / duration;
    r.counts.afterpulse = afterpulses / duration;
    r.raw_rate_bps = clicks / duration;
    r.raw_rate_3sigma_bps = 3.0 * std::sqrt(static_cast<double>(clicks)) / duration;
    r.qber = static_cast<double>(errors) / static_cast<double>(clicks);
    r.qber_3sigma = 3.0 * std::sqrt(r.qber * (1.0 - r.qber) / static_cast<double>(clicks));
    const double mu = in.source.mean_photon_number;
    r.secure_fraction = (r.qber < 0.5 && mu < 0.5) ? secure_fraction(r.qber, mu, in.ec_inefficiency) : 0.0;
    r.secure_rate_bps = r.raw_rate_bps * r.secure_fraction;
    r.secure_bits_per_pulse = r.secure_rate_bps / rate;
    return r;
}

}  // namespace qpon
