#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qpon/qkdlink.hpp"
#include "qpon/raman.hpp"
#include "qpon/scenario.hpp"
#include "qpon/topology.hpp"
#include "qpon/units.hpp"

using namespace qpon;

namespace {

constexpr int kSamples = 200;

PonConfig random_plant(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> km(0.0, 40.0), drop(0.0, 5.0);
    std::uniform_int_distribution<int> pow2(1, 6);
    PonConfig c;
    c.feeder_down_km = km(rng);
    c.feeder_up_km = km(rng);
    c.drop_km = drop(rng);
    c.splitter.branches = 1 << pow2(rng);
    c.receiver_filters = {make_rb_filter(1250.0, 1410.0), make_narrowband_filter(FilterKind::fbg, 1310.55)};
    return c;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace

TEST(Properties, FrequencyRoundTrip) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> nm(1250.0, 1650.0);
    for (int i = 0; i < kSamples; ++i) {
        const double x = nm(rng);
        EXPECT_LE(rel(frequency_to_wavelength(wavelength_to_frequency(x)), x), 1e-15);
    }
}

TEST(Properties, LossAdditivity) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> nm(1250.0, 1650.0);
    for (int i = 0; i < kSamples; ++i) {
        const auto t = build_pon(random_plant(rng));
        const double x = nm(rng);
        const double whole = path_loss(t, Node::onu, Node::detector, x);
        const double parts = path_loss(t, Node::onu, Node::co_rx, x) + path_loss(t, Node::co_rx, Node::detector, x);
        EXPECT_LE(rel(whole, parts), 1e-12);
        const auto evo = signal_evolution(t, QuantumChannel{SpectralPoint::from_nm(x), 0.1, 1e9});
        EXPECT_LE(rel(evo.points.back().cumulative_loss_db, whole), 1e-12);
        for (std::size_t k = 1; k < evo.points.size(); ++k)
            EXPECT_GE(evo.points[k].cumulative_loss_db, evo.points[k - 1].cumulative_loss_db);
        // Transmissions multiply.
        double product = 1.0;
        for (const auto& e : evo.path.elements) product *= db_to_linear(e.loss_db);
        EXPECT_LE(rel(product, db_to_linear(whole)), 1e-12);
    }
}

TEST(Properties, Reciprocity) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> nm(1250.0, 1650.0);
    const std::pair<Node, Node> pairs[] = {{Node::onu, Node::co_rx}, {Node::co_tx, Node::onu}, {Node::co_tx, Node::co_rx}};
    for (int i = 0; i < kSamples; ++i) {
        const auto t = build_pon(random_plant(rng));
        const double x = nm(rng);
        for (const auto& [a, b] : pairs) EXPECT_DOUBLE_EQ(path_loss(t, a, b, x), path_loss(t, b, a, x));
    }
}

TEST(Properties, FiberLossLinearInLength) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> nm(1250.0, 1650.0), km(0.0, 50.0);
    for (int i = 0; i < kSamples; ++i) {
        const double x = nm(rng), l = km(rng);
        const FiberSpan one{SpanRole::drop, l}, two{SpanRole::drop, 2.0 * l};
        EXPECT_LE(std::abs(fiber_loss(two, x) - 2.0 * fiber_loss(one, x)), 1e-12 * (1.0 + fiber_loss(two, x)));
    }
}

TEST(Properties, RamanPumpLinearity) {
    const auto cfg = load_preset("ngpon2");
    const auto t = build_pon(cfg.pon);
    const auto plan = cfg.active_plan();
    auto doubled = plan;
    for (auto& ch : doubled.classical) ch.launch_dbm += 10.0 * std::log10(2.0);
    const CountingReceiver rx{0.1, 14.0};
    const auto a = inband_raman_counts(t, plan, cfg.raman, rx);
    const auto b = inband_raman_counts(t, doubled, cfg.raman, rx);
    ASSERT_EQ(a.contributions.size(), b.contributions.size());
    for (std::size_t i = 0; i < a.contributions.size(); ++i)
        EXPECT_LE(rel(b.contributions[i].power_w, 2.0 * a.contributions[i].power_w), 1e-12);
    EXPECT_LE(rel(b.total_counts_per_s, 2.0 * a.total_counts_per_s), 1e-12);
}

TEST(Properties, EffectiveLengthEqualAttenuationLimit) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> alpha(0.03, 0.12), km(0.1, 40.0);
    for (int i = 0; i < kSamples; ++i) {
        const double a = alpha(rng), l = km(rng);
        for (auto g : {Geometry::co, Geometry::counter}) {
            const double limit = raman_effective_length(a, a, l, g);
            const double near = raman_effective_length(a * (1.0 + 1e-10), a, l, g);
            EXPECT_LE(rel(limit, near), 1e-9);
        }
    }
}

TEST(Properties, GatingNoiseLinearity) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> duty(0.02, 1.0), noise(0.0, 1e5), loss(5.0, 40.0);
    for (int i = 0; i < kSamples; ++i) {
        DetectorModel d;
        d.gate_duty = duty(rng);
        d.dead_time_s = 5e-5;
        d.afterpulse_factor = 0.03;
        DetectorModel h = d;
        h.gate_duty = 0.5 * d.gate_duty;
        const DpsSource src;
        const double n = noise(rng), l = loss(rng);
        const auto full = click_rates(src, l, d, n);
        const auto half = click_rates(src, l, h, n);
        EXPECT_DOUBLE_EQ(half.noise_in_gate, 0.5 * full.noise_in_gate);
        EXPECT_DOUBLE_EQ(half.signal_in_gate, full.signal_in_gate);
    }
}

TEST(Properties, DarkBudgetMonotonicity) {
    auto cfg = load_preset("dark");
    double prev_rate = 0.0, prev_qber = 0.0;
    for (int k = 0; k <= 42; ++k) {
        const double budget = 5.0 + 0.5 * k;
        cfg.pon.external_budget_db = budget;
        const auto r = cfg.run();
        if (k > 0) {
            EXPECT_LT(r.raw_rate_bps, prev_rate) << budget << " dB";
            EXPECT_GE(r.qber, prev_qber) << budget << " dB";
        }
        prev_rate = r.raw_rate_bps;
        prev_qber = r.qber;
    }
}

TEST(Properties, SecureFractionTendsToOne) {
    double prev = 0.0;
    for (double mu : {1e-2, 1e-4, 1e-6, 1e-9}) {
        const double f = secure_fraction(0.0, mu, 1.0);
        EXPECT_GT(f, prev);
        prev = f;
    }
    EXPECT_NEAR(prev, 1.0, 1e-6);
}

TEST(Properties, SecureFractionDecreasingInError) {
    const double threshold = secure_fraction_threshold(0.1, 1.0);
    double prev = secure_fraction(0.0, 0.1, 1.0);
    for (int k = 1; k <= 100; ++k) {
        const double f = secure_fraction(threshold * k / 100.0, 0.1, 1.0);
        EXPECT_LT(f, prev);
        prev = f;
    }
}

TEST(Properties, LitNeverBeatsDark) {
    for (const auto& name : preset_names()) {
        auto cfg = load_preset(name);
        const double lit = cfg.run().qber;
        cfg.channels = GroupSet::none();
        EXPECT_GE(lit, cfg.run().qber) << name;
    }
}
