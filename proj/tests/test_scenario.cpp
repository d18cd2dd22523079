#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"
#include "qpon/errors.hpp"
#include "qpon/report.hpp"
#include "qpon/scenario.hpp"

using namespace qpon;

namespace {

std::string message_of(const std::string& yaml) {
    try {
        parse_scenario(yaml, "test.yaml");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Quantities, Units) {
    EXPECT_DOUBLE_EQ(parse_quantity("256 m", "length"), 0.256);
    EXPECT_DOUBLE_EQ(parse_quantity("13.2 km", "length"), 13.2);
    EXPECT_DOUBLE_EQ(parse_quantity("1310.55 nm", "wavelength"), 1310.55);
    EXPECT_DOUBLE_EQ(parse_quantity("0.8 THz", "bandwidth"), 800.0);
    EXPECT_DOUBLE_EQ(parse_quantity("10.1 kHz", "rate"), 10100.0);
    EXPECT_DOUBLE_EQ(parse_quantity("-1.1 dBm", "power"), -1.1);
    EXPECT_DOUBLE_EQ(parse_quantity("50 us", "time"), 50e-6);
    EXPECT_DOUBLE_EQ(parse_quantity("0.39 dB/km", "attenuation"), 0.39);
    EXPECT_DOUBLE_EQ(parse_quantity("7", "ratio", true), 7.0);
    EXPECT_THROW(parse_quantity("13.2", "length"), ConfigError);
    EXPECT_THROW(parse_quantity("13.2 kg", "length"), ConfigError);
    EXPECT_THROW(parse_quantity("fast", "rate"), ConfigError);
    EXPECT_THROW(parse_quantity("0.1 dB", "number"), ConfigError);
    EXPECT_THROW(parse_quantity("1", "colour"), ConfigError);
}

TEST(ScenarioParse, Minimal) {
    const auto cfg = parse_scenario("plan: {preset: gpon}\ncalibration: none\n");
    EXPECT_EQ(cfg.full_plan.scenario, PlanScenario::gpon);
    EXPECT_TRUE(cfg.channels.us);
    EXPECT_EQ(cfg.engine, EngineKind::analytic);
    EXPECT_DOUBLE_EQ(cfg.detector.dark_rate_hz, 520.0);
}

TEST(ScenarioParse, FullDocument) {
    const auto cfg = parse_scenario(R"(
name: custom
calibration: none
plan:
  preset: ngpon2
  channels: [us, wired_ds]
topology:
  feeder_up: 5 km
  drop: 1 km
  split: 32
  onu_reflectance: -35 dB
  receiver_filters:
    - {kind: rb_waveband, passband: [1250 nm, 1410 nm]}
    - {kind: lan_wdm, center: 1310.55 nm, width: 0.4 THz, insertion_loss: 1.5 dB}
source: {model: phase_modulator, mu: 0.2, symbol_rate: 2 GHz}
detector: {efficiency: 0.2, dark_rate: 100 Hz, dead_time: 10 us, gate_duty: 0.5}
interferometer: {visibility: 0.99, insertion_loss: 3 dB}
raman: {temperature: 290 K, scale: 1e-10 1/(km*GHz), upstream_duty_cycle: 0.5}
security: {ec_inefficiency: 1.2}
engine: {type: mc, pulses: 1e6, seed: 18446744073709551615, pattern: random, threads: 2}
output: {format: csv, acquisition_time: 10 s}
)");
    EXPECT_EQ(cfg.name, "custom");
    EXPECT_TRUE(cfg.channels.us && cfg.channels.wired_ds && !cfg.channels.overlay_ds);
    EXPECT_EQ(cfg.active_plan().count(ChannelGroup::overlay_ds), 0U);
    EXPECT_GT(cfg.active_plan().count(ChannelGroup::us), 0U);
    EXPECT_DOUBLE_EQ(cfg.pon.feeder_up_km, 5.0);
    EXPECT_DOUBLE_EQ(cfg.pon.feeder_down_km, 15.2);
    EXPECT_DOUBLE_EQ(cfg.pon.drop_km, 1.0);
    EXPECT_EQ(cfg.pon.splitter.branches, 32);
    EXPECT_DOUBLE_EQ(*cfg.pon.onu_reflectance_db, -35.0);
    ASSERT_EQ(cfg.pon.receiver_filters.size(), 2U);
    EXPECT_DOUBLE_EQ(cfg.pon.receiver_filters[1].width_ghz, 400.0);
    EXPECT_DOUBLE_EQ(cfg.pon.receiver_filters[1].insertion_loss_db, 1.5);
    EXPECT_EQ(cfg.source.model, "phase_modulator");
    EXPECT_DOUBLE_EQ(cfg.source.mean_photon_number, 0.2);
    EXPECT_DOUBLE_EQ(cfg.full_plan.quantum.mean_photon_number, 0.2);
    EXPECT_DOUBLE_EQ(cfg.full_plan.quantum.symbol_rate_hz, 2e9);
    EXPECT_DOUBLE_EQ(cfg.detector.dead_time_s, 10e-6);
    EXPECT_DOUBLE_EQ(cfg.interferometer.insertion_loss_db, 3.0);
    EXPECT_DOUBLE_EQ(cfg.raman.scale(), 1e-10);
    EXPECT_DOUBLE_EQ(cfg.raman_options.upstream_duty_cycle, 0.5);
    EXPECT_DOUBLE_EQ(cfg.ec_inefficiency, 1.2);
    EXPECT_EQ(cfg.engine, EngineKind::mc);
    EXPECT_EQ(cfg.mc.pulses, 1000000U);
    EXPECT_EQ(cfg.mc.seed, 18446744073709551615ULL);
    EXPECT_EQ(cfg.mc.pattern, BitPattern::random);
    EXPECT_EQ(cfg.format, "csv");
    EXPECT_DOUBLE_EQ(cfg.acquisition_s, 10.0);
}

TEST(ScenarioParse, UnknownKeyHasLocation) {
    const auto msg = message_of("calibration: none\nplan: {preset: gpon}\ntopology:\n  feeder_upp: 3 km\n");
    EXPECT_NE(msg.find("test.yaml:4:3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("topology.feeder_upp"), std::string::npos) << msg;
}

TEST(ScenarioParse, MissingUnitHasLocation) {
    const auto msg = message_of("calibration: none\ntopology:\n  feeder_up: 3\n");
    EXPECT_NE(msg.find("test.yaml:3:14"), std::string::npos) << msg;
    EXPECT_NE(msg.find("needs a unit"), std::string::npos) << msg;
}

TEST(ScenarioParse, Rejections) {
    EXPECT_FALSE(message_of("calibration: none\nplan: {preset: xgpon}\n").empty());
    EXPECT_FALSE(message_of("calibration: none\nplan: {preset: gpon, channels: [us, bogus]}\n").empty());
    EXPECT_FALSE(message_of("calibration: none\ntopology: {split: 24}\n").empty());
    EXPECT_FALSE(message_of("calibration: none\nsource: {mu: 2}\n").empty());
    EXPECT_FALSE(message_of("calibration: none\nengine: {type: quantum}\n").empty());
    EXPECT_FALSE(message_of("calibration: none\ntopology: {receiver_filters: [{kind: fbg}]}\n").empty());
    EXPECT_FALSE(message_of("calibration: none\ntopology: {receiver_filters: [{kind: rb_waveband, passband: [1 nm]}]}\n").empty());
    EXPECT_FALSE(message_of("calibration: none\nplan: {preset: gpon\n").empty());
    EXPECT_FALSE(message_of("[1, 2]\n").empty());
    EXPECT_FALSE(message_of("calibration: none\nsecurity: {ec_inefficiency: 0.9}\n").empty());
}

TEST(ScenarioParse, CalibrationPrecedence) {
    const auto cfg = parse_scenario(R"(
calibration:
  receiver: {dead_time: 40 us, visibility: 0.98, insertion_loss: 12 dB}
  raman: {scale: 2e-10 1/(km*GHz), fbg_extra_path_loss: 0.5 dB}
interferometer: {visibility: 0.99}
topology:
  receiver_filters:
    - {kind: rb_waveband, passband: [1250 nm, 1410 nm]}
    - {kind: fbg, center: 1310.55 nm}
    - {kind: fbg, center: 1310.55 nm, extra_path_loss: 1 dB}
)");
    EXPECT_DOUBLE_EQ(cfg.detector.dead_time_s, 40e-6);
    EXPECT_DOUBLE_EQ(cfg.interferometer.visibility, 0.99);
    EXPECT_DOUBLE_EQ(cfg.interferometer.insertion_loss_db, 12.0);
    EXPECT_DOUBLE_EQ(cfg.raman.scale(), 2e-10);
    EXPECT_DOUBLE_EQ(cfg.pon.receiver_filters[1].extra_path_loss_db, 0.5);
    EXPECT_DOUBLE_EQ(cfg.pon.receiver_filters[2].extra_path_loss_db, 1.0);
}

TEST(ScenarioParse, CalibrationRoundTrip) {
    CalibrationValues v;
    v.dead_time_s = 5.9e-5;
    v.afterpulse_factor = 0.0282;
    v.gate_signal_fraction = 0.95;
    v.visibility = 0.986;
    v.receiver_loss_db = 13.97;
    v.raman_scale = 5.1e-10;
    v.fbg_extra_path_loss_db = -1.0;
    const auto back = parse_calibration(format_calibration(v));
    EXPECT_DOUBLE_EQ(*back.dead_time_s, 5.9e-5);
    EXPECT_DOUBLE_EQ(*back.afterpulse_factor, 0.0282);
    EXPECT_DOUBLE_EQ(*back.visibility, 0.986);
    EXPECT_DOUBLE_EQ(*back.receiver_loss_db, 13.97);
    EXPECT_DOUBLE_EQ(*back.raman_scale, 5.1e-10);
    EXPECT_DOUBLE_EQ(*back.fbg_extra_path_loss_db, -1.0);
    EXPECT_THROW(parse_calibration("receiver: {deadtime: 1 s}\n"), ConfigError);
}

TEST(Presets, AllLoadAndRun) {
    const auto names = preset_names();
    for (const char* n : {"dark", "gpon", "ngpon2", "ngpon2-lan", "ngpon2-pm"})
        EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
    for (const auto& n : names) {
        const auto cfg = load_preset(n);
        const auto r = cfg.run();
        EXPECT_GT(r.raw_rate_bps, 0.0) << n;
    }
    EXPECT_THROW(load_preset("nope"), ConfigError);
}

TEST(Presets, FrozenCalibrationMatchesAFreshFit) {
    const auto frozen = load_calibration_file(data_dir() + "/calibration.yaml");
    const auto run = run_calibration(data_dir() + "/anchors.yaml");
    EXPECT_NEAR(*run.values.dead_time_s / *frozen.dead_time_s, 1.0, 1e-6);
    EXPECT_NEAR(*run.values.afterpulse_factor / *frozen.afterpulse_factor, 1.0, 1e-6);
    EXPECT_NEAR(*run.values.visibility, *frozen.visibility, 1e-9);
    EXPECT_NEAR(*run.values.receiver_loss_db, *frozen.receiver_loss_db, 1e-6);
    EXPECT_NEAR(*run.values.raman_scale / *frozen.raman_scale, 1.0, 1e-6);
    EXPECT_NEAR(*run.values.fbg_extra_path_loss_db, *frozen.fbg_extra_path_loss_db, 1e-6);
}

TEST(Sweep, AxisParsing) {
    const auto a = parse_sweep_axis("topology.budget=3.5:26:0.5");
    EXPECT_EQ(a.values.size(), 46U);
    EXPECT_DOUBLE_EQ(a.values.back(), 26.0);
    const auto b = parse_sweep_axis("topology.feeder_up.length=1,5,10 km");
    EXPECT_EQ(b.path, "topology.feeder_up");
    EXPECT_EQ(b.values, (std::vector<double>{1.0, 5.0, 10.0}));
    EXPECT_EQ(parse_sweep_axis("topology.drop=100,200 m").values, (std::vector<double>{0.1, 0.2}));
    EXPECT_THROW(parse_sweep_axis("topology.colour=1,2"), ConfigError);
    EXPECT_THROW(parse_sweep_axis("topology.budget"), ConfigError);
    EXPECT_THROW(parse_sweep_axis("topology.budget=5:1:1"), ConfigError);
    EXPECT_THROW(parse_sweep_axis("topology.budget=0:1e9:1"), ResourceError);
}

TEST(Sweep, BudgetSweep) {
    const auto base = load_preset("dark");
    SweepSpec spec{{parse_sweep_axis("topology.budget=3.5:26:0.5")}};
    const auto rows = run_sweep(base, spec, 2);
    ASSERT_EQ(rows.size(), 46U);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_GT(rows[i].params[0], rows[i - 1].params[0]);
        if (rows[i].params[0] >= 5.0) EXPECT_LT(rows[i].report.raw_rate_bps, rows[i - 1].report.raw_rate_bps);
    }
}

TEST(Sweep, SinglePointMatchesRun) {
    const auto base = load_preset("ngpon2");
    SweepSpec spec{{parse_sweep_axis("topology.feeder_up=13.2 km")}};
    const auto rows = run_sweep(base, spec);
    ASSERT_EQ(rows.size(), 1U);
    const auto csv = sweep_csv(spec, rows);
    const auto direct = link_report_csv(base.run());
    const auto direct_row = direct.substr(direct.find('\n') + 1);
    EXPECT_NE(csv.find("13.2," + direct_row), std::string::npos);
}

TEST(Sweep, GridOrderAndLimits) {
    const auto base = load_preset("ngpon2");
    SweepSpec spec{{parse_sweep_axis("topology.split=4,8,16,32"), parse_sweep_axis("topology.feeder_up=1,5,10,15,20 km")}};
    const auto rows = run_sweep(base, spec, 3);
    ASSERT_EQ(rows.size(), 20U);
    EXPECT_EQ(rows[0].params, (std::vector<double>{4.0, 1.0}));
    EXPECT_EQ(rows[1].params, (std::vector<double>{4.0, 5.0}));
    EXPECT_EQ(rows[5].params, (std::vector<double>{8.0, 1.0}));
    // Identical regardless of worker count.
    EXPECT_EQ(sweep_csv(spec, rows), sweep_csv(spec, run_sweep(base, spec, 1)));

    SweepSpec big{{parse_sweep_axis("topology.budget=0:99:1"), parse_sweep_axis("topology.drop=0:99:1 m"),
                   parse_sweep_axis("source.mu=0.01:0.11:0.01")}};
    EXPECT_THROW(run_sweep(base, big), ResourceError);
    SweepSpec four{{parse_sweep_axis("topology.budget=1"), parse_sweep_axis("topology.drop=1 m"),
                    parse_sweep_axis("source.mu=0.1"), parse_sweep_axis("detector.gate_duty=0.3")}};
    EXPECT_THROW(run_sweep(base, four), ResourceError);
    SweepSpec bad{{parse_sweep_axis("topology.split=3")}};
    EXPECT_THROW(run_sweep(base, bad), ConfigError);
}

TEST(Toggle, LabelsAndReference) {
    const auto rows = channel_toggle_study(load_preset("ngpon2"), {ChannelGroup::wired_ds, ChannelGroup::overlay_ds,
                                                                    ChannelGroup::us});
    ASSERT_EQ(rows.size(), 8U);
    EXPECT_TRUE(rows.front().groups.empty());
    EXPECT_EQ(rows.front().delta_qber, 0.0);
    std::map<std::string, double> by_label;
    for (const auto& r : rows)
        if (!r.label.empty()) by_label[r.label] = r.delta_qber;
    EXPECT_EQ(by_label.size(), 3U);
    EXPECT_TRUE(by_label.count("H") && by_label.count("J") && by_label.count("K"));
    for (const auto& r : rows) EXPECT_GE(r.delta_qber, 0.0);
    EXPECT_THROW(channel_toggle_study(load_preset("ngpon2"), {ChannelGroup::us, ChannelGroup::us}), ConfigError);
    EXPECT_THROW(channel_toggle_study(load_preset("ngpon2"), {}), ConfigError);
}

TEST(Reports, JsonCarriesUnits) {
    const auto r = load_preset("ngpon2").run();
    const auto j = nlohmann::json::parse(link_report_json(r, "ngpon2"));
    for (const auto& [key, value] : j["link"].items()) {
        if (key == "engine") continue;
        ASSERT_TRUE(value.is_object()) << key;
        EXPECT_TRUE(value.contains("unit")) << key;
        EXPECT_TRUE(value.contains("value")) << key;
    }
    EXPECT_EQ(j["link"]["raw_rate"]["unit"], "b/s");
    EXPECT_DOUBLE_EQ(j["link"]["qber"]["value"].get<double>(), r.qber);
}

TEST(Reports, StableCsvHeader) {
    const auto csv = link_report_csv(load_preset("dark").run());
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "total_loss,signal_cps,raman_cps,dark_cps,leakage_cps,afterpulse_cps,raman_spad_cps,raw_rate,"
              "raw_rate_3sigma,qber,qber_3sigma,secure_fraction,secure_rate,secure_bits_per_pulse");
}

TEST(Reports, ByteIdenticalAcrossRuns) {
    auto cfg = load_preset("dark");
    cfg.engine = EngineKind::mc;
    cfg.mc.pulses = 2'000'000;
    cfg.mc.seed = 7;
    EXPECT_EQ(link_report_json(cfg.run(), cfg.name), link_report_json(cfg.run(), cfg.name));
    cfg.engine = EngineKind::analytic;
    EXPECT_EQ(link_report_csv(cfg.run()), link_report_csv(cfg.run()));
}

TEST(Scenario, EmptyPlanLosslessPlantHitsVisibilityFloor) {
    auto cfg = parse_scenario("calibration: none\nplan: {preset: ngpon2, channels: none}\ntopology: {budget: 0 dB}\n"
                              "detector: {dark_rate: 0 Hz}\ninterferometer: {visibility: 0.96}\n");
    EXPECT_NEAR(cfg.run().qber, 0.02, 1e-15);
}
