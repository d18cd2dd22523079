// qpon: quantum key distribution over lit passive optical networks.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qpon/errors.hpp"
#include "qpon/raman.hpp"
#include "qpon/report.hpp"
#include "qpon/scenario.hpp"
#include "qpon/units.hpp"

namespace {

using nlohmann::ordered_json;
using namespace qpon;

constexpr std::uint64_t kMaxPulses = 1'000'000'000'000ULL;

struct Globals {
    std::string config;
    std::string scenario = "ngpon2";
    std::optional<std::uint64_t> seed;
    std::string format;
    std::string out;
    std::string engine;
    std::optional<std::uint64_t> pulses;
    unsigned threads = 0;
    std::string channels;
    std::optional<double> budget_db;
};

ordered_json quantity(double v, const char* unit) { return {{"value", v}, {"unit", unit}}; }

ScenarioConfig load(const Globals& g) {
    ScenarioConfig cfg = g.config.empty() ? load_preset(g.scenario) : load_scenario_file(g.config);
    if (g.seed) cfg.mc.seed = *g.seed;
    if (!g.engine.empty()) cfg.engine = parse_engine(g.engine);
    if (g.pulses) {
        if (*g.pulses == 0) throw ConfigError("--pulses must be positive");
        if (*g.pulses > kMaxPulses) throw ResourceError("--pulses exceeds the limit of 1e12");
        cfg.mc.pulses = *g.pulses;
    }
    if (g.threads) cfg.mc.threads = g.threads;
    if (!g.channels.empty()) cfg.channels = GroupSet::parse(g.channels);
    if (g.budget_db) cfg.pon.external_budget_db = *g.budget_db;
    if (!g.format.empty()) cfg.format = g.format;
    build_pon(cfg.pon);
    return cfg;
}

void emit(const Globals& g, const std::string& text) {
    if (g.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(g.out, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + g.out + "'");
    f << text;
}

std::string csv_escape(const std::string& s) {
    return s.find_first_of(",\"") == std::string::npos ? s : "\"" + s + "\"";
}

// ---------------------------------------------------------------------------

std::string cmd_plan(const ScenarioConfig& cfg) {
    const ChannelPlan plan = cfg.active_plan();
    const auto band = [](double nm) {
        try {
            return std::string(to_string(band_of(nm).name));
        } catch (const DomainError&) {
            return std::string("none");
        }
    };
    if (cfg.format == "csv") {
        std::ostringstream os;
        os << "label,kind,group,direction,wavelength_nm,frequency_thz,launch_dbm,band\n";
        for (const auto& c : plan.classical)
            os << c.label << ",classical," << to_string(c.group) << ',' << to_string(c.direction) << ','
               << format_number(c.center.nm()) << ',' << format_number(c.center.thz()) << ','
               << format_number(c.launch_dbm) << ',' << band(c.center.nm()) << "\n";
        os << "quantum,quantum,,"
           << to_string(plan.quantum_direction) << ',' << format_number(plan.quantum.center.nm()) << ','
           << format_number(plan.quantum.center.thz()) << ",," << band(plan.quantum.center.nm()) << "\n";
        return os.str();
    }
    ordered_json j;
    j["scenario"] = cfg.name;
    j["plan"] = std::string(to_string(plan.scenario));
    j["channels"] = cfg.channels.to_string();
    ordered_json arr = ordered_json::array();
    for (const auto& c : plan.classical)
        arr.push_back({{"label", c.label},
                       {"group", std::string(to_string(c.group))},
                       {"direction", std::string(to_string(c.direction))},
                       {"wavelength", quantity(c.center.nm(), "nm")},
                       {"frequency", quantity(c.center.thz(), "THz")},
                       {"launch_power", quantity(c.launch_dbm, "dBm")},
                       {"band", band(c.center.nm())}});
    j["classical"] = arr;
    j["quantum"] = {{"direction", std::string(to_string(plan.quantum_direction))},
                    {"wavelength", quantity(plan.quantum.center.nm(), "nm")},
                    {"frequency", quantity(plan.quantum.center.thz(), "THz")},
                    {"mean_photon_number", quantity(plan.quantum.mean_photon_number, "photons/symbol")},
                    {"symbol_rate", quantity(plan.quantum.symbol_rate_hz, "Hz")},
                    {"band", band(plan.quantum.center.nm())}};
    j["receiver_band"] = {quantity(plan.receiver_band_lo_nm, "nm"), quantity(plan.receiver_band_hi_nm, "nm")};
    return j.dump(2) + "\n";
}

std::string cmd_budget(const ScenarioConfig& cfg) {
    const PonTopology t = build_pon(cfg.pon);
    const ChannelPlan plan = cfg.active_plan();
    std::vector<SignalEvolution> evo{signal_evolution(t, plan.quantum)};
    for (const auto& c : plan.classical) {
        evo.push_back(signal_evolution(t, c));
        if (c.direction == Direction::downstream) evo.push_back(leakage_evolution(t, c));
    }
    const double q_loss = quantum_path_loss_db(cfg.link_inputs());
    if (cfg.format == "csv") {
        std::ostringstream os;
        os << "channel,point,element,cumulative_loss_db,level,unit\n";
        for (const auto& e : evo)
            for (const auto& p : e.points)
                os << csv_escape(e.channel) << ',' << p.point << ',' << csv_escape(p.element) << ','
                   << format_number(p.cumulative_loss_db) << ',' << format_number(p.level) << ',' << e.unit << "\n";
        return os.str();
    }
    ordered_json j;
    j["scenario"] = cfg.name;
    j["quantum_path_loss"] = quantity(q_loss, "dB");
    ordered_json arr = ordered_json::array();
    for (const auto& e : evo) {
        ordered_json pts = ordered_json::array();
        for (const auto& p : e.points)
            pts.push_back({{"point", p.point},
                           {"element", p.element},
                           {"cumulative_loss", quantity(p.cumulative_loss_db, "dB")},
                           {"level", quantity(p.level, e.unit.c_str())}});
        arr.push_back({{"channel", e.channel},
                       {"wavelength", quantity(e.path.wavelength_nm, "nm")},
                       {"total_loss", quantity(e.path.total_loss_db(), "dB")},
                       {"points", pts}});
    }
    j["paths"] = arr;
    return j.dump(2) + "\n";
}

struct RamanArgs {
    std::string mode = "breakdown";
    std::string view = "upstream";
    double from_nm = 1250.0;
    double to_nm = 1650.0;
    double step_nm = 1.0;
    double resolution_nm = 0.1;
    std::string splits = "4,8,16,32";
    std::string feeders = "1,5,10,15,20";
};

std::vector<double> number_list(const std::string& text, const std::string& kind) {
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_quantity(item, kind, true));
    if (out.empty()) throw ConfigError("empty list '" + text + "'");
    return out;
}

std::string cmd_raman(const ScenarioConfig& cfg, const RamanArgs& a) {
    const LinkInputs in = cfg.link_inputs();
    const CountingReceiver rx{cfg.detector.efficiency, cfg.interferometer.insertion_loss_db};
    if (a.mode == "breakdown") {
        const RamanBreakdown b = inband_raman_counts(in.topology, in.plan, in.raman, rx, in.raman_options);
        if (cfg.format == "csv") {
            std::ostringstream os;
            os << "source,source_direction,span,geometry,mechanism,power_w,counts_per_s\n";
            for (const auto& c : b.contributions)
                os << csv_escape(c.source) << ',' << to_string(c.source_direction) << ',' << to_string(c.span) << ','
                   << to_string(c.geometry) << ',' << c.mechanism << ',' << format_number(c.power_w) << ','
                   << format_number(c.counts_per_s) << "\n";
            return os.str();
        }
        ordered_json j;
        j["scenario"] = cfg.name;
        j["total_counts"] = quantity(b.total_counts_per_s, "1/s");
        j["from_upstream_pumps"] = quantity(b.counts_from(Direction::upstream), "1/s");
        j["from_downstream_pumps"] = quantity(b.counts_from(Direction::downstream), "1/s");
        ordered_json arr = ordered_json::array();
        for (const auto& c : b.contributions)
            arr.push_back({{"source", c.source},
                           {"source_direction", std::string(to_string(c.source_direction))},
                           {"span", std::string(to_string(c.span))},
                           {"geometry", std::string(to_string(c.geometry))},
                           {"mechanism", c.mechanism},
                           {"power", quantity(c.power_w, "W")},
                           {"counts", quantity(c.counts_per_s, "1/s")}});
        j["contributions"] = arr;
        return j.dump(2) + "\n";
    }
    if (a.mode == "spectrum") {
        if (!(a.step_nm > 0.0) || !(a.to_nm >= a.from_nm)) throw ConfigError("spectrum grid needs --to >= --from and --step > 0");
        const double n = std::floor((a.to_nm - a.from_nm) / a.step_nm + 1e-9) + 1.0;
        if (n > 1e6) throw ResourceError("spectrum grid exceeds 1e6 points");
        std::vector<double> grid;
        for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) grid.push_back(a.from_nm + static_cast<double>(i) * a.step_nm);
        const auto s = raman_spectrum(in.topology, in.plan, in.raman, parse_spectrum_view(a.view), grid,
                                      a.resolution_nm, rx, {}, in.raman_options);
        if (cfg.format == "csv") {
            std::ostringstream os;
            os << "wavelength_nm,counts_per_s\n";
            for (const auto& p : s) os << format_number(p.wavelength_nm) << ',' << format_number(p.counts_per_s) << "\n";
            return os.str();
        }
        ordered_json j;
        j["scenario"] = cfg.name;
        j["view"] = a.view;
        j["resolution"] = quantity(a.resolution_nm, "nm");
        ordered_json arr = ordered_json::array();
        for (const auto& p : s) arr.push_back({{"wavelength", quantity(p.wavelength_nm, "nm")}, {"counts", quantity(p.counts_per_s, "1/s")}});
        j["spectrum"] = arr;
        return j.dump(2) + "\n";
    }
    if (a.mode == "grid") {
        const auto splits = number_list(a.splits, "number");
        const auto feeders = number_list(a.feeders, "length");
        if (splits.size() * feeders.size() > 100000) throw ResourceError("Raman grid exceeds 1e5 points");
        std::ostringstream os;
        ordered_json arr = ordered_json::array();
        os << "split,feeder_up_km,raman_cps,from_upstream_cps,from_downstream_cps\n";
        for (double n : splits) {
            for (double f : feeders) {
                ScenarioConfig c = cfg;
                apply_parameter(c, "topology.split", n);
                apply_parameter(c, "topology.feeder_up", f);
                const LinkInputs li = c.link_inputs();
                const auto b = inband_raman_counts(li.topology, li.plan, li.raman, rx, li.raman_options);
                const double up = b.counts_from(Direction::upstream), down = b.counts_from(Direction::downstream);
                os << format_number(n) << ',' << format_number(f) << ',' << format_number(b.total_counts_per_s) << ','
                   << format_number(up) << ',' << format_number(down) << "\n";
                arr.push_back({{"split", n},
                               {"feeder_up", quantity(f, "km")},
                               {"counts", quantity(b.total_counts_per_s, "1/s")},
                               {"from_upstream_pumps", quantity(up, "1/s")},
                               {"from_downstream_pumps", quantity(down, "1/s")}});
            }
        }
        if (cfg.format == "csv") return os.str();
        ordered_json j;
        j["scenario"] = cfg.name;
        j["grid"] = arr;
        return j.dump(2) + "\n";
    }
    throw ConfigError("unknown raman mode '" + a.mode + "' (expected breakdown, spectrum or grid)");
}

std::string summary(const LinkReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "raw %.4g b/s, QBER %.3f%% (3 sigma %.3f%%), secure %.4g b/s (%.3g bits/pulse)\n",
                  r.raw_rate_bps, 100.0 * r.qber, 100.0 * r.qber_3sigma, r.secure_rate_bps, r.secure_bits_per_pulse);
    return buf;
}

std::string cmd_qkd(const ScenarioConfig& cfg) {
    const LinkReport r = cfg.run();
    std::cerr << summary(r);
    return cfg.format == "csv" ? link_report_csv(r) : link_report_json(r, cfg.name);
}

std::string cmd_sweep(const ScenarioConfig& cfg, const std::vector<std::string>& params, unsigned threads) {
    SweepSpec spec;
    for (const auto& p : params) spec.axes.push_back(parse_sweep_axis(p));
    const auto rows = run_sweep(cfg, spec, threads);
    return cfg.format == "csv" ? sweep_csv(spec, rows) : sweep_json(spec, rows, cfg.name);
}

std::string cmd_toggle(const ScenarioConfig& cfg, const std::string& groups_text) {
    std::vector<ChannelGroup> groups;
    std::stringstream ss(groups_text);
    for (std::string g; std::getline(ss, g, ',');) groups.push_back(parse_channel_group(g));
    const auto rows = channel_toggle_study(cfg, groups);
    return cfg.format == "csv" ? toggle_csv(rows) : toggle_json(rows, cfg.name);
}

std::string cmd_calibrate(const std::string& anchors_path) {
    const std::string path = anchors_path.empty() ? data_dir() + "/anchors.yaml" : anchors_path;
    const CalibrationRun run = run_calibration(path);
    std::cerr << "receiver fit: QBER rise " << run.receiver.qber_rise << " over the dynamic range, "
              << run.receiver.iterations << " iterations\n";
    for (const auto& r : run.receiver.residuals) {
        std::cerr << "  " << r.budget_db << " dB: " << r.model_rate_bps << " b/s, QBER " << r.model_qber;
        if (r.rate_rel_error) std::cerr << " (rate " << 100.0 * *r.rate_rel_error << "%)";
        if (r.qber_error) std::cerr << " (QBER " << 100.0 * *r.qber_error << " pp)";
        std::cerr << "\n";
    }
    std::cerr << "Raman fit: scale " << run.raman.scale << " 1/(km*GHz), FBG extra loss "
              << run.raman.fbg_extra_path_loss_db << " dB" << (run.raman.fbg_bound_active ? " (at bound)" : "") << "\n";
    for (std::size_t i = 0; i < run.raman_anchor_names.size(); ++i)
        std::cerr << "  " << run.raman_anchor_names[i] << ": measured " << run.raman_measured[i] << " c/s, residual "
                  << 100.0 * run.raman.relative_residuals[i] << "%\n";
    return format_calibration(run.values);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum key distribution over lit passive optical networks"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "Scenario file")->check(CLI::ExistingFile);
    app.add_option("--scenario", g.scenario, "Preset name");
    app.add_option("--seed", g.seed, "Monte Carlo seed");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--out", g.out, "Output file (default stdout)");
    app.add_option("--engine", g.engine, "analytic or mc")->check(CLI::IsMember({"analytic", "mc"}));
    app.add_option("--pulses", g.pulses, "Monte Carlo pulse count");
    app.add_option("--threads", g.threads, "Worker threads (0: all cores)");
    app.add_option("--channels", g.channels, "Channel groups that are on: all, none or a list of wired_ds, overlay_ds, us");
    app.add_option("--budget", g.budget_db, "External attenuator in dB replacing the plant on the quantum path");

    auto* plan = app.add_subcommand("plan", "Channel plan");
    auto* budget = app.add_subcommand("budget", "Power budget along every lightpath");
    RamanArgs ra;
    auto* raman = app.add_subcommand("raman", "Raman noise");
    raman->add_option("--mode", ra.mode, "breakdown, spectrum or grid")->check(CLI::IsMember({"breakdown", "spectrum", "grid"}));
    raman->add_option("--view", ra.view, "Spectrum observation point: upstream or downstream");
    raman->add_option("--from", ra.from_nm, "Spectrum start (nm)");
    raman->add_option("--to", ra.to_nm, "Spectrum end (nm)");
    raman->add_option("--step", ra.step_nm, "Spectrum step (nm)");
    raman->add_option("--resolution", ra.resolution_nm, "Analyzer resolution (nm)");
    raman->add_option("--splits", ra.splits, "Grid split ratios");
    raman->add_option("--feeders", ra.feeders, "Grid upstream feeder lengths (km)");
    auto* qkd = app.add_subcommand("qkd", "QKD link report");
    std::vector<std::string> params;
    auto* sweep = app.add_subcommand("sweep", "Parameter sweep");
    sweep->add_option("--param", params, "PATH=start:stop:step or PATH=v1,v2 (up to three)")->required();
    std::string groups = "wired_ds,overlay_ds,us";
    auto* toggle = app.add_subcommand("toggle", "Channel on/off study");
    toggle->add_option("--groups", groups, "Channel groups to toggle");
    std::string anchors;
    auto* calibrate = app.add_subcommand("calibrate", "Fit receiver and Raman parameters to the anchors");
    calibrate->add_option("--anchors", anchors, "Anchors file (default data/anchors.yaml)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::config);
    }

    try {
        std::string text;
        if (*calibrate) {
            text = cmd_calibrate(anchors);
        } else {
            const ScenarioConfig cfg = load(g);
            if (*plan) text = cmd_plan(cfg);
            else if (*budget) text = cmd_budget(cfg);
            else if (*raman) text = cmd_raman(cfg, ra);
            else if (*qkd) text = cmd_qkd(cfg);
            else if (*sweep) text = cmd_sweep(cfg, params, g.threads);
            else if (*toggle) text = cmd_toggle(cfg, groups);
        }
        emit(g, text);
    } catch (const Error& e) {
        std::cerr << "qpon: error: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const std::bad_alloc&) {
        std::cerr << "qpon: error: out of memory\n";
        return static_cast<int>(ExitCode::resource);
    }
    return 0;
}
