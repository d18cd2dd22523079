#include "qpon/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <yaml-cpp/yaml.h>

#include "qpon/errors.hpp"

namespace qpon {

namespace fs = std::filesystem;

EngineKind parse_engine(std::string_view name) {
    if (name == "analytic") return EngineKind::analytic;
    if (name == "mc") return EngineKind::mc;
    throw ConfigError("unknown engine '" + std::string(name) + "' (expected analytic or mc)");
}

std::string_view to_string(EngineKind e) { return e == EngineKind::analytic ? "analytic" : "mc"; }

std::string data_dir() {
    if (const char* env = std::getenv("QPON_DATA_DIR"); env && *env) return env;
#ifdef QPON_SOURCE_DATA_DIR
    if (fs::exists(QPON_SOURCE_DATA_DIR)) return QPON_SOURCE_DATA_DIR;
#endif
#ifdef QPON_INSTALL_DATA_DIR
    return QPON_INSTALL_DATA_DIR;
#else
    return "data";
#endif
}

// ---------------------------------------------------------------------------
// Quantities

namespace {

const std::map<std::string, std::map<std::string, double>>& unit_tables() {
    static const std::map<std::string, std::map<std::string, double>> t{
        {"length", {{"km", 1.0}, {"m", 1e-3}}},
        {"wavelength", {{"nm", 1.0}, {"um", 1e3}}},
        {"bandwidth", {{"GHz", 1.0}, {"THz", 1e3}, {"MHz", 1e-3}}},
        {"rate", {{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}, {"cps", 1.0}, {"c/s", 1.0},
                  {"Bd", 1.0}, {"kBd", 1e3}, {"GBd", 1e9}, {"b/s", 1.0}, {"kb/s", 1e3}}},
        {"power", {{"dBm", 1.0}}},
        {"ratio", {{"dB", 1.0}}},
        {"time", {{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}}},
        {"temperature", {{"K", 1.0}}},
        {"attenuation", {{"dB/km", 1.0}}},
        {"raman_scale", {{"1/(km*GHz)", 1.0}}},
        {"number", {}},
    };
    return t;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

double parse_quantity(const std::string& text_in, const std::string& kind, bool allow_bare) {
    const auto& tables = unit_tables();
    auto table = tables.find(kind);
    if (table == tables.end()) throw ConfigError("unknown quantity kind '" + kind + "'");
    const std::string text = trim(text_in);
    const char* begin = text.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || !std::isfinite(v)) throw ConfigError("expected a number, got '" + text + "'");
    const std::string unit = trim(std::string(end));
    if (kind == "number") {
        if (!unit.empty()) throw ConfigError("'" + text + "' must be a plain number");
        return v;
    }
    if (unit.empty()) {
        if (allow_bare) return v;
        std::string units;
        for (const auto& [u, f] : table->second) units += (units.empty() ? "" : ", ") + u;
        throw ConfigError("'" + text + "' needs a unit (" + units + ")");
    }
    auto it = table->second.find(unit);
    if (it == table->second.end()) throw ConfigError("unit '" + unit + "' is not valid for a " + kind);
    return v * it->second;
}

// ---------------------------------------------------------------------------
// YAML helpers with location-aware diagnostics

namespace {

struct Doc {
    std::string origin;
    fs::path base_dir;
    bool calibrated = true;

    [[noreturn]] void fail(const YAML::Node& n, const std::string& field, const std::string& msg) const {
        std::ostringstream os;
        os << origin;
        const auto m = n.Mark();
        if (!m.is_null()) os << ':' << m.line + 1 << ':' << m.column + 1;
        os << ": " << field << ": " << msg;
        throw ConfigError(os.str());
    }

    void keys(const YAML::Node& n, const std::string& field, std::initializer_list<const char*> allowed) const {
        if (!n.IsMap()) fail(n, field, "expected a mapping");
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
                fail(kv.first, field.empty() ? key : field + "." + key, "unknown key");
        }
    }

    std::string text(const YAML::Node& n, const std::string& field) const {
        if (!n.IsScalar()) fail(n, field, "expected a scalar value");
        return n.Scalar();
    }

    double quantity(const YAML::Node& n, const std::string& field, const std::string& kind) const {
        const auto s = text(n, field);
        try {
            return parse_quantity(s, kind);
        } catch (const ConfigError& e) {
            fail(n, field, e.what());
        }
    }

    double number(const YAML::Node& n, const std::string& field) const { return quantity(n, field, "number"); }

    std::uint64_t integer(const YAML::Node& n, const std::string& field) const {
        const auto s = trim(text(n, field));
        if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos) {
            try {
                return std::stoull(s);
            } catch (const std::exception&) {
                fail(n, field, "integer out of range");
            }
        }
        const double v = number(n, field);
        if (!(v >= 0.0) || v != std::floor(v) || v > 1.8e19) fail(n, field, "expected a non-negative integer");
        return static_cast<std::uint64_t>(v);
    }

    template <class F>
    void with(const YAML::Node& parent, const char* key, F&& f) const {
        const YAML::Node n = parent[key];
        if (n) f(n);
    }

    // Run a validation step and attach the node location to any ConfigError.
    template <class F>
    auto checked(const YAML::Node& n, const std::string& field, F&& f) const {
        try {
            return f();
        } catch (const ConfigError& e) {
            fail(n, field, e.what());
        }
    }
};

YAML::Node load_yaml(const std::string& text, const std::string& origin) {
    try {
        return YAML::Load(text);
    } catch (const YAML::Exception& e) {
        std::ostringstream os;
        os << origin;
        if (!e.mark.is_null()) os << ':' << e.mark.line + 1 << ':' << e.mark.column + 1;
        os << ": " << e.msg;
        throw ConfigError(os.str());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CalibrationValues parse_calibration_node(const Doc& d, const YAML::Node& root) {
    CalibrationValues c;
    d.keys(root, "calibration", {"receiver", "raman"});
    d.with(root, "receiver", [&](const YAML::Node& r) {
        d.keys(r, "receiver", {"dead_time", "afterpulse_factor", "gate_signal_fraction", "visibility", "insertion_loss"});
        d.with(r, "dead_time", [&](auto n) { c.dead_time_s = d.quantity(n, "receiver.dead_time", "time"); });
        d.with(r, "afterpulse_factor", [&](auto n) { c.afterpulse_factor = d.number(n, "receiver.afterpulse_factor"); });
        d.with(r, "gate_signal_fraction", [&](auto n) { c.gate_signal_fraction = d.number(n, "receiver.gate_signal_fraction"); });
        d.with(r, "visibility", [&](auto n) { c.visibility = d.number(n, "receiver.visibility"); });
        d.with(r, "insertion_loss", [&](auto n) { c.receiver_loss_db = d.quantity(n, "receiver.insertion_loss", "ratio"); });
    });
    d.with(root, "raman", [&](const YAML::Node& r) {
        d.keys(r, "raman", {"scale", "fbg_extra_path_loss"});
        d.with(r, "scale", [&](auto n) { c.raman_scale = d.quantity(n, "raman.scale", "raman_scale"); });
        d.with(r, "fbg_extra_path_loss", [&](auto n) { c.fbg_extra_path_loss_db = d.quantity(n, "raman.fbg_extra_path_loss", "ratio"); });
    });
    return c;
}

}  // namespace

CalibrationValues parse_calibration(const std::string& yaml_text, const std::string& origin) {
    Doc d{origin, {}};
    const auto root = load_yaml(yaml_text, origin);
    if (!root || root.IsNull()) return {};
    return parse_calibration_node(d, root);
}

CalibrationValues load_calibration_file(const std::string& path) { return parse_calibration(read_file(path), path); }

std::string format_calibration(const CalibrationValues& c) {
    std::ostringstream os;
    os.precision(12);
    os << "# Receiver and Raman parameters fitted by `qpon calibrate`.\n";
    os << "receiver:\n";
    if (c.dead_time_s) os << "  dead_time: " << *c.dead_time_s << " s\n";
    if (c.afterpulse_factor) os << "  afterpulse_factor: " << *c.afterpulse_factor << "\n";
    if (c.gate_signal_fraction) os << "  gate_signal_fraction: " << *c.gate_signal_fraction << "\n";
    if (c.visibility) os << "  visibility: " << *c.visibility << "\n";
    if (c.receiver_loss_db) os << "  insertion_loss: " << *c.receiver_loss_db << " dB\n";
    os << "raman:\n";
    if (c.raman_scale) os << "  scale: " << *c.raman_scale << " 1/(km*GHz)\n";
    if (c.fbg_extra_path_loss_db) os << "  fbg_extra_path_loss: " << *c.fbg_extra_path_loss_db << " dB\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Scenario documents

namespace {

OpticalFilter parse_filter(const Doc& d, const YAML::Node& n, const std::string& field, const CalibrationValues& cal) {
    d.keys(n, field, {"kind", "label", "passband", "center", "width", "insertion_loss", "isolation", "extra_path_loss"});
    if (!n["kind"]) d.fail(n, field, "missing 'kind'");
    const FilterKind kind = d.checked(n["kind"], field + ".kind", [&] { return parse_filter_kind(d.text(n["kind"], field + ".kind")); });
    OpticalFilter f;
    if (kind == FilterKind::rb_waveband) {
        const auto pb = n["passband"];
        if (!pb || !pb.IsSequence() || pb.size() != 2) d.fail(n, field + ".passband", "expected [low, high] wavelengths");
        f = d.checked(n, field, [&] {
            return make_rb_filter(d.quantity(pb[0], field + ".passband", "wavelength"),
                                  d.quantity(pb[1], field + ".passband", "wavelength"));
        });
    } else {
        if (!n["center"]) d.fail(n, field, "missing 'center'");
        const double center = d.quantity(n["center"], field + ".center", "wavelength");
        f = d.checked(n, field, [&] { return make_narrowband_filter(kind, center); });
        if (kind == FilterKind::fbg && cal.fbg_extra_path_loss_db) f.extra_path_loss_db = *cal.fbg_extra_path_loss_db;
        d.with(n, "width", [&](auto v) { f.width_ghz = d.quantity(v, field + ".width", "bandwidth"); });
    }
    d.with(n, "label", [&](auto v) { f.label = d.text(v, field + ".label"); });
    d.with(n, "insertion_loss", [&](auto v) { f.insertion_loss_db = d.quantity(v, field + ".insertion_loss", "ratio"); });
    d.with(n, "isolation", [&](auto v) { f.stopband_isolation_db = d.quantity(v, field + ".isolation", "ratio"); });
    d.with(n, "extra_path_loss", [&](auto v) { f.extra_path_loss_db = d.quantity(v, field + ".extra_path_loss", "ratio"); });
    d.checked(n, field, [&] { validate_filter(f); return 0; });
    return f;
}

std::vector<OpticalFilter> parse_filters(const Doc& d, const YAML::Node& n, const std::string& field,
                                         const CalibrationValues& cal) {
    if (!n.IsSequence()) d.fail(n, field, "expected a list of filters");
    std::vector<OpticalFilter> out;
    for (std::size_t i = 0; i < n.size(); ++i)
        out.push_back(parse_filter(d, n[i], field + "[" + std::to_string(i) + "]", cal));
    return out;
}

GroupSet parse_groups(const Doc& d, const YAML::Node& n, const std::string& field) {
    return d.checked(n, field, [&] {
        if (n.IsSequence()) {
            GroupSet g = GroupSet::none();
            for (const auto& item : n) g.set(parse_channel_group(d.text(item, field)), true);
            return g;
        }
        return GroupSet::parse(d.text(n, field));
    });
}

void parse_plan(const Doc& d, const YAML::Node& n, ScenarioConfig& cfg) {
    d.keys(n, "plan", {"preset", "channels", "quantum_wavelength", "receiver_band", "classical"});
    if (!n["preset"]) d.fail(n, "plan", "missing 'preset'");
    cfg.full_plan = d.checked(n["preset"], "plan.preset", [&] { return build_channel_plan(d.text(n["preset"], "plan.preset")); });
    d.with(n, "channels", [&](auto v) { cfg.channels = parse_groups(d, v, "plan.channels"); });
    d.with(n, "quantum_wavelength", [&](auto v) {
        const double nm = d.quantity(v, "plan.quantum_wavelength", "wavelength");
        cfg.full_plan.quantum.center = d.checked(v, "plan.quantum_wavelength", [&] { return SpectralPoint::from_nm(nm); });
    });
    d.with(n, "receiver_band", [&](auto v) {
        if (!v.IsSequence() || v.size() != 2) d.fail(v, "plan.receiver_band", "expected [low, high] wavelengths");
        cfg.full_plan.receiver_band_lo_nm = d.quantity(v[0], "plan.receiver_band", "wavelength");
        cfg.full_plan.receiver_band_hi_nm = d.quantity(v[1], "plan.receiver_band", "wavelength");
    });
    d.with(n, "classical", [&](auto v) {
        if (!v.IsSequence()) d.fail(v, "plan.classical", "expected a list of channels");
        cfg.full_plan.classical.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const auto c = v[i];
            const std::string field = "plan.classical[" + std::to_string(i) + "]";
            d.keys(c, field, {"label", "wavelength", "launch", "direction", "group"});
            for (const char* req : {"wavelength", "launch", "direction", "group"})
                if (!c[req]) d.fail(c, field, std::string("missing '") + req + "'");
            ClassicalChannel ch;
            const double nm = d.quantity(c["wavelength"], field + ".wavelength", "wavelength");
            ch.center = d.checked(c, field, [&] { return SpectralPoint::from_nm(nm); });
            ch.launch_dbm = d.quantity(c["launch"], field + ".launch", "power");
            const auto dir = d.text(c["direction"], field + ".direction");
            if (dir == "downstream") ch.direction = Direction::downstream;
            else if (dir == "upstream") ch.direction = Direction::upstream;
            else d.fail(c["direction"], field + ".direction", "expected downstream or upstream");
            ch.group = d.checked(c["group"], field + ".group", [&] { return parse_channel_group(d.text(c["group"], field + ".group")); });
            ch.label = c["label"] ? d.text(c["label"], field + ".label") : "ch" + std::to_string(i);
            cfg.full_plan.classical.push_back(ch);
        }
    });
}

void parse_topology(const Doc& d, const YAML::Node& n, ScenarioConfig& cfg, const CalibrationValues& cal) {
    d.keys(n, "topology", {"feeder_down", "feeder_up", "drop", "split", "splitter_excess", "directivity",
                           "onu_reflectance", "budget", "receiver_filters", "onu_filters", "attenuation"});
    auto& p = cfg.pon;
    d.with(n, "feeder_down", [&](auto v) { p.feeder_down_km = d.quantity(v, "topology.feeder_down", "length"); });
    d.with(n, "feeder_up", [&](auto v) { p.feeder_up_km = d.quantity(v, "topology.feeder_up", "length"); });
    d.with(n, "drop", [&](auto v) { p.drop_km = d.quantity(v, "topology.drop", "length"); });
    d.with(n, "split", [&](auto v) {
        const double s = d.number(v, "topology.split");
        if (s != std::floor(s)) d.fail(v, "topology.split", "expected an integer branch count");
        p.splitter.branches = static_cast<int>(s);
    });
    d.with(n, "splitter_excess", [&](auto v) { p.splitter.excess_loss_db = d.quantity(v, "topology.splitter_excess", "ratio"); });
    d.with(n, "directivity", [&](auto v) { p.splitter.directivity_db = d.quantity(v, "topology.directivity", "ratio"); });
    d.with(n, "onu_reflectance", [&](auto v) {
        if (v.IsScalar() && v.Scalar() == "off") p.onu_reflectance_db.reset();
        else p.onu_reflectance_db = d.quantity(v, "topology.onu_reflectance", "ratio");
    });
    d.with(n, "budget", [&](auto v) {
        if (v.IsScalar() && v.Scalar() == "off") p.external_budget_db.reset();
        else p.external_budget_db = d.quantity(v, "topology.budget", "ratio");
    });
    d.with(n, "receiver_filters", [&](auto v) { p.receiver_filters = parse_filters(d, v, "topology.receiver_filters", cal); });
    d.with(n, "onu_filters", [&](auto v) { p.onu_filters = parse_filters(d, v, "topology.onu_filters", cal); });
    d.with(n, "attenuation", [&](auto v) {
        if (!v.IsSequence()) d.fail(v, "topology.attenuation", "expected a list of [wavelength, loss] pairs");
        std::vector<AttenuationProfile::Anchor> anchors;
        for (const auto& row : v) {
            if (!row.IsSequence() || row.size() != 2) d.fail(row, "topology.attenuation", "expected [wavelength, loss]");
            anchors.push_back({d.quantity(row[0], "topology.attenuation", "wavelength"),
                               d.quantity(row[1], "topology.attenuation", "attenuation")});
        }
        p.profile = d.checked(v, "topology.attenuation", [&] { return AttenuationProfile(anchors); });
    });
    d.checked(n, "topology", [&] { return build_pon(p), 0; });
}

void apply_calibration(ScenarioConfig& cfg, const CalibrationValues& c) {
    if (c.dead_time_s) cfg.detector.dead_time_s = *c.dead_time_s;
    if (c.afterpulse_factor) cfg.detector.afterpulse_factor = *c.afterpulse_factor;
    if (c.gate_signal_fraction) cfg.detector.gate_signal_fraction = *c.gate_signal_fraction;
    if (c.visibility) cfg.interferometer.visibility = *c.visibility;
    if (c.receiver_loss_db) cfg.interferometer.insertion_loss_db = *c.receiver_loss_db;
    if (c.raman_scale) cfg.raman = cfg.raman.with_scale(*c.raman_scale);
}

ScenarioConfig parse_root(const Doc& d, const YAML::Node& root) {
    if (!root || !root.IsMap()) d.fail(root, "scenario", "expected a mapping at the top level");
    d.keys(root, "", {"name", "plan", "topology", "source", "detector", "interferometer", "raman", "calibration",
                      "security", "engine", "output", "toggle_labels"});
    ScenarioConfig cfg;
    cfg.full_plan = build_channel_plan(PlanScenario::ngpon2);

    CalibrationValues cal;
    const YAML::Node cn = root["calibration"];
    if (!cn || (cn.IsScalar() && cn.Scalar() == "default")) {
        const auto path = fs::path(data_dir()) / "calibration.yaml";
        if (d.calibrated && fs::exists(path)) cal = load_calibration_file(path.string());
    } else if (cn.IsScalar() && cn.Scalar() == "none") {
        // Uncalibrated defaults.
    } else if (cn.IsScalar()) {
        fs::path path = cn.Scalar();
        if (path.is_relative()) path = d.base_dir / path;
        cal = d.checked(cn, "calibration", [&] { return load_calibration_file(path.string()); });
    } else {
        cal = parse_calibration_node(d, cn);
    }

    // Raman profile first so the calibrated scale lands on the right table.
    d.with(root, "raman", [&](const YAML::Node& n) {
        d.keys(n, "raman", {"profile", "temperature", "scale", "upstream_duty_cycle"});
        double temperature = 300.0;
        d.with(n, "temperature", [&](auto v) { temperature = d.quantity(v, "raman.temperature", "temperature"); });
        std::string profile = "silica";
        d.with(n, "profile", [&](auto v) { profile = d.text(v, "raman.profile"); });
        if (profile == "silica") {
            cfg.raman = d.checked(n, "raman", [&] { return RamanProfile::silica(temperature); });
        } else {
            fs::path path = profile;
            if (path.is_relative()) path = d.base_dir / path;
            cfg.raman = d.checked(n["profile"], "raman.profile", [&] { return RamanProfile::load_csv(path.string()); });
        }
    });
    apply_calibration(cfg, cal);

    d.with(root, "name", [&](auto v) { cfg.name = d.text(v, "name"); });
    d.with(root, "plan", [&](auto v) { parse_plan(d, v, cfg); });
    d.with(root, "topology", [&](auto v) { parse_topology(d, v, cfg, cal); });

    d.with(root, "source", [&](const YAML::Node& n) {
        d.keys(n, "source", {"model", "mu", "symbol_rate", "intrinsic_error", "carving_duty"});
        d.with(n, "model", [&](auto v) {
            const auto m = d.text(v, "source.model");
            const DpsSource preset = d.checked(v, "source.model", [&] { return source_preset(m); });
            cfg.source.model = preset.model;
            cfg.source.intrinsic_error = preset.intrinsic_error;
        });
        d.with(n, "mu", [&](auto v) { cfg.source.mean_photon_number = d.number(v, "source.mu"); });
        d.with(n, "symbol_rate", [&](auto v) { cfg.source.symbol_rate_hz = d.quantity(v, "source.symbol_rate", "rate"); });
        d.with(n, "intrinsic_error", [&](auto v) { cfg.source.intrinsic_error = d.number(v, "source.intrinsic_error"); });
        d.with(n, "carving_duty", [&](auto v) { cfg.source.carving_duty = d.number(v, "source.carving_duty"); });
        d.checked(n, "source", [&] { validate_source(cfg.source); return 0; });
    });
    d.with(root, "detector", [&](const YAML::Node& n) {
        d.keys(n, "detector", {"efficiency", "dark_rate", "dead_time", "gate_duty", "gate_signal_fraction", "afterpulse_factor"});
        auto& det = cfg.detector;
        d.with(n, "efficiency", [&](auto v) { det.efficiency = d.number(v, "detector.efficiency"); });
        d.with(n, "dark_rate", [&](auto v) { det.dark_rate_hz = d.quantity(v, "detector.dark_rate", "rate"); });
        d.with(n, "dead_time", [&](auto v) { det.dead_time_s = d.quantity(v, "detector.dead_time", "time"); });
        d.with(n, "gate_duty", [&](auto v) { det.gate_duty = d.number(v, "detector.gate_duty"); });
        d.with(n, "gate_signal_fraction", [&](auto v) { det.gate_signal_fraction = d.number(v, "detector.gate_signal_fraction"); });
        d.with(n, "afterpulse_factor", [&](auto v) { det.afterpulse_factor = d.number(v, "detector.afterpulse_factor"); });
        d.checked(n, "detector", [&] { validate_detector(det); return 0; });
    });
    d.with(root, "interferometer", [&](const YAML::Node& n) {
        d.keys(n, "interferometer", {"delay", "visibility", "insertion_loss"});
        auto& di = cfg.interferometer;
        d.with(n, "delay", [&](auto v) { di.delay_symbols = static_cast<int>(d.number(v, "interferometer.delay")); });
        d.with(n, "visibility", [&](auto v) { di.visibility = d.number(v, "interferometer.visibility"); });
        d.with(n, "insertion_loss", [&](auto v) { di.insertion_loss_db = d.quantity(v, "interferometer.insertion_loss", "ratio"); });
        d.checked(n, "interferometer", [&] { validate_interferometer(di); return 0; });
    });
    d.with(root, "raman", [&](const YAML::Node& n) {
        d.with(n, "scale", [&](auto v) { cfg.raman = cfg.raman.with_scale(d.quantity(v, "raman.scale", "raman_scale")); });
        d.with(n, "upstream_duty_cycle", [&](auto v) { cfg.raman_options.upstream_duty_cycle = d.number(v, "raman.upstream_duty_cycle"); });
    });
    d.with(root, "security", [&](const YAML::Node& n) {
        d.keys(n, "security", {"ec_inefficiency"});
        d.with(n, "ec_inefficiency", [&](auto v) {
            cfg.ec_inefficiency = d.number(v, "security.ec_inefficiency");
            if (!(cfg.ec_inefficiency >= 1.0)) d.fail(v, "security.ec_inefficiency", "must be >= 1");
        });
    });
    d.with(root, "engine", [&](const YAML::Node& n) {
        d.keys(n, "engine", {"type", "pulses", "seed", "pattern", "threads"});
        d.with(n, "type", [&](auto v) { cfg.engine = d.checked(v, "engine.type", [&] { return parse_engine(d.text(v, "engine.type")); }); });
        d.with(n, "pulses", [&](auto v) { cfg.mc.pulses = d.integer(v, "engine.pulses"); });
        d.with(n, "seed", [&](auto v) { cfg.mc.seed = d.integer(v, "engine.seed"); });
        d.with(n, "pattern", [&](auto v) { cfg.mc.pattern = d.checked(v, "engine.pattern", [&] { return parse_bit_pattern(d.text(v, "engine.pattern")); }); });
        d.with(n, "threads", [&](auto v) { cfg.mc.threads = static_cast<unsigned>(d.integer(v, "engine.threads")); });
    });
    d.with(root, "output", [&](const YAML::Node& n) {
        d.keys(n, "output", {"format", "acquisition_time"});
        d.with(n, "format", [&](auto v) {
            cfg.format = d.text(v, "output.format");
            if (cfg.format != "json" && cfg.format != "csv") d.fail(v, "output.format", "expected json or csv");
        });
        d.with(n, "acquisition_time", [&](auto v) {
            cfg.acquisition_s = d.quantity(v, "output.acquisition_time", "time");
            if (!(cfg.acquisition_s > 0.0)) d.fail(v, "output.acquisition_time", "must be positive");
        });
    });
    d.with(root, "toggle_labels", [&](const YAML::Node& n) {
        if (!n.IsMap()) d.fail(n, "toggle_labels", "expected a mapping of channel groups to labels");
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            const GroupSet g = d.checked(kv.first, "toggle_labels", [&] { return GroupSet::parse(key); });
            cfg.toggle_labels.emplace_back(g, d.text(kv.second, "toggle_labels." + key));
        }
    });

    cfg.full_plan.quantum.mean_photon_number = cfg.source.mean_photon_number;
    cfg.full_plan.quantum.symbol_rate_hz = cfg.source.symbol_rate_hz;
    d.checked(root, "plan", [&] { validate_plan(cfg.full_plan); return 0; });
    return cfg;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& yaml_text, const std::string& origin, bool calibrated) {
    Doc d{origin, fs::path(origin).has_parent_path() ? fs::path(origin).parent_path() : fs::current_path(), calibrated};
    return parse_root(d, load_yaml(yaml_text, origin));
}

ScenarioConfig load_scenario_file(const std::string& path) { return parse_scenario(read_file(path), path); }

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    const auto dir = fs::path(data_dir()) / "presets";
    if (fs::exists(dir))
        for (const auto& e : fs::directory_iterator(dir))
            if (e.path().extension() == ".yaml") out.push_back(e.path().stem().string());
    std::sort(out.begin(), out.end());
    return out;
}

ScenarioConfig load_preset(const std::string& name, bool calibrated) {
    const auto path = fs::path(data_dir()) / "presets" / (name + ".yaml");
    if (!fs::exists(path)) {
        std::string names;
        for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
        throw ConfigError("unknown scenario preset '" + name + "' (available: " + names + ")");
    }
    return parse_scenario(read_file(path.string()), path.string(), calibrated);
}

ChannelPlan ScenarioConfig::active_plan() const { return full_plan.with_groups(channels); }

LinkInputs ScenarioConfig::link_inputs() const {
    LinkInputs in;
    in.topology = build_pon(pon);
    in.plan = active_plan();
    in.source = source;
    in.detector = detector;
    in.interferometer = interferometer;
    in.raman = raman;
    in.raman_options = raman_options;
    in.ec_inefficiency = ec_inefficiency;
    in.acquisition_s = acquisition_s;
    return in;
}

LinkReport ScenarioConfig::run() const {
    const LinkInputs in = link_inputs();
    return engine == EngineKind::analytic ? simulate_link(in) : monte_carlo_link(in, mc);
}

// ---------------------------------------------------------------------------
// Calibration workflow

CalibrationRun run_calibration(const std::string& anchors_path) {
    Doc d{anchors_path, fs::path(anchors_path).parent_path()};
    const auto root = load_yaml(read_file(anchors_path), anchors_path);
    d.keys(root, "", {"receiver", "raman"});
    if (!root["receiver"] || !root["raman"]) d.fail(root, "anchors", "needs 'receiver' and 'raman' sections");
    CalibrationRun run;

    const auto rn = root["receiver"];
    d.keys(rn, "receiver", {"scenario", "anchors", "dynamic_range"});
    const std::string dark_name = rn["scenario"] ? d.text(rn["scenario"], "receiver.scenario") : "dark";
    const ScenarioConfig dark = d.checked(rn, "receiver.scenario", [&] { return load_preset(dark_name, false); });
    std::vector<DarkAnchor> dark_anchors;
    if (!rn["anchors"] || !rn["anchors"].IsSequence()) d.fail(rn, "receiver.anchors", "expected a list");
    for (const auto& a : rn["anchors"]) {
        d.keys(a, "receiver.anchors", {"budget", "raw_rate", "qber"});
        if (!a["budget"]) d.fail(a, "receiver.anchors", "missing 'budget'");
        DarkAnchor da;
        da.budget_db = d.quantity(a["budget"], "receiver.anchors.budget", "ratio");
        d.with(a, "raw_rate", [&](auto v) { da.raw_rate_bps = d.quantity(v, "receiver.anchors.raw_rate", "rate"); });
        d.with(a, "qber", [&](auto v) { da.qber = d.number(v, "receiver.anchors.qber"); });
        dark_anchors.push_back(da);
    }
    ReceiverCalibrationOptions ropt;
    d.with(rn, "dynamic_range", [&](const YAML::Node& n) {
        d.keys(n, "receiver.dynamic_range", {"from", "to", "max_qber_rise"});
        d.with(n, "from", [&](auto v) { ropt.range.lo_db = d.quantity(v, "receiver.dynamic_range.from", "ratio"); });
        d.with(n, "to", [&](auto v) { ropt.range.hi_db = d.quantity(v, "receiver.dynamic_range.to", "ratio"); });
        d.with(n, "max_qber_rise", [&](auto v) { ropt.range.max_qber_rise = d.number(v, "receiver.dynamic_range.max_qber_rise"); });
    });
    run.receiver = calibrate_receiver(dark_anchors, dark.source, dark.detector, dark.interferometer, ropt);

    const auto mn = root["raman"];
    d.keys(mn, "raman", {"fit_fbg_extra_loss", "anchors"});
    RamanCalibrationOptions mopt;
    d.with(mn, "fit_fbg_extra_loss", [&](auto v) { mopt.fit_fbg_extra_loss = v.IsScalar() && v.Scalar() == "true"; });
    mopt.receiver = CountingReceiver{run.receiver.detector.efficiency, run.receiver.interferometer.insertion_loss_db};
    std::vector<RamanAnchor> raman_anchors;
    RamanProfile shape = RamanProfile::silica();
    if (!mn["anchors"] || !mn["anchors"].IsSequence()) d.fail(mn, "raman.anchors", "expected a list");
    for (const auto& a : mn["anchors"]) {
        d.keys(a, "raman.anchors", {"scenario", "channels", "counts"});
        if (!a["scenario"] || !a["counts"]) d.fail(a, "raman.anchors", "needs 'scenario' and 'counts'");
        const auto name = d.text(a["scenario"], "raman.anchors.scenario");
        ScenarioConfig cfg = d.checked(a["scenario"], "raman.anchors.scenario", [&] { return load_preset(name, false); });
        if (a["channels"]) cfg.channels = parse_groups(d, a["channels"], "raman.anchors.channels");
        shape = cfg.raman;
        RamanAnchor ra;
        ra.name = name + "[" + cfg.channels.to_string() + "]";
        ra.topology = build_pon(cfg.pon);
        ra.plan = cfg.active_plan();
        ra.measured_counts_per_s = d.quantity(a["counts"], "raman.anchors.counts", "rate");
        run.raman_anchor_names.push_back(ra.name);
        run.raman_measured.push_back(ra.measured_counts_per_s);
        raman_anchors.push_back(std::move(ra));
    }
    run.raman = calibrate_profile(raman_anchors, shape, mopt);

    auto& v = run.values;
    v.dead_time_s = run.receiver.detector.dead_time_s;
    v.afterpulse_factor = run.receiver.detector.afterpulse_factor;
    v.gate_signal_fraction = run.receiver.detector.gate_signal_fraction;
    v.visibility = run.receiver.interferometer.visibility;
    v.receiver_loss_db = run.receiver.interferometer.insertion_loss_db;
    v.raman_scale = run.raman.scale;
    if (mopt.fit_fbg_extra_loss) v.fbg_extra_path_loss_db = run.raman.fbg_extra_path_loss_db;
    return run;
}

// ---------------------------------------------------------------------------
// Sweeps and toggle studies

const std::map<std::string, std::string>& sweep_parameters() {
    static const std::map<std::string, std::string> p{
        {"topology.feeder_up", "length"},        {"topology.feeder_down", "length"},
        {"topology.drop", "length"},             {"topology.split", "number"},
        {"topology.splitter_excess", "ratio"},   {"topology.directivity", "ratio"},
        {"topology.budget", "ratio"},            {"source.mu", "number"},
        {"source.symbol_rate", "rate"},          {"detector.dark_rate", "rate"},
        {"detector.dead_time", "time"},          {"detector.gate_duty", "number"},
        {"detector.efficiency", "number"},       {"detector.afterpulse_factor", "number"},
        {"interferometer.visibility", "number"}, {"interferometer.insertion_loss", "ratio"},
        {"raman.scale", "raman_scale"},          {"raman.upstream_duty_cycle", "number"},
        {"security.ec_inefficiency", "number"},
    };
    return p;
}

namespace {

std::string canonical_path(std::string path) {
    const std::string suffix = ".length";
    if (path.size() > suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0)
        path.resize(path.size() - suffix.size());
    if (!sweep_parameters().count(path)) {
        std::string names;
        for (const auto& [k, v] : sweep_parameters()) names += (names.empty() ? "" : ", ") + k;
        throw ConfigError("unknown sweep parameter '" + path + "' (available: " + names + ")");
    }
    return path;
}

}  // namespace

void apply_parameter(ScenarioConfig& cfg, const std::string& raw_path, double v) {
    const std::string path = canonical_path(raw_path);
    auto& p = cfg.pon;
    if (path == "topology.feeder_up") p.feeder_up_km = v;
    else if (path == "topology.feeder_down") p.feeder_down_km = v;
    else if (path == "topology.drop") p.drop_km = v;
    else if (path == "topology.split") {
        if (v != std::floor(v)) throw ConfigError("topology.split must be an integer");
        p.splitter.branches = static_cast<int>(v);
    } else if (path == "topology.splitter_excess") p.splitter.excess_loss_db = v;
    else if (path == "topology.directivity") p.splitter.directivity_db = v;
    else if (path == "topology.budget") p.external_budget_db = v;
    else if (path == "source.mu") { cfg.source.mean_photon_number = v; cfg.full_plan.quantum.mean_photon_number = v; }
    else if (path == "source.symbol_rate") { cfg.source.symbol_rate_hz = v; cfg.full_plan.quantum.symbol_rate_hz = v; }
    else if (path == "detector.dark_rate") cfg.detector.dark_rate_hz = v;
    else if (path == "detector.dead_time") cfg.detector.dead_time_s = v;
    else if (path == "detector.gate_duty") cfg.detector.gate_duty = v;
    else if (path == "detector.efficiency") cfg.detector.efficiency = v;
    else if (path == "detector.afterpulse_factor") cfg.detector.afterpulse_factor = v;
    else if (path == "interferometer.visibility") cfg.interferometer.visibility = v;
    else if (path == "interferometer.insertion_loss") cfg.interferometer.insertion_loss_db = v;
    else if (path == "raman.scale") cfg.raman = cfg.raman.with_scale(v);
    else if (path == "raman.upstream_duty_cycle") cfg.raman_options.upstream_duty_cycle = v;
    else if (path == "security.ec_inefficiency") cfg.ec_inefficiency = v;
}

std::string sweep_unit(const std::string& path) {
    static const std::map<std::string, std::string> units{
        {"length", "km"}, {"wavelength", "nm"}, {"bandwidth", "GHz"}, {"rate", "Hz"}, {"power", "dBm"},
        {"ratio", "dB"}, {"time", "s"}, {"temperature", "K"}, {"attenuation", "dB/km"},
        {"raman_scale", "1/(km*GHz)"}, {"number", "1"}};
    return units.at(sweep_parameters().at(canonical_path(path)));
}

SweepAxis parse_sweep_axis(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("sweep axis '" + text + "' must look like path=values");
    SweepAxis axis;
    axis.path = canonical_path(trim(text.substr(0, eq)));
    const std::string& kind = sweep_parameters().at(axis.path);
    std::string spec = trim(text.substr(eq + 1));
    // A trailing unit applies to every value.
    std::string unit;
    if (const auto sp = spec.find(' '); sp != std::string::npos) {
        unit = " " + trim(spec.substr(sp + 1));
        spec = spec.substr(0, sp);
    }
    auto value = [&](const std::string& s) { return parse_quantity(s + unit, kind, true); };
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw ConfigError("range '" + spec + "' must be start:stop:step");
        const double a = value(parts[0]), b = value(parts[1]), step = value(parts[2]);
        if (!(step > 0.0) || !(b >= a)) throw ConfigError("range '" + spec + "' needs stop >= start and a positive step");
        const double n = std::floor((b - a) / step + 1e-9) + 1.0;
        if (n > 1e5) throw ResourceError("sweep axis " + axis.path + " has more than 100000 points");
        for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) axis.values.push_back(a + static_cast<double>(i) * step);
    } else {
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ',');) {
            axis.values.push_back(value(p));
            if (axis.values.size() > 100000) throw ResourceError("sweep axis " + axis.path + " has more than 100000 points");
        }
    }
    if (axis.values.empty()) throw ConfigError("sweep axis " + axis.path + " has no values");
    return axis;
}

std::vector<SweepRow> run_sweep(const ScenarioConfig& base, const SweepSpec& spec, unsigned threads) {
    if (spec.axes.empty()) throw ConfigError("sweep needs at least one parameter");
    if (spec.axes.size() > 3) throw ResourceError("sweeps are limited to 3 parameters");
    double total = 1.0;
    for (const auto& a : spec.axes) total *= static_cast<double>(a.values.size());
    if (total > static_cast<double>(spec.max_points))
        throw ResourceError("sweep has " + std::to_string(static_cast<long long>(total)) + " points; the limit is " +
                            std::to_string(spec.max_points));
    const std::size_t n = static_cast<std::size_t>(total);

    std::vector<SweepRow> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rem = i;
        rows[i].params.resize(spec.axes.size());
        for (std::size_t a = spec.axes.size(); a-- > 0;) {
            const auto& vals = spec.axes[a].values;
            rows[i].params[a] = vals[rem % vals.size()];
            rem /= vals.size();
        }
    }
    // Validate every point up front so a bad value fails before any work is spent.
    for (const auto& row : rows) {
        ScenarioConfig cfg = base;
        for (std::size_t a = 0; a < spec.axes.size(); ++a) apply_parameter(cfg, spec.axes[a].path, row.params[a]);
        build_pon(cfg.pon);
    }

    unsigned workers = threads ? threads : std::max(1U, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto work = [&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
            try {
                ScenarioConfig cfg = base;
                for (std::size_t a = 0; a < spec.axes.size(); ++a) apply_parameter(cfg, spec.axes[a].path, rows[i].params[a]);
                rows[i].report = cfg.run();
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return rows;
}

std::vector<ToggleRow> channel_toggle_study(const ScenarioConfig& base, const std::vector<ChannelGroup>& groups) {
    std::set<ChannelGroup> unique(groups.begin(), groups.end());
    if (unique.size() != groups.size()) throw ConfigError("toggle groups must be distinct");
    if (groups.empty()) throw ConfigError("toggle study needs at least one channel group");
    std::vector<ToggleRow> rows;
    const std::size_t combos = std::size_t{1} << groups.size();
    for (std::size_t mask = 0; mask < combos; ++mask) {
        ToggleRow row;
        row.groups = GroupSet::none();
        for (std::size_t g = 0; g < groups.size(); ++g)
            if (mask & (std::size_t{1} << g)) row.groups.set(groups[g], true);
        for (const auto& [set, label] : base.toggle_labels)
            if (set.wired_ds == row.groups.wired_ds && set.overlay_ds == row.groups.overlay_ds && set.us == row.groups.us)
                row.label = label;
        ScenarioConfig cfg = base;
        cfg.channels = row.groups;
        row.report = cfg.run();
        rows.push_back(std::move(row));
    }
    for (auto& r : rows) r.delta_qber = r.report.qber - rows.front().report.qber;
    return rows;
}

}  // namespace qpon
