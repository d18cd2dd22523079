#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qpon/qkdlink.hpp"

namespace qpon {

enum class EngineKind { analytic, mc };
EngineKind parse_engine(std::string_view name);
std::string_view to_string(EngineKind e);

// Values produced by `calibrate` and consumed by every scenario.
struct CalibrationValues {
    std::optional<double> dead_time_s;
    std::optional<double> afterpulse_factor;
    std::optional<double> gate_signal_fraction;
    std::optional<double> visibility;
    std::optional<double> receiver_loss_db;
    std::optional<double> raman_scale;
    std::optional<double> fbg_extra_path_loss_db;
};

struct ScenarioConfig {
    std::string name;
    ChannelPlan full_plan;
    GroupSet channels = GroupSet::all();
    PonConfig pon;
    DpsSource source;
    DetectorModel detector;
    InterferometerModel interferometer;
    RamanProfile raman = RamanProfile::silica();
    RamanOptions raman_options;
    double ec_inefficiency = 1.1;
    double acquisition_s = 60.0;
    EngineKind engine = EngineKind::analytic;
    McOptions mc;
    std::string format = "json";
    // Channel-group combination -> figure label for toggle studies.
    std::vector<std::pair<GroupSet, std::string>> toggle_labels;

    ChannelPlan active_plan() const;
    LinkInputs link_inputs() const;
    LinkReport run() const;
};

// Data directory holding presets/, calibration.yaml and anchors.yaml.
std::string data_dir();

// Parse a scenario document. `origin` names the source in diagnostics.
ScenarioConfig parse_scenario(const std::string& yaml_text, const std::string& origin = "<scenario>",
                              bool calibrated = true);
ScenarioConfig load_scenario_file(const std::string& path);
// `calibrated` = false ignores data/calibration.yaml unless the document names one.
ScenarioConfig load_preset(const std::string& name, bool calibrated = true);
std::vector<std::string> preset_names();

CalibrationValues load_calibration_file(const std::string& path);
CalibrationValues parse_calibration(const std::string& yaml_text, const std::string& origin = "<calibration>");
std::string format_calibration(const CalibrationValues& c);

// Fit of the receiver to the dark-PON anchors followed by the Raman scale fit, as
// described by an anchors document (data/anchors.yaml).
struct CalibrationRun {
    ReceiverCalibration receiver;
    RamanCalibration raman;
    std::vector<std::string> raman_anchor_names;
    std::vector<double> raman_measured;
    CalibrationValues values;
};
CalibrationRun run_calibration(const std::string& anchors_path);

// Quantity parsing, exposed for the CLI and tests. `kind` is one of: length, wavelength,
// bandwidth, rate, power, ratio, time, temperature, attenuation, raman_scale, number.
double parse_quantity(const std::string& text, const std::string& kind, bool allow_bare = false);

// Sweepable parameter paths and the unit kind of their values.
const std::map<std::string, std::string>& sweep_parameters();
void apply_parameter(ScenarioConfig& cfg, const std::string& path, double value);
// Canonical unit of a sweep parameter's values ("1" for plain numbers).
std::string sweep_unit(const std::string& path);

struct SweepAxis {
    std::string path;
    std::vector<double> values;
};

struct SweepSpec {
    std::vector<SweepAxis> axes;
    std::size_t max_points = 100000;
};

// "a:b:step" or "v1,v2,..." with optional unit suffix on each value.
SweepAxis parse_sweep_axis(const std::string& text);

struct SweepRow {
    std::vector<double> params;
    LinkReport report;
};

std::vector<SweepRow> run_sweep(const ScenarioConfig& base, const SweepSpec& spec, unsigned threads = 0);

struct ToggleRow {
    std::string label;
    GroupSet groups;
    LinkReport report;
    double delta_qber = 0.0;
};

// All on/off combinations of the given groups (others off); deltas against all-off.
std::vector<ToggleRow> channel_toggle_study(const ScenarioConfig& base, const std::vector<ChannelGroup>& groups);

}  // namespace qpon
