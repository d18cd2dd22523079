#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qpon/optics.hpp"
#include "qpon/spectrum.hpp"

namespace qpon {

struct PonConfig {
    double feeder_down_km = 15.2;
    double feeder_up_km = 13.2;
    double drop_km = 0.256;
    Splitter splitter{};
    AttenuationProfile profile = AttenuationProfile::standard_smf();
    // Cascade at the CO receiver branch, in light-propagation order.
    std::vector<OpticalFilter> receiver_filters;
    std::vector<OpticalFilter> onu_filters;
    // Lumped reflectance at the ONU connector; disabled when empty.
    std::optional<double> onu_reflectance_db;
    // Back-to-back attenuator that replaces the plant on the quantum path (dark-PON runs).
    std::optional<double> external_budget_db;
};

// Sites of the dual-feeder tree. co_tx is the downstream feeder head, co_rx the end of
// the upstream feeder before the receiver cascade, detector the SPAD input.
enum class Node { co_tx, co_rx, onu, detector };
std::string_view to_string(Node n);

class PonTopology {
public:
    const FiberSpan& feeder_down() const { return feeder_down_; }
    const FiberSpan& feeder_up() const { return feeder_up_; }
    const FiberSpan& drop() const { return drop_; }
    const Splitter& splitter() const { return splitter_; }
    int drop_count() const { return splitter_.branches; }
    const std::vector<OpticalFilter>& receiver_filters() const { return receiver_filters_; }
    const std::vector<OpticalFilter>& onu_filters() const { return onu_filters_; }
    const std::optional<double>& onu_reflectance_db() const { return onu_reflectance_db_; }
    const std::optional<double>& external_budget_db() const { return external_budget_db_; }
    const PonConfig& config() const { return config_; }

private:
    friend PonTopology build_pon(const PonConfig& config);
    PonConfig config_;
    FiberSpan feeder_down_;
    FiberSpan feeder_up_;
    FiberSpan drop_;
    Splitter splitter_;
    std::vector<OpticalFilter> receiver_filters_;
    std::vector<OpticalFilter> onu_filters_;
    std::optional<double> onu_reflectance_db_;
    std::optional<double> external_budget_db_;
};

PonTopology build_pon(const PonConfig& config = {});

enum class ElementKind { fiber, splitter, filter, attenuator };

struct PathElement {
    std::string name;
    ElementKind kind = ElementKind::fiber;
    double loss_db = 0.0;
    // Fig.-6 style point letter reached after this element, empty for unnamed points.
    std::string point;
};

struct LightPath {
    Node from = Node::onu;
    Node to = Node::detector;
    double wavelength_nm = 0.0;
    Direction direction = Direction::upstream;
    std::vector<PathElement> elements;

    double total_loss_db() const;
};

// Ordered element list of the unique lightpath between two nodes.
// The quantum path onu -> co_rx/detector is replaced by the attenuator when an
// external budget is configured.
LightPath trace_path(const PonTopology& t, Node from, Node to, double wavelength_nm);
double path_loss(const PonTopology& t, Node from, Node to, double wavelength_nm);

struct EvolutionPoint {
    std::string point;      // A..E or empty
    std::string element;    // element just traversed ("launch" for the first record)
    double cumulative_loss_db = 0.0;
    double level = 0.0;     // dBm for classical, photons/symbol for quantum
};

struct SignalEvolution {
    std::string channel;
    std::string unit;       // "dBm" or "photons/symbol"
    LightPath path;
    std::vector<EvolutionPoint> points;
};

// Classical downstream channels run CO -> ONU; upstream channels run ONU -> detector.
SignalEvolution signal_evolution(const PonTopology& t, const ClassicalChannel& ch);
// Downstream channel leaking through splitter directivity into the upstream feeder.
SignalEvolution leakage_evolution(const PonTopology& t, const ClassicalChannel& ch);
SignalEvolution signal_evolution(const PonTopology& t, const QuantumChannel& q);

// Photon-to-count conversion after the receiver filter cascade.
struct CountingReceiver {
    double efficiency = 0.1;
    double internal_loss_db = 0.0;   // delay interferometer and other front-end loss

    double counts_per_watt(double frequency_thz) const;
};

struct CrosstalkEntry {
    std::string label;
    double power_w = 0.0;           // at the detector input
    double counts_per_s = 0.0;
    bool violation = false;         // channel inside every receiver passband
};

struct CrosstalkReport {
    std::vector<CrosstalkEntry> entries;
    double total_counts_per_s = 0.0;
    bool any_violation = false;
};

CrosstalkReport crosstalk_counts(const PonTopology& t, const ChannelPlan& plan, const CountingReceiver& rx);

}  // namespace qpon
