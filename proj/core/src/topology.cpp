#include "qpon/topology.hpp"

#include <algorithm>
#include <cmath>

#include "qpon/errors.hpp"
#include "qpon/units.hpp"

namespace qpon {

std::string_view to_string(Node n) {
    switch (n) {
        case Node::co_tx: return "co_tx";
        case Node::co_rx: return "co_rx";
        case Node::onu: return "onu";
        case Node::detector: return "detector";
    }
    return "?";
}

PonTopology build_pon(const PonConfig& config) {
    if (!(config.feeder_down_km >= 0.0) || !(config.feeder_up_km >= 0.0) || !(config.drop_km >= 0.0))
        throw ConfigError("fiber lengths must be non-negative");
    validate_splitter(config.splitter);
    for (const auto& f : config.receiver_filters) validate_filter(f);
    for (const auto& f : config.onu_filters) validate_filter(f);
    if (config.onu_reflectance_db && !(*config.onu_reflectance_db <= 0.0))
        throw ConfigError("ONU reflectance must be given as a non-positive dB value");
    if (config.external_budget_db && !(*config.external_budget_db >= 0.0))
        throw ConfigError("external loss budget must be non-negative");

    PonTopology t;
    t.config_ = config;
    t.feeder_down_ = FiberSpan{SpanRole::feeder_down, config.feeder_down_km, config.profile};
    t.feeder_up_ = FiberSpan{SpanRole::feeder_up, config.feeder_up_km, config.profile};
    t.drop_ = FiberSpan{SpanRole::drop, config.drop_km, config.profile};
    t.splitter_ = config.splitter;
    t.receiver_filters_ = config.receiver_filters;
    t.onu_filters_ = config.onu_filters;
    t.onu_reflectance_db_ = config.onu_reflectance_db;
    t.external_budget_db_ = config.external_budget_db;
    return t;
}

double LightPath::total_loss_db() const {
    double sum = 0.0;
    for (const auto& e : elements) sum += e.loss_db;
    return sum;
}

namespace {

PathElement fiber_element(const FiberSpan& s, double nm, std::string point = {}) {
    return {std::string(to_string(s.role)), ElementKind::fiber, fiber_loss(s, nm), std::move(point)};
}

PathElement splitter_element(const Splitter& s, SplitterPath p, std::string point = {}) {
    const char* name = p == SplitterPath::trunk_to_trunk ? "splitter_directivity" : "splitter";
    return {name, ElementKind::splitter, splitter_loss(s, p), std::move(point)};
}

void append_filters(std::vector<PathElement>& out, const std::vector<OpticalFilter>& filters, double nm) {
    for (const auto& f : filters) {
        std::string name = f.label.empty() ? std::string(to_string(f.kind)) : f.label;
        out.push_back({std::move(name), ElementKind::filter, filter_transmission(f, nm), {}});
    }
}

// Upstream plant from the ONU to the end of the upstream feeder.
std::vector<PathElement> onu_to_co_rx(const PonTopology& t, double nm) {
    std::vector<PathElement> out;
    if (t.external_budget_db()) {
        out.push_back({"budget_attenuator", ElementKind::attenuator, *t.external_budget_db(), "C"});
        return out;
    }
    append_filters(out, t.onu_filters(), nm);
    out.push_back(fiber_element(t.drop(), nm));
    out.push_back(splitter_element(t.splitter(), SplitterPath::branch_to_trunk, "B"));
    out.push_back(fiber_element(t.feeder_up(), nm, "C"));
    return out;
}

std::vector<PathElement> co_tx_to_onu(const PonTopology& t, double nm) {
    std::vector<PathElement> out;
    out.push_back(fiber_element(t.feeder_down(), nm, "B"));
    out.push_back(splitter_element(t.splitter(), SplitterPath::trunk_to_branch, "C"));
    out.push_back(fiber_element(t.drop(), nm, "D"));
    append_filters(out, t.onu_filters(), nm);
    if (!t.onu_filters().empty()) out.back().point = "E";
    return out;
}

std::vector<PathElement> co_tx_to_co_rx(const PonTopology& t, double nm) {
    std::vector<PathElement> out;
    out.push_back(fiber_element(t.feeder_down(), nm, "B"));
    out.push_back(splitter_element(t.splitter(), SplitterPath::trunk_to_trunk, "C"));
    out.push_back(fiber_element(t.feeder_up(), nm, "D"));
    return out;
}

void append_receiver(std::vector<PathElement>& out, const PonTopology& t, double nm) {
    const auto& filters = t.receiver_filters();
    append_filters(out, filters, nm);
    const std::size_t first = out.size() - filters.size();
    std::size_t last_rb = out.size();
    for (std::size_t i = 0; i < filters.size(); ++i)
        if (filters[i].kind == FilterKind::rb_waveband) last_rb = first + i;
    if (last_rb < out.size()) out[last_rb].point = "D";
    if (!out.empty()) out.back().point = "E";
}

std::vector<PathElement> reversed(std::vector<PathElement> v) {
    std::reverse(v.begin(), v.end());
    for (auto& e : v) e.point.clear();
    return v;
}

}  // namespace

LightPath trace_path(const PonTopology& t, Node from, Node to, double nm) {
    LightPath p;
    p.from = from;
    p.to = to;
    p.wavelength_nm = nm;
    p.direction = to == Node::onu ? Direction::downstream : Direction::upstream;
    if (from == to) return p;
    if (from == Node::detector)
        throw TopologyError("no lightpath leaves the detector (requested detector -> " + std::string(to_string(to)) + ")");

    auto plant = [&](Node a, Node b) -> std::vector<PathElement> {
        if (a == Node::onu && b == Node::co_rx) return onu_to_co_rx(t, nm);
        if (a == Node::co_rx && b == Node::onu) return reversed(onu_to_co_rx(t, nm));
        if (a == Node::co_tx && b == Node::onu) return co_tx_to_onu(t, nm);
        if (a == Node::onu && b == Node::co_tx) return reversed(co_tx_to_onu(t, nm));
        if (a == Node::co_tx && b == Node::co_rx) return co_tx_to_co_rx(t, nm);
        if (a == Node::co_rx && b == Node::co_tx) return reversed(co_tx_to_co_rx(t, nm));
        throw TopologyError("nodes " + std::string(to_string(a)) + " and " + std::string(to_string(b)) + " are not connected");
    };

    if (to == Node::detector) {
        if (from != Node::co_rx) p.elements = plant(from, Node::co_rx);
        append_receiver(p.elements, t, nm);
    } else {
        p.elements = plant(from, to);
    }
    return p;
}

double path_loss(const PonTopology& t, Node from, Node to, double nm) {
    return trace_path(t, from, to, nm).total_loss_db();
}

namespace {

SignalEvolution evolve(std::string channel, std::string unit, LightPath path, double launch,
                       bool photons) {
    SignalEvolution out;
    out.channel = std::move(channel);
    out.unit = std::move(unit);
    out.points.push_back({"A", "launch", 0.0, launch});
    double cumulative = 0.0;
    for (const auto& e : path.elements) {
        cumulative += e.loss_db;
        const double level = photons ? launch * db_to_linear(cumulative) : launch - cumulative;
        out.points.push_back({e.point, e.name, cumulative, level});
    }
    out.path = std::move(path);
    return out;
}

}  // namespace

SignalEvolution signal_evolution(const PonTopology& t, const ClassicalChannel& ch) {
    const bool ds = ch.direction == Direction::downstream;
    auto path = ds ? trace_path(t, Node::co_tx, Node::onu, ch.center.nm())
                   : trace_path(t, Node::onu, Node::detector, ch.center.nm());
    return evolve(ch.label, "dBm", std::move(path), ch.launch_dbm, false);
}

SignalEvolution leakage_evolution(const PonTopology& t, const ClassicalChannel& ch) {
    if (ch.direction != Direction::downstream)
        throw ConfigError("directivity leakage applies to downstream channels only (" + ch.label + ")");
    auto path = trace_path(t, Node::co_tx, Node::detector, ch.center.nm());
    return evolve(ch.label + "_leak", "dBm", std::move(path), ch.launch_dbm, false);
}

SignalEvolution signal_evolution(const PonTopology& t, const QuantumChannel& q) {
    auto path = trace_path(t, Node::onu, Node::detector, q.center.nm());
    return evolve("quantum", "photons/symbol", std::move(path), q.mean_photon_number, true);
}

double CountingReceiver::counts_per_watt(double frequency_thz) const {
    return efficiency * db_to_linear(internal_loss_db) / photon_energy_thz(frequency_thz);
}

CrosstalkReport crosstalk_counts(const PonTopology& t, const ChannelPlan& plan, const CountingReceiver& rx) {
    CrosstalkReport report;
    for (const auto& ch : plan.classical) {
        const double nm = ch.center.nm();
        const Node src = ch.direction == Direction::downstream ? Node::co_tx : Node::onu;
        const double loss = path_loss(t, src, Node::detector, nm);
        CrosstalkEntry e;
        e.label = ch.label;
        e.power_w = dbm_to_watt(ch.launch_dbm - loss);
        e.counts_per_s = e.power_w * rx.counts_per_watt(ch.center.thz());
        e.violation = std::all_of(t.receiver_filters().begin(), t.receiver_filters().end(),
                                  [&](const OpticalFilter& f) { return f.in_passband(nm); });
        report.total_counts_per_s += e.counts_per_s;
        report.any_violation = report.any_violation || e.violation;
        report.entries.push_back(std::move(e));
    }
    return report;
}

}  // namespace qpon
