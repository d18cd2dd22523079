#include "qpon/spectrum.hpp"

#include <cmath>
#include <sstream>

#include "qpon/errors.hpp"
#include "qpon/units.hpp"

namespace qpon {

double wavelength_to_frequency(double wavelength_nm) {
    if (!(wavelength_nm > 0.0) || !std::isfinite(wavelength_nm))
        throw DomainError("wavelength must be positive, got " + std::to_string(wavelength_nm) + " nm");
    return kNmThz / wavelength_nm;
}

double frequency_to_wavelength(double frequency_thz) {
    if (!(frequency_thz > 0.0) || !std::isfinite(frequency_thz))
        throw DomainError("frequency must be positive, got " + std::to_string(frequency_thz) + " THz");
    return kNmThz / frequency_thz;
}

SpectralPoint SpectralPoint::from_nm(double wavelength_nm) {
    return SpectralPoint(wavelength_nm, wavelength_to_frequency(wavelength_nm));
}

SpectralPoint SpectralPoint::from_thz(double frequency_thz) {
    return SpectralPoint(frequency_to_wavelength(frequency_thz), frequency_thz);
}

const std::array<Band, 5>& itu_bands() {
    static const std::array<Band, 5> bands{{
        {BandName::O, 1260.0, 1360.0},
        {BandName::E, 1360.0, 1460.0},
        {BandName::S, 1460.0, 1530.0},
        {BandName::C, 1530.0, 1565.0},
        {BandName::L, 1565.0, 1625.0},
    }};
    return bands;
}

std::string_view to_string(BandName b) {
    switch (b) {
        case BandName::O: return "O";
        case BandName::E: return "E";
        case BandName::S: return "S";
        case BandName::C: return "C";
        case BandName::L: return "L";
    }
    return "?";
}

Band band_of(double wavelength_nm) {
    if (!(wavelength_nm >= kSpectrumMinNm && wavelength_nm <= kSpectrumMaxNm))
        throw DomainError("wavelength " + std::to_string(wavelength_nm) + " nm outside [1250, 1650] nm");
    const auto& bands = itu_bands();
    for (const auto& b : bands)
        if (wavelength_nm >= b.lo_nm && wavelength_nm < b.hi_nm) return b;
    if (wavelength_nm == bands.back().hi_nm) return bands.back();
    // 1250..1260 and 1625..1650 belong to no ITU band.
    throw DomainError("wavelength " + std::to_string(wavelength_nm) + " nm is not inside any O/E/S/C/L band");
}

std::string_view to_string(Direction d) {
    return d == Direction::downstream ? "downstream" : "upstream";
}

std::string_view to_string(ChannelGroup g) {
    switch (g) {
        case ChannelGroup::wired_ds: return "wired_ds";
        case ChannelGroup::overlay_ds: return "overlay_ds";
        case ChannelGroup::us: return "us";
    }
    return "?";
}

ChannelGroup parse_channel_group(std::string_view name) {
    if (name == "wired_ds") return ChannelGroup::wired_ds;
    if (name == "overlay_ds") return ChannelGroup::overlay_ds;
    if (name == "us") return ChannelGroup::us;
    throw ConfigError("unknown channel group '" + std::string(name) + "' (expected wired_ds, overlay_ds or us)");
}

GroupSet GroupSet::parse(std::string_view text) {
    if (text == "all") return all();
    if (text == "none" || text.empty()) return none();
    GroupSet out = none();
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        auto token = text.substr(pos, comma == std::string_view::npos ? text.size() - pos : comma - pos);
        while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
        while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
        out.set(parse_channel_group(token), true);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

bool GroupSet::contains(ChannelGroup g) const {
    switch (g) {
        case ChannelGroup::wired_ds: return wired_ds;
        case ChannelGroup::overlay_ds: return overlay_ds;
        case ChannelGroup::us: return us;
    }
    return false;
}

void GroupSet::set(ChannelGroup g, bool on) {
    switch (g) {
        case ChannelGroup::wired_ds: wired_ds = on; break;
        case ChannelGroup::overlay_ds: overlay_ds = on; break;
        case ChannelGroup::us: us = on; break;
    }
}

std::string GroupSet::to_string() const {
    if (wired_ds && overlay_ds && us) return "all";
    if (empty()) return "none";
    std::string out;
    for (auto g : {ChannelGroup::wired_ds, ChannelGroup::overlay_ds, ChannelGroup::us}) {
        if (!contains(g)) continue;
        if (!out.empty()) out += ',';
        out += qpon::to_string(g);
    }
    return out;
}

std::string_view to_string(PlanScenario s) { return s == PlanScenario::gpon ? "gpon" : "ngpon2"; }

PlanScenario parse_plan_scenario(std::string_view name) {
    if (name == "gpon") return PlanScenario::gpon;
    if (name == "ngpon2") return PlanScenario::ngpon2;
    throw ConfigError("unknown channel plan '" + std::string(name) + "' (expected gpon or ngpon2)");
}

ChannelPlan ChannelPlan::with_groups(const GroupSet& groups) const {
    ChannelPlan out = *this;
    out.classical.clear();
    for (const auto& ch : classical)
        if (groups.contains(ch.group)) out.classical.push_back(ch);
    return out;
}

std::size_t ChannelPlan::count(ChannelGroup g) const {
    std::size_t n = 0;
    for (const auto& ch : classical) n += ch.group == g ? 1 : 0;
    return n;
}

std::vector<double> overlay_grid_nm() {
    constexpr double lo = 1548.51, hi = 1560.31;
    constexpr int n = 11;
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
    out.back() = hi;
    return out;
}

namespace {

ClassicalChannel make_channel(double nm, double dbm, Direction dir, ChannelGroup g, std::string label) {
    return ClassicalChannel{SpectralPoint::from_nm(nm), dbm, dir, g, std::move(label)};
}

std::string nm_label(std::string_view prefix, double nm) {
    std::ostringstream os;
    os.precision(2);
    os << prefix << '_' << std::fixed << nm;
    return os.str();
}

}  // namespace

ChannelPlan build_channel_plan(PlanScenario scenario) {
    ChannelPlan plan;
    plan.scenario = scenario;
    plan.quantum_direction = Direction::upstream;
    if (scenario == PlanScenario::gpon) {
        plan.classical.push_back(make_channel(1489.0, 2.2, Direction::downstream, ChannelGroup::wired_ds, "ds_1489.00"));
        plan.classical.push_back(make_channel(1310.0, 0.3, Direction::upstream, ChannelGroup::us, "us_1310.00"));
        plan.quantum.center = SpectralPoint::from_nm(1550.12);
        plan.receiver_band_lo_nm = 1516.0;
        plan.receiver_band_hi_nm = 1650.0;
    } else {
        for (double nm : {1597.62, 1598.89, 1600.17, 1602.31})
            plan.classical.push_back(make_channel(nm, 3.9, Direction::downstream, ChannelGroup::wired_ds, nm_label("ds", nm)));
        for (double nm : overlay_grid_nm())
            plan.classical.push_back(make_channel(nm, -1.1, Direction::downstream, ChannelGroup::overlay_ds, nm_label("ov", nm)));
        for (double nm : {1531.12, 1533.07, 1534.25, 1536.61})
            plan.classical.push_back(make_channel(nm, 1.6, Direction::upstream, ChannelGroup::us, nm_label("us", nm)));
        plan.quantum.center = SpectralPoint::from_nm(1310.55);
        plan.receiver_band_lo_nm = 1250.0;
        plan.receiver_band_hi_nm = 1410.0;
    }
    plan.quantum.mean_photon_number = 0.1;
    plan.quantum.symbol_rate_hz = 1e9;
    return plan;
}

ChannelPlan build_channel_plan(std::string_view scenario) {
    return build_channel_plan(parse_plan_scenario(scenario));
}

void validate_plan(const ChannelPlan& plan) {
    auto in_window = [](double nm) { return nm >= kSpectrumMinNm && nm <= kSpectrumMaxNm; };
    auto in_rx_band = [&](double nm) { return nm >= plan.receiver_band_lo_nm && nm <= plan.receiver_band_hi_nm; };
    const double q = plan.quantum.center.nm();
    if (!in_window(q)) throw ConfigError("quantum wavelength " + std::to_string(q) + " nm outside [1250, 1650] nm");
    if (!(plan.quantum.mean_photon_number > 0.0 && plan.quantum.mean_photon_number <= 1.0))
        throw ConfigError("mean photon number must lie in (0, 1]");
    if (!(plan.quantum.symbol_rate_hz > 0.0)) throw ConfigError("symbol rate must be positive");
    if (!in_rx_band(q)) throw ConfigError("quantum wavelength is outside the receiver red/blue passband");
    for (const auto& ch : plan.classical) {
        if (!in_window(ch.center.nm()))
            throw ConfigError("channel " + ch.label + " outside [1250, 1650] nm");
        if (ch.launch_dbm < -20.0 || ch.launch_dbm > 10.0)
            throw ConfigError("channel " + ch.label + " launch power outside [-20, 10] dBm");
        if (in_rx_band(ch.center.nm()))
            throw ConfigError("channel " + ch.label + " falls inside the receiver red/blue passband");
    }
}

}  // namespace qpon
