#include "qpon/raman.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qpon/errors.hpp"
#include "qpon/units.hpp"

namespace qpon {

const std::vector<RamanProfile::Node>& silica_gain_shape() {
    static const std::vector<RamanProfile::Node> shape{
        {0.0, 0.0},   {2.5, 0.13},  {5.0, 0.30},  {7.5, 0.45},  {10.0, 0.68}, {13.2, 1.0},
        {15.0, 0.82}, {17.5, 0.30}, {20.0, 0.12}, {24.0, 0.10}, {27.5, 0.05}, {30.0, 0.04},
        {32.5, 0.06}, {34.5, 0.04}, {36.5, 0.05}, {40.0, 0.004},
    };
    return shape;
}

double thermal_occupation(double shift_thz, double temperature_k) {
    const double x = kPlanck * std::abs(shift_thz) * 1e12 / (kBoltzmann * temperature_k);
    return 1.0 / std::expm1(x);
}

namespace {

void check_side(const std::vector<RamanProfile::Node>& side, const char* name) {
    if (side.size() < 2) throw ConfigError(std::string("Raman table ") + name + " side needs at least two nodes");
    if (side.front().shift_thz != 0.0) throw ConfigError(std::string("Raman table ") + name + " side must start at 0 THz");
    for (std::size_t i = 0; i < side.size(); ++i) {
        if (!(side[i].value >= 0.0)) throw ConfigError("Raman table values must be non-negative");
        if (i > 0 && !(side[i].shift_thz > side[i - 1].shift_thz))
            throw ConfigError("Raman table shifts must be strictly increasing");
    }
}

double interpolate(const std::vector<RamanProfile::Node>& side, double a) {
    if (a >= side.back().shift_thz) return side.back().value;
    auto it = std::upper_bound(side.begin(), side.end(), a,
                               [](double x, const RamanProfile::Node& n) { return x < n.shift_thz; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double t = (a - lo.shift_thz) / (hi.shift_thz - lo.shift_thz);
    return lo.value + t * (hi.value - lo.value);
}

}  // namespace

RamanProfile::RamanProfile(std::vector<Node> stokes, std::vector<Node> anti_stokes, double scale)
    : stokes_(std::move(stokes)), anti_stokes_(std::move(anti_stokes)), scale_(scale) {
    check_side(stokes_, "Stokes");
    check_side(anti_stokes_, "anti-Stokes");
    if (stokes_.back().shift_thz != anti_stokes_.back().shift_thz)
        throw ConfigError("Raman table sides must cover the same shift range");
    if (!(scale_ >= 0.0) || !std::isfinite(scale_)) throw ConfigError("Raman scale must be finite and non-negative");
}

RamanProfile RamanProfile::silica(double temperature_k, double scale) {
    if (!(temperature_k > 0.0)) throw ConfigError("temperature must be positive");
    const auto& g = silica_gain_shape();
    // Limit of g(s) * n(s) at s -> 0 is g'(0) kT/h.
    const double origin = g[1].value / g[1].shift_thz * kBoltzmann * temperature_k / (kPlanck * 1e12);
    std::vector<Node> stokes, anti;
    for (const auto& n : g) {
        if (n.shift_thz == 0.0) {
            stokes.push_back({0.0, origin});
            anti.push_back({0.0, origin});
            continue;
        }
        const double occ = thermal_occupation(n.shift_thz, temperature_k);
        stokes.push_back({n.shift_thz, n.value * (1.0 + occ)});
        anti.push_back({n.shift_thz, n.value * occ});
    }
    return RamanProfile(std::move(stokes), std::move(anti), scale);
}

RamanProfile RamanProfile::from_rows(const std::vector<std::pair<double, double>>& rows, double scale) {
    std::vector<Node> stokes, anti;
    for (auto [shift, value] : rows) {
        if (shift <= 0.0) stokes.push_back({-shift, value});
        if (shift >= 0.0) anti.push_back({shift, value});
    }
    std::sort(stokes.begin(), stokes.end(), [](const Node& a, const Node& b) { return a.shift_thz < b.shift_thz; });
    std::sort(anti.begin(), anti.end(), [](const Node& a, const Node& b) { return a.shift_thz < b.shift_thz; });
    return RamanProfile(std::move(stokes), std::move(anti), scale);
}

RamanProfile RamanProfile::load_csv(const std::string& path, double scale) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open Raman profile '" + path + "'");
    std::vector<std::pair<double, double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double shift = 0.0, value = 0.0;
        if (!(ls >> shift >> value)) {
            // Tolerate a single header line.
            if (rows.empty() && lineno == 1) continue;
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected '<shift THz>,<value>'");
        }
        rows.emplace_back(shift, value);
    }
    return from_rows(rows, scale);
}

double RamanProfile::normalized(double shift_thz) const {
    if (!std::isfinite(shift_thz)) throw DomainError("Raman shift must be finite");
    return shift_thz < 0.0 ? interpolate(stokes_, -shift_thz) : interpolate(anti_stokes_, shift_thz);
}

RamanProfile RamanProfile::with_scale(double scale) const {
    return RamanProfile(stokes_, anti_stokes_, scale);
}

std::vector<std::pair<double, double>> RamanProfile::rows() const {
    std::vector<std::pair<double, double>> out;
    for (auto it = stokes_.rbegin(); it != stokes_.rend(); ++it)
        if (it->shift_thz > 0.0) out.emplace_back(-it->shift_thz, it->value);
    for (const auto& n : anti_stokes_) out.emplace_back(n.shift_thz, n.value);
    return out;
}

double raman_coefficient(const RamanProfile& p, double pump_nm, double probe_nm) {
    return p.coefficient(wavelength_to_frequency(probe_nm) - wavelength_to_frequency(pump_nm));
}

double band_averaged_coefficient(const RamanProfile& p, double pump_nm, double lo_thz, double hi_thz) {
    const double pump = wavelength_to_frequency(pump_nm);
    if (!(hi_thz > lo_thz)) return p.coefficient(lo_thz - pump);
    constexpr int n = 256;
    const double h = (hi_thz - lo_thz) / n;
    double sum = 0.5 * (p.coefficient(lo_thz - pump) + p.coefficient(hi_thz - pump));
    for (int i = 1; i < n; ++i) sum += p.coefficient(lo_thz + i * h - pump);
    return sum / n;
}

std::string_view to_string(Geometry g) { return g == Geometry::co ? "co" : "counter"; }

double raman_effective_length(double alpha_pump, double alpha_probe, double length_km, Geometry g) {
    if (!(length_km >= 0.0)) throw DomainError("span length must be non-negative");
    if (length_km == 0.0) return 0.0;
    if (g == Geometry::counter) {
        const double s = alpha_pump + alpha_probe;
        return s == 0.0 ? length_km : -std::expm1(-s * length_km) / s;
    }
    const double d = alpha_pump - alpha_probe;
    const double tail = std::exp(-alpha_probe * length_km);
    if (d == 0.0) return length_km * tail;
    return tail * (-std::expm1(-d * length_km)) / d;
}

double span_raman_power(double pump_in_w, const FiberSpan& span, double pump_nm, double probe_nm, Geometry g,
                        double bandwidth_ghz, const RamanProfile& p) {
    if (!(pump_in_w >= 0.0)) throw DomainError("pump power must be non-negative");
    if (!(bandwidth_ghz > 0.0)) throw DomainError("detection bandwidth must be positive");
    const double ap = db_per_km_to_neper(span.profile.loss_db_per_km(pump_nm));
    const double aq = db_per_km_to_neper(span.profile.loss_db_per_km(probe_nm));
    return pump_in_w * raman_coefficient(p, pump_nm, probe_nm) * bandwidth_ghz *
           raman_effective_length(ap, aq, span.length_km, g);
}

double RamanBreakdown::counts_from(Direction source) const {
    double sum = 0.0;
    for (const auto& c : contributions)
        if (c.source_direction == source) sum += c.counts_per_s;
    return sum;
}

namespace {

double alpha_of(const FiberSpan& s, double nm) { return db_per_km_to_neper(s.profile.loss_db_per_km(nm)); }
double transmission(const FiberSpan& s, double nm) { return db_to_linear(fiber_loss(s, nm)); }

double filters_transmission(const std::vector<OpticalFilter>& filters, double nm) {
    double db = 0.0;
    for (const auto& f : filters) db += filter_transmission(f, nm);
    return db_to_linear(db);
}

}  // namespace

RamanBreakdown raman_power_at(const PonTopology& t, const ChannelPlan& plan, const RamanProfile& p,
                              Node observation, double lo_thz, double hi_thz, const RamanOptions& opt) {
    if (observation != Node::co_rx && observation != Node::onu)
        throw TopologyError("Raman observation point must be co_rx or onu");
    if (!(hi_thz > lo_thz)) throw DomainError("Raman probe window must have positive width");
    if (!(opt.upstream_duty_cycle >= 0.0 && opt.upstream_duty_cycle <= 1.0))
        throw ConfigError("upstream duty cycle must lie in [0, 1]");

    RamanBreakdown out;
    const double probe_thz = 0.5 * (lo_thz + hi_thz);
    // Clamp absorbs round-off for windows centered on the profile edges.
    const double probe_nm = std::clamp(frequency_to_wavelength(probe_thz), kSpectrumMinNm, kSpectrumMaxNm);
    const double bandwidth_ghz = 1e3 * (hi_thz - lo_thz);

    const FiberSpan& fd = t.feeder_down();
    const FiberSpan& fu = t.feeder_up();
    const FiberSpan& dr = t.drop();
    const double split = db_to_linear(splitter_loss(t.splitter(), SplitterPath::trunk_to_branch));
    const double directivity = db_to_linear(splitter_loss(t.splitter(), SplitterPath::trunk_to_trunk));
    const double n_drops = t.drop_count();

    for (const auto& ch : plan.classical) {
        const double nm = ch.center.nm();
        const double cb = band_averaged_coefficient(p, nm, lo_thz, hi_thz) * bandwidth_ghz;
        auto leff = [&](const FiberSpan& s, Geometry g) {
            return raman_effective_length(alpha_of(s, nm), alpha_of(s, probe_nm), s.length_km, g);
        };
        auto add = [&](SpanRole role, Geometry g, const char* mech, double power) {
            RamanContribution c;
            c.source = ch.label;
            c.source_direction = ch.direction;
            c.span = role;
            c.geometry = g;
            c.mechanism = mech;
            c.power_w = power;
            out.total_power_w += power;
            out.contributions.push_back(std::move(c));
        };

        double launch = dbm_to_watt(ch.launch_dbm);
        // Pump launched upstream at the ONU (upstream channels, or a downstream pump reflected there).
        auto upstream_pump = [&](double p_onu, const char* mech) {
            if (observation == Node::co_rx) {
                add(SpanRole::drop, Geometry::co, mech, p_onu * cb * leff(dr, Geometry::co) * split * transmission(fu, probe_nm));
                add(SpanRole::feeder_up, Geometry::co, mech, p_onu * transmission(dr, nm) * split * cb * leff(fu, Geometry::co));
            } else {
                add(SpanRole::drop, Geometry::counter, mech, p_onu * cb * leff(dr, Geometry::counter));
                add(SpanRole::feeder_up, Geometry::counter, mech,
                    p_onu * transmission(dr, nm) * split * cb * leff(fu, Geometry::counter) * split * transmission(dr, probe_nm));
            }
        };

        if (ch.direction == Direction::upstream) {
            launch *= opt.upstream_duty_cycle * filters_transmission(t.onu_filters(), nm);
            upstream_pump(launch, "branch");
            continue;
        }

        const double at_splitter = launch * transmission(fd, nm);
        if (observation == Node::co_rx) {
            // Backscatter from all N drops recombines at the splitter toward the upstream feeder.
            add(SpanRole::drop, Geometry::counter, "branch",
                n_drops * at_splitter * split * cb * leff(dr, Geometry::counter) * split * transmission(fu, probe_nm));
            add(SpanRole::feeder_down, Geometry::co, "directivity",
                launch * cb * leff(fd, Geometry::co) * directivity * transmission(fu, probe_nm));
            add(SpanRole::feeder_up, Geometry::co, "directivity", at_splitter * directivity * cb * leff(fu, Geometry::co));
        } else {
            add(SpanRole::feeder_down, Geometry::co, "branch",
                launch * cb * leff(fd, Geometry::co) * split * transmission(dr, probe_nm));
            add(SpanRole::drop, Geometry::co, "branch", at_splitter * split * cb * leff(dr, Geometry::co));
        }
        if (t.onu_reflectance_db()) {
            const double reflected = at_splitter * split * transmission(dr, nm) * db_to_linear(-*t.onu_reflectance_db());
            upstream_pump(reflected, "reflection");
        }
    }
    return out;
}

std::pair<double, double> receiver_window_thz(const PonTopology& t, const ChannelPlan& plan) {
    const auto& filters = t.receiver_filters();
    if (filters.empty()) throw ConfigError("in-band Raman needs a receiver filter cascade to define the detection band");
    double lo = -1e300, hi = 1e300;
    for (const auto& f : filters) {
        auto [a, b] = f.passband_thz();
        lo = std::max(lo, a);
        hi = std::min(hi, b);
    }
    const double q = plan.quantum.center.thz();
    if (!(hi > lo) || q < lo || q > hi)
        throw ConfigError("quantum channel is not inside the passband of every receiver filter");
    return {lo, hi};
}

RamanBreakdown inband_raman_counts(const PonTopology& t, const ChannelPlan& plan, const RamanProfile& p,
                                   const CountingReceiver& rx, const RamanOptions& opt) {
    if (plan.classical.empty()) return {};
    auto [lo, hi] = receiver_window_thz(t, plan);
    RamanBreakdown out = raman_power_at(t, plan, p, Node::co_rx, lo, hi, opt);
    const double q_nm = plan.quantum.center.nm();
    const double through = db_to_linear(path_loss(t, Node::co_rx, Node::detector, q_nm));
    const double per_watt = rx.counts_per_watt(plan.quantum.center.thz());
    out.total_power_w = 0.0;
    for (auto& c : out.contributions) {
        c.power_w *= through;
        c.counts_per_s = c.power_w * per_watt;
        out.total_power_w += c.power_w;
        out.total_counts_per_s += c.counts_per_s;
    }
    return out;
}

SpectrumView parse_spectrum_view(std::string_view name) {
    if (name == "upstream") return SpectrumView::upstream;
    if (name == "downstream") return SpectrumView::downstream;
    throw ConfigError("unknown spectrum view '" + std::string(name) + "' (expected upstream or downstream)");
}

std::vector<SpectrumSample> raman_spectrum(const PonTopology& t, const ChannelPlan& plan, const RamanProfile& p,
                                           SpectrumView view, const std::vector<double>& grid_nm,
                                           double resolution_nm, const CountingReceiver& rx,
                                           const std::vector<OpticalFilter>& analyzer_filters,
                                           const RamanOptions& opt) {
    if (!(resolution_nm > 0.0)) throw DomainError("resolution bandwidth must be positive");
    const Node obs = view == SpectrumView::upstream ? Node::co_rx : Node::onu;
    std::vector<SpectrumSample> out;
    out.reserve(grid_nm.size());
    for (double nm : grid_nm) {
        if (!(nm >= kSpectrumMinNm && nm <= kSpectrumMaxNm))
            throw DomainError("spectrum grid point " + std::to_string(nm) + " nm outside [1250, 1650] nm");
        double counts = 0.0;
        if (!plan.classical.empty()) {
            // Window centered in frequency so the probe sits on the grid point.
            const double f = wavelength_to_frequency(nm);
            const double half = 0.5 * f * resolution_nm / nm;
            auto b = raman_power_at(t, plan, p, obs, f - half, f + half, opt);
            counts = b.total_power_w * filters_transmission(analyzer_filters, nm) *
                     rx.counts_per_watt(wavelength_to_frequency(nm));
        }
        out.push_back({nm, counts});
    }
    return out;
}

namespace {

// Sets every FBG extra path loss in the receiver cascade; returns how many FBGs there are.
int zero_fbg_extra(PonConfig& cfg, double& min_fbg_il) {
    int n = 0;
    for (auto& f : cfg.receiver_filters) {
        if (f.kind != FilterKind::fbg) continue;
        f.extra_path_loss_db = 0.0;
        min_fbg_il = std::min(min_fbg_il, f.insertion_loss_db);
        ++n;
    }
    return n;
}

}  // namespace

RamanCalibration calibrate_profile(const std::vector<RamanAnchor>& anchors, const RamanProfile& shape,
                                   const RamanCalibrationOptions& opt) {
    if (anchors.empty()) throw CalibrationError("Raman calibration needs at least one anchor");
    const RamanProfile unit = shape.with_scale(1.0);
    const double ln10_10 = std::log(10.0) / 10.0;

    std::vector<double> y(anchors.size());
    std::vector<double> k(anchors.size(), 0.0);
    double min_fbg_il = 1e300;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        const auto& a = anchors[i];
        if (!(a.measured_counts_per_s > 0.0))
            throw CalibrationError("anchor '" + a.name + "' has non-positive counts, which implies a negative scale");
        PonConfig cfg = a.topology.config();
        if (opt.fit_fbg_extra_loss) k[i] = zero_fbg_extra(cfg, min_fbg_il);
        const auto model = inband_raman_counts(build_pon(cfg), a.plan, unit, opt.receiver).total_counts_per_s;
        if (!(model > 0.0))
            throw CalibrationError("anchor '" + a.name + "' has no Raman source; the scale is not identifiable");
        y[i] = std::log(a.measured_counts_per_s) - std::log(model);
    }

    RamanCalibration out;
    const double n = static_cast<double>(anchors.size());
    double log_scale = 0.0, x = 0.0;   // x: FBG extra loss in nepers-of-power (dB * ln10/10)
    const bool fit_x = opt.fit_fbg_extra_loss && std::any_of(k.begin(), k.end(), [](double v) { return v > 0.0; });
    if (fit_x) {
        if (anchors.size() < 2) throw CalibrationError("fitting scale and FBG extra loss needs at least two anchors");
        double mk = 0.0, my = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i) { mk += k[i]; my += y[i]; }
        mk /= n;
        my /= n;
        double skk = 0.0, sky = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i) {
            skk += (k[i] - mk) * (k[i] - mk);
            sky += (k[i] - mk) * (y[i] - my);
        }
        if (skk <= 1e-12)
            throw CalibrationError("under-determined Raman fit: anchors need differing FBG counts to separate scale and FBG loss");
        // y = log_scale - k * x
        x = -sky / skk;
        const double bound = -min_fbg_il * ln10_10;
        if (x < bound) {
            x = bound;
            out.fbg_bound_active = true;
        }
        log_scale = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i) log_scale += y[i] + k[i] * x;
        log_scale /= n;
    } else {
        for (double v : y) log_scale += v;
        log_scale /= n;
    }

    out.scale = std::exp(log_scale);
    out.fbg_extra_path_loss_db = fit_x ? x / ln10_10 : 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = log_scale - k[i] * x - y[i];
        out.relative_residuals.push_back(std::expm1(r));
        ss += r * r;
    }
    out.rms_log_residual = std::sqrt(ss / n);
    if (!std::isfinite(out.scale) || !(out.scale > 0.0)) throw CalibrationError("Raman fit produced a non-finite scale");
    return out;
}

}  // namespace qpon
