#include "qpon/optics.hpp"

#include <algorithm>
#include <cmath>

#include "qpon/errors.hpp"
#include "qpon/spectrum.hpp"

namespace qpon {

AttenuationProfile::AttenuationProfile(std::vector<Anchor> anchors) : anchors_(std::move(anchors)) {
    if (anchors_.size() < 2) throw ConfigError("attenuation profile needs at least two anchors");
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
        if (!(anchors_[i].loss_db_per_km > 0.0)) throw ConfigError("attenuation anchors must be positive");
        if (i > 0 && !(anchors_[i].wavelength_nm > anchors_[i - 1].wavelength_nm))
            throw ConfigError("attenuation anchors must be strictly increasing in wavelength");
    }
    if (anchors_.back().wavelength_nm < kSpectrumMaxNm)
        throw ConfigError("attenuation profile must extend to 1650 nm");
    if (!(loss_db_per_km(kSpectrumMinNm) > 0.0))
        throw ConfigError("attenuation profile extrapolates to a non-positive loss at 1250 nm");
}

AttenuationProfile AttenuationProfile::standard_smf() {
    return AttenuationProfile({{1260.0, 0.44}, {1310.0, 0.39}, {1360.0, 0.35}, {1460.0, 0.26},
                               {1550.0, 0.21}, {1600.0, 0.22}, {1650.0, 0.25}});
}

double AttenuationProfile::loss_db_per_km(double nm) const {
    if (!(nm >= kSpectrumMinNm && nm <= kSpectrumMaxNm))
        throw DomainError("wavelength " + std::to_string(nm) + " nm outside the attenuation profile [1250, 1650] nm");
    auto it = std::upper_bound(anchors_.begin(), anchors_.end(), nm,
                               [](double x, const Anchor& a) { return x < a.wavelength_nm; });
    std::size_t hi = static_cast<std::size_t>(it - anchors_.begin());
    hi = std::clamp<std::size_t>(hi, 1, anchors_.size() - 1);
    const auto& a = anchors_[hi - 1];
    const auto& b = anchors_[hi];
    const double t = (nm - a.wavelength_nm) / (b.wavelength_nm - a.wavelength_nm);
    return a.loss_db_per_km + t * (b.loss_db_per_km - a.loss_db_per_km);
}

AttenuationProfile AttenuationProfile::scaled(double factor) const {
    auto anchors = anchors_;
    for (auto& a : anchors) a.loss_db_per_km *= factor;
    return AttenuationProfile(std::move(anchors));
}

std::string_view to_string(SpanRole r) {
    switch (r) {
        case SpanRole::feeder_down: return "feeder_down";
        case SpanRole::feeder_up: return "feeder_up";
        case SpanRole::drop: return "drop";
    }
    return "?";
}

double fiber_loss(const FiberSpan& span, double wavelength_nm) {
    if (!(span.length_km >= 0.0)) throw DomainError("fiber length must be non-negative");
    const double per_km = span.profile.loss_db_per_km(wavelength_nm);
    return span.length_km * per_km;
}

std::string_view to_string(FilterKind k) {
    switch (k) {
        case FilterKind::rb_waveband: return "rb_waveband";
        case FilterKind::fbg: return "fbg";
        case FilterKind::lan_wdm: return "lan_wdm";
        case FilterKind::dwdm_ad: return "dwdm_ad";
    }
    return "?";
}

FilterKind parse_filter_kind(std::string_view name) {
    if (name == "rb_waveband") return FilterKind::rb_waveband;
    if (name == "fbg") return FilterKind::fbg;
    if (name == "lan_wdm") return FilterKind::lan_wdm;
    if (name == "dwdm_ad") return FilterKind::dwdm_ad;
    throw ConfigError("unknown filter kind '" + std::string(name) + "' (expected rb_waveband, fbg, lan_wdm or dwdm_ad)");
}

double default_width_ghz(FilterKind kind) {
    switch (kind) {
        case FilterKind::fbg: return 14.6;
        case FilterKind::lan_wdm: return 800.0;
        case FilterKind::dwdm_ad: return 100.0;
        case FilterKind::rb_waveband: return 0.0;
    }
    return 0.0;
}

double default_insertion_loss_db(FilterKind kind) {
    switch (kind) {
        case FilterKind::rb_waveband: return 0.8;
        case FilterKind::fbg: return 1.0;
        case FilterKind::lan_wdm: return 2.0;
        case FilterKind::dwdm_ad: return 1.5;
    }
    return 0.0;
}

double default_isolation_db(FilterKind kind) { return kind == FilterKind::rb_waveband ? 40.0 : 30.0; }

double default_extra_path_loss_db(FilterKind kind) { return kind == FilterKind::fbg ? 2.0 : 0.0; }

OpticalFilter make_rb_filter(double pass_lo_nm, double pass_hi_nm) {
    OpticalFilter f;
    f.kind = FilterKind::rb_waveband;
    f.label = "rb";
    f.pass_lo_nm = pass_lo_nm;
    f.pass_hi_nm = pass_hi_nm;
    f.center_nm = 0.5 * (pass_lo_nm + pass_hi_nm);
    f.insertion_loss_db = default_insertion_loss_db(f.kind);
    f.stopband_isolation_db = default_isolation_db(f.kind);
    validate_filter(f);
    return f;
}

OpticalFilter make_narrowband_filter(FilterKind kind, double center_nm) {
    if (kind == FilterKind::rb_waveband) throw ConfigError("red/blue filters are defined by a wavelength range");
    OpticalFilter f;
    f.kind = kind;
    f.label = std::string(to_string(kind));
    f.center_nm = center_nm;
    f.width_ghz = default_width_ghz(kind);
    f.insertion_loss_db = default_insertion_loss_db(kind);
    f.stopband_isolation_db = default_isolation_db(kind);
    f.extra_path_loss_db = default_extra_path_loss_db(kind);
    validate_filter(f);
    return f;
}

void validate_filter(const OpticalFilter& f) {
    if (f.kind == FilterKind::rb_waveband) {
        if (!(f.pass_lo_nm > 0.0 && f.pass_hi_nm > f.pass_lo_nm))
            throw ConfigError("red/blue filter passband must be a non-empty wavelength range");
    } else {
        if (!(f.center_nm > 0.0)) throw ConfigError("filter center wavelength must be positive");
        if (!(f.width_ghz > 0.0)) throw ConfigError("filter width must be positive");
    }
    if (!(f.insertion_loss_db >= 0.0)) throw ConfigError("filter insertion loss must be non-negative");
    if (!(f.stopband_isolation_db >= 0.0)) throw ConfigError("filter stopband isolation must be non-negative");
    if (!(f.passband_loss_db() >= 0.0)) throw ConfigError("filter passband loss (insertion + extra) must be non-negative");
}

bool OpticalFilter::in_passband(double wavelength_nm) const {
    if (kind == FilterKind::rb_waveband) return wavelength_nm >= pass_lo_nm && wavelength_nm <= pass_hi_nm;
    const double detuning_ghz = 1e3 * std::abs(wavelength_to_frequency(wavelength_nm) - wavelength_to_frequency(center_nm));
    return detuning_ghz <= 0.5 * width_ghz;
}

std::pair<double, double> OpticalFilter::passband_thz() const {
    if (kind == FilterKind::rb_waveband)
        return {wavelength_to_frequency(pass_hi_nm), wavelength_to_frequency(pass_lo_nm)};
    const double c = wavelength_to_frequency(center_nm);
    return {c - 0.5e-3 * width_ghz, c + 0.5e-3 * width_ghz};
}

double OpticalFilter::bandwidth_ghz() const {
    auto [lo, hi] = passband_thz();
    return 1e3 * (hi - lo);
}

double filter_transmission(const OpticalFilter& f, double wavelength_nm) {
    return f.in_passband(wavelength_nm) ? f.passband_loss_db() : f.stopband_isolation_db;
}

double relative_bandwidth(const OpticalFilter& f) {
    auto [lo, hi] = f.passband_thz();
    return (hi - lo) / (0.5 * (hi + lo));
}

void validate_splitter(const Splitter& s) {
    const int n = s.branches;
    if (n < 2 || n > 64 || (n & (n - 1)) != 0)
        throw ConfigError("splitter branch count must be one of 2, 4, 8, 16, 32, 64 (got " + std::to_string(n) + ")");
    if (!(s.excess_loss_db >= 0.0)) throw ConfigError("splitter excess loss must be non-negative");
    if (!(s.directivity_db >= 0.0)) throw ConfigError("splitter directivity must be non-negative");
}

double splitter_loss(const Splitter& s, SplitterPath path) {
    if (path == SplitterPath::trunk_to_trunk) return s.directivity_db;
    return 10.0 * std::log10(static_cast<double>(s.branches)) + s.excess_loss_db;
}

}  // namespace qpon
