#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qpon {

// Kilometric fiber loss vs wavelength, piecewise-linear between anchors.
class AttenuationProfile {
public:
    struct Anchor {
        double wavelength_nm;
        double loss_db_per_km;
    };

    explicit AttenuationProfile(std::vector<Anchor> anchors);
    // Standard single-mode fiber without water peak: 0.39 dB/km at 1310 nm, 0.21 dB/km at 1550 nm.
    static AttenuationProfile standard_smf();

    // Valid on [1250, 1650] nm; below the first anchor the first segment is extended.
    double loss_db_per_km(double wavelength_nm) const;
    const std::vector<Anchor>& anchors() const { return anchors_; }
    AttenuationProfile scaled(double factor) const;

private:
    std::vector<Anchor> anchors_;
};

enum class SpanRole { feeder_down, feeder_up, drop };
std::string_view to_string(SpanRole r);

struct FiberSpan {
    SpanRole role = SpanRole::drop;
    double length_km = 0.0;
    AttenuationProfile profile = AttenuationProfile::standard_smf();
};

double fiber_loss(const FiberSpan& span, double wavelength_nm);

enum class FilterKind { rb_waveband, fbg, lan_wdm, dwdm_ad };
std::string_view to_string(FilterKind k);
FilterKind parse_filter_kind(std::string_view name);

struct OpticalFilter {
    FilterKind kind = FilterKind::rb_waveband;
    std::string label;
    // Narrowband kinds: passband centered on center_nm, width_ghz wide in frequency.
    double center_nm = 0.0;
    double width_ghz = 0.0;
    // Waveband kind: passband given directly as a wavelength interval.
    double pass_lo_nm = 0.0;
    double pass_hi_nm = 0.0;
    double insertion_loss_db = 0.0;
    double stopband_isolation_db = 0.0;
    double extra_path_loss_db = 0.0;

    bool in_passband(double wavelength_nm) const;
    double passband_loss_db() const { return insertion_loss_db + extra_path_loss_db; }
    // Passband edges in THz (low, high).
    std::pair<double, double> passband_thz() const;
    double bandwidth_ghz() const;
};

double default_width_ghz(FilterKind kind);
double default_insertion_loss_db(FilterKind kind);
double default_isolation_db(FilterKind kind);
double default_extra_path_loss_db(FilterKind kind);

OpticalFilter make_rb_filter(double pass_lo_nm, double pass_hi_nm);
OpticalFilter make_narrowband_filter(FilterKind kind, double center_nm);
// Validates a filter definition, throwing ConfigError.
void validate_filter(const OpticalFilter& f);

// Loss in dB at the given wavelength (ideal step between passband and stopband).
double filter_transmission(const OpticalFilter& f, double wavelength_nm);
double relative_bandwidth(const OpticalFilter& f);

struct Splitter {
    int branches = 16;
    double excess_loss_db = 1.0;
    double directivity_db = 50.0;
};

enum class SplitterPath { trunk_to_branch, branch_to_trunk, trunk_to_trunk };
void validate_splitter(const Splitter& s);
double splitter_loss(const Splitter& s, SplitterPath path);

}  // namespace qpon
