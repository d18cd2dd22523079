#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qpon/optics.hpp"
#include "qpon/spectrum.hpp"
#include "qpon/topology.hpp"

namespace qpon {

// Spontaneous Raman scattering coefficient vs frequency shift (probe minus pump, THz).
// Negative shifts are Stokes (probe red of pump), positive shifts anti-Stokes.
// Table values are normalized; the absolute coefficient in 1/(km GHz) is scale * value.
class RamanProfile {
public:
    struct Node {
        double shift_thz;   // |shift|, ascending from 0
        double value;
    };

    RamanProfile(std::vector<Node> stokes, std::vector<Node> anti_stokes, double scale = 1.0);

    // Normalized silica gain shape with thermal occupation at the given temperature.
    static RamanProfile silica(double temperature_k = 300.0, double scale = 1.0);
    // Rows of (signed shift THz, value); both sides must cover the same |shift| range.
    static RamanProfile from_rows(const std::vector<std::pair<double, double>>& rows, double scale = 1.0);
    static RamanProfile load_csv(const std::string& path, double scale = 1.0);

    // Clamps to the edge node beyond the tabulated range.
    double normalized(double shift_thz) const;
    double coefficient(double shift_thz) const { return scale_ * normalized(shift_thz); }
    double scale() const { return scale_; }
    RamanProfile with_scale(double scale) const;
    double max_shift_thz() const { return stokes_.back().shift_thz; }
    const std::vector<Node>& stokes() const { return stokes_; }
    const std::vector<Node>& anti_stokes() const { return anti_stokes_; }
    std::vector<std::pair<double, double>> rows() const;

private:
    std::vector<Node> stokes_;
    std::vector<Node> anti_stokes_;
    double scale_ = 1.0;
};

// Normalized silica Raman gain, peak 1 at 13.2 THz.
const std::vector<RamanProfile::Node>& silica_gain_shape();
double thermal_occupation(double shift_thz, double temperature_k);

// 1/(km GHz).
double raman_coefficient(const RamanProfile& p, double pump_nm, double probe_nm);
// Mean coefficient over a probe window [lo_thz, hi_thz].
double band_averaged_coefficient(const RamanProfile& p, double pump_nm, double lo_thz, double hi_thz);

enum class Geometry { co, counter };
std::string_view to_string(Geometry g);

// Effective interaction length in km for pump/probe attenuation in 1/km.
double raman_effective_length(double alpha_pump, double alpha_probe, double length_km, Geometry g);

// Scattered power (W) in bandwidth_ghz leaving the span: at the far end for co-propagation,
// at the pump input end for counter-propagation.
double span_raman_power(double pump_in_w, const FiberSpan& span, double pump_nm, double probe_nm, Geometry g,
                        double bandwidth_ghz, const RamanProfile& p);

struct RamanContribution {
    std::string source;
    SpanRole span = SpanRole::drop;
    Geometry geometry = Geometry::co;
    Direction source_direction = Direction::upstream;
    std::string mechanism;      // branch, directivity or reflection
    double power_w = 0.0;       // at the observation point
    double counts_per_s = 0.0;
};

struct RamanBreakdown {
    std::vector<RamanContribution> contributions;
    double total_power_w = 0.0;
    double total_counts_per_s = 0.0;
    double counts_from(Direction source) const;
};

struct RamanOptions {
    // Scales upstream pumps to emulate burst-mode upstream traffic.
    double upstream_duty_cycle = 1.0;
};

// Raman light in the probe window [lo_thz, hi_thz] arriving at co_rx (upstream feeder end)
// or at the quantum ONU, before any receiver filters. counts_per_s is left at zero.
RamanBreakdown raman_power_at(const PonTopology& t, const ChannelPlan& plan, const RamanProfile& p,
                              Node observation, double lo_thz, double hi_thz, const RamanOptions& opt = {});

// Detection window of the receiver cascade: intersection of filter passbands.
std::pair<double, double> receiver_window_thz(const PonTopology& t, const ChannelPlan& plan);

// In-band Raman counts at the quantum SPAD, before gating.
RamanBreakdown inband_raman_counts(const PonTopology& t, const ChannelPlan& plan, const RamanProfile& p,
                                   const CountingReceiver& rx, const RamanOptions& opt = {});

enum class SpectrumView { upstream, downstream };
SpectrumView parse_spectrum_view(std::string_view name);

struct SpectrumSample {
    double wavelength_nm;
    double counts_per_s;
};

// Photon-counting spectrum analyzer emulation: Raman-only counts per grid point in a
// resolution window, after optional coarse filters, at the upstream feeder output or
// at the drop output.
std::vector<SpectrumSample> raman_spectrum(const PonTopology& t, const ChannelPlan& plan, const RamanProfile& p,
                                           SpectrumView view, const std::vector<double>& grid_nm,
                                           double resolution_nm, const CountingReceiver& rx,
                                           const std::vector<OpticalFilter>& analyzer_filters = {},
                                           const RamanOptions& opt = {});

struct RamanAnchor {
    std::string name;
    PonTopology topology;
    ChannelPlan plan;           // channels that are on
    double measured_counts_per_s = 0.0;
};

struct RamanCalibrationOptions {
    bool fit_fbg_extra_loss = true;
    CountingReceiver receiver{};
};

struct RamanCalibration {
    double scale = 0.0;
    double fbg_extra_path_loss_db = 0.0;
    bool fbg_bound_active = false;
    std::vector<double> relative_residuals;   // model/measured - 1 per anchor
    double rms_log_residual = 0.0;
};

// Least-squares fit of the profile scale (and optionally the FBG extra path loss) on
// log(model/measured). The FBG extra loss is bounded so the FBG passband loss stays >= 0.
RamanCalibration calibrate_profile(const std::vector<RamanAnchor>& anchors, const RamanProfile& shape,
                                   const RamanCalibrationOptions& opt = {});

}  // namespace qpon
