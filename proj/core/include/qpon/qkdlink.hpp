#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qpon/raman.hpp"
#include "qpon/spectrum.hpp"
#include "qpon/topology.hpp"

namespace qpon {

struct DpsSource {
    double mean_photon_number = 0.1;
    double symbol_rate_hz = 1e9;
    double intrinsic_error = 0.0;   // phase-encoding error probability
    double carving_duty = 0.5;
    std::string model = "dml";
};

// "dml" (directly modulated laser) or "phase_modulator" (external modulator).
DpsSource source_preset(std::string_view name);
void validate_source(const DpsSource& s);

struct DetectorModel {
    double efficiency = 0.1;
    double dark_rate_hz = 520.0;
    double dead_time_s = 0.0;
    double gate_duty = 0.3;
    double gate_signal_fraction = 0.95;   // signal energy inside the gate window
    double afterpulse_factor = 0.0;       // afterpulses per click per unit detector occupancy
};
void validate_detector(const DetectorModel& d);

struct InterferometerModel {
    int delay_symbols = 1;
    double visibility = 1.0;
    double insertion_loss_db = 0.0;       // whole receiver front end

    double intrinsic_error() const { return 0.5 * (1.0 - visibility); }
};
void validate_interferometer(const InterferometerModel& di);

struct ClickRates {
    double signal_true = 0.0;        // detected signal clicks without gating or dead time
    double signal_in_gate = 0.0;
    double noise_in_gate = 0.0;
    double live_fraction = 1.0;      // non-paralyzable dead-time factor
    double signal_registered = 0.0;
    double noise_registered = 0.0;
    double afterpulse = 0.0;
    double measured_total = 0.0;     // registered clicks plus afterpulses
};

ClickRates click_rates(const DpsSource& src, double total_loss_db, const DetectorModel& det, double noise_rate_hz);

// Throws DomainError when both rates are zero.
double qber(double signal_rate, double noise_rate, double intrinsic_error);

// Encoder and interferometer errors act as independent bit flips.
double combined_intrinsic_error(const DpsSource& src, const InterferometerModel& di);

double binary_entropy(double e);
// Collision-probability compression term of the individual-attack bound. Held at its
// minimum beyond the stationary point e = 3/19, where the closed form turns back up.
double collision_compression(double e);
double secure_fraction(double e, double mu, double ec_inefficiency);
// QBER at which secure_fraction reaches zero.
double secure_fraction_threshold(double mu, double ec_inefficiency);

struct CountBreakdown {
    double signal = 0.0;
    double raman = 0.0;
    double dark = 0.0;
    double leakage = 0.0;
    double afterpulse = 0.0;
};

struct LinkReport {
    std::string engine;
    double total_loss_db = 0.0;
    double raw_rate_bps = 0.0;
    double raw_rate_3sigma_bps = 0.0;
    double qber = 0.0;
    double qber_3sigma = 0.0;
    double secure_fraction = 0.0;
    double secure_rate_bps = 0.0;
    double secure_bits_per_pulse = 0.0;
    CountBreakdown counts;              // registered in-gate counts/s
    double raman_rate_hz = 0.0;         // at the SPAD before gating
    double leakage_rate_hz = 0.0;
    double acquisition_s = 0.0;
    std::uint64_t pulses = 0;
    std::uint64_t clicks = 0;
    std::uint64_t errors = 0;
};

struct LinkInputs {
    PonTopology topology = build_pon();
    ChannelPlan plan;                   // only the channels that are on
    DpsSource source;
    DetectorModel detector;
    InterferometerModel interferometer;
    RamanProfile raman = RamanProfile::silica();
    RamanOptions raman_options;
    double ec_inefficiency = 1.1;
    double acquisition_s = 60.0;        // sets the statistical error bars of the analytic engine
};

struct NoiseBudget {
    double dark_hz = 0.0;
    double raman_hz = 0.0;
    double leakage_hz = 0.0;
    double total() const { return dark_hz + raman_hz + leakage_hz; }
};

double quantum_path_loss_db(const LinkInputs& in);
NoiseBudget noise_budget(const LinkInputs& in);
LinkReport simulate_link(const LinkInputs& in);

enum class BitPattern { prbs7, random };
BitPattern parse_bit_pattern(std::string_view name);

struct McOptions {
    std::uint64_t pulses = 100'000'000;
    std::uint64_t seed = 1;
    unsigned threads = 0;              // 0: hardware concurrency
    BitPattern pattern = BitPattern::prbs7;
};

// Number of symbol slots that share one random stream.
inline constexpr std::uint64_t kMcChunkSlots = std::uint64_t{1} << 20;

LinkReport monte_carlo_link(const LinkInputs& in, const McOptions& opt);

// One point of the dark-PON curve: external budget plus optional measured values.
struct DarkAnchor {
    double budget_db = 0.0;
    std::optional<double> raw_rate_bps;
    std::optional<double> qber;
};

struct DynamicRange {
    double lo_db = 3.5;
    double hi_db = 19.8;
    double max_qber_rise = 0.01;
};

struct ReceiverCalibrationOptions {
    DynamicRange range;
    bool fit_afterpulse = true;
    int max_iterations = 4000;
};

struct AnchorResidual {
    double budget_db = 0.0;
    double model_rate_bps = 0.0;
    double model_qber = 0.0;
    std::optional<double> rate_rel_error;
    std::optional<double> qber_error;
};

struct ReceiverCalibration {
    DetectorModel detector;
    InterferometerModel interferometer;
    double qber_rise = 0.0;
    double objective = 0.0;
    int iterations = 0;
    std::vector<AnchorResidual> residuals;
};

// Dark-PON evaluation at an external budget: no classical light, dark counts only.
ClickRates dark_click_rates(const DpsSource& src, const DetectorModel& det, const InterferometerModel& di,
                            double budget_db);
double dark_qber(const DpsSource& src, const DetectorModel& det, const InterferometerModel& di, double budget_db);
// Largest QBER excursion over the budget interval (max minus min).
double qber_rise(const DpsSource& src, const DetectorModel& det, const InterferometerModel& di, double lo_db,
                 double hi_db);

// The first anchor carrying both rate and QBER is reproduced exactly; the rest are
// fitted in the least-squares sense under the dynamic-range constraint.
ReceiverCalibration calibrate_receiver(const std::vector<DarkAnchor>& anchors, const DpsSource& src,
                                       const DetectorModel& base_detector, const InterferometerModel& base_di,
                                       const ReceiverCalibrationOptions& opt = {});

}  // namespace qpon
