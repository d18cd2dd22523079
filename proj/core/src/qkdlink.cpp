#include "qpon/qkdlink.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "nelder_mead.hpp"
#include "qpon/errors.hpp"
#include "qpon/units.hpp"

namespace qpon {

DpsSource source_preset(std::string_view name) {
    DpsSource s;
    if (name == "dml" || name == "phase_modulator") {
        s.model = std::string(name);
        return s;
    }
    throw ConfigError("unknown source model '" + std::string(name) + "' (expected dml or phase_modulator)");
}

void validate_source(const DpsSource& s) {
    if (!(s.mean_photon_number > 0.0 && s.mean_photon_number <= 1.0))
        throw ConfigError("mean photon number must lie in (0, 1]");
    if (!(s.symbol_rate_hz > 0.0)) throw ConfigError("symbol rate must be positive");
    if (!(s.intrinsic_error >= 0.0 && s.intrinsic_error < 0.5)) throw ConfigError("source intrinsic error must lie in [0, 0.5)");
    if (!(s.carving_duty > 0.0 && s.carving_duty <= 1.0)) throw ConfigError("carving duty must lie in (0, 1]");
}

void validate_detector(const DetectorModel& d) {
    if (!(d.efficiency > 0.0 && d.efficiency <= 1.0)) throw ConfigError("detector efficiency must lie in (0, 1]");
    if (!(d.dark_rate_hz >= 0.0)) throw ConfigError("dark rate must be non-negative");
    if (!(d.dead_time_s >= 0.0)) throw ConfigError("dead time must be non-negative");
    if (!(d.gate_duty > 0.0 && d.gate_duty <= 1.0)) throw ConfigError("gate duty must lie in (0, 1]");
    if (!(d.gate_signal_fraction > 0.0 && d.gate_signal_fraction <= 1.0))
        throw ConfigError("in-gate signal fraction must lie in (0, 1]");
    if (!(d.afterpulse_factor >= 0.0)) throw ConfigError("afterpulse factor must be non-negative");
}

void validate_interferometer(const InterferometerModel& di) {
    if (di.delay_symbols != 1) throw ConfigError("only a one-symbol delay interferometer is supported");
    if (!(di.visibility > 0.5 && di.visibility <= 1.0)) throw ConfigError("visibility must lie in (0.5, 1]");
    if (!(di.insertion_loss_db >= 0.0)) throw ConfigError("receiver insertion loss must be non-negative");
}

ClickRates click_rates(const DpsSource& src, double total_loss_db, const DetectorModel& det, double noise_rate_hz) {
    if (!(total_loss_db >= 0.0) || !std::isfinite(total_loss_db)) throw DomainError("total loss must be finite and non-negative");
    if (!(noise_rate_hz >= 0.0) || !std::isfinite(noise_rate_hz)) throw DomainError("noise rate must be finite and non-negative");
    ClickRates r;
    const double detected = src.mean_photon_number * db_to_linear(total_loss_db) * det.efficiency;
    r.signal_true = src.symbol_rate_hz * -std::expm1(-detected);
    r.signal_in_gate = r.signal_true * det.gate_signal_fraction;
    r.noise_in_gate = noise_rate_hz * det.gate_duty;
    const double offered = r.signal_in_gate + r.noise_in_gate;
    r.live_fraction = 1.0 / (1.0 + offered * det.dead_time_s);
    r.signal_registered = r.signal_in_gate * r.live_fraction;
    r.noise_registered = r.noise_in_gate * r.live_fraction;
    const double registered = offered * r.live_fraction;
    const double occupancy = registered * det.dead_time_s;
    r.afterpulse = det.afterpulse_factor * occupancy * registered;
    r.measured_total = registered + r.afterpulse;
    return r;
}

double qber(double signal_rate, double noise_rate, double intrinsic_error) {
    if (!(signal_rate >= 0.0) || !(noise_rate >= 0.0)) throw DomainError("click rates must be non-negative");
    const double total = signal_rate + noise_rate;
    if (total <= 0.0) throw DomainError("QBER is undefined without clicks");
    return (0.5 * noise_rate + intrinsic_error * signal_rate) / total;
}

double combined_intrinsic_error(const DpsSource& src, const InterferometerModel& di) {
    const double a = src.intrinsic_error, b = di.intrinsic_error();
    return a * (1.0 - b) + b * (1.0 - a);
}

double binary_entropy(double e) {
    if (!(e >= 0.0 && e <= 1.0)) throw DomainError("binary entropy argument must lie in [0, 1]");
    if (e == 0.0 || e == 1.0) return 0.0;
    return -e * std::log2(e) - (1.0 - e) * std::log2(1.0 - e);
}

double collision_compression(double e) {
    const double x = std::min(e, 3.0 / 19.0);
    const double d = 1.0 - 6.0 * x;
    return -std::log2(1.0 - x * x - 0.5 * d * d);
}

namespace {

void check_fraction_domain(double e, double mu, double f) {
    if (!(e >= 0.0 && e < 0.5)) throw DomainError("QBER must lie in [0, 0.5) for the secure fraction");
    if (!(mu > 0.0 && mu < 0.5)) throw DomainError("mean photon number must lie in (0, 0.5) for the secure fraction");
    if (!(f >= 1.0)) throw DomainError("error-correction inefficiency must be >= 1");
}

double raw_fraction(double e, double mu, double f) {
    return (1.0 - 2.0 * mu) * collision_compression(e) - f * binary_entropy(e);
}

}  // namespace

double secure_fraction(double e, double mu, double ec_inefficiency) {
    check_fraction_domain(e, mu, ec_inefficiency);
    return std::max(0.0, raw_fraction(e, mu, ec_inefficiency));
}

double secure_fraction_threshold(double mu, double ec_inefficiency) {
    check_fraction_domain(0.0, mu, ec_inefficiency);
    auto g = [&](double e) { return raw_fraction(e, mu, ec_inefficiency); };
    auto tol = [](double a, double b) { return std::abs(b - a) < 1e-14; };
    auto [lo, hi] = boost::math::tools::bisect(g, 0.0, 3.0 / 19.0, tol);
    return 0.5 * (lo + hi);
}

namespace {

// Secure fraction for an observed link; zero outside the bound's domain.
double link_fraction(double e, double mu, double f) {
    if (!(e < 0.5) || !(mu < 0.5)) return 0.0;
    return secure_fraction(e, mu, f);
}

CountingReceiver counting_receiver(const LinkInputs& in) {
    return CountingReceiver{in.detector.efficiency, in.interferometer.insertion_loss_db};
}

}  // namespace

double quantum_path_loss_db(const LinkInputs& in) {
    return path_loss(in.topology, Node::onu, Node::detector, in.plan.quantum.center.nm()) +
           in.interferometer.insertion_loss_db;
}

NoiseBudget noise_budget(const LinkInputs& in) {
    NoiseBudget n;
    n.dark_hz = in.detector.dark_rate_hz;
    if (!in.plan.classical.empty()) {
        const auto rx = counting_receiver(in);
        n.raman_hz = inband_raman_counts(in.topology, in.plan, in.raman, rx, in.raman_options).total_counts_per_s;
        n.leakage_hz = crosstalk_counts(in.topology, in.plan, rx).total_counts_per_s;
    }
    return n;
}

LinkReport simulate_link(const LinkInputs& in) {
    validate_source(in.source);
    validate_detector(in.detector);
    validate_interferometer(in.interferometer);
    if (!(in.acquisition_s > 0.0)) throw ConfigError("acquisition time must be positive");

    LinkReport r;
    r.engine = "analytic";
    r.total_loss_db = quantum_path_loss_db(in);
    const NoiseBudget noise = noise_budget(in);
    const ClickRates c = click_rates(in.source, r.total_loss_db, in.detector, noise.total());
    const double gate_live = in.detector.gate_duty * c.live_fraction;

    r.counts.signal = c.signal_registered;
    r.counts.dark = noise.dark_hz * gate_live;
    r.counts.raman = noise.raman_hz * gate_live;
    r.counts.leakage = noise.leakage_hz * gate_live;
    r.counts.afterpulse = c.afterpulse;
    r.raman_rate_hz = noise.raman_hz;
    r.leakage_rate_hz = noise.leakage_hz;

    r.raw_rate_bps = c.measured_total;
    r.qber = qber(c.signal_registered, c.noise_registered + c.afterpulse, combined_intrinsic_error(in.source, in.interferometer));
    r.acquisition_s = in.acquisition_s;
    const double clicks = r.raw_rate_bps * in.acquisition_s;
    r.qber_3sigma = 3.0 * std::sqrt(r.qber * (1.0 - r.qber) / clicks);
    r.raw_rate_3sigma_bps = 3.0 * std::sqrt(clicks) / in.acquisition_s;
    r.secure_fraction = link_fraction(r.qber, in.source.mean_photon_number, in.ec_inefficiency);
    r.secure_rate_bps = r.raw_rate_bps * r.secure_fraction;
    r.secure_bits_per_pulse = r.secure_rate_bps / in.source.symbol_rate_hz;
    return r;
}

ClickRates dark_click_rates(const DpsSource& src, const DetectorModel& det, const InterferometerModel& di,
                            double budget_db) {
    return click_rates(src, budget_db + di.insertion_loss_db, det, det.dark_rate_hz);
}

double dark_qber(const DpsSource& src, const DetectorModel& det, const InterferometerModel& di, double budget_db) {
    const ClickRates c = dark_click_rates(src, det, di, budget_db);
    return qber(c.signal_registered, c.noise_registered + c.afterpulse, combined_intrinsic_error(src, di));
}

double qber_rise(const DpsSource& src, const DetectorModel& det, const InterferometerModel& di, double lo_db,
                 double hi_db) {
    auto q = [&](double b) { return dark_qber(src, det, di, b); };
    const auto [bmin, qmin] = boost::math::tools::brent_find_minima(q, lo_db, hi_db, 40);
    (void)bmin;
    const double qmax = std::max(q(lo_db), q(hi_db));
    return qmax - std::min({qmin, q(lo_db), q(hi_db)});
}

namespace {

// QBER misses are expressed in units of 1.6 pp so that a 0.4 pp miss weighs like a 25% rate miss.
constexpr double kQberResidualUnit = 0.016;

struct ReceiverState {
    bool feasible = false;
    DetectorModel det;
    InterferometerModel di;
    double objective = std::numeric_limits<double>::infinity();
    double rise = 0.0;
    std::string reason;
};

class ReceiverFit {
public:
    ReceiverFit(const std::vector<DarkAnchor>& anchors, const DpsSource& src, const DetectorModel& det,
                const InterferometerModel& di, const ReceiverCalibrationOptions& opt)
        : anchors_(anchors), src_(src), det_(det), di_(di), opt_(opt) {
        for (std::size_t i = 0; i < anchors_.size(); ++i) {
            if (anchors_[i].raw_rate_bps && anchors_[i].qber) {
                star_ = i;
                break;
            }
        }
    }

    ReceiverState evaluate(double dead_time_s, double afterpulse) const {
        ReceiverState s;
        s.det = det_;
        s.det.dead_time_s = dead_time_s;
        s.det.afterpulse_factor = afterpulse;
        s.di = di_;
        s.di.visibility = 1.0;
        const auto& star = anchors_[star_];

        // Receiver loss: measured rate is decreasing in loss, solve on a bracket.
        auto excess = [&](double loss) {
            InterferometerModel d = s.di;
            d.insertion_loss_db = loss;
            return dark_click_rates(src_, s.det, d, star.budget_db).measured_total - *star.raw_rate_bps;
        };
        const double lo = 0.0, hi = 90.0;
        if (excess(lo) < 0.0) { s.reason = "anchor rate exceeds the zero-loss receiver rate"; return s; }
        if (excess(hi) > 0.0) { s.reason = "anchor rate is below the noise-limited rate"; return s; }
        std::uintmax_t iters = 200;
        auto tol = boost::math::tools::eps_tolerance<double>(52);
        auto [a, b] = boost::math::tools::toms748_solve(excess, lo, hi, tol, iters);
        s.di.insertion_loss_db = 0.5 * (a + b);

        // Visibility: QBER is affine in the intrinsic error at fixed rates.
        const ClickRates c = dark_click_rates(src_, s.det, s.di, star.budget_db);
        const double noise = c.noise_registered + c.afterpulse;
        const double e_needed = (*star.qber * c.measured_total - 0.5 * noise) / c.signal_registered;
        const double es = src_.intrinsic_error;
        const double ev = (e_needed - es) / (1.0 - 2.0 * es);
        if (!(ev >= 0.0)) { s.reason = "anchor QBER lies below the noise floor of the receiver"; return s; }
        if (!(ev < 0.25)) { s.reason = "anchor QBER implies visibility <= 0.5"; return s; }
        s.di.visibility = 1.0 - 2.0 * ev;

        s.rise = qber_rise(src_, s.det, s.di, opt_.range.lo_db, opt_.range.hi_db);
        double obj = 0.0;
        for (std::size_t i = 0; i < anchors_.size(); ++i) {
            if (i == star_) continue;
            const auto& an = anchors_[i];
            const ClickRates ci = dark_click_rates(src_, s.det, s.di, an.budget_db);
            if (an.raw_rate_bps) {
                const double r = std::log(ci.measured_total / *an.raw_rate_bps);
                obj += r * r;
            }
            if (an.qber) {
                const double r = (dark_qber(src_, s.det, s.di, an.budget_db) - *an.qber) / kQberResidualUnit;
                obj += r * r;
            }
        }
        s.objective = obj;
        if (s.rise > opt_.range.max_qber_rise) { s.reason = "dynamic-range constraint violated"; return s; }
        s.feasible = true;
        return s;
    }

    std::size_t star() const { return star_; }

private:
    const std::vector<DarkAnchor>& anchors_;
    DpsSource src_;
    DetectorModel det_;
    InterferometerModel di_;
    ReceiverCalibrationOptions opt_;
    std::size_t star_ = 0;
};

std::string residual_report(const std::vector<AnchorResidual>& res) {
    std::ostringstream os;
    for (const auto& r : res) {
        os << "\n  " << r.budget_db << " dB: model " << r.model_rate_bps << " b/s, QBER " << r.model_qber;
        if (r.rate_rel_error) os << ", rate error " << *r.rate_rel_error;
        if (r.qber_error) os << ", QBER error " << *r.qber_error;
    }
    return os.str();
}

}  // namespace

ReceiverCalibration calibrate_receiver(const std::vector<DarkAnchor>& anchors, const DpsSource& src,
                                       const DetectorModel& base_detector, const InterferometerModel& base_di,
                                       const ReceiverCalibrationOptions& opt) {
    validate_source(src);
    if (anchors.size() < 3) throw CalibrationError("receiver calibration needs at least three anchors");
    if (std::none_of(anchors.begin(), anchors.end(), [](const DarkAnchor& a) { return a.raw_rate_bps && a.qber; }))
        throw CalibrationError("receiver calibration needs one anchor with both rate and QBER");
    for (const auto& a : anchors) {
        if (a.raw_rate_bps && !(*a.raw_rate_bps > 0.0)) throw CalibrationError("anchor rates must be positive");
        if (a.qber && !(*a.qber >= 0.0 && *a.qber < 0.5)) throw CalibrationError("anchor QBER must lie in [0, 0.5)");
    }

    ReceiverFit fit(anchors, src, base_detector, base_di, opt);
    const double k_fixed = base_detector.afterpulse_factor;
    auto params = [&](const std::vector<double>& x) {
        return std::pair{std::abs(x[0]) * 1e-6, opt.fit_afterpulse ? std::abs(x[1]) * 1e-3 : k_fixed};
    };

    // Coarse scan for a feasible start.
    ReceiverState best;
    std::vector<double> start;
    std::string last_reason;
    const std::vector<double> ks = opt.fit_afterpulse ? std::vector<double>{0, 5, 10, 20, 30, 50} : std::vector<double>{0};
    for (double tau_us = 0.0; tau_us <= 200.0; tau_us += 5.0) {
        for (double k : ks) {
            std::vector<double> x{tau_us, k};
            auto [tau, kk] = params(x);
            ReceiverState s = fit.evaluate(tau, kk);
            if (!s.feasible) { last_reason = s.reason; continue; }
            if (s.objective < best.objective) { best = s; start = x; }
        }
    }
    if (!best.feasible) throw CalibrationError("no feasible receiver parameters: " + last_reason);

    auto objective = [&](const std::vector<double>& x) {
        auto [tau, kk] = params(x);
        const ReceiverState s = fit.evaluate(tau, kk);
        return s.feasible ? s.objective : 1e30;
    };
    auto x0 = start;
    if (!opt.fit_afterpulse) x0.resize(1);
    const std::vector<double> step(x0.size(), 5.0);
    auto res = detail::nelder_mead(
        [&](const std::vector<double>& x) {
            auto full = x;
            if (full.size() == 1) full.push_back(0.0);
            return objective(full);
        },
        x0, step, 1e-13, opt.max_iterations);
    auto xf = res.x;
    if (xf.size() == 1) xf.push_back(0.0);
    auto [tau, kk] = params(xf);
    ReceiverState s = fit.evaluate(tau, kk);

    ReceiverCalibration out;
    out.detector = s.det;
    out.interferometer = s.di;
    out.qber_rise = s.rise;
    out.objective = s.objective;
    out.iterations = res.iterations;
    for (const auto& a : anchors) {
        AnchorResidual r;
        r.budget_db = a.budget_db;
        r.model_rate_bps = dark_click_rates(src, s.det, s.di, a.budget_db).measured_total;
        r.model_qber = dark_qber(src, s.det, s.di, a.budget_db);
        if (a.raw_rate_bps) r.rate_rel_error = r.model_rate_bps / *a.raw_rate_bps - 1.0;
        if (a.qber) r.qber_error = r.model_qber - *a.qber;
        out.residuals.push_back(r);
    }
    if (!res.converged || !s.feasible)
        throw CalibrationError("receiver fit did not converge after " + std::to_string(res.iterations) +
                               " iterations; residuals:" + residual_report(out.residuals));
    return out;
}

}  // namespace qpon
