#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace qpon {

// Range of wavelengths the plant model covers (R/B filter span).
inline constexpr double kSpectrumMinNm = 1250.0;
inline constexpr double kSpectrumMaxNm = 1650.0;

double wavelength_to_frequency(double wavelength_nm);   // THz
double frequency_to_wavelength(double frequency_thz);   // nm

class SpectralPoint {
public:
    SpectralPoint() = default;
    static SpectralPoint from_nm(double wavelength_nm);
    static SpectralPoint from_thz(double frequency_thz);

    double nm() const { return wavelength_nm_; }
    double thz() const { return frequency_thz_; }

private:
    SpectralPoint(double nm, double thz) : wavelength_nm_(nm), frequency_thz_(thz) {}
    double wavelength_nm_ = 0.0;
    double frequency_thz_ = 0.0;
};

enum class BandName { O, E, S, C, L };

struct Band {
    BandName name;
    double lo_nm;   // inclusive
    double hi_nm;   // exclusive, except L which closes at 1625
};

const std::array<Band, 5>& itu_bands();
std::string_view to_string(BandName b);
Band band_of(double wavelength_nm);

enum class Direction { downstream, upstream };
std::string_view to_string(Direction d);

// Channel groups that can be switched on and off as a unit.
enum class ChannelGroup { wired_ds, overlay_ds, us };
std::string_view to_string(ChannelGroup g);
ChannelGroup parse_channel_group(std::string_view name);

struct GroupSet {
    bool wired_ds = true;
    bool overlay_ds = true;
    bool us = true;

    static GroupSet all() { return {}; }
    static GroupSet none() { return {false, false, false}; }
    // Accepts "all", "none", or a comma separated list of group names.
    static GroupSet parse(std::string_view text);

    bool contains(ChannelGroup g) const;
    void set(ChannelGroup g, bool on);
    bool empty() const { return !wired_ds && !overlay_ds && !us; }
    std::string to_string() const;
};

struct ClassicalChannel {
    SpectralPoint center;
    double launch_dbm = 0.0;
    Direction direction = Direction::downstream;
    ChannelGroup group = ChannelGroup::wired_ds;
    std::string label;
};

struct QuantumChannel {
    SpectralPoint center;
    double mean_photon_number = 0.1;
    double symbol_rate_hz = 1e9;
};

enum class PlanScenario { gpon, ngpon2 };
std::string_view to_string(PlanScenario s);
PlanScenario parse_plan_scenario(std::string_view name);

struct ChannelPlan {
    PlanScenario scenario = PlanScenario::gpon;
    std::vector<ClassicalChannel> classical;
    QuantumChannel quantum;
    Direction quantum_direction = Direction::upstream;
    // Passband of the coarse red/blue splitter in front of the quantum receiver.
    double receiver_band_lo_nm = 0.0;
    double receiver_band_hi_nm = 0.0;

    ChannelPlan with_groups(const GroupSet& groups) const;
    std::size_t count(ChannelGroup g) const;
};

ChannelPlan build_channel_plan(PlanScenario scenario);
ChannelPlan build_channel_plan(std::string_view scenario);

// Throws ConfigError when the plan breaks a structural rule (launch range,
// spectral window, quantum/classical separation at the receiver band).
void validate_plan(const ChannelPlan& plan);

// The NG-PON2 overlay grid: 11 evenly spaced points over 1548.51..1560.31 nm.
std::vector<double> overlay_grid_nm();

}  // namespace qpon
