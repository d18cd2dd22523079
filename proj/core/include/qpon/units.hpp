#pragma once

#include <cmath>

namespace qpon {

inline constexpr double kSpeedOfLight = 299792458.0;        // m/s
inline constexpr double kPlanck = 6.62607015e-34;           // J s
inline constexpr double kBoltzmann = 1.380649e-23;          // J/K
inline constexpr double kNmThz = kSpeedOfLight * 1e-3;      // c in nm * THz

inline double db_to_linear(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }
inline double linear_to_db(double transmission) { return -10.0 * std::log10(transmission); }
inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt / 1e-3); }

// dB/km to natural attenuation coefficient in 1/km.
inline double db_per_km_to_neper(double db_per_km) { return db_per_km * std::log(10.0) / 10.0; }

inline double photon_energy_thz(double frequency_thz) { return kPlanck * frequency_thz * 1e12; }

}  // namespace qpon
