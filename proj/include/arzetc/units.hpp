#ifndef ARZETC_UNITS_HPP_
#define ARZETC_UNITS_HPP_

// Everything inside the library is SI (m, s, veh/m, m/s, veh/s).
// Traffic units only appear in configuration files and reports.
namespace arzetc::units
{

inline constexpr double kKmhPerMps = 3.6;
inline constexpr double kVehPerKmPerVehPerM = 1000.0;
inline constexpr double kSecondsPerHour = 3600.0;

constexpr double kmh_to_mps(double v) { return v / kKmhPerMps; }
constexpr double mps_to_kmh(double v) { return v * kKmhPerMps; }
constexpr double per_km_to_per_m(double rho) { return rho / kVehPerKmPerVehPerM; }
constexpr double per_m_to_per_km(double rho) { return rho * kVehPerKmPerVehPerM; }
constexpr double per_s_to_per_h(double q) { return q * kSecondsPerHour; }

}  // namespace arzetc::units

#endif  // ARZETC_UNITS_HPP_
