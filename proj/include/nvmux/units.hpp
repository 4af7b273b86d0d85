#pragma once

#include <numbers>

// Interface frequencies are in GHz (optical) or MHz (microwave), times in
// microseconds (laser pulses) or nanoseconds (spin sequences). Internally all
// rates are angular MHz, i.e. rad/us.
namespace nvmux::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// 1 GHz = 2*pi*1e3 rad/us
inline constexpr double ghz_to_angular_mhz = two_pi * 1e3;

constexpr double angular_mhz_from_ghz(double ghz) { return ghz * ghz_to_angular_mhz; }
constexpr double ghz_from_angular_mhz(double w) { return w / ghz_to_angular_mhz; }

// Phase (rad) accumulated at a cyclic frequency in MHz over a time in ns.
constexpr double phase_rad(double freq_mhz, double time_ns) { return two_pi * freq_mhz * time_ns * 1e-3; }

}  // namespace nvmux::units
