#ifndef WDNSE_UNITS_HPP
#define WDNSE_UNITS_HPP

// All public quantities use US customary units: heads in ft, flows in GPM,
// lengths in ft, pipe diameters in inches, areas in ft^2, time in seconds.

namespace wdnse::units {

/// ft^3/s per GPM, used by tank dynamics.
inline constexpr double kCfsPerGpm = 0.0022280;

/// GPM per ft^3/s, used to convert resistance coefficients.
inline constexpr double kGpmPerCfs = 448.831;

inline constexpr double kGravity = 32.2;  // ft/s^2

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double kInchesPerFoot = 12.0;

}  // namespace wdnse::units

#endif  // WDNSE_UNITS_HPP
