#pragma once

// Internal unit system: energies in meV, lengths in Angstrom, masses in amu,
// rates and angular frequencies in 1/s, dipoles in Debye. Conversions to SI
// happen only in this header.

namespace adnoise::units {

inline constexpr double kPi = 3.14159265358979323846;

// CODATA 2018
inline constexpr double kHbarJs = 1.054571817e-34;
inline constexpr double kElementaryChargeC = 1.602176634e-19;
inline constexpr double kAmuKg = 1.66053906660e-27;
inline constexpr double kMeVJ = 1.602176634e-22;
inline constexpr double kAngstromM = 1.0e-10;
inline constexpr double kBohrRadiusA = 0.529177210903;
inline constexpr double kDebyeCm = 3.33564095198152e-30;

/// hbar in meV*s.
inline constexpr double kHbarMeVs = kHbarJs / kMeVJ;

/// hbar^2 / (2 * 1 amu) in meV*A^2.
inline constexpr double kHbar2Over2AmuMeVA2 =
    kHbarJs * kHbarJs / (2.0 * kAmuKg) / kMeVJ / (kAngstromM * kAngstromM);

/// One e*Angstrom expressed in Debye.
inline constexpr double kDebyePerEAngstrom = kElementaryChargeC * kAngstromM / kDebyeCm;

constexpr double mev_to_angular(double energy_mev) { return energy_mev / kHbarMeVs; }
constexpr double angular_to_mev(double omega_per_s) { return omega_per_s * kHbarMeVs; }

/// meV/A -> J/m
inline constexpr double kForceMeVPerAToN = kMeVJ / kAngstromM;

}  // namespace adnoise::units
