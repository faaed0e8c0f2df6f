#ifndef CQAD_CAVITY_HPP
#define CQAD_CAVITY_HPP

#include "cqad/types.hpp"

namespace cqad
{

inline constexpr double kDefaultLossyRetention = 0.1;

// nu_FSR = v_g / round_trip_length.
double fsr(double group_velocity, double round_trip_length);

// Standing-wave cavity: round trip = 2 L.
double fsr_fabry_perot(double group_velocity, double mirror_separation);

// Travelling-wave ring: round trip = circumference.
double fsr_ring(double group_velocity, double circumference);

double fsr(const FPCavitySpec &spec);
double fsr(const RingCavitySpec &spec);

// Comb anchor: explicit anchor_frequency, else mean Bragg frequency of the mirrors.
double fp_anchor(const FPCavitySpec &spec);

// R_t = |r_left|^2 |r_right|^2.
double round_trip_retention(double frequency, const FPCavitySpec &spec);

// kappa_leak = nu_FSR * (-ln R_t) / (2 pi).
double mirror_leakage_linewidth(double free_spectral_range, double retention);

// Frequencies anchor + m * spacing that lie inside [lo, hi], ascending.
std::vector<double> comb_frequencies(double anchor, double spacing, double lo, double hi);

struct FPModeOptions
{
    double grid = 1e3;                              // Hz, must resolve the FSR
    double lossy_retention = kDefaultLossyRetention; // R_min
};

// Mode comb of a DBR Fabry-Perot cavity. Modes below R_min are kept but
// flagged lossy. Throws DomainError for an empty band or a grid not finer
// than the FSR.
ModeSet fp_mode_set(const FPCavitySpec &spec, double band_lo, double band_hi, const FPModeOptions &options = {});

// Uniform comb: kappa_n = f_n / Q, g_n = g.
ModeSet ring_mode_set(const RingCavitySpec &spec, double band_lo, double band_hi);

} // namespace cqad

#endif // CQAD_CAVITY_HPP
