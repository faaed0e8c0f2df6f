#ifndef CQAD_TEST_FIXTURES_HPP
#define CQAD_TEST_FIXTURES_HPP

#include "cqad/cavity.hpp"
#include "cqad/dynamics.hpp"
#include "cqad/estimation.hpp"
#include "cqad/types.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace fixtures
{

// Microring reference device.
inline constexpr double kRingGroupVelocity = 4050.0;
inline constexpr double kRingFsr = 7.1e6;
inline constexpr double kRingQ = 1.7e3;
inline constexpr double kRingG = 0.36e6;
inline constexpr double kRingGamma0 = 0.0147e6;
inline constexpr double kRingReference = 3.867e9;

inline cqad::RingCavitySpec ring_device()
{
    cqad::RingCavitySpec s;
    s.material.phase_velocity = kRingGroupVelocity;
    s.material.group_velocity = kRingGroupVelocity;
    s.circumference = kRingGroupVelocity / kRingFsr;
    s.uniform_q = kRingQ;
    s.uniform_coupling = kRingG;
    s.reference_frequency = kRingReference;
    return s;
}

// Fabry-Perot device: 300 um cavity, 100-strip DBRs with a stop band
// centred near 5.30 GHz and a 20-pair IDT peaking at 5.35 GHz.
inline constexpr double kFpGScale = 0.28;
inline constexpr double kFpGMax = 2.1e6;
inline constexpr double kFpQ = 2.2e3;
inline const double kFpGamma0 = cqad::rate_from_t1(4.8e-6);

inline cqad::FPCavitySpec fp_device(double peak_coupling = kFpGMax)
{
    cqad::FPCavitySpec s;
    s.material.phase_velocity = 4730.0;
    s.material.group_velocity = 3840.0;
    s.mirror_separation = 300e-6;
    cqad::DBRSpec m;
    m.period = 430e-9;
    m.duty_cycle = 0.5;
    m.strip_count = 100;
    m.velocity_contrast = 0.07;
    s.left_mirror = m;
    s.right_mirror = m;
    s.idt.finger_pairs = 20;
    s.idt.period = 782e-9;
    s.idt.center_frequency = 5.35e9;
    s.idt.peak_coupling = peak_coupling;
    s.intrinsic_q = kFpQ;
    return s;
}

inline std::vector<double> linspace(double lo, double hi, int n)
{
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return v;
}

inline void add_relative_noise(std::vector<double> &values, double sigma, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double &v : values)
        v *= 1.0 + sigma * normal(rng);
}

// Synthetic ring scan with modes reaching `margin` FSRs past each edge.
inline cqad::ScanData ring_scan(const cqad::RingCavitySpec &spec, double gamma0, double lo, double hi, int points,
                                double margin = cqad::kModeMarginFsr)
{
    const double fsr = cqad::fsr(spec);
    const auto modes = cqad::ring_mode_set(spec, lo - margin * fsr, hi + margin * fsr);
    const auto f = linspace(lo, hi, points);
    return cqad::decay_scan(f, modes, gamma0);
}

inline cqad::ScanData fp_scan(const cqad::FPCavitySpec &spec, double gamma0, double lo, double hi, int points,
                              double margin = cqad::kModeMarginFsr)
{
    const double fsr = cqad::fsr(spec);
    const auto modes = cqad::fp_mode_set(spec, lo - margin * fsr, hi + margin * fsr);
    const auto f = linspace(lo, hi, points);
    return cqad::decay_scan(f, modes, gamma0);
}

// Decay rate (Hz) read off an exponential fit to the simulated P_e(t) over
// five expected decay times.
inline double fitted_decay_rate(double qubit_frequency, const cqad::ModeSet &modes, double gamma0, int points = 200)
{
    const double expected = cqad::multimode_decay_rate(qubit_frequency, modes, gamma0);
    const auto t = linspace(0.0, 5.0 * cqad::t1_from_rate(expected), points);
    const auto curve = cqad::evolve_single_excitation(qubit_frequency, modes, gamma0, t);
    const auto fit = cqad::fit_exponential(curve);
    return cqad::rate_from_t1(fit.value("t1"));
}

} // namespace fixtures

#endif // CQAD_TEST_FIXTURES_HPP
