#ifndef CQAD_DYNAMICS_HPP
#define CQAD_DYNAMICS_HPP

#include "cqad/ode.hpp"
#include "cqad/types.hpp"

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cqad
{

// Bad-cavity emission rate 4 g^2 / kappa. Throws DomainError for kappa <= 0.
double purcell_rate(double coupling, double linewidth);

// gamma_e = gamma0 + sum_n 4 g_n^2 kappa_n / (4 (w_q - w_n)^2 + kappa_n^2).
// All arguments in Hz; the expression is homogeneous of degree one.
double multimode_decay_rate(double qubit_frequency, std::span<const Mode> modes, double intrinsic_rate);
double multimode_decay_rate(double qubit_frequency, const ModeSet &modes, double intrinsic_rate);

// F_P = gamma_e / gamma0.
double purcell_factor(double decay_rate, double intrinsic_rate);

// Fraction of decays that emit into the cavity, 1 - 1/F_P.
double phonon_emission_probability(double decay_rate, double intrinsic_rate);

// How a rate handed to emitted_pulse_metrics is read.
//   per_second:  the number is already an inverse time, duration = 1 / rate.
//   ordinary_hz: the number is a /2pi rate,          duration = 1 / (2 pi rate).
enum class RateConvention
{
    per_second,
    ordinary_hz
};

struct PulseMetrics
{
    double duration = 0.0;       // s
    double spatial_length = 0.0; // m
};

PulseMetrics emitted_pulse_metrics(double rate, double group_velocity, RateConvention convention);

struct SingleExcitationState
{
    std::complex<double> qubit;
    std::vector<std::complex<double>> modes;

    double norm() const;
};

// Integrates i dc/dt = H_eff c in the frame rotating at the qubit frequency,
// starting from the excited qubit. H_eff has diagonal -i pi gamma0 (qubit)
// and 2 pi (w_n - w_q) - i pi kappa_n (modes), off-diagonals 2 pi g_n.
// t_grid must start at 0 and increase strictly.
std::vector<SingleExcitationState> evolve_amplitudes(double qubit_frequency, const ModeSet &modes,
                                                     double intrinsic_rate, std::span<const double> t_grid,
                                                     const OdeOptions &options = {}, OdeStats *stats = nullptr);

// P_e(t) = |c_e(t)|^2 on t_grid.
DecayCurve evolve_single_excitation(double qubit_frequency, const ModeSet &modes, double intrinsic_rate,
                                    std::span<const double> t_grid, const OdeOptions &options = {});

// Eigenvalues (Hz) of the single-excitation matrix with diagonal
// w_n - i kappa_n / 2 and w_q - i gamma0 / 2, off-diagonals g_n; sorted by
// real part.
std::vector<std::complex<double>> dressed_eigenvalues(double qubit_frequency, const ModeSet &modes,
                                                      double intrinsic_rate);

// Pointwise multimode_decay_rate. With `qubit_side_idt`, each point uses
// g_n = coupling_profile(w_q) for every mode instead of the stored g_n.
ScanData decay_scan(std::span<const double> qubit_frequencies, const ModeSet &modes, double intrinsic_rate,
                    const std::optional<IDTSpec> &qubit_side_idt = std::nullopt);

enum class Regime
{
    lossy_cavity,
    anomalous,
    cqad,
    uncoupled // coupling below the threshold; no cavity-assisted decay to speak of
};

std::string to_string(Regime regime);

struct RegimeThresholds
{
    double min_retention = 0.1;          // R_min
    double min_coupling_fraction = 0.05; // of the IDT peak coupling
    std::vector<std::pair<double, double>> anomaly_bands; // user annotations, Hz
};

Regime classify_regime(double frequency, const FPCavitySpec &spec, const RegimeThresholds &thresholds = {});

} // namespace cqad

#endif // CQAD_DYNAMICS_HPP
