#include "cqad/dynamics.hpp"

#include "cqad/cavity.hpp"
#include "cqad/wave.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace cqad
{

double purcell_rate(double coupling, double linewidth)
{
    if (!(linewidth > 0.0))
        throw DomainError("purcell_rate: linewidth must be > 0");
    if (coupling < 0.0)
        throw DomainError("purcell_rate: coupling must be >= 0");
    return 4.0 * coupling * coupling / linewidth;
}

double multimode_decay_rate(double qubit_frequency, std::span<const Mode> modes, double intrinsic_rate)
{
    double rate = intrinsic_rate;
    for (const auto &m : modes)
    {
        const double detuning = qubit_frequency - m.frequency;
        const double g2 = m.coupling * m.coupling;
        rate += 4.0 * g2 * m.linewidth / (4.0 * detuning * detuning + m.linewidth * m.linewidth);
    }
    return rate;
}

double multimode_decay_rate(double qubit_frequency, const ModeSet &modes, double intrinsic_rate)
{
    return multimode_decay_rate(qubit_frequency, std::span<const Mode>(modes.modes), intrinsic_rate);
}

double purcell_factor(double decay_rate, double intrinsic_rate)
{
    if (!(intrinsic_rate > 0.0))
        throw DomainError("purcell_factor: intrinsic rate must be > 0");
    return decay_rate / intrinsic_rate;
}

double phonon_emission_probability(double decay_rate, double intrinsic_rate)
{
    if (!(intrinsic_rate > 0.0))
        throw DomainError("phonon_emission_probability: intrinsic rate must be > 0");
    if (decay_rate < intrinsic_rate)
        throw DomainError("phonon_emission_probability: decay rate below intrinsic rate");
    return 1.0 - 1.0 / purcell_factor(decay_rate, intrinsic_rate);
}

PulseMetrics emitted_pulse_metrics(double rate, double group_velocity, RateConvention convention)
{
    if (!(rate > 0.0))
        throw DomainError("emitted_pulse_metrics: rate must be > 0");
    const double inverse_time = convention == RateConvention::per_second ? rate : kTwoPi * rate;
    PulseMetrics out;
    out.duration = 1.0 / inverse_time;
    out.spatial_length = group_velocity * out.duration;
    return out;
}

double SingleExcitationState::norm() const
{
    double n = std::norm(qubit);
    for (const auto &c : modes)
        n += std::norm(c);
    return n;
}

std::vector<SingleExcitationState> evolve_amplitudes(double qubit_frequency, const ModeSet &modes,
                                                     double intrinsic_rate, std::span<const double> t_grid,
                                                     const OdeOptions &options, OdeStats *stats)
{
    if (t_grid.empty() || t_grid.front() != 0.0)
        throw DomainError("evolve: time grid must start at 0");
    if (intrinsic_rate < 0.0)
        throw DomainError("evolve: intrinsic rate must be >= 0");

    const auto n_modes = static_cast<Eigen::Index>(modes.size());
    // Angular-frequency entries of H_eff; index 0 is the qubit.
    Eigen::VectorXcd diag(n_modes + 1);
    Eigen::VectorXd coupling(n_modes + 1);
    const std::complex<double> i(0.0, 1.0);
    diag[0] = -i * std::numbers::pi * intrinsic_rate;
    coupling[0] = 0.0;
    for (Eigen::Index k = 0; k < n_modes; ++k)
    {
        const auto &m = modes.modes[static_cast<std::size_t>(k)];
        diag[k + 1] = kTwoPi * (m.frequency - qubit_frequency) - i * std::numbers::pi * m.linewidth;
        coupling[k + 1] = kTwoPi * m.coupling;
    }

    // Arrow-shaped H: qubit couples to every mode, modes are mutually uncoupled.
    ComplexRhs rhs = [&](double, const Eigen::VectorXcd &c, Eigen::VectorXcd &dc) {
        std::complex<double> qubit_term = diag[0] * c[0];
        for (Eigen::Index k = 1; k <= n_modes; ++k)
        {
            qubit_term += coupling[k] * c[k];
            dc[k] = -i * (coupling[k] * c[0] + diag[k] * c[k]);
        }
        dc[0] = -i * qubit_term;
    };

    Eigen::VectorXcd c0 = Eigen::VectorXcd::Zero(n_modes + 1);
    c0[0] = 1.0;
    const auto raw = integrate_dopri5(rhs, c0, t_grid, options, stats);

    std::vector<SingleExcitationState> out;
    out.reserve(raw.size());
    for (const auto &c : raw)
    {
        SingleExcitationState s;
        s.qubit = c[0];
        s.modes.assign(c.data() + 1, c.data() + c.size());
        out.push_back(std::move(s));
    }
    return out;
}

DecayCurve evolve_single_excitation(double qubit_frequency, const ModeSet &modes, double intrinsic_rate,
                                    std::span<const double> t_grid, const OdeOptions &options)
{
    const auto states = evolve_amplitudes(qubit_frequency, modes, intrinsic_rate, t_grid, options);
    DecayCurve curve;
    curve.times.assign(t_grid.begin(), t_grid.end());
    curve.populations.reserve(states.size());
    for (const auto &s : states)
        curve.populations.push_back(std::norm(s.qubit));
    return curve;
}

std::vector<std::complex<double>> dressed_eigenvalues(double qubit_frequency, const ModeSet &modes,
                                                      double intrinsic_rate)
{
    const auto n = static_cast<Eigen::Index>(modes.size()) + 1;
    const std::complex<double> i(0.0, 1.0);
    // Solve relative to the qubit frequency so GHz offsets don't swamp MHz couplings.
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    h(0, 0) = -i * (intrinsic_rate / 2.0);
    for (Eigen::Index k = 1; k < n; ++k)
    {
        const auto &m = modes.modes[static_cast<std::size_t>(k - 1)];
        h(k, k) = (m.frequency - qubit_frequency) - i * (m.linewidth / 2.0);
        h(0, k) = m.coupling;
        h(k, 0) = m.coupling;
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(h, false);
    if (solver.info() != Eigen::Success)
        throw NumericError("dressed_eigenvalues: eigen-solver did not converge");

    std::vector<std::complex<double>> out(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k)
        out[static_cast<std::size_t>(k)] = solver.eigenvalues()[k] + qubit_frequency;
    std::sort(out.begin(), out.end(), [](auto a, auto b) {
        return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    });
    return out;
}

ScanData decay_scan(std::span<const double> qubit_frequencies, const ModeSet &modes, double intrinsic_rate,
                    const std::optional<IDTSpec> &qubit_side_idt)
{
    for (std::size_t k = 1; k < qubit_frequencies.size(); ++k)
        if (!(qubit_frequencies[k] > qubit_frequencies[k - 1]))
            throw DomainError("decay_scan: frequencies must increase strictly");

    ScanData scan;
    scan.frequencies.assign(qubit_frequencies.begin(), qubit_frequencies.end());
    scan.rates.reserve(qubit_frequencies.size());
    std::vector<Mode> work = modes.modes;
    for (double f : qubit_frequencies)
    {
        if (qubit_side_idt)
        {
            const double g = coupling_profile(f, *qubit_side_idt);
            for (auto &m : work)
                m.coupling = g;
        }
        scan.rates.push_back(multimode_decay_rate(f, work, intrinsic_rate));
    }
    return scan;
}

std::string to_string(Regime regime)
{
    switch (regime)
    {
    case Regime::lossy_cavity:
        return "lossy_cavity";
    case Regime::anomalous:
        return "anomalous";
    case Regime::cqad:
        return "cqad";
    case Regime::uncoupled:
        return "uncoupled";
    }
    return "unknown";
}

Regime classify_regime(double frequency, const FPCavitySpec &spec, const RegimeThresholds &thresholds)
{
    for (const auto &[lo, hi] : thresholds.anomaly_bands)
        if (frequency >= lo && frequency <= hi)
            return Regime::anomalous;

    const double g = coupling_profile(frequency, spec.idt);
    if (g < thresholds.min_coupling_fraction * spec.idt.peak_coupling || spec.idt.peak_coupling == 0.0)
        return Regime::uncoupled;
    return round_trip_retention(frequency, spec) < thresholds.min_retention ? Regime::lossy_cavity : Regime::cqad;
}

} // namespace cqad
