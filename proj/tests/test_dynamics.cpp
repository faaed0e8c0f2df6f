#include <catch_amalgamated.hpp>

#include "cqad/cavity.hpp"
#include "cqad/dynamics.hpp"
#include "cqad/wave.hpp"
#include "fixtures.hpp"

#include <cmath>
#include <random>

using namespace cqad;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{
ModeSet single(double f, double kappa, double g)
{
    return ModeSet{{Mode{f, kappa, g}}, f - 1.0, f + 1.0};
}

std::vector<std::size_t> local_maxima(const std::vector<double> &y)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i + 1 < y.size(); ++i)
        if (y[i] > y[i - 1] && y[i] >= y[i + 1])
            out.push_back(i);
    return out;
}
} // namespace

TEST_CASE("purcell rate")
{
    CHECK(purcell_rate(1.0, 4.0) == 1.0);
    CHECK(purcell_rate(0.0, 4.0) == 0.0);
    CHECK_THAT(purcell_rate(0.36e6, 2.275e6), WithinRel(2.279e5, 1e-3));
    CHECK_THROWS_AS(purcell_rate(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(purcell_rate(-1.0, 1.0), DomainError);
}

TEST_CASE("single-mode decay rate limits")
{
    const double g = 3e5, kappa = 2e6, g0 = 1e4;
    const auto m = single(5e9, kappa, g);
    CHECK_THAT(multimode_decay_rate(5e9, m, g0), WithinRel(g0 + 4 * g * g / kappa, 1e-15));
    CHECK_THAT(multimode_decay_rate(5e9 + kappa / 2, m, g0), WithinRel(g0 + 2 * g * g / kappa, 1e-12));
    CHECK(multimode_decay_rate(5e9, ModeSet{}, g0) == g0);
}

TEST_CASE("detuning symmetry is exact for one mode")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(0.0, 1e7);
    // Power-of-two centre and detunings keep f +- d exact.
    const auto m = single(4294967296.0, 2e6, 3e5);
    for (int i = 0; i < 200; ++i)
    {
        const double delta = std::ldexp(std::floor(std::ldexp(d(rng), -10)), 10);
        CHECK(multimode_decay_rate(m.modes[0].frequency + delta, m, 1e4) ==
              multimode_decay_rate(m.modes[0].frequency - delta, m, 1e4));
    }
}

TEST_CASE("decay rate bounds")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial)
    {
        std::vector<Mode> modes;
        double cap = 0.0;
        for (int k = 0; k < 6; ++k)
        {
            Mode m{5e9 + 6.4e6 * k, 1e5 + 5e6 * u(rng), 1e6 * u(rng)};
            cap += purcell_rate(m.coupling, m.linewidth);
            modes.push_back(m);
        }
        const double g0 = 1e5 * u(rng);
        const double ge = multimode_decay_rate(5e9 + 4e7 * u(rng), modes, g0);
        CHECK(ge >= g0);
        CHECK(ge - g0 <= cap * (1.0 + 1e-12));
    }
}

TEST_CASE("microring Purcell factor")
{
    const auto spec = fixtures::ring_device();
    const double wq = spec.reference_frequency;
    const auto wide = ring_mode_set(spec, wq - 200 * fsr(spec), wq + 200 * fsr(spec));
    const auto near = ring_mode_set(spec, wq - 10.5 * fsr(spec), wq + 10.5 * fsr(spec));
    REQUIRE(near.size() == 21);
    const double fp_wide = purcell_factor(multimode_decay_rate(wq, wide, fixtures::kRingGamma0), fixtures::kRingGamma0);
    const double fp_near = purcell_factor(multimode_decay_rate(wq, near, fixtures::kRingGamma0), fixtures::kRingGamma0);
    CHECK(fp_wide >= 15.0);
    CHECK(fp_wide <= 21.0);
    // Modes beyond ten FSRs add little.
    CHECK_THAT(fp_wide, WithinRel(fp_near, 0.01));
}

TEST_CASE("FP device peak Purcell factor")
{
    const auto spec = fixtures::fp_device(fixtures::kFpGMax * fixtures::kFpGScale);
    // The qubit of this device tunes up to 5.26 GHz.
    const auto scan = fixtures::fp_scan(spec, fixtures::kFpGamma0, 5.18e9, 5.26e9, 2401);
    const double peak = *std::max_element(scan.rates.begin(), scan.rates.end());
    CHECK_THAT(purcell_factor(peak, fixtures::kFpGamma0), WithinRel(14.0, 0.05));
}

TEST_CASE("Purcell factor and emission probability")
{
    CHECK(purcell_factor(1e4, 1e4) == 1.0);
    CHECK(phonon_emission_probability(1e4, 1e4) == 0.0);
    CHECK_THAT(phonon_emission_probability(19.2, 1.0), WithinAbs(0.9479, 1e-4));
    CHECK_THAT(phonon_emission_probability(19.2, 1.0), WithinAbs(0.947, 1e-3));
    CHECK_THAT(phonon_emission_probability(14.0, 1.0), WithinAbs(0.9286, 1e-4));
    CHECK_THAT(phonon_emission_probability(14.0, 1.0), WithinAbs(0.927, 5e-3));
    CHECK_THROWS_AS(purcell_factor(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(phonon_emission_probability(0.5, 1.0), DomainError);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(1.0, 100.0);
    for (int i = 0; i < 100; ++i)
    {
        const double g0 = u(rng), ge = g0 * u(rng);
        CHECK(phonon_emission_probability(ge, g0) == 1.0 - 1.0 / purcell_factor(ge, g0));
    }
}

TEST_CASE("emitted pulse metrics")
{
    const auto p = emitted_pulse_metrics(2.67e6, 3600.0, RateConvention::per_second);
    CHECK_THAT(p.duration, WithinRel(374.5e-9, 1e-3));
    CHECK_THAT(p.spatial_length, WithinRel(1348e-6, 1e-3));
    CHECK_THAT(p.duration, WithinRel(375e-9, 0.01));
    CHECK_THAT(p.spatial_length, WithinRel(1350e-6, 0.01));

    const auto doubled = emitted_pulse_metrics(2 * 2.67e6, 3600.0, RateConvention::per_second);
    CHECK_THAT(doubled.duration, WithinRel(p.duration / 2, 1e-15));
    CHECK(emitted_pulse_metrics(2.67e6, 0.0, RateConvention::per_second).spatial_length == 0.0);

    const auto hz = emitted_pulse_metrics(1.0, 1.0, RateConvention::ordinary_hz);
    CHECK_THAT(hz.duration, WithinRel(1.0 / kTwoPi, 1e-15));
    CHECK_THROWS_AS(emitted_pulse_metrics(0.0, 3600.0, RateConvention::per_second), DomainError);
}

TEST_CASE("decoupled qubit decays at its intrinsic rate")
{
    const double g0 = 3.3e4;
    ModeSet modes{{Mode{5e9, 2e6, 0.0}, Mode{5.0064e9, 2e6, 0.0}}, 4.9e9, 5.1e9};
    const auto t = fixtures::linspace(0.0, 20e-6, 101);
    const auto curve = evolve_single_excitation(5e9, modes, g0, t);
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK_THAT(curve.populations[i], WithinRel(std::exp(-kTwoPi * g0 * t[i]), 1e-6));
}

TEST_CASE("vacuum Rabi oscillation")
{
    const double g = 2.1e6;
    const auto t = fixtures::linspace(0.0, 3e-6, 301);
    const auto curve = evolve_single_excitation(5e9, single(5e9, 0.0, g), 0.0, t);
    for (std::size_t i = 0; i < t.size(); ++i)
    {
        const double c = std::cos(kTwoPi * g * t[i]);
        CHECK_THAT(curve.populations[i], WithinAbs(c * c, 1e-6));
    }
}

TEST_CASE("bad cavity: fitted rate is 4 g^2 / kappa")
{
    const double g = 2e5, kappa = 50 * g;
    const double rate = fixtures::fitted_decay_rate(5e9, single(5e9, kappa, g), 0.0);
    CHECK_THAT(rate, WithinRel(purcell_rate(g, kappa), 0.05));
}

TEST_CASE("ODE agrees with the decay-rate formula for random weak-coupling modes")
{
    std::mt19937_64 rng(20240617);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int agree = 0;
    for (int trial = 0; trial < 100; ++trial)
    {
        const double g = 1e5 + 9e5 * u(rng);
        const double kappa = g * (20.0 + 80.0 * u(rng));
        const double detuning = kappa * (2.0 * u(rng) - 1.0);
        const double g0 = kappa / 100.0 * u(rng);
        const auto modes = single(5e9 + detuning, kappa, g);
        const double expected = multimode_decay_rate(5e9, modes, g0);
        const double fitted = fixtures::fitted_decay_rate(5e9, modes, g0);
        if (std::abs(fitted / expected - 1.0) < 0.05)
            ++agree;
    }
    CHECK(agree == 100);
}

TEST_CASE("norm never grows")
{
    const auto spec = fixtures::ring_device();
    const auto modes = ring_mode_set(spec, spec.reference_frequency - 5e7, spec.reference_frequency + 5e7);
    const auto t = fixtures::linspace(0.0, 5e-6, 400);
    const auto states = evolve_amplitudes(spec.reference_frequency, modes, fixtures::kRingGamma0, t);
    REQUIRE(states.size() == t.size());
    CHECK(states.front().norm() == 1.0);
    for (std::size_t i = 1; i < states.size(); ++i)
        CHECK(states[i].norm() <= states[i - 1].norm() + 1e-12);
}

TEST_CASE("time grid preconditions")
{
    const auto m = single(5e9, 1e6, 1e5);
    const std::vector<double> late{1e-9, 2e-9};
    CHECK_THROWS_AS(evolve_single_excitation(5e9, m, 0.0, late), DomainError);
    const std::vector<double> backwards{0.0, 2e-9, 1e-9};
    CHECK_THROWS(evolve_single_excitation(5e9, m, 0.0, backwards));
}

TEST_CASE("dressed eigenvalues")
{
    SECTION("uncoupled")
    {
        ModeSet modes{{Mode{4.99e9, 2e6, 0.0}, Mode{5.01e9, 3e6, 0.0}}, 4.9e9, 5.1e9};
        const auto ev = dressed_eigenvalues(5e9, modes, 4e4);
        REQUIRE(ev.size() == 3);
        CHECK_THAT(ev[0].real(), WithinRel(4.99e9, 1e-15));
        CHECK_THAT(ev[0].imag(), WithinRel(-1e6, 1e-9));
        CHECK_THAT(ev[1].real(), WithinRel(5e9, 1e-15));
        CHECK_THAT(ev[1].imag(), WithinRel(-2e4, 1e-9));
        CHECK_THAT(ev[2].imag(), WithinRel(-1.5e6, 1e-9));
    }
    SECTION("lossless resonance splits by 2g")
    {
        const auto ev = dressed_eigenvalues(5e9, single(5e9, 0.0, 2.1e6), 0.0);
        CHECK_THAT(ev[1].real() - ev[0].real(), WithinRel(4.2e6, 1e-9));
    }
    SECTION("damped resonance matches the 2x2 closed form")
    {
        const double g = 2.1e6, kappa = 2.4e6, g0 = 3.3e4;
        const auto ev = dressed_eigenvalues(5e9, single(5e9, kappa, g), g0);
        const double q = (kappa - g0) / 4.0;
        CHECK(ev[1].real() - ev[0].real() > 0.0);
        CHECK_THAT(ev[1].real() - ev[0].real(), WithinRel(2.0 * std::sqrt(g * g - q * q), 1e-9));
    }
    SECTION("trace")
    {
        std::mt19937_64 rng(77);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 50; ++trial)
        {
            ModeSet modes;
            double sum = 3e4;
            for (int k = 0; k < 8; ++k)
            {
                modes.modes.push_back(Mode{5e9 + 6.4e6 * k, 1e5 + 3e6 * u(rng), 2e6 * u(rng)});
                sum += modes.modes.back().linewidth;
            }
            double imag = 0.0;
            for (const auto &e : dressed_eigenvalues(5.02e9, modes, 3e4))
                imag += e.imag();
            CHECK_THAT(imag, WithinRel(-sum / 2.0, 1e-9));
        }
    }
}

TEST_CASE("decay scan")
{
    const auto f = fixtures::linspace(5.1e9, 5.3e9, 50);
    const auto flat = decay_scan(f, ModeSet{}, 3e4);
    for (double r : flat.rates)
        CHECK(r == 3e4);
    std::vector<double> bad{2.0, 1.0};
    CHECK_THROWS_AS(decay_scan(bad, ModeSet{}, 1.0), DomainError);

    // Coupling taken from the qubit side replaces the stored values.
    IDTSpec idt{20, 782e-9, 5.35e9, 1e6};
    const auto m = single(5.2e9, 2e6, 123.0);
    const auto s = decay_scan(std::vector<double>{5.2e9}, m, 0.0, idt);
    CHECK_THAT(s.rates[0], WithinRel(purcell_rate(coupling_profile(5.2e9, idt), 2e6), 1e-12));
}

TEST_CASE("FP scan maxima follow the FSR")
{
    const auto spec = fixtures::fp_device(fixtures::kFpGMax * fixtures::kFpGScale);
    const int n = 1201;
    const auto scan = fixtures::fp_scan(spec, fixtures::kFpGamma0, 5.18e9, 5.30e9, n);
    const double step = (5.30e9 - 5.18e9) / (n - 1);
    const auto peaks = local_maxima(scan.rates);
    REQUIRE(peaks.size() >= 15);
    for (std::size_t k = 1; k < peaks.size(); ++k)
    {
        const double spacing = scan.frequencies[peaks[k]] - scan.frequencies[peaks[k - 1]];
        CHECK(std::abs(spacing - fsr(spec)) <= step);
    }
}

TEST_CASE("microring scan peaks inside the Purcell window")
{
    const auto spec = fixtures::ring_device();
    const auto scan = fixtures::ring_scan(spec, fixtures::kRingGamma0, 3.80e9, 3.95e9, 3001);
    const double peak = *std::max_element(scan.rates.begin(), scan.rates.end());
    const double fp = purcell_factor(peak, fixtures::kRingGamma0);
    CHECK(fp >= 15.0);
    CHECK(fp <= 21.0);
}

TEST_CASE("regime classification")
{
    const auto spec = fixtures::fp_device();
    CHECK(classify_regime(5.00e9, spec) == Regime::lossy_cavity);
    CHECK(classify_regime(5.25e9, spec) == Regime::cqad);

    RegimeThresholds annotated;
    annotated.anomaly_bands.push_back({5.15e9, 5.17e9});
    CHECK(classify_regime(5.16e9, spec, annotated) == Regime::anomalous);
    CHECK(classify_regime(5.25e9, spec, annotated) == Regime::cqad);

    // At the IDT null there is no coupling to classify.
    CHECK(classify_regime(5.35e9 * 1.05, spec) == Regime::uncoupled);
    auto silent = spec;
    silent.idt.peak_coupling = 0.0;
    CHECK(classify_regime(5.25e9, silent) == Regime::uncoupled);
    CHECK(to_string(Regime::lossy_cavity) == "lossy_cavity");
}
