#ifndef CQAD_TYPES_HPP
#define CQAD_TYPES_HPP

// Shared domain types for the cQAD toolkit.
//
// Unit convention: every rate, linewidth, coupling and frequency is an
// ordinary frequency in Hz (the "/2pi" value). Lengths are metres, times are
// seconds. A stored rate r corresponds to an energy relaxation time
// T1 = 1 / (2 pi r).

#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cqad
{

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Bad caller input (out-of-domain argument, malformed data).
class DomainError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure could not produce a trustworthy answer.
class NumericError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

inline double t1_from_rate(double rate_hz) { return 1.0 / (kTwoPi * rate_hz); }
inline double rate_from_t1(double t1_s) { return 1.0 / (kTwoPi * t1_s); }

struct MaterialParams
{
    double phase_velocity = 3600.0;     // m/s
    double group_velocity = 3600.0;     // m/s
    double substrate_velocity = 5800.0; // m/s, informational only

    bool operator==(const MaterialParams &) const = default;
};

struct DBRSpec
{
    double period = 430e-9;  // m
    double duty_cycle = 0.5; // metallized fraction of the period
    int strip_count = 100;
    double velocity_contrast = 0.02;      // fractional velocity reduction under metal
    double per_cell_amplitude_loss = 0.0; // amplitude attenuation exponent per cell

    bool operator==(const DBRSpec &) const = default;
};

struct IDTSpec
{
    int finger_pairs = 1;
    double period = 782e-9;          // m
    double center_frequency = 5.35e9; // Hz
    double peak_coupling = 0.0;      // Hz, g/2pi at the response peak

    // Synchronous frequency phase_velocity / period.
    static double synchronous_frequency(double phase_velocity, double period)
    {
        return phase_velocity / period;
    }

    bool operator==(const IDTSpec &) const = default;
};

struct FPCavitySpec
{
    double mirror_separation = 300e-6; // m
    DBRSpec left_mirror;
    DBRSpec right_mirror;
    IDTSpec idt;
    MaterialParams material;
    std::optional<double> intrinsic_q;
    // Comb anchor; the mean Bragg frequency of the two mirrors when absent.
    std::optional<double> anchor_frequency;

    bool operator==(const FPCavitySpec &) const = default;
};

struct RingCavitySpec
{
    double circumference = 0.0; // m
    double uniform_q = 1.0;
    double uniform_coupling = 0.0;    // Hz
    double reference_frequency = 0.0; // Hz
    MaterialParams material;

    bool operator==(const RingCavitySpec &) const = default;
};

struct QubitSpec
{
    double frequency = 0.0;      // Hz
    double intrinsic_rate = 0.0; // Hz

    bool operator==(const QubitSpec &) const = default;
};

struct Mode
{
    double frequency = 0.0; // Hz
    double linewidth = 0.0; // Hz, full width
    double coupling = 0.0;  // Hz
    // Round-trip power retention of the enclosing cavity (1 for rings).
    double retention = 1.0;
    bool lossy = false;

    bool operator==(const Mode &) const = default;
};

struct ModeSet
{
    std::vector<Mode> modes; // strictly increasing frequency
    double band_lo = 0.0;
    double band_hi = 0.0;

    bool empty() const { return modes.empty(); }
    std::size_t size() const { return modes.size(); }
    bool operator==(const ModeSet &) const = default;
};

struct DecayCurve
{
    std::vector<double> times;       // s
    std::vector<double> populations; // P_e

    static constexpr double kPopulationHeadroom = 0.05;
    static constexpr std::size_t kMinSamples = 8;

    bool operator==(const DecayCurve &) const = default;
};

struct ScanData
{
    std::vector<double> frequencies; // Hz
    std::vector<double> rates;       // Hz
    std::optional<std::vector<double>> uncertainties;

    bool operator==(const ScanData &) const = default;
};

enum class FitStatus
{
    converged,
    max_iter,
    singular
};

std::string to_string(FitStatus status);

struct FitParameter
{
    double value = 0.0;
    std::optional<double> std_error; // absent unless the fit converged
    bool fixed = false;
    bool at_bound = false;
};

struct FitResult
{
    std::vector<std::pair<std::string, FitParameter>> parameters;
    double residual_norm = 0.0;
    double initial_residual_norm = 0.0;
    FitStatus status = FitStatus::converged;
    int iterations = 0;
    std::vector<std::string> flags;

    const FitParameter &at(const std::string &name) const;
    double value(const std::string &name) const { return at(name).value; }
    bool has_flag(const std::string &flag) const;
};

struct Violation
{
    std::string field;
    std::string message;
};

using Violations = std::vector<Violation>;

// Each overload returns every broken invariant; an empty list means valid.
// Nested specs report dotted field paths ("left_mirror.duty_cycle").
Violations validate(const MaterialParams &material);
Violations validate(const DBRSpec &spec);
Violations validate(const IDTSpec &spec);
Violations validate(const FPCavitySpec &spec);
Violations validate(const RingCavitySpec &spec);
Violations validate(const QubitSpec &spec);
Violations validate(const Mode &mode);
Violations validate(const ModeSet &set);
Violations validate(const DecayCurve &curve);
Violations validate(const ScanData &scan);
Violations validate(const FitResult &result);

// Joins violations into one human-readable line.
std::string describe(const Violations &violations);

// Throws DomainError listing every violation, if any.
template <class Spec>
void require_valid(const Spec &spec)
{
    if (auto v = validate(spec); !v.empty())
        throw DomainError(describe(v));
}

} // namespace cqad

#endif // CQAD_TYPES_HPP
