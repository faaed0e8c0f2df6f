#include "cqad/wave.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace cqad
{
namespace
{
void require_positive_frequency(double f)
{
    if (!(f > 0.0) || !std::isfinite(f))
        throw DomainError("frequency must be finite and > 0");
}
} // namespace

double metallized_velocity(const DBRSpec &spec, const MaterialParams &material)
{
    return material.phase_velocity * (1.0 - spec.velocity_contrast);
}

double effective_velocity(const DBRSpec &spec, const MaterialParams &material)
{
    const double v_bare = material.phase_velocity;
    const double v_metal = metallized_velocity(spec, material);
    return 1.0 / (spec.duty_cycle / v_metal + (1.0 - spec.duty_cycle) / v_bare);
}

double bragg_frequency(const DBRSpec &spec, const MaterialParams &material)
{
    return effective_velocity(spec, material) / (2.0 * spec.period);
}

TransferMatrix interface_matrix(double velocity_from, double velocity_to)
{
    const double z1 = velocity_from;
    const double z2 = velocity_to;
    const double r = (z1 - z2) / (z1 + z2);
    const double t = 2.0 * std::sqrt(z1 * z2) / (z1 + z2);
    TransferMatrix m;
    m << 1.0, r, r, 1.0;
    return m / t;
}

TransferMatrix propagation_matrix(double frequency, double length, double velocity, double loss)
{
    const double phase = kTwoPi * frequency * length / velocity;
    TransferMatrix m = TransferMatrix::Zero();
    m(0, 0) = std::exp(std::complex<double>(-loss, phase));
    m(1, 1) = std::exp(std::complex<double>(loss, -phase));
    return m;
}

TransferMatrix dbr_unit_cell_matrix(double frequency, const DBRSpec &spec, const MaterialParams &material)
{
    require_positive_frequency(frequency);
    require_valid(spec);
    const double v_bare = material.phase_velocity;
    const double v_metal = metallized_velocity(spec, material);
    const double l_metal = spec.duty_cycle * spec.period;
    const double l_bare = spec.period - l_metal;
    const double loss = spec.per_cell_amplitude_loss;

    // Right-to-left product: enter metal, cross it, leave to bare, cross bare.
    return propagation_matrix(frequency, l_bare, v_bare, loss * (1.0 - spec.duty_cycle)) *
           interface_matrix(v_metal, v_bare) *
           propagation_matrix(frequency, l_metal, v_metal, loss * spec.duty_cycle) *
           interface_matrix(v_bare, v_metal);
}

TransferMatrix mirror_matrix(double frequency, const DBRSpec &spec, const MaterialParams &material, int cells)
{
    if (cells < 0)
        throw DomainError("cell count must be >= 0");
    TransferMatrix result = TransferMatrix::Identity();
    if (cells == 0)
        return result;
    // Binary powering keeps the rounding growth logarithmic in the cell count.
    TransferMatrix base = dbr_unit_cell_matrix(frequency, spec, material);
    for (int n = cells; n > 0; n >>= 1)
    {
        if (n & 1)
            result = base * result;
        base = base * base;
    }
    return result;
}

ComplexReflectivity reflectivity_from_matrix(const TransferMatrix &m)
{
    if (std::abs(m(1, 1)) < 1e-30)
        throw NumericError("transfer matrix conversion is singular (|m22| < 1e-30)");
    ComplexReflectivity out;
    out.r = -m(1, 0) / m(1, 1);
    out.t = m.determinant() / m(1, 1);
    return out;
}

ComplexReflectivity mirror_reflectivity(double frequency, const DBRSpec &spec, const MaterialParams &material)
{
    require_positive_frequency(frequency);
    if (spec.strip_count == 0)
        return {};
    return reflectivity_from_matrix(mirror_matrix(frequency, spec, material, spec.strip_count));
}

double idt_response(double frequency, const IDTSpec &spec)
{
    const double n = static_cast<double>(spec.finger_pairs);
    const double delta = (frequency - spec.center_frequency) / spec.center_frequency;
    // |A| has period 1 in delta; fold onto [-1/2, 1/2].
    const double eps = delta - std::round(delta);
    const double denom = n * std::sin(std::numbers::pi * eps);
    // Near the removable singularity use the series of the ratio.
    if (std::abs(denom) < 1e-8)
    {
        const double x2 = std::pow(std::numbers::pi * eps, 2);
        return std::clamp(1.0 - (n * n - 1.0) * x2 / 6.0, 0.0, 1.0);
    }
    const double a = std::abs(std::sin(n * std::numbers::pi * eps) / denom);
    return std::clamp(a, 0.0, 1.0);
}

double coupling_profile(double frequency, const IDTSpec &spec)
{
    return spec.peak_coupling * idt_response(frequency, spec);
}

} // namespace cqad
