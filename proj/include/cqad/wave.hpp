#ifndef CQAD_WAVE_HPP
#define CQAD_WAVE_HPP

#include "cqad/types.hpp"

#include <Eigen/Core>
#include <Eigen/LU>

#include <complex>

namespace cqad
{

// Maps (forward, backward) amplitudes on the left of an element to those on
// its right. Amplitudes are power-normalized so a lossless element is
// unimodular.
using TransferMatrix = Eigen::Matrix2cd;

struct ComplexReflectivity
{
    std::complex<double> r{0.0, 0.0};
    std::complex<double> t{1.0, 0.0};
};

// Velocity under the metal strips, v * (1 - contrast).
double metallized_velocity(const DBRSpec &spec, const MaterialParams &material);

// Transit-time averaged velocity over one period.
double effective_velocity(const DBRSpec &spec, const MaterialParams &material);

// f_B = v_eff / (2 period): one period carries half a wavelength.
double bragg_frequency(const DBRSpec &spec, const MaterialParams &material);

// Step between two media with impedances proportional to their velocities.
TransferMatrix interface_matrix(double velocity_from, double velocity_to);

// Uniform segment; `loss` is the amplitude attenuation exponent across it.
TransferMatrix propagation_matrix(double frequency, double length, double velocity, double loss = 0.0);

// One period: metallized segment first, then the bare segment.
TransferMatrix dbr_unit_cell_matrix(double frequency, const DBRSpec &spec, const MaterialParams &material);

// Converts a cascaded matrix to the response seen from the left.
// Throws NumericError when |m22| < 1e-30.
ComplexReflectivity reflectivity_from_matrix(const TransferMatrix &m);

ComplexReflectivity mirror_reflectivity(double frequency, const DBRSpec &spec, const MaterialParams &material);

// Cascade of `cells` identical unit cells (cells = 0 gives the identity).
TransferMatrix mirror_matrix(double frequency, const DBRSpec &spec, const MaterialParams &material, int cells);

// Dirichlet array factor |sin(N pi d) / (N sin(pi d))|, d = (f - f0) / f0.
double idt_response(double frequency, const IDTSpec &spec);

// g(f) = g_max * A(f), in Hz.
double coupling_profile(double frequency, const IDTSpec &spec);

} // namespace cqad

#endif // CQAD_WAVE_HPP
