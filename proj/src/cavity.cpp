#include "cqad/cavity.hpp"

#include "cqad/wave.hpp"

#include <cmath>
#include <limits>

namespace cqad
{
namespace
{
void require_band(double lo, double hi)
{
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo > 0.0 && hi > lo))
        throw DomainError("band must satisfy 0 < lo < hi");
}
} // namespace

double fsr(double group_velocity, double round_trip_length)
{
    if (!(group_velocity > 0.0) || !(round_trip_length > 0.0))
        throw DomainError("fsr: velocity and round-trip length must be > 0");
    return group_velocity / round_trip_length;
}

double fsr_fabry_perot(double group_velocity, double mirror_separation)
{
    if (!(mirror_separation > 0.0))
        throw DomainError("fsr: mirror separation must be > 0");
    return fsr(group_velocity, 2.0 * mirror_separation);
}

double fsr_ring(double group_velocity, double circumference) { return fsr(group_velocity, circumference); }

double fsr(const FPCavitySpec &spec) { return fsr_fabry_perot(spec.material.group_velocity, spec.mirror_separation); }

double fsr(const RingCavitySpec &spec) { return fsr_ring(spec.material.group_velocity, spec.circumference); }

double fp_anchor(const FPCavitySpec &spec)
{
    if (spec.anchor_frequency)
        return *spec.anchor_frequency;
    return 0.5 * (bragg_frequency(spec.left_mirror, spec.material) + bragg_frequency(spec.right_mirror, spec.material));
}

double round_trip_retention(double frequency, const FPCavitySpec &spec)
{
    const double left = std::norm(mirror_reflectivity(frequency, spec.left_mirror, spec.material).r);
    const double right = std::norm(mirror_reflectivity(frequency, spec.right_mirror, spec.material).r);
    return left * right;
}

double mirror_leakage_linewidth(double free_spectral_range, double retention)
{
    if (retention >= 1.0)
        return 0.0;
    if (retention <= 0.0)
        return std::numeric_limits<double>::infinity();
    return free_spectral_range * (-std::log(retention)) / kTwoPi;
}

std::vector<double> comb_frequencies(double anchor, double spacing, double lo, double hi)
{
    if (!(spacing > 0.0))
        throw DomainError("comb spacing must be > 0");
    std::vector<double> out;
    const auto first = static_cast<long long>(std::ceil((lo - anchor) / spacing));
    const auto last = static_cast<long long>(std::floor((hi - anchor) / spacing));
    for (long long m = first; m <= last; ++m)
    {
        const double f = anchor + static_cast<double>(m) * spacing;
        if (f >= lo && f <= hi)
            out.push_back(f);
    }
    return out;
}

ModeSet fp_mode_set(const FPCavitySpec &spec, double band_lo, double band_hi, const FPModeOptions &options)
{
    require_band(band_lo, band_hi);
    require_valid(spec);
    const double spacing = fsr(spec);
    if (!(options.grid > 0.0) || options.grid >= spacing)
        throw DomainError("fp_mode_set: grid must be > 0 and finer than the FSR");

    ModeSet set{{}, band_lo, band_hi};
    for (double f : comb_frequencies(fp_anchor(spec), spacing, band_lo, band_hi))
    {
        Mode m;
        m.frequency = f;
        m.retention = round_trip_retention(f, spec);
        m.linewidth = mirror_leakage_linewidth(spacing, m.retention);
        if (spec.intrinsic_q)
            m.linewidth += f / *spec.intrinsic_q;
        if (!std::isfinite(m.linewidth))
            throw NumericError("fp_mode_set: zero mirror retention at " + std::to_string(f) + " Hz");
        if (!(m.linewidth > 0.0))
            throw DomainError("fp_mode_set: lossless mirrors need a finite intrinsic_q");
        m.coupling = coupling_profile(f, spec.idt);
        m.lossy = m.retention < options.lossy_retention;
        set.modes.push_back(m);
    }
    return set;
}

ModeSet ring_mode_set(const RingCavitySpec &spec, double band_lo, double band_hi)
{
    require_band(band_lo, band_hi);
    require_valid(spec);
    ModeSet set{{}, band_lo, band_hi};
    for (double f : comb_frequencies(spec.reference_frequency, fsr(spec), band_lo, band_hi))
        set.modes.push_back(Mode{f, f / spec.uniform_q, spec.uniform_coupling, 1.0, false});
    return set;
}

} // namespace cqad
