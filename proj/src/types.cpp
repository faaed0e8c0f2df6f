#include "cqad/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cqad
{
namespace
{
void check(Violations &out, bool ok, std::string field, std::string message)
{
    if (!ok)
        out.push_back({std::move(field), std::move(message)});
}

void nest(Violations &out, const std::string &prefix, Violations inner)
{
    for (auto &v : inner)
        out.push_back({prefix + "." + v.field, std::move(v.message)});
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }
} // namespace

std::string to_string(FitStatus status)
{
    switch (status)
    {
    case FitStatus::converged:
        return "converged";
    case FitStatus::max_iter:
        return "max_iter";
    case FitStatus::singular:
        return "singular";
    }
    return "unknown";
}

const FitParameter &FitResult::at(const std::string &name) const
{
    for (const auto &[key, p] : parameters)
        if (key == name)
            return p;
    throw DomainError("fit result has no parameter '" + name + "'");
}

bool FitResult::has_flag(const std::string &flag) const
{
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

Violations validate(const MaterialParams &m)
{
    Violations out;
    check(out, finite_positive(m.phase_velocity), "phase_velocity", "must be > 0");
    check(out, finite_positive(m.substrate_velocity), "substrate_velocity", "must be > 0");
    check(out, std::isfinite(m.group_velocity) && m.group_velocity >= 1000.0 && m.group_velocity <= 10000.0,
          "group_velocity", "must lie in [1000, 10000] m/s");
    return out;
}

Violations validate(const DBRSpec &s)
{
    Violations out;
    check(out, finite_positive(s.period), "period", "must be > 0");
    check(out, s.duty_cycle > 0.0 && s.duty_cycle < 1.0, "duty_cycle", "must lie in (0, 1)");
    check(out, s.strip_count >= 1, "strip_count", "must be >= 1");
    check(out, std::abs(s.velocity_contrast) < 0.5, "velocity_contrast", "|contrast| must be < 0.5");
    check(out, std::isfinite(s.per_cell_amplitude_loss) && s.per_cell_amplitude_loss >= 0.0,
          "per_cell_amplitude_loss", "must be >= 0");
    return out;
}

Violations validate(const IDTSpec &s)
{
    Violations out;
    check(out, s.finger_pairs >= 1, "finger_pairs", "must be >= 1");
    check(out, finite_positive(s.period), "period", "must be > 0");
    check(out, finite_positive(s.center_frequency), "center_frequency", "must be > 0");
    check(out, std::isfinite(s.peak_coupling) && s.peak_coupling >= 0.0, "peak_coupling", "must be >= 0");
    return out;
}

Violations validate(const FPCavitySpec &s)
{
    Violations out;
    check(out, finite_positive(s.mirror_separation), "mirror_separation", "must be > 0");
    if (s.intrinsic_q)
        check(out, finite_positive(*s.intrinsic_q), "intrinsic_q", "must be > 0 when present");
    if (s.anchor_frequency)
        check(out, finite_positive(*s.anchor_frequency), "anchor_frequency", "must be > 0 when present");
    nest(out, "left_mirror", validate(s.left_mirror));
    nest(out, "right_mirror", validate(s.right_mirror));
    nest(out, "idt", validate(s.idt));
    nest(out, "material", validate(s.material));
    return out;
}

Violations validate(const RingCavitySpec &s)
{
    Violations out;
    check(out, finite_positive(s.circumference), "circumference", "must be > 0");
    check(out, finite_positive(s.uniform_q), "uniform_q", "must be > 0");
    check(out, std::isfinite(s.uniform_coupling) && s.uniform_coupling >= 0.0, "uniform_coupling", "must be >= 0");
    check(out, finite_positive(s.reference_frequency), "reference_frequency", "must be > 0");
    nest(out, "material", validate(s.material));
    return out;
}

Violations validate(const QubitSpec &s)
{
    Violations out;
    check(out, finite_positive(s.frequency), "frequency", "must be > 0");
    check(out, std::isfinite(s.intrinsic_rate) && s.intrinsic_rate >= 0.0, "intrinsic_rate", "must be >= 0");
    return out;
}

Violations validate(const Mode &m)
{
    Violations out;
    check(out, std::isfinite(m.frequency), "frequency", "must be finite");
    check(out, finite_positive(m.linewidth), "linewidth", "must be > 0");
    check(out, std::isfinite(m.coupling) && m.coupling >= 0.0, "coupling", "must be >= 0");
    return out;
}

Violations validate(const ModeSet &set)
{
    Violations out;
    check(out, set.band_lo < set.band_hi, "band", "band_lo must be < band_hi");
    for (std::size_t i = 0; i < set.modes.size(); ++i)
    {
        const auto &m = set.modes[i];
        const std::string tag = "modes[" + std::to_string(i) + "]";
        nest(out, tag, validate(m));
        check(out, m.frequency >= set.band_lo && m.frequency <= set.band_hi, tag + ".frequency", "outside band");
        if (i > 0)
            check(out, m.frequency > set.modes[i - 1].frequency, tag + ".frequency", "not strictly increasing");
    }
    return out;
}

Violations validate(const DecayCurve &c)
{
    Violations out;
    check(out, c.times.size() == c.populations.size(), "populations", "length differs from times");
    check(out, c.times.size() >= DecayCurve::kMinSamples, "times", "needs at least 8 samples");
    for (std::size_t i = 1; i < c.times.size(); ++i)
        if (!(c.times[i] > c.times[i - 1]))
        {
            out.push_back({"times", "not strictly increasing at index " + std::to_string(i)});
            break;
        }
    for (std::size_t i = 0; i < c.populations.size(); ++i)
    {
        const double p = c.populations[i];
        if (!(std::isfinite(p) && p >= -DecayCurve::kPopulationHeadroom && p <= 1.0 + DecayCurve::kPopulationHeadroom))
        {
            out.push_back({"populations", "value out of [-eps, 1+eps] at index " + std::to_string(i)});
            break;
        }
    }
    return out;
}

Violations validate(const ScanData &s)
{
    Violations out;
    check(out, s.frequencies.size() == s.rates.size(), "rates", "length differs from frequencies");
    if (s.uncertainties)
    {
        check(out, s.uncertainties->size() == s.frequencies.size(), "uncertainties",
              "length differs from frequencies");
        for (double u : *s.uncertainties)
            if (!finite_positive(u))
            {
                out.push_back({"uncertainties", "must be > 0"});
                break;
            }
    }
    for (std::size_t i = 1; i < s.frequencies.size(); ++i)
        if (!(s.frequencies[i] > s.frequencies[i - 1]))
        {
            out.push_back({"frequencies", "not strictly increasing at index " + std::to_string(i)});
            break;
        }
    for (double r : s.rates)
        if (!(std::isfinite(r) && r >= 0.0))
        {
            out.push_back({"rates", "must be finite and >= 0"});
            break;
        }
    return out;
}

Violations validate(const FitResult &r)
{
    Violations out;
    check(out, std::isfinite(r.residual_norm) && r.residual_norm >= 0.0, "residual_norm", "must be >= 0");
    if (r.status != FitStatus::converged)
        for (const auto &[name, p] : r.parameters)
            check(out, !p.std_error.has_value(), name + ".std_error", "must be absent unless converged");
    return out;
}

std::string describe(const Violations &violations)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i)
    {
        if (i)
            os << "; ";
        os << violations[i].field << ": " << violations[i].message;
    }
    return os.str();
}

} // namespace cqad
