#include "cqad/estimation.hpp"

#include "cqad/cavity.hpp"
#include "cqad/wave.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

namespace cqad
{
namespace
{
constexpr double kGolden = 0.6180339887498949;

double median(std::vector<double> v)
{
    if (v.empty())
        return std::numeric_limits<double>::quiet_NaN();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

template <class F>
double golden_maximize(F &&f, double lo, double hi, int iterations)
{
    double a = lo, b = hi;
    double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int k = 0; k < iterations; ++k)
    {
        if (f1 < f2)
        {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGolden * (b - a);
            f2 = f(x2);
        }
        else
        {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kGolden * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

// Sum of cavity Lorentzians for unit coupling scale:
//   S(f) = sum_m 4 c_m^2 kappa_m / (4 (f - f_m)^2 + kappa_m^2)
// with f_m = anchor + m fsr, m in [m_lo, m_hi]. Ring combs use c_m = 1 and
// kappa_m = f_m / q; FP combs use c_m = g(f_m) and add mirror leakage.
class CombBasis
{
public:
    CombBasis(const FPCavitySpec *device, double f_lo, double f_hi, double fsr, double anchor, double margin_fsr)
        : device_(device)
    {
        const double lo = f_lo - margin_fsr * fsr;
        const double hi = f_hi + margin_fsr * fsr;
        m_lo_ = static_cast<long long>(std::ceil((lo - anchor) / fsr));
        m_hi_ = static_cast<long long>(std::floor((hi - anchor) / fsr));
    }

    void evaluate(std::span<const double> f, double fsr, double anchor, double q, std::span<double> out) const
    {
        std::fill(out.begin(), out.end(), 0.0);
        for (long long m = m_lo_; m <= m_hi_; ++m)
        {
            const double fm = anchor + static_cast<double>(m) * fsr;
            if (!(fm > 0.0))
                continue;
            double kappa = fm / q;
            double c2 = 1.0;
            if (device_)
            {
                kappa += mirror_leakage_linewidth(fsr, round_trip_retention(fm, *device_));
                const double c = coupling_profile(fm, device_->idt);
                c2 = c * c;
            }
            if (!std::isfinite(kappa) || c2 == 0.0)
                continue;
            const double num = 4.0 * c2 * kappa;
            const double k2 = kappa * kappa;
            for (std::size_t i = 0; i < f.size(); ++i)
            {
                const double d = f[i] - fm;
                out[i] += num / (4.0 * d * d + k2);
            }
        }
    }

private:
    const FPCavitySpec *device_;
    long long m_lo_ = 0;
    long long m_hi_ = -1;
};

void require_scan(const ScanData &scan, std::size_t min_points)
{
    require_valid(scan);
    if (scan.frequencies.size() < min_points)
        throw DomainError("scan needs at least " + std::to_string(min_points) + " points");
}

std::vector<double> weights_of(const ScanData &scan)
{
    std::vector<double> w(scan.frequencies.size(), 1.0);
    if (scan.uncertainties)
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = 1.0 / (*scan.uncertainties)[i];
    return w;
}

// Residual of a quadratic least-squares trend, so slow envelopes do not leak
// into the periodogram.
std::vector<double> detrended(const ScanData &scan)
{
    const auto &f = scan.frequencies;
    const auto &y = scan.rates;
    const double fc = 0.5 * (f.front() + f.back());
    const double half = std::max(0.5 * (f.back() - f.front()), 1e-300);
    double s[5] = {}, t[3] = {};
    for (std::size_t i = 0; i < f.size(); ++i)
    {
        const double x = (f[i] - fc) / half;
        double p = 1.0;
        for (int k = 0; k < 5; ++k, p *= x)
        {
            s[k] += p;
            if (k < 3)
                t[k] += p * y[i];
        }
    }
    // 3x3 normal equations by Cramer's rule.
    const double a[3][3] = {{s[0], s[1], s[2]}, {s[1], s[2], s[3]}, {s[2], s[3], s[4]}};
    auto det3 = [](const double m[3][3]) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const double d = det3(a);
    double c[3] = {median(y), 0.0, 0.0};
    if (std::abs(d) > 1e-300)
        for (int col = 0; col < 3; ++col)
        {
            double m[3][3];
            for (int r = 0; r < 3; ++r)
                for (int k = 0; k < 3; ++k)
                    m[r][k] = k == col ? t[r] : a[r][k];
            c[col] = det3(m) / d;
        }
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
    {
        const double x = (f[i] - fc) / half;
        out[i] = y[i] - (c[0] + c[1] * x + c[2] * x * x);
    }
    return out;
}

struct CombEstimate
{
    double fsr = 0.0;
    double anchor = 0.0;
};

CombEstimate estimate_comb(const ScanData &scan)
{
    const auto &f = scan.frequencies;
    const std::vector<double> y = detrended(scan);
    const double fc = 0.5 * (f.front() + f.back());
    const double span = f.back() - f.front();

    std::vector<double> gaps(f.size() - 1);
    for (std::size_t i = 1; i < f.size(); ++i)
        gaps[i - 1] = f[i] - f[i - 1];
    const double df = median(gaps);

    auto coefficient = [&](double period) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i)
            acc += y[i] * std::polar(1.0, -kTwoPi * (f[i] - fc) / period);
        return acc;
    };
    auto power = [&](double period) { return std::norm(coefficient(period)); };

    const double p_min = 4.0 * df;
    const double p_max = 0.5 * span;
    if (!(p_max > p_min))
        throw DomainError("scan too short or too coarse to estimate a mode comb");

    double best_p = p_min, best_power = -1.0, prev = p_min;
    double best_prev = p_min, best_next = p_min;
    for (double p = p_min; p <= p_max;)
    {
        const double next = p * (1.0 + 0.05 * p / span);
        const double pw = power(p);
        if (pw > best_power)
        {
            best_power = pw;
            best_p = p;
            best_prev = prev;
            best_next = next;
        }
        prev = p;
        p = next;
    }
    CombEstimate est;
    est.fsr = golden_maximize(power, best_prev, best_next, 40);
    (void)best_p;
    const double phase = std::arg(coefficient(est.fsr));
    est.anchor = fc - phase * est.fsr / kTwoPi;
    return est;
}

struct LinearFit
{
    double gamma0 = 0.0;
    double scale2 = 0.0;
    double ssr = std::numeric_limits<double>::infinity();
};

// Weighted least squares of y = gamma0 + scale2 * s, both coefficients kept >= 0.
LinearFit linear_fit(const std::vector<double> &y, const std::vector<double> &s, const std::vector<double> &w)
{
    double sww = 0, sws = 0, swss = 0, swy = 0, swsy = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
    {
        const double w2 = w[i] * w[i];
        sww += w2;
        sws += w2 * s[i];
        swss += w2 * s[i] * s[i];
        swy += w2 * y[i];
        swsy += w2 * s[i] * y[i];
    }
    LinearFit fit;
    const double det = sww * swss - sws * sws;
    if (det > 0.0)
    {
        fit.gamma0 = (swss * swy - sws * swsy) / det;
        fit.scale2 = (sww * swsy - sws * swy) / det;
    }
    if (!(fit.scale2 > 0.0) || !(fit.gamma0 > 0.0))
    {
        // Fall back to a floor for gamma0 and refit the scale alone.
        fit.gamma0 = std::max(fit.gamma0, 1e-3 * swy / sww);
        fit.scale2 = swss > 0.0 ? std::max((swsy - fit.gamma0 * sws) / swss, 0.0) : 0.0;
    }
    fit.ssr = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
    {
        const double r = w[i] * (y[i] - fit.gamma0 - fit.scale2 * s[i]);
        fit.ssr += r * r;
    }
    return fit;
}

struct ScanInitial
{
    double gamma0, scale, q, fsr, anchor;
};

ScanInitial estimate_scan_initial(const ScanData &scan, const FPCavitySpec *device)
{
    const CombEstimate comb = estimate_comb(scan);
    const auto &f = scan.frequencies;
    // Anchor the comb on the mode nearest the scan centre.
    const double fc = 0.5 * (f.front() + f.back());
    const double anchor = comb.anchor + std::round((fc - comb.anchor) / comb.fsr) * comb.fsr;
    const CombBasis basis(device, f.front(), f.back(), comb.fsr, anchor, kModeMarginFsr);
    const std::vector<double> w = weights_of(scan);
    std::vector<double> s(f.size());

    auto fit_at = [&](double log_q) {
        basis.evaluate(f, comb.fsr, anchor, std::pow(10.0, log_q), s);
        return linear_fit(scan.rates, s, w);
    };

    constexpr double kLogQLo = 1.5, kLogQHi = 6.0, kLogQStep = 0.05;
    double best_log_q = kLogQLo;
    double best_ssr = std::numeric_limits<double>::infinity();
    for (double lq = kLogQLo; lq <= kLogQHi + 1e-12; lq += kLogQStep)
    {
        const double ssr = fit_at(lq).ssr;
        if (ssr < best_ssr)
        {
            best_ssr = ssr;
            best_log_q = lq;
        }
    }
    const double log_q = golden_maximize([&](double lq) { return -fit_at(lq).ssr; },
                                         std::max(kLogQLo, best_log_q - kLogQStep),
                                         std::min(kLogQHi, best_log_q + kLogQStep), 30);
    const LinearFit lin = fit_at(log_q);
    return {lin.gamma0, std::sqrt(std::max(lin.scale2, 0.0)), std::pow(10.0, log_q), comb.fsr, anchor};
}

std::vector<ParameterSpec> scan_parameters(const ScanInitial &init, const char *scale_name, const char *q_name,
                                           const char *anchor_name)
{
    const double scale = init.scale > 0.0 ? init.scale : 1e-6;
    return {
        {"gamma0", init.gamma0, init.gamma0 / 20.0, init.gamma0 * 20.0, false},
        {scale_name, scale, scale / 10.0, scale * 10.0, false},
        {q_name, init.q, init.q / 10.0, init.q * 10.0, false},
        {"fsr", init.fsr, 0.8 * init.fsr, 1.25 * init.fsr, false},
        {anchor_name, init.anchor, init.anchor - 0.5 * init.fsr, init.anchor + 0.5 * init.fsr, false},
    };
}

std::vector<BoundedParameter> to_bounded(const std::vector<ParameterSpec> &params)
{
    std::vector<BoundedParameter> out;
    out.reserve(params.size());
    for (const auto &p : params)
        out.push_back({p.name, p.initial, p.fixed ? p.initial : p.lower, p.fixed ? p.initial : p.upper, p.fixed});
    return out;
}

// Index of each canonical name inside the problem's parameter list.
std::vector<std::size_t> index_of_names(const FitProblem &problem)
{
    std::vector<std::size_t> idx;
    for (const auto &name : parameter_names(problem.model))
    {
        auto it = std::find_if(problem.parameters.begin(), problem.parameters.end(),
                               [&](const ParameterSpec &p) { return p.name == name; });
        if (it == problem.parameters.end())
            throw DomainError("fit problem lacks parameter '" + name + "'");
        idx.push_back(static_cast<std::size_t>(it - problem.parameters.begin()));
    }
    return idx;
}

FitResult to_fit_result(const LmResult &lm, const FitProblem &problem)
{
    FitResult out;
    out.residual_norm = lm.residual_norm;
    out.initial_residual_norm = lm.initial_residual_norm;
    out.status = lm.status;
    out.iterations = lm.iterations;
    for (std::size_t k : index_of_names(problem))
    {
        const auto &spec = problem.parameters[k];
        FitParameter p;
        p.value = lm.values[k];
        p.fixed = spec.fixed;
        p.at_bound = lm.at_bound[k];
        if (lm.status == FitStatus::converged)
            p.std_error = lm.std_errors[k];
        out.parameters.emplace_back(spec.name, p);
        if (p.at_bound)
            out.flags.push_back(std::string(kFlagAtBoundPrefix) + spec.name);
    }
    return out;
}

void add_fsr_flags(FitResult &result, const ScanData &scan)
{
    const auto &fsr = result.at("fsr");
    const double span = scan.frequencies.back() - scan.frequencies.front();
    if (span < 2.0 * fsr.value)
        result.flags.emplace_back(kFlagShortScan);
    if (!fsr.fixed && (!fsr.std_error || !(*fsr.std_error <= 0.5 * fsr.value)))
        result.flags.emplace_back(kFlagFsrUnidentified);
}

FitResult fit_comb_model(const ScanData &scan, const FitProblem &problem, const FPCavitySpec *device)
{
    require_scan(scan, 5);
    require_valid(problem);
    const std::vector<std::size_t> idx = index_of_names(problem);
    // Canonical order: gamma0, scale, q, fsr, anchor.
    const std::size_t i_gamma0 = idx[0], i_scale = idx[1], i_q = idx[2], i_fsr = idx[3], i_anchor = idx[4];

    const auto &f = scan.frequencies;
    const CombBasis basis(device, f.front(), f.back(), problem.parameters[i_fsr].initial,
                          problem.parameters[i_anchor].initial, problem.mode_margin_fsr);
    const std::vector<double> w = weights_of(scan);
    const LossFunction loss = problem.loss;

    ResidualFunction fn = [&, s = std::vector<double>(f.size())](std::span<const double> p,
                                                                 std::span<double> r) mutable {
        basis.evaluate(f, p[i_fsr], p[i_anchor], p[i_q], s);
        const double scale2 = p[i_scale] * p[i_scale];
        for (std::size_t i = 0; i < f.size(); ++i)
        {
            const double res = w[i] * (p[i_gamma0] + scale2 * s[i] - scan.rates[i]);
            r[i] = loss.kind == LossKind::huber ? huber_residual(res, loss.huber_delta) : res;
        }
    };

    std::vector<BoundedParameter> bounded = to_bounded(problem.parameters);
    // A coupling pinned at zero leaves the comb unobservable; only gamma0 can move.
    if (bounded[i_scale].fixed && bounded[i_scale].initial == 0.0)
        for (std::size_t k : {i_q, i_fsr, i_anchor})
        {
            bounded[k].fixed = true;
            bounded[k].lower = bounded[k].upper = bounded[k].initial;
        }
    const LmResult lm = multistart_lm(fn, f.size(), bounded, problem.starts, problem.start_jitter, problem.lm);
    FitResult result = to_fit_result(lm, problem);
    add_fsr_flags(result, scan);
    return result;
}
} // namespace

ParameterSpec &FitProblem::parameter(const std::string &name)
{
    for (auto &p : parameters)
        if (p.name == name)
            return p;
    throw DomainError("fit problem has no parameter '" + name + "'");
}

const ParameterSpec &FitProblem::parameter(const std::string &name) const
{
    return const_cast<FitProblem *>(this)->parameter(name);
}

std::vector<std::string> parameter_names(ModelKind model)
{
    switch (model)
    {
    case ModelKind::ring_model:
        return {"gamma0", "g", "q", "fsr", "f_offset"};
    case ModelKind::fp_model:
        return {"gamma0", "g_scale", "intrinsic_q", "fsr", "f_anchor"};
    case ModelKind::exponential:
        return {"t1", "amplitude", "offset"};
    case ModelKind::tls:
        return {"q_tls", "n_c", "beta", "q_other"};
    }
    return {};
}

Violations validate(const FitProblem &problem)
{
    Violations out;
    for (const auto &name : parameter_names(problem.model))
        if (std::none_of(problem.parameters.begin(), problem.parameters.end(),
                         [&](const ParameterSpec &p) { return p.name == name; }))
            out.push_back({name, "missing parameter"});
    for (const auto &p : problem.parameters)
    {
        if (!std::isfinite(p.initial))
            out.push_back({p.name, "initial value must be finite"});
        if (p.fixed)
            continue;
        if (!(std::isfinite(p.lower) && std::isfinite(p.upper)))
            out.push_back({p.name, "free parameter needs finite bounds"});
        else if (!(p.lower <= p.initial && p.initial <= p.upper))
            out.push_back({p.name, "initial value outside bounds"});
    }
    if (problem.model == ModelKind::fp_model && !problem.device)
        out.push_back({"device", "fp_model needs the FP device spec"});
    if (problem.starts < 1)
        out.push_back({"starts", "must be >= 1"});
    if (problem.loss.kind == LossKind::huber && !(problem.loss.huber_delta > 0.0))
        out.push_back({"loss.huber_delta", "must be > 0"});
    return out;
}

FitProblem initial_ring_problem(const ScanData &scan)
{
    require_scan(scan, 8);
    const ScanInitial init = estimate_scan_initial(scan, nullptr);
    FitProblem problem;
    problem.model = ModelKind::ring_model;
    problem.parameters = scan_parameters(init, "g", "q", "f_offset");
    return problem;
}

FitProblem initial_fp_problem(const ScanData &scan, const FPCavitySpec &device)
{
    require_scan(scan, 8);
    require_valid(device);
    if (!(device.idt.peak_coupling > 0.0))
        throw DomainError("fp fit needs an IDT with peak_coupling > 0");
    const ScanInitial init = estimate_scan_initial(scan, &device);
    FitProblem problem;
    problem.model = ModelKind::fp_model;
    problem.device = device;
    problem.parameters = scan_parameters(init, "g_scale", "intrinsic_q", "f_anchor");
    return problem;
}

FitResult fit_ring_model(const ScanData &scan, const FitProblem &problem)
{
    if (problem.model != ModelKind::ring_model)
        throw DomainError("fit_ring_model needs a ring_model problem");
    return fit_comb_model(scan, problem, nullptr);
}

FitResult fit_fp_model(const ScanData &scan, const FitProblem &problem)
{
    if (problem.model != ModelKind::fp_model)
        throw DomainError("fit_fp_model needs an fp_model problem");
    require_valid(problem);
    if (!(problem.device->idt.peak_coupling > 0.0))
        throw DomainError("fp fit needs an IDT with peak_coupling > 0");
    return fit_comb_model(scan, problem, &*problem.device);
}

std::vector<double> ring_model_rates(std::span<const double> frequencies, double gamma0, double q, double g, double fsr,
                                     double f_offset, double margin_fsr)
{
    std::vector<double> out(frequencies.size());
    if (frequencies.empty())
        return out;
    const CombBasis basis(nullptr, frequencies.front(), frequencies.back(), fsr, f_offset, margin_fsr);
    basis.evaluate(frequencies, fsr, f_offset, q, out);
    for (double &v : out)
        v = gamma0 + g * g * v;
    return out;
}

std::vector<double> fp_model_rates(std::span<const double> frequencies, const FPCavitySpec &device, double gamma0,
                                   double g_scale, double intrinsic_q, double fsr, double f_anchor, double margin_fsr)
{
    std::vector<double> out(frequencies.size());
    if (frequencies.empty())
        return out;
    const CombBasis basis(&device, frequencies.front(), frequencies.back(), fsr, f_anchor, margin_fsr);
    basis.evaluate(frequencies, fsr, f_anchor, intrinsic_q, out);
    for (double &v : out)
        v = gamma0 + g_scale * g_scale * v;
    return out;
}

std::vector<double> predict(const FitResult &r, const FitProblem &problem, std::span<const double> frequencies)
{
    switch (problem.model)
    {
    case ModelKind::ring_model:
        return ring_model_rates(frequencies, r.value("gamma0"), r.value("q"), r.value("g"), r.value("fsr"),
                                r.value("f_offset"), problem.mode_margin_fsr);
    case ModelKind::fp_model:
        if (!problem.device)
            throw DomainError("fp prediction needs the device spec");
        return fp_model_rates(frequencies, *problem.device, r.value("gamma0"), r.value("g_scale"),
                              r.value("intrinsic_q"), r.value("fsr"), r.value("f_anchor"), problem.mode_margin_fsr);
    case ModelKind::exponential: {
        std::vector<double> out;
        for (double t : frequencies)
            out.push_back(r.value("amplitude") * std::exp(-t / r.value("t1")) + r.value("offset"));
        return out;
    }
    case ModelKind::tls: {
        std::vector<double> out;
        for (double n : frequencies)
            out.push_back(tls_quality_factor(n, r.value("q_tls"), r.value("n_c"), r.value("beta"), r.value("q_other")));
        return out;
    }
    }
    return {};
}

FitResult fit_exponential(const DecayCurve &curve, const LmOptions &options)
{
    require_valid(curve);
    const auto &t = curve.times;
    const auto &p = curve.populations;
    const double span = t.back() - t.front();
    if (!(span > 0.0))
        throw DomainError("fit_exponential: time span must be positive");

    const auto [pmin, pmax] = std::minmax_element(p.begin(), p.end());
    const double level = std::max({1.0, std::abs(*pmin), std::abs(*pmax)});

    // Log-linear start: baseline from the tail, slope from the points well above it.
    const std::size_t tail = std::max<std::size_t>(1, p.size() / 10);
    const double b0 = std::accumulate(p.end() - static_cast<std::ptrdiff_t>(tail), p.end(), 0.0) / static_cast<double>(tail);
    const double a_hint = p.front() - b0;
    double t1 = span / 3.0, a0 = a_hint;
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        const double sign = a_hint >= 0.0 ? 1.0 : -1.0;
        for (std::size_t i = 0; i < p.size(); ++i)
        {
            const double excess = sign * (p[i] - b0);
            if (excess > 0.1 * std::abs(a_hint) && excess > 0.0)
            {
                const double x = t[i] - t.front();
                const double y = std::log(excess);
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
                ++n;
            }
        }
        const double den = n * sxx - sx * sx;
        if (n >= 2 && den > 0.0)
        {
            const double slope = (n * sxy - sx * sy) / den;
            if (slope < 0.0)
            {
                t1 = -1.0 / slope;
                a0 = sign * std::exp((sy - slope * sx) / n + slope * (-t.front()));
            }
        }
    }
    t1 = std::clamp(t1, 1e-6 * span, 1e3 * span);

    FitProblem problem;
    problem.model = ModelKind::exponential;
    problem.parameters = {{"t1", t1, 1e-6 * span, 1e3 * span, false},
                          {"amplitude", std::clamp(a0, -10.0 * level, 10.0 * level), -10.0 * level, 10.0 * level, false},
                          {"offset", std::clamp(b0, -10.0 * level, 10.0 * level), -10.0 * level, 10.0 * level, false}};

    if (*pmax - *pmin <= 1e-12 * level)
    {
        // No decay at all: T1 is not defined by the data.
        LmResult flat;
        flat.values = {t1, 0.0, b0};
        flat.std_errors.assign(3, std::nullopt);
        flat.at_bound.assign(3, false);
        flat.status = FitStatus::singular;
        double rss = 0.0;
        for (double v : p)
            rss += (v - b0) * (v - b0);
        flat.residual_norm = flat.initial_residual_norm = std::sqrt(rss);
        return to_fit_result(flat, problem);
    }

    ResidualFunction fn = [&](std::span<const double> q, std::span<double> r) {
        for (std::size_t i = 0; i < t.size(); ++i)
            r[i] = q[1] * std::exp(-t[i] / q[0]) + q[2] - p[i];
    };
    const LmResult lm = levenberg_marquardt(fn, t.size(), to_bounded(problem.parameters), options);
    return to_fit_result(lm, problem);
}

double tls_quality_factor(double quanta, double q_tls, double n_c, double beta, double q_other)
{
    return 1.0 / (std::pow(1.0 + quanta / n_c, -beta) / q_tls + 1.0 / q_other);
}

FitResult tls_q_fit(std::span<const double> quanta, std::span<const double> qs, const LmOptions &options)
{
    if (quanta.size() != qs.size())
        throw DomainError("tls_q_fit: quanta and Q arrays differ in length");
    if (quanta.size() < 4)
        throw DomainError("tls_q_fit: needs at least 4 points");
    for (std::size_t i = 0; i < qs.size(); ++i)
        if (!(quanta[i] > 0.0) || !(qs[i] > 0.0))
            throw DomainError("tls_q_fit: quanta and Q must be > 0");

    const auto [nmin_it, nmax_it] = std::minmax_element(quanta.begin(), quanta.end());
    const double log_span = std::log10(*nmax_it / *nmin_it);
    const double q_low = qs[static_cast<std::size_t>(nmin_it - quanta.begin())];
    const double q_high = qs[static_cast<std::size_t>(nmax_it - quanta.begin())];

    // Fit in log10 space for the scale parameters.
    const double q_other0 = q_high;
    const double inv_tls = 1.0 / q_low - 1.0 / q_high;
    const double q_tls0 = inv_tls > 0.0 ? 1.0 / inv_tls : 10.0 * q_high;
    const double n_c0 = std::sqrt(*nmin_it * *nmax_it) / 10.0;

    auto clamp_log = [](double x, double lo, double hi) { return std::clamp(std::log10(x), lo, hi); };
    std::vector<BoundedParameter> params = {
        {"log_q_tls", clamp_log(q_tls0, 1.0, 9.0), 1.0, 9.0, false},
        {"log_n_c", clamp_log(n_c0, -6.0, 12.0), -6.0, 12.0, false},
        {"beta", 0.5, 0.05, 2.0, false},
        {"log_q_other", clamp_log(q_other0, 1.0, 9.0), 1.0, 9.0, false},
    };
    ResidualFunction fn = [&](std::span<const double> p, std::span<double> r) {
        const double q_tls = std::pow(10.0, p[0]), n_c = std::pow(10.0, p[1]), q_other = std::pow(10.0, p[3]);
        for (std::size_t i = 0; i < qs.size(); ++i)
            r[i] = qs[i] / tls_quality_factor(quanta[i], q_tls, n_c, p[2], q_other) - 1.0;
    };
    const LmResult lm = multistart_lm(fn, qs.size(), params, 8, 0.05, options);

    FitResult out;
    out.residual_norm = lm.residual_norm;
    out.initial_residual_norm = lm.initial_residual_norm;
    out.status = lm.status;
    out.iterations = lm.iterations;
    const char *names[] = {"q_tls", "n_c", "beta", "q_other"};
    for (std::size_t k = 0; k < 4; ++k)
    {
        FitParameter fp;
        const bool is_log = k != 2;
        fp.value = is_log ? std::pow(10.0, lm.values[k]) : lm.values[k];
        fp.at_bound = lm.at_bound[k];
        if (lm.std_errors[k])
            fp.std_error = is_log ? fp.value * std::log(10.0) * *lm.std_errors[k] : *lm.std_errors[k];
        out.parameters.emplace_back(names[k], fp);
        if (fp.at_bound)
            out.flags.push_back(std::string(kFlagAtBoundPrefix) + names[k]);
    }
    if (log_span < 2.0)
        out.flags.emplace_back(kFlagInsufficientSpan);
    return out;
}

} // namespace cqad
