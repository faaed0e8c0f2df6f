#include "cqad/ode.hpp"

#include "cqad/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cqad
{
namespace
{
// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Difference between the 5th and embedded 4th order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double scaled_rms(const Eigen::VectorXcd &err, const Eigen::VectorXcd &y0, const Eigen::VectorXcd &y1,
                  const OdeOptions &opt)
{
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i)
    {
        const double sc = opt.atol + opt.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        acc += std::norm(err[i]) / (sc * sc);
    }
    return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(err.size(), 1)));
}

[[noreturn]] void fail(const std::string &why, double t, double local_error)
{
    std::ostringstream os;
    os << "integrator failure at t=" << t << ": " << why << " (max local error " << local_error << ")";
    throw NumericError(os.str());
}
} // namespace

std::vector<Eigen::VectorXcd> integrate_dopri5(const ComplexRhs &rhs, const Eigen::VectorXcd &y0,
                                               std::span<const double> t_out, const OdeOptions &opt,
                                               OdeStats *stats)
{
    std::vector<Eigen::VectorXcd> out;
    if (t_out.empty())
        return out;
    for (std::size_t i = 1; i < t_out.size(); ++i)
        if (!(t_out[i] > t_out[i - 1]))
            throw DomainError("output times must be strictly increasing");

    OdeStats local;
    OdeStats &st = stats ? *stats : local;
    st = {};

    const Eigen::Index n = y0.size();
    Eigen::VectorXcd y = y0, ynew(n), tmp(n);
    Eigen::VectorXcd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    double t = t_out.front();
    rhs(t, y, k1);
    out.reserve(t_out.size());
    out.push_back(y);
    if (t_out.size() == 1)
        return out;

    const double span = t_out.back() - t;
    double h = opt.initial_step;
    if (!(h > 0.0))
    {
        const double d0 = scaled_rms(y, y, y, opt);
        const double d1 = scaled_rms(k1, y, y, opt);
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
        h = std::min(h, span);
    }
    const double h_min = 1e-14 * std::max(span, std::abs(t));
    double last_error = 0.0;

    std::size_t next = 1;
    while (next < t_out.size())
    {
        if (st.accepted + st.rejected >= opt.max_steps)
            fail("step budget exhausted", t, last_error);
        const double target = t_out[next];
        const double h_natural = h;
        bool hits_target = false;
        if (t + h >= target)
        {
            h = target - t;
            hits_target = true;
        }

        tmp = y + h * a21 * k1;
        rhs(t + c2 * h, tmp, k2);
        tmp = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, tmp, k3);
        tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, tmp, k4);
        tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, tmp, k5);
        tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h, tmp, k6);
        ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(t + h, ynew, k7);

        tmp = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double err = scaled_rms(tmp, y, ynew, opt);
        last_error = err;
        if (!std::isfinite(err))
            fail("non-finite error estimate", t, err);

        if (err <= 1.0)
        {
            ++st.accepted;
            st.max_local_error = std::max(st.max_local_error, err);
            t = hits_target ? target : t + h;
            y = ynew;
            k1 = k7; // first-same-as-last
            if (hits_target)
            {
                out.push_back(y);
                ++next;
            }
            const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            // A clipped step says nothing about the natural step size.
            if (!hits_target)
                h *= factor;
            else
                h = factor >= 1.0 ? h_natural : std::min(h_natural, h * factor);
        }
        else
        {
            ++st.rejected;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            if (h < h_min)
                fail("step size underflow", t, err);
        }
    }
    return out;
}

} // namespace cqad
