#ifndef CQAD_ODE_HPP
#define CQAD_ODE_HPP

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cqad
{

struct OdeOptions
{
    double rtol = 1e-9;
    double atol = 1e-12;
    double initial_step = 0.0; // 0 selects a step from the initial slope
    std::size_t max_steps = 20'000'000;
};

struct OdeStats
{
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    double max_local_error = 0.0; // largest scaled error of an accepted step
};

using ComplexRhs = std::function<void(double t, const Eigen::VectorXcd &y, Eigen::VectorXcd &dydt)>;

// Dormand-Prince 5(4) with step-size control. Steps are clipped so every
// output time is hit exactly; t_out[0] is the initial time. Throws
// NumericError (with the offending local error) when the step size
// underflows or max_steps is exceeded.
std::vector<Eigen::VectorXcd> integrate_dopri5(const ComplexRhs &rhs, const Eigen::VectorXcd &y0,
                                               std::span<const double> t_out, const OdeOptions &options = {},
                                               OdeStats *stats = nullptr);

} // namespace cqad

#endif // CQAD_ODE_HPP
