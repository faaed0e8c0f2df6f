#ifndef CQAD_LM_HPP
#define CQAD_LM_HPP

#include "cqad/types.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cqad
{

struct BoundedParameter
{
    std::string name;
    double initial = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool fixed = false;
};

struct LmOptions
{
    int max_iter = 200;
    double jacobian_step = 1e-6; // relative forward-difference step
    double lambda0 = 1e-3;
    double lambda_factor = 10.0;
    double ftol = 1e-10; // relative reduction of the squared residual
    double gtol = 1e-12; // max cosine between a Jacobian column and the residual
    double lambda_max = 1e16;
    double rank_tol = 1e-10; // relative singular value below which J is rank deficient
};

// Writes weighted residuals for a full parameter vector (fixed ones included).
using ResidualFunction = std::function<void(std::span<const double> params, std::span<double> residuals)>;

struct LmResult
{
    std::vector<double> values;
    std::vector<std::optional<double>> std_errors; // only when converged and free
    std::vector<bool> at_bound;
    double residual_norm = 0.0;
    double initial_residual_norm = 0.0;
    FitStatus status = FitStatus::converged;
    int iterations = 0;
    int start_index = 0;
};

// Box-constrained Levenberg-Marquardt with Marquardt diagonal scaling and
// projection onto the bounds. Standard errors come from s^2 (J^T J)^-1 at the
// optimum with s^2 = |r|^2 / (m - n_free).
LmResult levenberg_marquardt(const ResidualFunction &fn, std::size_t n_residuals,
                             const std::vector<BoundedParameter> &params, const LmOptions &options = {});

// Runs `starts` deterministic starts (start 0 = the initial guess, the rest
// jittered by +-jitter of each bound width) and keeps the lowest residual,
// ties going to the lower start index. initial_residual_norm refers to start 0.
LmResult multistart_lm(const ResidualFunction &fn, std::size_t n_residuals, const std::vector<BoundedParameter> &params,
                       int starts, double jitter, const LmOptions &options = {});

// Huber-transformed residual: identical inside |r| <= delta, square root
// growth beyond, so that the sum of squares equals twice the Huber loss.
double huber_residual(double r, double delta);

} // namespace cqad

#endif // CQAD_LM_HPP
