#include "cqad/lm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cqad
{
namespace
{
double squared_norm(const Eigen::VectorXd &r) { return r.squaredNorm(); }

struct Problem
{
    const ResidualFunction &fn;
    std::size_t m;
    const std::vector<BoundedParameter> &params;
    std::vector<std::size_t> free; // indices into params

    Eigen::VectorXd residuals(const std::vector<double> &p) const
    {
        Eigen::VectorXd r(static_cast<Eigen::Index>(m));
        fn(p, std::span<double>(r.data(), m));
        return r;
    }
};

double clamp_to(const BoundedParameter &b, double x) { return std::clamp(x, b.lower, b.upper); }

Eigen::MatrixXd jacobian(const Problem &pb, const std::vector<double> &p, const Eigen::VectorXd &r0, double rel_step)
{
    Eigen::MatrixXd j(static_cast<Eigen::Index>(pb.m), static_cast<Eigen::Index>(pb.free.size()));
    std::vector<double> q = p;
    for (std::size_t c = 0; c < pb.free.size(); ++c)
    {
        const std::size_t k = pb.free[c];
        const auto &b = pb.params[k];
        // Parameters sitting near zero step on the scale of their box instead.
        const double width = b.upper - b.lower;
        const double floor = std::isfinite(width) && width > 0.0 ? 1e-3 * width : 1.0;
        double h = rel_step * std::max(std::abs(p[k]), floor);
        // Step inward when the forward point would leave the box.
        if (p[k] + h > b.upper)
            h = -h;
        q[k] = p[k] + h;
        const double actual = q[k] - p[k];
        j.col(static_cast<Eigen::Index>(c)) = (pb.residuals(q) - r0) / actual;
        q[k] = p[k];
    }
    return j;
}

// Column norms, with zero columns reported as zero.
Eigen::VectorXd column_norms(const Eigen::MatrixXd &j)
{
    Eigen::VectorXd n(j.cols());
    for (Eigen::Index c = 0; c < j.cols(); ++c)
        n[c] = j.col(c).norm();
    return n;
}

bool rank_deficient(const Eigen::MatrixXd &j, double tol)
{
    if (j.cols() == 0)
        return false;
    const Eigen::VectorXd norms = column_norms(j);
    if (norms.minCoeff() == 0.0 || !norms.allFinite())
        return true;
    const Eigen::MatrixXd jn = j * norms.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jn);
    const auto &s = svd.singularValues();
    return s[s.size() - 1] <= tol * s[0];
}

// Deterministic low-discrepancy value in [0, 1) for start k, coordinate i.
double jitter_sample(int k, std::size_t i)
{
    static constexpr double kAlpha[] = {0.41421356237309503, 0.73205080756887719, 0.23606797749978969,
                                        0.64575131106459072, 0.31662479035539981, 0.60555127546398912,
                                        0.12310562561766059, 0.35889894354067355};
    const double a = kAlpha[i % std::size(kAlpha)];
    const double v = static_cast<double>(k) * a + 0.5 * static_cast<double>(i / std::size(kAlpha));
    return v - std::floor(v);
}
} // namespace

double huber_residual(double r, double delta)
{
    const double a = std::abs(r);
    if (a <= delta)
        return r;
    return std::copysign(std::sqrt(2.0 * delta * a - delta * delta), r);
}

LmResult levenberg_marquardt(const ResidualFunction &fn, std::size_t n_residuals,
                             const std::vector<BoundedParameter> &params, const LmOptions &opt)
{
    Problem pb{fn, n_residuals, params, {}};
    std::vector<double> p(params.size());
    for (std::size_t k = 0; k < params.size(); ++k)
    {
        const auto &b = params[k];
        if (!(b.lower <= b.upper))
            throw DomainError("parameter '" + b.name + "' has empty bounds");
        p[k] = b.fixed ? b.initial : clamp_to(b, b.initial);
        if (!b.fixed)
            pb.free.push_back(k);
    }

    LmResult out;
    Eigen::VectorXd r = pb.residuals(p);
    if (!r.allFinite())
        throw NumericError("residuals are not finite at the initial guess");
    double cost = squared_norm(r);
    out.initial_residual_norm = std::sqrt(cost);

    const auto n_free = static_cast<Eigen::Index>(pb.free.size());
    double lambda = opt.lambda0;
    bool converged = n_free == 0 || cost == 0.0;
    int iter = 0;
    Eigen::MatrixXd j;

    while (!converged && iter < opt.max_iter)
    {
        ++iter;
        j = jacobian(pb, p, r, opt.jacobian_step);
        const Eigen::VectorXd grad = j.transpose() * r;
        const Eigen::VectorXd norms = column_norms(j);

        double cosine = 0.0;
        const double rnorm = std::sqrt(cost);
        for (Eigen::Index c = 0; c < n_free; ++c)
            if (norms[c] > 0.0)
                cosine = std::max(cosine, std::abs(grad[c]) / (norms[c] * rnorm));
        if (cosine < opt.gtol)
        {
            converged = true;
            break;
        }

        const Eigen::MatrixXd a = j.transpose() * j;
        Eigen::VectorXd d = a.diagonal();
        const double dmax = std::max(d.maxCoeff(), std::numeric_limits<double>::min());
        for (Eigen::Index c = 0; c < n_free; ++c)
            d[c] = std::max(d[c], 1e-12 * dmax);

        bool accepted = false;
        while (!accepted)
        {
            Eigen::MatrixXd damped = a;
            damped.diagonal() += lambda * d;
            const Eigen::VectorXd step = damped.ldlt().solve(-grad);

            std::vector<double> trial = p;
            double moved = 0.0;
            for (Eigen::Index c = 0; c < n_free; ++c)
            {
                const std::size_t k = pb.free[static_cast<std::size_t>(c)];
                trial[k] = clamp_to(params[k], p[k] + step[c]);
                moved = std::max(moved, std::abs(trial[k] - p[k]) / std::max(std::abs(p[k]), 1e-300));
            }
            const Eigen::VectorXd r_trial = pb.residuals(trial);
            const double cost_trial = r_trial.allFinite() ? squared_norm(r_trial) : std::numeric_limits<double>::infinity();

            if (cost_trial < cost)
            {
                const double reduction = (cost - cost_trial) / cost;
                // A tiny gain from a heavily damped step is not convergence.
                const bool near_gauss_newton = lambda <= 1.0;
                p = std::move(trial);
                r = r_trial;
                cost = cost_trial;
                lambda = std::max(lambda / opt.lambda_factor, 1e-15);
                accepted = true;
                if ((reduction < opt.ftol && near_gauss_newton) || cost == 0.0 || moved < 1e-15)
                    converged = true;
            }
            else
            {
                lambda *= opt.lambda_factor;
                // No downhill step exists at any damping: we sit in the minimum
                // up to rounding.
                if (lambda > opt.lambda_max || moved == 0.0)
                {
                    converged = true;
                    break;
                }
            }
        }
    }

    out.values = p;
    out.residual_norm = std::sqrt(cost);
    out.iterations = iter;
    out.std_errors.assign(params.size(), std::nullopt);
    out.at_bound.assign(params.size(), false);
    for (std::size_t k : pb.free)
    {
        const auto &b = params[k];
        const double tol = 1e-9 * std::max(b.upper - b.lower, std::abs(p[k]));
        out.at_bound[k] = std::abs(p[k] - b.lower) <= tol || std::abs(p[k] - b.upper) <= tol;
    }

    if (n_free == 0)
    {
        out.status = FitStatus::converged;
        return out;
    }
    j = jacobian(pb, p, r, opt.jacobian_step);
    if (rank_deficient(j, opt.rank_tol))
    {
        out.status = FitStatus::singular;
        return out;
    }
    if (!converged)
    {
        out.status = FitStatus::max_iter;
        return out;
    }
    out.status = FitStatus::converged;

    const auto dof = static_cast<double>(n_residuals) - static_cast<double>(n_free);
    const double s2 = dof > 0.0 ? cost / dof : std::numeric_limits<double>::quiet_NaN();
    // Covariance through column-normalized J keeps the solve well scaled.
    const Eigen::VectorXd norms = column_norms(j);
    const Eigen::MatrixXd jn = j * norms.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd cov_n = (jn.transpose() * jn).completeOrthogonalDecomposition().pseudoInverse();
    for (Eigen::Index c = 0; c < n_free; ++c)
    {
        const double var = s2 * cov_n(c, c) / (norms[c] * norms[c]);
        out.std_errors[pb.free[static_cast<std::size_t>(c)]] = std::sqrt(std::max(var, 0.0));
    }
    return out;
}

LmResult multistart_lm(const ResidualFunction &fn, std::size_t n_residuals, const std::vector<BoundedParameter> &params,
                       int starts, double jitter, const LmOptions &options)
{
    LmResult best;
    double initial_norm = 0.0;
    for (int k = 0; k < std::max(starts, 1); ++k)
    {
        std::vector<BoundedParameter> start = params;
        if (k > 0)
            for (std::size_t i = 0; i < start.size(); ++i)
            {
                auto &b = start[i];
                if (b.fixed)
                    continue;
                const double width = b.upper - b.lower;
                const double offset = (2.0 * jitter_sample(k, i) - 1.0) * jitter * width;
                b.initial = std::clamp(b.initial + offset, b.lower, b.upper);
            }
        LmResult r = levenberg_marquardt(fn, n_residuals, start, options);
        r.start_index = k;
        if (k == 0)
        {
            initial_norm = r.initial_residual_norm;
            best = std::move(r);
        }
        else if (r.residual_norm < best.residual_norm)
        {
            best = std::move(r);
        }
    }
    best.initial_residual_norm = initial_norm;
    return best;
}

} // namespace cqad
