#ifndef CQAD_ESTIMATION_HPP
#define CQAD_ESTIMATION_HPP

#include "cqad/lm.hpp"
#include "cqad/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cqad
{

enum class ModelKind
{
    fp_model,
    ring_model,
    exponential,
    tls
};

enum class LossKind
{
    least_squares,
    huber
};

struct LossFunction
{
    LossKind kind = LossKind::least_squares;
    double huber_delta = 1.0; // in units of the weighted residual
};

struct ParameterSpec
{
    std::string name;
    double initial = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool fixed = false;
};

// Mode combs in the multimode fits extend this many FSRs past each scan edge.
inline constexpr double kModeMarginFsr = 50.0;

struct FitProblem
{
    ModelKind model = ModelKind::ring_model;
    std::vector<ParameterSpec> parameters;
    LossFunction loss;
    std::optional<FPCavitySpec> device; // required by fp_model
    int starts = 8;
    double start_jitter = 0.05; // fraction of each bound width
    double mode_margin_fsr = kModeMarginFsr;
    LmOptions lm;

    ParameterSpec &parameter(const std::string &name);
    const ParameterSpec &parameter(const std::string &name) const;
};

// Every free parameter needs finite bounds that contain its initial value.
Violations validate(const FitProblem &problem);

// Parameter names per model, in result order.
//   ring_model:  gamma0, g, q, fsr, f_offset
//   fp_model:    gamma0, g_scale, intrinsic_q, fsr, f_anchor
//   exponential: t1, amplitude, offset
//   tls:         q_tls, n_c, beta, q_other
std::vector<std::string> parameter_names(ModelKind model);

// Fit flags.
inline constexpr const char *kFlagFsrUnidentified = "fsr_unidentified";
inline constexpr const char *kFlagShortScan = "scan_shorter_than_two_fsr";
inline constexpr const char *kFlagInsufficientSpan = "insufficient_power_span";
inline constexpr const char *kFlagAtBoundPrefix = "at_bound:";

// Decay fit P(t) = A exp(-t / T1) + B. Initial guess from a log-linear fit.
// A curve without decay comes back with status singular.
FitResult fit_exponential(const DecayCurve &curve, const LmOptions &options = {});

// --- multimode scan fits ---

// Comb period and phase read off the periodogram of the scan, followed by a
// scan over the quality factor with a linear solve for (gamma0, g^2).
// Produces a ready-to-run problem with bounds around the estimate.
FitProblem initial_ring_problem(const ScanData &scan);
FitProblem initial_fp_problem(const ScanData &scan, const FPCavitySpec &device);

FitResult fit_ring_model(const ScanData &scan, const FitProblem &problem);
FitResult fit_fp_model(const ScanData &scan, const FitProblem &problem);

// Model curves for fitted or hand-written parameter sets. f_offset and
// f_anchor are absolute frequencies of one comb mode.
std::vector<double> ring_model_rates(std::span<const double> frequencies, double gamma0, double q, double g, double fsr,
                                     double f_offset, double margin_fsr = kModeMarginFsr);
std::vector<double> fp_model_rates(std::span<const double> frequencies, const FPCavitySpec &device, double gamma0,
                                   double g_scale, double intrinsic_q, double fsr, double f_anchor,
                                   double margin_fsr = kModeMarginFsr);
std::vector<double> predict(const FitResult &result, const FitProblem &problem, std::span<const double> frequencies);

// --- TLS-limited quality factor ---

// 1/Q(n) = (1/Q_tls) (1 + n/n_c)^-beta + 1/Q_other
double tls_quality_factor(double quanta, double q_tls, double n_c, double beta, double q_other);

// Needs >= 4 points; flags spans under two decades.
FitResult tls_q_fit(std::span<const double> quanta, std::span<const double> quality_factors,
                    const LmOptions &options = {});

} // namespace cqad

#endif // CQAD_ESTIMATION_HPP
