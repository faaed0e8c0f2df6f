#include "cqad/cli.hpp"

#include "cqad/cavity.hpp"
#include "cqad/config.hpp"
#include "cqad/csv.hpp"
#include "cqad/dynamics.hpp"
#include "cqad/estimation.hpp"
#include "cqad/wave.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

namespace cqad
{
namespace
{
struct CommonOptions
{
    std::string config;
    std::string from;
    std::string to;
    int points = 400;
    std::string out;
    std::optional<std::uint64_t> seed;
    double margin = kModeMarginFsr;
};

struct Options
{
    CommonOptions common;
    std::string qubit_freq;
    std::string t_max;
    std::string grid = "1kHz";
    double noise = 0.0;
    std::string model;
    std::string data;
    std::string init;
    std::string json;
};

class UsageError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

void add_common(CLI::App *cmd, CommonOptions &c)
{
    cmd->add_option("--config", c.config, "device configuration file");
    cmd->add_option("--from", c.from, "band start, e.g. 3.80GHz");
    cmd->add_option("--to", c.to, "band end");
    cmd->add_option("--points", c.points, "number of samples")->check(CLI::PositiveNumber);
    cmd->add_option("--out", c.out, "output file (default: standard output)");
    cmd->add_option("--seed", c.seed, "random seed for synthetic noise");
    cmd->add_option("--margin", c.margin, "modes kept beyond each band edge, in FSRs")->check(CLI::NonNegativeNumber);
}

DeviceConfig need_config(const CommonOptions &c)
{
    if (c.config.empty())
        throw UsageError("--config is required");
    return load_config(c.config);
}

double need_frequency(const std::string &text, const char *flag)
{
    if (text.empty())
        throw UsageError(std::string(flag) + " is required");
    return parse_quantity(text, Dimension::frequency);
}

std::vector<double> linspace(double lo, double hi, int n)
{
    if (n == 1)
        return {lo};
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

std::vector<double> band_grid(const CommonOptions &c)
{
    const double lo = need_frequency(c.from, "--from");
    const double hi = need_frequency(c.to, "--to");
    if (!(hi > lo) || lo <= 0.0)
        throw DomainError("band needs 0 < --from < --to");
    return linspace(lo, hi, c.points);
}

double cavity_fsr(const DeviceConfig &cfg)
{
    if (cfg.fp)
        return fsr(*cfg.fp);
    return fsr(cfg.require_ring());
}

// Mode comb covering [lo, hi] widened by `margin` FSRs on each side.
ModeSet device_modes(const DeviceConfig &cfg, double lo, double hi, double margin, double grid)
{
    const double spacing = cavity_fsr(cfg);
    const double a = std::max(lo - margin * spacing, 0.5 * spacing);
    const double b = hi + margin * spacing;
    if (cfg.fp)
    {
        FPModeOptions opts;
        opts.grid = grid;
        return fp_mode_set(*cfg.fp, a, b, opts);
    }
    return ring_mode_set(cfg.require_ring(), a, b);
}

// Writes to --out when given, else to the data stream.
template <class Writer>
void emit(const CommonOptions &c, std::ostream &out, Writer &&write)
{
    if (c.out.empty())
    {
        write(out);
        return;
    }
    std::ofstream file(c.out);
    if (!file)
        throw DomainError("cannot write '" + c.out + "'");
    write(file);
}

int cmd_spectrum(const Options &o, std::ostream &out)
{
    const DeviceConfig cfg = need_config(o.common);
    const FPCavitySpec &fp = cfg.require_fp();
    const auto f = band_grid(o.common);
    std::vector<double> r2l, r2r, rt, g;
    for (double x : f)
    {
        r2l.push_back(std::norm(mirror_reflectivity(x, fp.left_mirror, fp.material).r));
        r2r.push_back(std::norm(mirror_reflectivity(x, fp.right_mirror, fp.material).r));
        rt.push_back(r2l.back() * r2r.back());
        g.push_back(coupling_profile(x, fp.idt));
    }
    emit(o.common, out, [&](std::ostream &s) {
        write_csv(s, {"freq_hz", "r2_left", "r2_right", "retention", "g_hz"}, {f, r2l, r2r, rt, g});
    });
    return kExitOk;
}

int cmd_modes(const Options &o, std::ostream &out)
{
    const DeviceConfig cfg = need_config(o.common);
    const double lo = need_frequency(o.common.from, "--from");
    const double hi = need_frequency(o.common.to, "--to");
    const ModeSet set = device_modes(cfg, lo, hi, 0.0, parse_quantity(o.grid, Dimension::frequency));
    std::vector<double> f, kappa, g, ret, lossy;
    for (const auto &m : set.modes)
    {
        f.push_back(m.frequency);
        kappa.push_back(m.linewidth);
        g.push_back(m.coupling);
        ret.push_back(m.retention);
        lossy.push_back(m.lossy ? 1.0 : 0.0);
    }
    emit(o.common, out, [&](std::ostream &s) {
        write_csv(s, {"freq_hz", "kappa_hz", "g_hz", "retention", "lossy"}, {f, kappa, g, ret, lossy});
    });
    return kExitOk;
}

int cmd_scan(const Options &o, std::ostream &out)
{
    const DeviceConfig cfg = need_config(o.common);
    const QubitSpec &qubit = cfg.require_qubit();
    if (o.noise < 0.0)
        throw DomainError("--noise must be >= 0");
    if (o.noise > 0.0 && !o.common.seed)
        throw UsageError("--seed is required when --noise > 0");
    const auto f = band_grid(o.common);
    const ModeSet modes =
        device_modes(cfg, f.front(), f.back(), o.common.margin, parse_quantity(o.grid, Dimension::frequency));
    ScanData scan = decay_scan(f, modes, qubit.intrinsic_rate);
    if (o.noise > 0.0)
    {
        std::mt19937_64 rng(*o.common.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (double &r : scan.rates)
            r *= 1.0 + o.noise * normal(rng);
    }
    emit(o.common, out, [&](std::ostream &s) { write_scan(s, scan); });
    return kExitOk;
}

double qubit_frequency(const Options &o, const DeviceConfig &cfg)
{
    if (!o.qubit_freq.empty())
        return parse_quantity(o.qubit_freq, Dimension::frequency);
    return cfg.require_qubit().frequency;
}

int cmd_decay(const Options &o, std::ostream &out)
{
    const DeviceConfig cfg = need_config(o.common);
    const QubitSpec &qubit = cfg.require_qubit();
    const double wq = qubit_frequency(o, cfg);
    const ModeSet modes = device_modes(cfg, wq, wq, o.common.margin, parse_quantity(o.grid, Dimension::frequency));
    const double gamma_e = multimode_decay_rate(wq, modes, qubit.intrinsic_rate);
    const double t_max = o.t_max.empty() ? 5.0 * t1_from_rate(gamma_e) : parse_quantity(o.t_max, Dimension::time);
    if (!(t_max > 0.0))
        throw DomainError("--t-max must be > 0");
    const auto t = linspace(0.0, t_max, std::max(o.common.points, 2));
    const DecayCurve curve = evolve_single_excitation(wq, modes, qubit.intrinsic_rate, t);
    emit(o.common, out, [&](std::ostream &s) { write_decay(s, curve); });
    return kExitOk;
}

int cmd_report(const Options &o, std::ostream &out)
{
    const DeviceConfig cfg = need_config(o.common);
    const QubitSpec &qubit = cfg.require_qubit();
    const double wq = qubit_frequency(o, cfg);
    const ModeSet modes = device_modes(cfg, wq, wq, o.common.margin, parse_quantity(o.grid, Dimension::frequency));
    const double gamma_e = multimode_decay_rate(wq, modes, qubit.intrinsic_rate);
    const auto pulse = emitted_pulse_metrics(gamma_e, cfg.fp ? cfg.fp->material.group_velocity
                                                                : cfg.ring->material.group_velocity,
                                             RateConvention::ordinary_hz);
    emit(o.common, out, [&](std::ostream &s) {
        s << "qubit_freq_hz = " << format_number(wq) << '\n';
        s << "gamma0_hz = " << format_number(qubit.intrinsic_rate) << '\n';
        s << "gamma_e_hz = " << format_number(gamma_e) << '\n';
        s << "purcell_factor = " << format_number(purcell_factor(gamma_e, qubit.intrinsic_rate)) << '\n';
        s << "emission_probability = " << format_number(phonon_emission_probability(gamma_e, qubit.intrinsic_rate))
          << '\n';
        s << "t1_s = " << format_number(t1_from_rate(gamma_e)) << '\n';
        s << "pulse_duration_s = " << format_number(pulse.duration) << '\n';
        s << "pulse_length_m = " << format_number(pulse.spatial_length) << '\n';
        if (cfg.fp)
        {
            s << "retention = " << format_number(round_trip_retention(wq, *cfg.fp)) << '\n';
            s << "regime = " << to_string(classify_regime(wq, *cfg.fp)) << '\n';
        }
    });
    return kExitOk;
}

nlohmann::json to_json(const FitResult &r, const std::string &model)
{
    nlohmann::json doc;
    doc["model"] = model;
    doc["status"] = to_string(r.status);
    doc["iterations"] = r.iterations;
    doc["residual_norm"] = r.residual_norm;
    doc["initial_residual_norm"] = r.initial_residual_norm;
    doc["flags"] = r.flags;
    nlohmann::json params = nlohmann::json::object();
    for (const auto &[name, p] : r.parameters)
    {
        nlohmann::json entry;
        entry["value"] = p.value;
        entry["stderr"] = p.std_error ? nlohmann::json(*p.std_error) : nlohmann::json(nullptr);
        entry["fixed"] = p.fixed;
        entry["at_bound"] = p.at_bound;
        params[name] = entry;
    }
    doc["parameters"] = params;
    return doc;
}

void write_fit_report(std::ostream &s, const FitResult &r, const std::string &model)
{
    s << "model = " << model << '\n';
    s << "status = " << to_string(r.status) << '\n';
    s << "iterations = " << r.iterations << '\n';
    s << "residual_norm = " << format_number(r.residual_norm) << '\n';
    s << "initial_residual_norm = " << format_number(r.initial_residual_norm) << '\n';
    s << "flags = ";
    for (std::size_t k = 0; k < r.flags.size(); ++k)
        s << (k ? " " : "") << r.flags[k];
    s << "\n\nparameter,value,stderr,fixed,at_bound\n";
    for (const auto &[name, p] : r.parameters)
        s << name << ',' << format_number(p.value) << ',' << (p.std_error ? format_number(*p.std_error) : "nan") << ','
          << (p.fixed ? 1 : 0) << ',' << (p.at_bound ? 1 : 0) << '\n';
}

int cmd_fit(const Options &o, std::ostream &out)
{
    if (o.data.empty())
        throw UsageError("--data is required");
    const CsvTable table = load_csv(o.data);
    FitResult result;
    if (o.model == "ring" || o.model == "fp")
    {
        const ScanData scan = scan_from_csv(table);
        FitProblem problem;
        if (o.model == "ring")
            problem = initial_ring_problem(scan);
        else
            problem = initial_fp_problem(scan, need_config(o.common).require_fp());
        if (!o.init.empty())
            apply_fit_init(problem, load_fit_init(o.init));
        result = o.model == "ring" ? fit_ring_model(scan, problem) : fit_fp_model(scan, problem);
    }
    else
    {
        if (!o.init.empty())
            throw UsageError("--init applies to the ring and fp models only");
        if (o.model == "exponential")
            result = fit_exponential(decay_from_csv(table));
        else
        {
            const auto [n, q] = tls_from_csv(table);
            result = tls_q_fit(n, q);
        }
    }
    emit(o.common, out, [&](std::ostream &s) { write_fit_report(s, result, o.model); });
    if (!o.json.empty())
    {
        std::ofstream file(o.json);
        if (!file)
            throw DomainError("cannot write '" + o.json + "'");
        file << to_json(result, o.model).dump(2) << '\n';
    }
    return result.status == FitStatus::converged ? kExitOk : kExitNumeric;
}
} // namespace

int run_command(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"cQAD device simulator and fitter", "cqad"};
    app.require_subcommand(1);
    Options o;

    auto *spectrum = app.add_subcommand("spectrum", "mirror |r|^2 and IDT coupling over a band");
    auto *modes = app.add_subcommand("modes", "cavity mode table");
    auto *scan = app.add_subcommand("scan", "qubit decay rate versus frequency");
    auto *decay = app.add_subcommand("decay", "excited-state population versus time");
    auto *fit = app.add_subcommand("fit", "fit a scan, decay or TLS table");
    auto *report = app.add_subcommand("report", "Purcell factor, emission probability and pulse metrics");
    for (auto *cmd : {spectrum, modes, scan, decay, fit, report})
        add_common(cmd, o.common);
    for (auto *cmd : {modes, scan, decay, report})
        cmd->add_option("--grid", o.grid, "FP mode grid");
    scan->add_option("--noise", o.noise, "relative Gaussian noise on each rate");
    for (auto *cmd : {decay, report})
        cmd->add_option("--qubit-freq", o.qubit_freq, "qubit frequency (default: [qubit] frequency)");
    decay->add_option("--t-max", o.t_max, "end time (default: five decay times)");
    fit->add_option("--model", o.model, "ring, fp, exponential or tls")
        ->required()
        ->check(CLI::IsMember({"ring", "fp", "exponential", "tls"}));
    fit->add_option("--data", o.data, "input CSV")->required();
    fit->add_option("--init", o.init, "initial values, bounds and fixed parameters");
    fit->add_option("--json", o.json, "machine-readable result file");

    try
    {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    }
    catch (const CLI::CallForHelp &e)
    {
        out << app.help();
        return kExitOk;
    }
    catch (const CLI::ParseError &e)
    {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try
    {
        if (spectrum->parsed())
            return cmd_spectrum(o, out);
        if (modes->parsed())
            return cmd_modes(o, out);
        if (scan->parsed())
            return cmd_scan(o, out);
        if (decay->parsed())
            return cmd_decay(o, out);
        if (fit->parsed())
            return cmd_fit(o, out);
        return cmd_report(o, out);
    }
    catch (const UsageError &e)
    {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    catch (const DomainError &e)
    {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    catch (const std::exception &e)
    {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumeric;
    }
}

} // namespace cqad
