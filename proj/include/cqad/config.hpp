#ifndef CQAD_CONFIG_HPP
#define CQAD_CONFIG_HPP

#include "cqad/estimation.hpp"
#include "cqad/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace cqad
{

// Malformed text. line and column are 1-based; 0 when not tied to a position.
class ConfigError : public DomainError
{
public:
    ConfigError(const std::string &message, int line = 0, int column = 0, std::string section = {});
    int line() const { return line_; }
    int column() const { return column_; }
    const std::string &section() const { return section_; }

private:
    int line_;
    int column_;
    std::string section_;
};

enum class Dimension
{
    frequency,     // Hz
    length,        // m
    time,          // s
    velocity,      // m/s
    dimensionless, // no suffix allowed
    any            // any known suffix, converted to SI
};

// "430nm" -> 4.3e-7, "6.4 MHz" -> 6.4e6. A bare number is taken as SI.
// Throws ConfigError with the offending column (1-based within `text`).
double parse_quantity(std::string_view text, Dimension dimension);

enum class CavityKind
{
    fp,
    ring
};

struct DeviceConfig
{
    std::optional<CavityKind> kind;
    std::optional<FPCavitySpec> fp;
    std::optional<RingCavitySpec> ring;
    std::optional<QubitSpec> qubit;

    // Throw ConfigError naming the missing section.
    const FPCavitySpec &require_fp() const;
    const RingCavitySpec &require_ring() const;
    const QubitSpec &require_qubit() const;

    bool operator==(const DeviceConfig &) const = default;
};

// Sections [material], [dbr.left], [dbr.right], [idt], [cavity], [qubit].
// [cavity] kind = fp needs material, both mirrors and the IDT;
// kind = ring needs material and takes circumference or fsr.
// Comments start with '#' or ';'. Unknown sections and keys are errors.
DeviceConfig parse_config(std::string_view text);
DeviceConfig load_config(const std::string &path);

// Text that parse_config maps back to an equal DeviceConfig.
std::string to_config_text(const DeviceConfig &config);

// Fit set-up file:
//   [init]    name = value
//   [bounds]  name = lo, hi
//   [fixed]   name = value
//   [options] loss = least_squares | huber, huber_delta, starts, start_jitter
struct FitInit
{
    std::map<std::string, double> init;
    std::map<std::string, std::pair<double, double>> bounds;
    std::map<std::string, double> fixed;
    std::optional<LossFunction> loss;
    std::optional<int> starts;
    std::optional<double> start_jitter;
};

FitInit parse_fit_init(std::string_view text);
FitInit load_fit_init(const std::string &path);

// Overrides the problem with the file contents. Unknown parameter names are errors.
void apply_fit_init(FitProblem &problem, const FitInit &init);

} // namespace cqad

#endif // CQAD_CONFIG_HPP
