#ifndef CQAD_CLI_HPP
#define CQAD_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace cqad
{

enum ExitCode : int
{
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitNumeric = 3
};

// Runs one subcommand (spectrum, modes, scan, decay, fit, report).
// `args` excludes the program name. Data goes to `out` unless --out names a
// file; diagnostics go to `err`.
int run_command(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace cqad

#endif // CQAD_CLI_HPP
