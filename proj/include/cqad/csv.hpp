#ifndef CQAD_CSV_HPP
#define CQAD_CSV_HPP

#include "cqad/types.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace cqad
{

// Numeric CSV: one header line of snake_case names, then rows of numbers.
struct CsvTable
{
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    bool has(const std::string &name) const;
    // Throws DomainError naming the missing column.
    std::vector<double> column(const std::string &name) const;
};

// Errors carry the 1-based line number.
CsvTable read_csv(std::istream &in);
CsvTable load_csv(const std::string &path);

// 17 significant digits, so values survive a text round trip bit for bit.
std::string format_number(double value);

void write_csv(std::ostream &out, const std::vector<std::string> &header,
               const std::vector<std::vector<double>> &columns);

// Columns freq_hz, gamma_e_hz and, when present, sigma_hz.
void write_scan(std::ostream &out, const ScanData &scan);
ScanData scan_from_csv(const CsvTable &table);

// Columns time_s, p_e.
void write_decay(std::ostream &out, const DecayCurve &curve);
DecayCurve decay_from_csv(const CsvTable &table);

// Columns n_quanta, q.
std::pair<std::vector<double>, std::vector<double>> tls_from_csv(const CsvTable &table);

} // namespace cqad

#endif // CQAD_CSV_HPP
