#include "cqad/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace cqad
{
namespace
{
std::string trimmed(const std::string &s)
{
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string &line)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true)
    {
        const auto comma = line.find(',', pos);
        out.push_back(trimmed(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    return out;
}
} // namespace

bool CsvTable::has(const std::string &name) const
{
    return std::find(header.begin(), header.end(), name) != header.end();
}

std::vector<double> CsvTable::column(const std::string &name) const
{
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw DomainError("CSV lacks column '" + name + "'");
    const auto k = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto &r : rows)
        out.push_back(r[k]);
    return out;
}

CsvTable read_csv(std::istream &in)
{
    CsvTable t;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        if (trimmed(line).empty())
            continue;
        auto fields = split(line);
        if (t.header.empty())
        {
            for (const auto &f : fields)
                if (f.empty())
                    throw DomainError("CSV line " + std::to_string(line_no) + ": empty column name");
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw DomainError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                              " fields, found " + std::to_string(fields.size()));
        std::vector<double> row(fields.size());
        for (std::size_t k = 0; k < fields.size(); ++k)
        {
            const auto &f = fields[k];
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row[k]);
            if (f.empty() || ec != std::errc() || ptr != f.data() + f.size())
                throw DomainError("CSV line " + std::to_string(line_no) + ", column " + std::to_string(k + 1) +
                                  ": not a number: '" + f + "'");
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty())
        throw DomainError("CSV input is empty");
    return t;
}

CsvTable load_csv(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw DomainError("cannot read CSV file '" + path + "'");
    return read_csv(in);
}

std::string format_number(double value)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_csv(std::ostream &out, const std::vector<std::string> &header,
               const std::vector<std::vector<double>> &columns)
{
    if (header.size() != columns.size())
        throw DomainError("write_csv: header and column counts differ");
    for (std::size_t k = 0; k < header.size(); ++k)
        out << (k ? "," : "") << header[k];
    out << '\n';
    const std::size_t n = columns.empty() ? 0 : columns.front().size();
    for (const auto &c : columns)
        if (c.size() != n)
            throw DomainError("write_csv: columns differ in length");
    for (std::size_t i = 0; i < n; ++i)
    {
        for (std::size_t k = 0; k < columns.size(); ++k)
            out << (k ? "," : "") << format_number(columns[k][i]);
        out << '\n';
    }
}

void write_scan(std::ostream &out, const ScanData &scan)
{
    if (scan.uncertainties)
        write_csv(out, {"freq_hz", "gamma_e_hz", "sigma_hz"}, {scan.frequencies, scan.rates, *scan.uncertainties});
    else
        write_csv(out, {"freq_hz", "gamma_e_hz"}, {scan.frequencies, scan.rates});
}

ScanData scan_from_csv(const CsvTable &table)
{
    ScanData scan;
    scan.frequencies = table.column("freq_hz");
    scan.rates = table.column("gamma_e_hz");
    if (table.has("sigma_hz"))
        scan.uncertainties = table.column("sigma_hz");
    require_valid(scan);
    return scan;
}

void write_decay(std::ostream &out, const DecayCurve &curve)
{
    write_csv(out, {"time_s", "p_e"}, {curve.times, curve.populations});
}

DecayCurve decay_from_csv(const CsvTable &table)
{
    DecayCurve curve;
    curve.times = table.column("time_s");
    curve.populations = table.column("p_e");
    require_valid(curve);
    return curve;
}

std::pair<std::vector<double>, std::vector<double>> tls_from_csv(const CsvTable &table)
{
    return {table.column("n_quanta"), table.column("q")};
}

} // namespace cqad
