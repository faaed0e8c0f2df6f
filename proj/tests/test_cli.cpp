#include <catch_amalgamated.hpp>

#include "cqad/cli.hpp"
#include "cqad/csv.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

using namespace cqad;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;
namespace fs = std::filesystem;

namespace
{
const char *kRing = R"([material]
phase_velocity = 4050
group_velocity = 4050

[cavity]
kind = ring
fsr = 7.1MHz
uniform_q = 1700
uniform_coupling = 0.36MHz
reference_frequency = 3.867GHz

[qubit]
frequency = 3.867GHz
intrinsic_rate = 14.7kHz
)";

const char *kFp = R"([material]
phase_velocity = 4730
group_velocity = 3840

[dbr.left]
period = 430nm
duty_cycle = 0.5
strip_count = 100
velocity_contrast = 0.07

[dbr.right]
period = 430nm
duty_cycle = 0.5
strip_count = 100
velocity_contrast = 0.07

[idt]
finger_pairs = 20
period = 782nm
center_frequency = 5.35GHz
peak_coupling = 2.1MHz

[cavity]
kind = fp
mirror_separation = 300um
intrinsic_q = 2200

[qubit]
frequency = 5.25GHz
intrinsic_rate = 33.157kHz
)";

struct Run
{
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string> &args)
{
    std::ostringstream out, err;
    const int code = run_command(args, out, err);
    return {code, out.str(), err.str()};
}

class TempDir
{
public:
    TempDir()
    {
        static int counter = 0;
        path_ = fs::temp_directory_path() / ("cqad_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }

    std::string file(const std::string &name, const std::string &content = {}) const
    {
        const auto p = path_ / name;
        if (!content.empty())
            std::ofstream(p) << content;
        return p.string();
    }

private:
    fs::path path_;
};

std::map<std::string, std::string> key_values(const std::string &text)
{
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
    {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos)
            kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return kv;
}

CsvTable table(const std::string &text)
{
    std::istringstream in(text);
    return read_csv(in);
}

// "parameter,value,stderr,..." rows from a fit report.
std::map<std::string, std::vector<std::string>> fit_rows(const std::string &text)
{
    std::map<std::string, std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    bool inside = false;
    while (std::getline(in, line))
    {
        if (line.rfind("parameter,", 0) == 0)
        {
            inside = true;
            continue;
        }
        if (!inside || line.empty())
            continue;
        std::vector<std::string> cells;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ','))
            cells.push_back(cell);
        rows[cells.front()] = cells;
    }
    return rows;
}
} // namespace

TEST_CASE("scan writes one row per point")
{
    TempDir dir;
    const auto cfg = dir.file("ring.cfg", kRing);
    const auto r = run({"scan", "--config", cfg, "--from", "3.80GHz", "--to", "3.95GHz", "--points", "600"});
    REQUIRE(r.code == kExitOk);
    const auto t = table(r.out);
    CHECK(t.header == std::vector<std::string>{"freq_hz", "gamma_e_hz"});
    CHECK(t.rows.size() == 600);
    CHECK(t.rows.front()[0] == 3.80e9);
    CHECK(t.rows.back()[0] == 3.95e9);
}

TEST_CASE("report on resonance")
{
    TempDir dir;
    const auto cfg = dir.file("ring.cfg", kRing);
    const auto r = run({"report", "--config", cfg, "--qubit-freq", "3.867GHz"});
    REQUIRE(r.code == kExitOk);
    const auto kv = key_values(r.out);
    const double fp = std::stod(kv.at("purcell_factor"));
    CHECK(fp >= 15.0);
    CHECK(fp <= 21.0);
    CHECK(std::abs(std::stod(kv.at("emission_probability")) - 0.947) < 0.005);
    CHECK(kv.count("pulse_duration_s") == 1);
    CHECK(kv.count("t1_s") == 1);
}

TEST_CASE("report on the FP device names the regime")
{
    TempDir dir;
    const auto cfg = dir.file("fp.cfg", kFp);
    const auto r = run({"report", "--config", cfg});
    REQUIRE(r.code == kExitOk);
    CHECK(key_values(r.out).at("regime") == "cqad");
    const auto lossy = run({"report", "--config", cfg, "--qubit-freq", "5.00GHz"});
    CHECK(key_values(lossy.out).at("regime") == "lossy_cavity");
}

TEST_CASE("spectrum, modes and decay tables")
{
    TempDir dir;
    const auto fp = dir.file("fp.cfg", kFp);
    const auto s = run({"spectrum", "--config", fp, "--from", "5.1GHz", "--to", "5.4GHz", "--points", "31"});
    REQUIRE(s.code == kExitOk);
    const auto st = table(s.out);
    CHECK(st.rows.size() == 31);
    for (double r2 : st.column("r2_left"))
    {
        CHECK(r2 >= 0.0);
        CHECK(r2 <= 1.0);
    }

    const auto m = run({"modes", "--config", fp, "--from", "5.2GHz", "--to", "5.3GHz"});
    REQUIRE(m.code == kExitOk);
    const auto mt = table(m.out);
    CHECK(mt.rows.size() >= 15);
    CHECK(mt.has("kappa_hz"));

    const auto ring = dir.file("ring.cfg", kRing);
    const auto d = run({"decay", "--config", ring, "--points", "50"});
    REQUIRE(d.code == kExitOk);
    const auto dt = table(d.out);
    CHECK(dt.header == std::vector<std::string>{"time_s", "p_e"});
    CHECK(dt.rows.size() == 50);
    CHECK(dt.rows.front()[1] == 1.0);

    // Spectrum needs mirrors.
    CHECK(run({"spectrum", "--config", ring, "--from", "3.8GHz", "--to", "3.9GHz"}).code == kExitData);
}

TEST_CASE("scan to fit round trip reproduces the generator")
{
    TempDir dir;
    const auto cfg = dir.file("ring.cfg", kRing);
    const auto data = dir.file("scan.csv");
    const auto json = dir.file("fit.json");
    const auto init = dir.file("init.cfg", "[init]\nq = 1600\n\n[bounds]\nq = 800, 4000\n");
    REQUIRE(run({"scan", "--config", cfg, "--from", "3.80GHz", "--to", "3.95GHz", "--points", "400", "--noise", "0.01",
                 "--seed", "42", "--out", data})
                .code == kExitOk);

    const auto r = run({"fit", "--model", "ring", "--data", data, "--init", init, "--json", json});
    REQUIRE(r.code == kExitOk);
    const auto kv = key_values(r.out);
    CHECK(kv.at("status") == "converged");
    const auto rows = fit_rows(r.out);
    for (const char *name : {"gamma0", "q", "g", "fsr"})
    {
        REQUIRE(rows.count(name) == 1);
        CHECK_FALSE(rows.at(name)[2].empty());
    }
    CHECK_THAT(std::stod(rows.at("gamma0")[1]), WithinRel(14.7e3, 0.05));
    CHECK_THAT(std::stod(rows.at("q")[1]), WithinRel(1.7e3, 0.05));
    CHECK_THAT(std::stod(rows.at("g")[1]), WithinRel(0.36e6, 0.05));
    CHECK_THAT(std::stod(rows.at("fsr")[1]), WithinRel(7.1e6, 0.05));

    std::ifstream in(json);
    const auto doc = nlohmann::json::parse(in);
    CHECK(doc.at("model") == "ring");
    CHECK(doc.at("status") == "converged");
    CHECK_THAT(doc.at("parameters").at("fsr").at("value").get<double>(), WithinRel(7.1e6, 0.05));
    CHECK(doc.at("parameters").at("fsr").at("stderr").is_number());
}

TEST_CASE("decay fit from CSV")
{
    TempDir dir;
    const auto cfg = dir.file("ring.cfg", kRing);
    const auto data = dir.file("decay.csv");
    REQUIRE(run({"decay", "--config", cfg, "--points", "200", "--out", data}).code == kExitOk);
    const auto r = run({"fit", "--model", "exponential", "--data", data});
    REQUIRE(r.code == kExitOk);
    const auto rows = fit_rows(r.out);
    // On resonance: gamma_e ~ 19 gamma0, T1 ~ 0.57 us.
    const double t1 = std::stod(rows.at("t1")[1]);
    CHECK(t1 > 0.45e-6);
    CHECK(t1 < 0.75e-6);
}

TEST_CASE("noisy scans need a seed and are reproducible")
{
    TempDir dir;
    const auto cfg = dir.file("ring.cfg", kRing);
    const std::vector<std::string> base{"scan", "--config", cfg, "--from", "3.8GHz", "--to", "3.9GHz", "--points", "100",
                                        "--noise", "0.01"};
    const auto missing = run(base);
    CHECK(missing.code == kExitUsage);
    CHECK_THAT(missing.err, ContainsSubstring("--seed"));

    auto seeded = base;
    seeded.insert(seeded.end(), {"--seed", "7"});
    const auto a = run(seeded);
    const auto b = run(seeded);
    REQUIRE(a.code == kExitOk);
    CHECK(a.out == b.out);
    seeded.back() = "8";
    CHECK(run(seeded).out != a.out);
}

TEST_CASE("exit codes")
{
    TempDir dir;
    const auto cfg = dir.file("ring.cfg", kRing);
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"transmogrify"}).code == kExitUsage);
    CHECK(run({"scan", "--config", cfg, "--from", "3.8GHz"}).code == kExitUsage);
    CHECK(run({"scan", "--config", cfg, "--from", "3.8GHz", "--to", "3.9GHz", "--points", "abc"}).code == kExitUsage);
    CHECK(run({"fit", "--data", cfg}).code == kExitUsage);
    CHECK(run({"scan", "--help"}).code == kExitOk);

    std::string broken = kRing;
    broken.replace(broken.find("4050"), 4, "fast");
    const auto r = run({"report", "--config", dir.file("bad.cfg", broken)});
    CHECK(r.code == kExitData);
    CHECK_THAT(r.err, ContainsSubstring("line 2"));
    CHECK(run({"report", "--config", dir.file("missing.cfg")}).code == kExitData);

    const auto no_qubit = dir.file("nq.cfg", std::string(kRing).substr(0, std::string(kRing).find("[qubit]")));
    const auto nq = run({"scan", "--config", no_qubit, "--from", "3.8GHz", "--to", "3.9GHz"});
    CHECK(nq.code == kExitData);
    CHECK_THAT(nq.err, ContainsSubstring("[qubit]"));

    // A flat decay curve cannot be fitted.
    std::string flat = "time_s,p_e\n";
    for (int i = 0; i < 20; ++i)
        flat += format_number(i * 1e-7) + ",0.5\n";
    const auto f = run({"fit", "--model", "exponential", "--data", dir.file("flat.csv", flat)});
    CHECK(f.code == kExitNumeric);
    CHECK(key_values(f.out).at("status") == "singular");
}
