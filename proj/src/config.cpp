#include "cqad/config.hpp"

#include "cqad/cavity.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace cqad
{
namespace
{
struct Unit
{
    std::string_view suffix;
    double scale;
    Dimension dimension;
};

constexpr std::array kUnits = {
    Unit{"Hz", 1.0, Dimension::frequency},   Unit{"kHz", 1e3, Dimension::frequency},
    Unit{"MHz", 1e6, Dimension::frequency},  Unit{"GHz", 1e9, Dimension::frequency},
    Unit{"nm", 1e-9, Dimension::length},     Unit{"um", 1e-6, Dimension::length},
    Unit{"mm", 1e-3, Dimension::length},     Unit{"m", 1.0, Dimension::length},
    Unit{"ns", 1e-9, Dimension::time},       Unit{"us", 1e-6, Dimension::time},
    Unit{"ms", 1e-3, Dimension::time},       Unit{"s", 1.0, Dimension::time},
    Unit{"m/s", 1.0, Dimension::velocity},   Unit{"km/s", 1e3, Dimension::velocity},
};

const char *dimension_name(Dimension d)
{
    switch (d)
    {
    case Dimension::frequency:
        return "a frequency";
    case Dimension::length:
        return "a length";
    case Dimension::time:
        return "a time";
    case Dimension::velocity:
        return "a velocity";
    case Dimension::dimensionless:
        return "a plain number";
    case Dimension::any:
        return "a quantity";
    }
    return "a quantity";
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string_view trim(std::string_view s, std::size_t *lead = nullptr)
{
    std::size_t a = 0, b = s.size();
    while (a < b && is_space(s[a]))
        ++a;
    while (b > a && is_space(s[b - 1]))
        --b;
    if (lead)
        *lead = a;
    return s.substr(a, b - a);
}

// parse_quantity with errors placed at (line, col0 + offset).
double quantity_at(std::string_view raw, Dimension dim, int line, int col0)
{
    std::size_t lead = 0;
    const std::string_view text = trim(raw, &lead);
    const int col = col0 + static_cast<int>(lead);
    if (text.empty())
        throw ConfigError("expected " + std::string(dimension_name(dim)) + ", found nothing", line, col);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || !std::isfinite(value))
        throw ConfigError("expected a number, found '" + std::string(text) + "'", line, col);
    const auto used = static_cast<std::size_t>(ptr - text.data());
    std::size_t skip = 0;
    const std::string_view suffix = trim(text.substr(used), &skip);
    if (suffix.empty())
        return value;
    const int suffix_col = col + static_cast<int>(used + skip);
    const auto unit = std::find_if(kUnits.begin(), kUnits.end(), [&](const Unit &u) { return u.suffix == suffix; });
    if (unit == kUnits.end())
        throw ConfigError("unknown unit '" + std::string(suffix) + "'", line, suffix_col);
    if (dim != Dimension::any && unit->dimension != dim)
        throw ConfigError("unit '" + std::string(suffix) + "' is not " + dimension_name(dim), line, suffix_col);
    return value * unit->scale;
}

int integer_at(std::string_view raw, int line, int col0)
{
    std::size_t lead = 0;
    const std::string_view text = trim(raw, &lead);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError("expected an integer, found '" + std::string(text) + "'", line, col0 + static_cast<int>(lead));
    return value;
}

struct Entry
{
    std::string key;
    std::string value;
    int line;
    int key_col;
    int value_col;
};

struct Section
{
    std::string name;
    int line;
    std::vector<Entry> entries;
};

std::vector<Section> parse_sections(std::string_view text)
{
    std::vector<Section> out;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size())
    {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        // Strip comments; values never contain '#' or ';'.
        if (const auto c = line.find_first_of("#;"); c != std::string_view::npos)
            line = line.substr(0, c);
        std::size_t lead = 0;
        const std::string_view body = trim(line, &lead);
        if (body.empty())
        {
            if (end == text.size())
                break;
            continue;
        }
        const int col = static_cast<int>(lead) + 1;
        if (body.front() == '[')
        {
            if (body.back() != ']')
                throw ConfigError("section header lacks ']'", line_no, col + static_cast<int>(body.size()));
            const std::string name(trim(body.substr(1, body.size() - 2)));
            if (name.empty())
                throw ConfigError("empty section name", line_no, col);
            for (const auto &s : out)
                if (s.name == name)
                    throw ConfigError("duplicate section [" + name + "]", line_no, col, name);
            out.push_back({name, line_no, {}});
        }
        else
        {
            const auto eq = body.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError("expected 'key = value'", line_no, col);
            if (out.empty())
                throw ConfigError("key outside of any section", line_no, col);
            std::size_t key_lead = 0;
            const std::string key(trim(body.substr(0, eq), &key_lead));
            if (key.empty())
                throw ConfigError("missing key before '='", line_no, col);
            auto &section = out.back();
            for (const auto &e : section.entries)
                if (e.key == key)
                    throw ConfigError("duplicate key '" + key + "'", line_no, col + static_cast<int>(key_lead),
                                      section.name);
            section.entries.push_back({key, std::string(body.substr(eq + 1)), line_no,
                                       col + static_cast<int>(key_lead), col + static_cast<int>(eq) + 1});
        }
        if (end == text.size())
            break;
    }
    return out;
}

// Reads the keys of one section through a table of handlers; rejects unknown keys.
class SectionReader
{
public:
    explicit SectionReader(const Section &s) : section_(s) {}

    template <class Handler>
    void on(const std::string &key, Handler handler)
    {
        handlers_.emplace_back(key, std::function<void(const Entry &)>(handler));
    }

    void quantity(const std::string &key, Dimension dim, double &target)
    {
        on(key, [&target, dim](const Entry &e) { target = quantity_at(e.value, dim, e.line, e.value_col); });
    }

    void optional_quantity(const std::string &key, Dimension dim, std::optional<double> &target)
    {
        on(key, [&target, dim](const Entry &e) { target = quantity_at(e.value, dim, e.line, e.value_col); });
    }

    void integer(const std::string &key, int &target)
    {
        on(key, [&target](const Entry &e) { target = integer_at(e.value, e.line, e.value_col); });
    }

    void run(std::initializer_list<const char *> required = {})
    {
        for (const auto &e : section_.entries)
        {
            const auto h = std::find_if(handlers_.begin(), handlers_.end(), [&](const auto &p) { return p.first == e.key; });
            if (h == handlers_.end())
                throw ConfigError("unknown key '" + e.key + "' in [" + section_.name + "]", e.line, e.key_col,
                                  section_.name);
            h->second(e);
        }
        for (const char *key : required)
            if (!has(key))
                throw ConfigError("[" + section_.name + "] is missing '" + key + "'", section_.line, 1, section_.name);
    }

    bool has(const std::string &key) const
    {
        return std::any_of(section_.entries.begin(), section_.entries.end(),
                           [&](const Entry &e) { return e.key == key; });
    }

private:
    const Section &section_;
    std::vector<std::pair<std::string, std::function<void(const Entry &)>>> handlers_;
};

const Section *find_section(const std::vector<Section> &sections, const std::string &name)
{
    for (const auto &s : sections)
        if (s.name == name)
            return &s;
    return nullptr;
}

const Section &need_section(const std::vector<Section> &sections, const std::string &name, const std::string &why)
{
    if (const Section *s = find_section(sections, name))
        return *s;
    throw ConfigError("missing section [" + name + "] required by " + why, 0, 0, name);
}

MaterialParams read_material(const Section &s)
{
    MaterialParams m;
    SectionReader r(s);
    r.quantity("phase_velocity", Dimension::velocity, m.phase_velocity);
    r.quantity("group_velocity", Dimension::velocity, m.group_velocity);
    r.quantity("substrate_velocity", Dimension::velocity, m.substrate_velocity);
    r.run({"phase_velocity", "group_velocity"});
    return m;
}

DBRSpec read_dbr(const Section &s)
{
    DBRSpec d;
    SectionReader r(s);
    r.quantity("period", Dimension::length, d.period);
    r.quantity("duty_cycle", Dimension::dimensionless, d.duty_cycle);
    r.integer("strip_count", d.strip_count);
    r.quantity("velocity_contrast", Dimension::dimensionless, d.velocity_contrast);
    r.quantity("per_cell_amplitude_loss", Dimension::dimensionless, d.per_cell_amplitude_loss);
    r.run({"period", "strip_count", "velocity_contrast"});
    return d;
}

IDTSpec read_idt(const Section &s, const MaterialParams &material)
{
    IDTSpec idt;
    std::optional<double> f0;
    SectionReader r(s);
    r.integer("finger_pairs", idt.finger_pairs);
    r.quantity("period", Dimension::length, idt.period);
    r.optional_quantity("center_frequency", Dimension::frequency, f0);
    r.quantity("peak_coupling", Dimension::frequency, idt.peak_coupling);
    r.run({"finger_pairs", "period", "peak_coupling"});
    idt.center_frequency = f0 ? *f0 : IDTSpec::synchronous_frequency(material.phase_velocity, idt.period);
    return idt;
}

std::string section_context(const std::string &kind) { return "[cavity] kind = " + kind; }

void require_valid_config(const Violations &v, const std::string &prefix)
{
    if (v.empty())
        return;
    Violations scoped = v;
    for (auto &x : scoped)
        x.field = prefix + "." + x.field;
    throw ConfigError("invalid configuration: " + describe(scoped));
}

void append(std::string &out, const char *key, double value)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s = %.17g\n", key, value);
    out += buf;
}

void append(std::string &out, const char *key, int value) { out += std::string(key) + " = " + std::to_string(value) + "\n"; }

void append_material(std::string &out, const MaterialParams &m)
{
    out += "[material]\n";
    append(out, "phase_velocity", m.phase_velocity);
    append(out, "group_velocity", m.group_velocity);
    append(out, "substrate_velocity", m.substrate_velocity);
}

void append_dbr(std::string &out, const char *name, const DBRSpec &d)
{
    out += std::string("\n[") + name + "]\n";
    append(out, "period", d.period);
    append(out, "duty_cycle", d.duty_cycle);
    append(out, "strip_count", d.strip_count);
    append(out, "velocity_contrast", d.velocity_contrast);
    append(out, "per_cell_amplitude_loss", d.per_cell_amplitude_loss);
}
} // namespace

ConfigError::ConfigError(const std::string &message, int line, int column, std::string section)
    : DomainError(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message
                           : message),
      line_(line), column_(column), section_(std::move(section))
{
}

double parse_quantity(std::string_view text, Dimension dimension) { return quantity_at(text, dimension, 0, 1); }

const FPCavitySpec &DeviceConfig::require_fp() const
{
    if (!fp)
        throw ConfigError("missing section [cavity] with kind = fp", 0, 0, "cavity");
    return *fp;
}

const RingCavitySpec &DeviceConfig::require_ring() const
{
    if (!ring)
        throw ConfigError("missing section [cavity] with kind = ring", 0, 0, "cavity");
    return *ring;
}

const QubitSpec &DeviceConfig::require_qubit() const
{
    if (!qubit)
        throw ConfigError("missing section [qubit]", 0, 0, "qubit");
    return *qubit;
}

DeviceConfig parse_config(std::string_view text)
{
    const auto sections = parse_sections(text);
    static const char *kKnown[] = {"material", "dbr.left", "dbr.right", "idt", "cavity", "qubit"};
    for (const auto &s : sections)
        if (std::find_if(std::begin(kKnown), std::end(kKnown), [&](const char *k) { return s.name == k; }) ==
            std::end(kKnown))
            throw ConfigError("unknown section [" + s.name + "]", s.line, 1, s.name);

    DeviceConfig cfg;
    if (const Section *q = find_section(sections, "qubit"))
    {
        QubitSpec qubit;
        SectionReader r(*q);
        r.quantity("frequency", Dimension::frequency, qubit.frequency);
        r.quantity("intrinsic_rate", Dimension::frequency, qubit.intrinsic_rate);
        r.run({"frequency", "intrinsic_rate"});
        require_valid_config(validate(qubit), "qubit");
        cfg.qubit = qubit;
    }

    const Section *cavity = find_section(sections, "cavity");
    if (!cavity)
    {
        for (const char *name : {"material", "dbr.left", "dbr.right", "idt"})
            if (const Section *s = find_section(sections, name))
                throw ConfigError("section [" + std::string(name) + "] needs a [cavity] section", s->line, 1, name);
        return cfg;
    }

    std::string kind;
    for (const auto &e : cavity->entries)
        if (e.key == "kind")
            kind = std::string(trim(e.value));
    if (kind.size() >= 2 && kind.front() == '"' && kind.back() == '"')
        kind = kind.substr(1, kind.size() - 2);
    if (kind.empty())
        throw ConfigError("[cavity] is missing 'kind'", cavity->line, 1, "cavity");

    const MaterialParams material = read_material(need_section(sections, "material", section_context(kind)));

    if (kind == "fp")
    {
        FPCavitySpec fp;
        fp.material = material;
        fp.left_mirror = read_dbr(need_section(sections, "dbr.left", section_context(kind)));
        fp.right_mirror = read_dbr(need_section(sections, "dbr.right", section_context(kind)));
        fp.idt = read_idt(need_section(sections, "idt", section_context(kind)), material);
        SectionReader r(*cavity);
        r.on("kind", [](const Entry &) {});
        r.quantity("mirror_separation", Dimension::length, fp.mirror_separation);
        r.optional_quantity("intrinsic_q", Dimension::dimensionless, fp.intrinsic_q);
        r.optional_quantity("anchor_frequency", Dimension::frequency, fp.anchor_frequency);
        r.run({"mirror_separation"});
        require_valid_config(validate(fp), "cavity");
        cfg.kind = CavityKind::fp;
        cfg.fp = fp;
    }
    else if (kind == "ring")
    {
        for (const char *name : {"dbr.left", "dbr.right", "idt"})
            if (const Section *s = find_section(sections, name))
                throw ConfigError("section [" + std::string(name) + "] is not used by a ring cavity", s->line, 1, name);
        RingCavitySpec ring;
        ring.material = material;
        std::optional<double> circumference, spacing;
        SectionReader r(*cavity);
        r.on("kind", [](const Entry &) {});
        r.optional_quantity("circumference", Dimension::length, circumference);
        r.optional_quantity("fsr", Dimension::frequency, spacing);
        r.quantity("uniform_q", Dimension::dimensionless, ring.uniform_q);
        r.quantity("uniform_coupling", Dimension::frequency, ring.uniform_coupling);
        r.quantity("reference_frequency", Dimension::frequency, ring.reference_frequency);
        r.run({"uniform_q", "uniform_coupling", "reference_frequency"});
        if (circumference.has_value() == spacing.has_value())
            throw ConfigError("[cavity] needs exactly one of 'circumference' and 'fsr'", cavity->line, 1, "cavity");
        if (spacing && !(*spacing > 0.0))
            throw ConfigError("invalid configuration: cavity.fsr: must be > 0");
        ring.circumference = circumference ? *circumference : material.group_velocity / *spacing;
        require_valid_config(validate(ring), "cavity");
        cfg.kind = CavityKind::ring;
        cfg.ring = ring;
    }
    else
    {
        int line = cavity->line;
        for (const auto &e : cavity->entries)
            if (e.key == "kind")
                line = e.line;
        throw ConfigError("cavity kind must be 'fp' or 'ring', found '" + kind + "'", line, 1, "cavity");
    }
    return cfg;
}

DeviceConfig load_config(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string to_config_text(const DeviceConfig &config)
{
    std::string out;
    if (config.fp)
    {
        const auto &fp = *config.fp;
        append_material(out, fp.material);
        append_dbr(out, "dbr.left", fp.left_mirror);
        append_dbr(out, "dbr.right", fp.right_mirror);
        out += "\n[idt]\n";
        append(out, "finger_pairs", fp.idt.finger_pairs);
        append(out, "period", fp.idt.period);
        append(out, "center_frequency", fp.idt.center_frequency);
        append(out, "peak_coupling", fp.idt.peak_coupling);
        out += "\n[cavity]\nkind = fp\n";
        append(out, "mirror_separation", fp.mirror_separation);
        if (fp.intrinsic_q)
            append(out, "intrinsic_q", *fp.intrinsic_q);
        if (fp.anchor_frequency)
            append(out, "anchor_frequency", *fp.anchor_frequency);
    }
    else if (config.ring)
    {
        const auto &ring = *config.ring;
        append_material(out, ring.material);
        out += "\n[cavity]\nkind = ring\n";
        append(out, "circumference", ring.circumference);
        append(out, "uniform_q", ring.uniform_q);
        append(out, "uniform_coupling", ring.uniform_coupling);
        append(out, "reference_frequency", ring.reference_frequency);
    }
    if (config.qubit)
    {
        if (!out.empty())
            out += "\n";
        out += "[qubit]\n";
        append(out, "frequency", config.qubit->frequency);
        append(out, "intrinsic_rate", config.qubit->intrinsic_rate);
    }
    return out;
}

FitInit parse_fit_init(std::string_view text)
{
    FitInit init;
    for (const auto &s : parse_sections(text))
    {
        if (s.name == "init" || s.name == "fixed")
        {
            auto &target = s.name == "init" ? init.init : init.fixed;
            for (const auto &e : s.entries)
                target[e.key] = quantity_at(e.value, Dimension::any, e.line, e.value_col);
        }
        else if (s.name == "bounds")
        {
            for (const auto &e : s.entries)
            {
                const auto comma = e.value.find(',');
                if (comma == std::string::npos)
                    throw ConfigError("bounds need 'lo, hi'", e.line, e.value_col, s.name);
                const double lo = quantity_at(std::string_view(e.value).substr(0, comma), Dimension::any, e.line,
                                              e.value_col);
                const double hi = quantity_at(std::string_view(e.value).substr(comma + 1), Dimension::any, e.line,
                                              e.value_col + static_cast<int>(comma) + 1);
                if (!(lo <= hi))
                    throw ConfigError("lower bound exceeds upper bound for '" + e.key + "'", e.line, e.value_col,
                                      s.name);
                init.bounds[e.key] = {lo, hi};
            }
        }
        else if (s.name == "options")
        {
            LossFunction loss;
            bool has_loss = false;
            SectionReader r(s);
            r.on("loss", [&](const Entry &e) {
                const auto v = trim(e.value);
                if (v == "least_squares")
                    loss.kind = LossKind::least_squares;
                else if (v == "huber")
                    loss.kind = LossKind::huber;
                else
                    throw ConfigError("loss must be least_squares or huber", e.line, e.value_col, s.name);
                has_loss = true;
            });
            r.on("huber_delta", [&](const Entry &e) {
                loss.huber_delta = quantity_at(e.value, Dimension::dimensionless, e.line, e.value_col);
                has_loss = true;
            });
            r.on("starts", [&](const Entry &e) { init.starts = integer_at(e.value, e.line, e.value_col); });
            r.on("start_jitter", [&](const Entry &e) {
                init.start_jitter = quantity_at(e.value, Dimension::dimensionless, e.line, e.value_col);
            });
            r.run();
            if (has_loss)
                init.loss = loss;
        }
        else
        {
            throw ConfigError("unknown section [" + s.name + "]", s.line, 1, s.name);
        }
    }
    return init;
}

FitInit load_fit_init(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read fit init file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_fit_init(buf.str());
}

void apply_fit_init(FitProblem &problem, const FitInit &init)
{
    const auto names = parameter_names(problem.model);
    auto check = [&](const std::string &name) -> ParameterSpec & {
        if (std::find(names.begin(), names.end(), name) == names.end())
            throw ConfigError("unknown fit parameter '" + name + "'");
        return problem.parameter(name);
    };
    for (const auto &[name, v] : init.init)
    {
        auto &p = check(name);
        // Carry the default box along with a moved start.
        if (!init.bounds.count(name) && !(p.lower <= v && v <= p.upper))
        {
            if (p.initial > 0.0 && v > 0.0)
            {
                p.lower *= v / p.initial;
                p.upper *= v / p.initial;
            }
            else
            {
                const double half = 0.5 * (p.upper - p.lower);
                p.lower = v - half;
                p.upper = v + half;
            }
        }
        p.initial = v;
    }
    for (const auto &[name, b] : init.bounds)
    {
        auto &p = check(name);
        p.lower = b.first;
        p.upper = b.second;
        if (!init.init.count(name))
            p.initial = std::clamp(p.initial, p.lower, p.upper);
    }
    for (const auto &[name, v] : init.fixed)
    {
        auto &p = check(name);
        p.initial = v;
        p.fixed = true;
    }
    if (init.loss)
        problem.loss = *init.loss;
    if (init.starts)
        problem.starts = *init.starts;
    if (init.start_jitter)
        problem.start_jitter = *init.start_jitter;
    require_valid_config(validate(problem), "fit");
}

} // namespace cqad
