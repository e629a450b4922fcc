#include "adaptrial/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "adaptrial/error.hpp"

namespace adaptrial::config {

namespace {

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string unquote(std::string_view v)
{
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
        return std::string(v.substr(1, v.size() - 2));
    }
    return std::string(v);
}

double to_double(std::string_view key, std::string_view v)
{
    double out = 0.0;
    const auto s = trim(v);
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw FieldConfigError(std::string(key), "expected a number, got '" + std::string(v) + "'");
    }
    return out;
}

template <class Int>
Int to_int(std::string_view key, std::string_view v)
{
    Int out = 0;
    const auto s = trim(v);
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw FieldConfigError(std::string(key), "expected an integer, got '" + std::string(v) + "'");
    }
    return out;
}

bool to_bool(std::string_view key, std::string_view v)
{
    const auto s = trim(v);
    if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "off" || s == "no") return false;
    throw FieldConfigError(std::string(key), "expected true or false, got '" + std::string(v) + "'");
}

template <class Fn>
auto wrap(std::string_view key, Fn&& fn)
{
    try {
        return fn();
    } catch (const FieldConfigError&) {
        throw;
    } catch (const ConfigError& e) {
        throw FieldConfigError(std::string(key), e.what());
    }
}

struct Field {
    std::function<void(TrialConfig&, std::string_view)> set;
    std::function<nlohmann::json(const TrialConfig&)> get;
};

using FieldTable = std::vector<std::pair<std::string, Field>>;

#define NUM(name, member)                                                                  \
    {name, {[](TrialConfig& c, std::string_view v) { c.member = to_double(name, v); },    \
            [](const TrialConfig& c) { return nlohmann::json(c.member); }}}

const FieldTable& table()
{
    static const FieldTable t = {
        NUM("mu_A", mu_A),
        NUM("mu_B", mu_B),
        NUM("beta", beta),
        {"shared_covariate",
         {[](TrialConfig& c, std::string_view v) { c.shared_covariate = to_bool("shared_covariate", v); },
          [](const TrialConfig& c) { return nlohmann::json(c.shared_covariate); }}},
        NUM("sd", sd),
        {"budget",
         {[](TrialConfig& c, std::string_view v) { c.budget = to_int<int>("budget", v); },
          [](const TrialConfig& c) { return nlohmann::json(c.budget); }}},
        NUM("omega", omega),
        NUM("c_A", c_A),
        NUM("c_B", c_B),
        NUM("c_beta", c_beta),
        {"m0",
         {[](TrialConfig& c, std::string_view v) {
              std::array<double, 3> m{};
              std::size_t i = 0;
              std::string_view rest = trim(v);
              if (!rest.empty() && rest.front() == '[' && rest.back() == ']') {
                  rest = rest.substr(1, rest.size() - 2);
              }
              while (true) {
                  const auto comma = rest.find(',');
                  if (i >= 3) throw FieldConfigError("m0", "expected 3 comma-separated numbers");
                  m[i++] = to_double("m0", rest.substr(0, comma));
                  if (comma == std::string_view::npos) break;
                  rest = rest.substr(comma + 1);
              }
              if (i != 3) throw FieldConfigError("m0", "expected 3 comma-separated numbers");
              c.m0 = m;
          },
          [](const TrialConfig& c) { return nlohmann::json(c.m0); }}},
        NUM("V", V),
        {"rule",
         {[](TrialConfig& c, std::string_view v) { c.rule = wrap("rule", [&] { return parse_rule(trim(v)); }); },
          [](const TrialConfig& c) { return nlohmann::json(std::string(to_string(c.rule))); }}},
        {"q_scale",
         {[](TrialConfig& c, std::string_view v) {
              c.q_scale = wrap("q_scale", [&] { return parse_q_scale(trim(v)); });
          },
          [](const TrialConfig& c) { return nlohmann::json(std::string(to_string(c.q_scale))); }}},
        NUM("bf.lambda", bf.lambda),
        NUM("bf.sigma_delta_sq", bf.sigma_delta_sq),
        NUM("bf.threshold", bf.threshold),
        {"evidence",
         {[](TrialConfig& c, std::string_view v) {
              c.evidence = wrap("evidence", [&] { return parse_evidence(trim(v)); });
          },
          [](const TrialConfig& c) { return nlohmann::json(std::string(to_string(c.evidence))); }}},
        {"switch_basis",
         {[](TrialConfig& c, std::string_view v) {
              c.switch_basis = wrap("switch_basis", [&] { return parse_switch_basis(trim(v)); });
          },
          [](const TrialConfig& c) { return nlohmann::json(std::string(to_string(c.switch_basis))); }}},
        {"stopping_enabled",
         {[](TrialConfig& c, std::string_view v) { c.stopping_enabled = to_bool("stopping_enabled", v); },
          [](const TrialConfig& c) { return nlohmann::json(c.stopping_enabled); }}},
        {"seed",
         {[](TrialConfig& c, std::string_view v) { c.seed = to_int<std::uint64_t>("seed", v); },
          [](const TrialConfig& c) { return nlohmann::json(c.seed); }}},
    };
    return t;
}

#undef NUM

const Field* find_field(std::string_view key)
{
    for (const auto& [name, f] : table()) {
        if (name == key) return &f;
    }
    return nullptr;
}

struct Located {
    std::string key;
    std::string value;
    int line = 0;
};

[[noreturn]] void fail_at(std::string_view source, int line, const std::string& what)
{
    throw ConfigError(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

void set_run(RunSettings& run, std::string_view key, std::string_view value)
{
    if (key == "seed") {
        run.seed = to_int<std::uint64_t>("run.seed", value);
    } else if (key == "replications") {
        run.replications = to_int<int>("run.replications", value);
        if (run.replications < 1) throw FieldConfigError("run.replications", "must be at least 1");
    } else if (key == "parallelism") {
        run.parallelism = to_int<int>("run.parallelism", value);
    } else {
        throw FieldConfigError("run." + std::string(key), "unknown key");
    }
}

}  // namespace

const std::vector<std::string>& field_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, f] : table()) out.push_back(name);
        return out;
    }();
    return names;
}

void set_field(TrialConfig& cfg, std::string_view key, std::string_view value)
{
    const Field* f = find_field(key);
    if (!f) throw FieldConfigError(std::string(key), "unknown key");
    f->set(cfg, unquote(trim(value)));
}

nlohmann::json to_json(const TrialConfig& cfg)
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, f] : table()) j[name] = f.get(cfg);
    return j;
}

TrialConfig from_json(const nlohmann::json& j, TrialConfig base)
{
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        const Field* f = find_field(key);
        if (!f) throw FieldConfigError(key, "unknown key");
        std::string text;
        if (value.is_string()) {
            text = value.get<std::string>();
        } else if (value.is_boolean()) {
            text = value.get<bool>() ? "true" : "false";
        } else if (value.is_number_unsigned()) {
            text = std::to_string(value.get<std::uint64_t>());
        } else if (value.is_number_integer()) {
            text = std::to_string(value.get<std::int64_t>());
        } else if (value.is_number_float()) {
            text = harness::format_number(value.get<double>());
        } else if (value.is_array() && key == "m0") {
            std::string joined;
            for (const auto& e : value) {
                if (!e.is_number()) throw FieldConfigError("m0", "expected 3 numbers");
                if (!joined.empty()) joined += ',';
                joined += harness::format_number(e.get<double>());
            }
            text = joined;
        } else {
            throw FieldConfigError(key, "unsupported value type");
        }
        f->set(base, text);
    }
    return base;
}

ConfigFile parse(std::string_view text, std::string_view source)
{
    ConfigFile out;
    std::vector<Located> defaults;
    std::vector<std::pair<std::string, std::vector<Located>>> scenarios;
    std::vector<std::optional<int>> reps;

    enum class Section { None, Run, Defaults, Scenario } section = Section::None;
    std::map<std::string, int> seen;  // "<section>/<key>" -> line, for duplicates
    std::string section_name;

    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail_at(source, line_no, "unterminated section header");
            section_name = std::string(trim(line.substr(1, line.size() - 2)));
            if (section_name == "run") {
                section = Section::Run;
            } else if (section_name == "defaults") {
                section = Section::Defaults;
            } else if (section_name.rfind("scenario.", 0) == 0 && section_name.size() > 9) {
                section = Section::Scenario;
                const std::string label = section_name.substr(9);
                for (const auto& s : scenarios) {
                    if (s.first == label) fail_at(source, line_no, "duplicate scenario '" + label + "'");
                }
                scenarios.push_back({label, {}});
                reps.emplace_back();
            } else {
                fail_at(source, line_no, "unknown section [" + section_name + "]");
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail_at(source, line_no, "expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        if (key.empty()) fail_at(source, line_no, "missing key");
        if (section == Section::None) fail_at(source, line_no, key + ": key outside any section");

        const std::string dup = section_name + "/" + key;
        if (auto it = seen.find(dup); it != seen.end()) {
            fail_at(source, line_no, key + ": duplicate key (first set on line " + std::to_string(it->second) + ")");
        }
        seen[dup] = line_no;

        try {
            switch (section) {
            case Section::Run:
                set_run(out.run, key, value);
                break;
            case Section::Defaults:
                if (!find_field(key)) throw FieldConfigError(key, "unknown key");
                defaults.push_back({key, value, line_no});
                break;
            case Section::Scenario:
                if (key == "replications") {
                    const int r = to_int<int>("replications", value);
                    if (r < 1) throw FieldConfigError("replications", "must be at least 1");
                    reps.back() = r;
                } else {
                    if (!find_field(key)) throw FieldConfigError(key, "unknown key");
                    scenarios.back().second.push_back({key, value, line_no});
                }
                break;
            case Section::None:
                break;
            }
        } catch (const ConfigError& e) {
            fail_at(source, line_no, e.what());
        }
    }

    auto apply = [&](TrialConfig& cfg, const std::vector<Located>& items) {
        for (const auto& item : items) {
            try {
                set_field(cfg, item.key, item.value);
            } catch (const ConfigError& e) {
                fail_at(source, item.line, e.what());
            }
        }
    };
    apply(out.defaults, defaults);
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        harness::Scenario sc;
        sc.label = scenarios[i].first;
        sc.config = out.defaults;
        apply(sc.config, scenarios[i].second);
        sc.replications = reps[i].value_or(out.run.replications);
        out.scenarios.push_back(std::move(sc));
    }
    return out;
}

namespace {

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

ConfigFile load(const std::filesystem::path& path)
{
    // A leading `include = "<file>"` line (before any section) pulls in another file
    // first; later sections may then override or extend it.
    std::string text = read_text(path);
    std::string prefix;
    std::istringstream in(text);
    std::string raw;
    std::string rest;
    bool body = false;
    while (std::getline(in, raw)) {
        std::string_view line = trim(raw);
        if (!body && line.rfind("include", 0) == 0 && line.find('=') != std::string_view::npos) {
            const auto inc = unquote(trim(line.substr(line.find('=') + 1)));
            prefix += read_text(path.parent_path() / inc) + "\n";
            rest += "\n";  // keep line numbers of this file stable in messages
            continue;
        }
        if (!line.empty() && line.front() == '[') body = true;
        rest += raw + "\n";
    }
    if (prefix.empty()) return parse(text, path.string());
    return parse(prefix + rest, path.string());
}

void apply_override(ConfigFile& file, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
    }
    const std::string key(trim(assignment.substr(0, eq)));
    const std::string value(trim(assignment.substr(eq + 1)));

    if (key.rfind("run.", 0) == 0) {
        set_run(file.run, key.substr(4), value);
        if (key == "run.replications") {
            for (auto& s : file.scenarios) s.replications = file.run.replications;
        }
        return;
    }
    if (key.rfind("scenario.", 0) == 0) {
        const std::string rest = key.substr(9);
        // labels may contain dots, so match the longest label that prefixes rest
        harness::Scenario* target = nullptr;
        std::string field;
        for (auto& s : file.scenarios) {
            if (rest.size() > s.label.size() + 1 && rest.compare(0, s.label.size(), s.label) == 0 &&
                rest[s.label.size()] == '.' && (!target || s.label.size() > target->label.size())) {
                target = &s;
                field = rest.substr(s.label.size() + 1);
            }
        }
        if (!target) throw FieldConfigError(key, "no such scenario");
        if (field == "replications") {
            target->replications = to_int<int>(key, value);
            if (target->replications < 1) throw FieldConfigError(key, "must be at least 1");
        } else {
            set_field(target->config, field, value);
        }
        return;
    }
    set_field(file.defaults, key, value);
    for (auto& s : file.scenarios) set_field(s.config, key, value);
}

}  // namespace adaptrial::config
