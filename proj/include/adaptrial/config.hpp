#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adaptrial/harness.hpp"
#include "adaptrial/trial.hpp"

namespace adaptrial::config {

/// Every settable TrialConfig key, in declaration order.
const std::vector<std::string>& field_names();

/// Parses `value` into field `key`. Unknown keys and malformed values throw
/// FieldConfigError naming the key.
void set_field(TrialConfig& cfg, std::string_view key, std::string_view value);

nlohmann::json to_json(const TrialConfig& cfg);
/// Overlays the keys present in `j` onto `base`; values may be numbers, bools or strings.
TrialConfig from_json(const nlohmann::json& j, TrialConfig base = {});

struct RunSettings {
    std::uint64_t seed = 1;
    int replications = 1000;
    int parallelism = 0;
};

struct ConfigFile {
    RunSettings run;
    TrialConfig defaults;
    std::vector<harness::Scenario> scenarios;
};

/// Format:
///   # comment
///   [run]              seed, replications, parallelism
///   [defaults]         any TrialConfig key
///   [scenario.<label>] TrialConfig keys (over defaults) and `replications`
/// Errors throw ConfigError with "<source>:<line>: <field>: <message>".
ConfigFile parse(std::string_view text, std::string_view source = "<config>");
ConfigFile load(const std::filesystem::path& path);

/// "key=value" override applied after parsing:
///   run.seed=7, run.replications=50   run settings
///   scenario.<label>.omega=0.01       one scenario
///   omega=0.01                        defaults and every scenario
void apply_override(ConfigFile& file, std::string_view assignment);

}  // namespace adaptrial::config
