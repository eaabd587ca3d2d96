#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace crisp::cli {

using nlohmann::json;

enum class Kind {
    kInteger,
    kNumber,
    kBool,
    kString,
    kNumberList,
    kStringList,
    kOptionalInteger,
    kOptionalNumber,
    kOptionalString,
};

struct Key {
    std::string name;
    Kind kind;
    json fallback;  // null for required non-optional keys
    bool required = false;
};

using Schema = std::vector<Key>;

/// Defaults, then the config file's keys, then each `key=value` override in
/// order. Unknown keys, type mismatches and missing required keys throw
/// ConfigError. Override values are parsed as JSON, except for string-kinded
/// keys where the raw text is taken verbatim.
json resolve_config(const Schema& schema, const std::optional<std::filesystem::path>& file,
                    const std::vector<std::string>& overrides);

}  // namespace crisp::cli
