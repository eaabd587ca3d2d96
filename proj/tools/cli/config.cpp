#include "config.hpp"

#include "crisp/errors.hpp"
#include "crisp/io.hpp"

#include <algorithm>

namespace crisp::cli {

namespace {

const Key* find(const Schema& schema, const std::string& name) {
    const auto it = std::find_if(schema.begin(), schema.end(), [&](const Key& k) { return k.name == name; });
    return it == schema.end() ? nullptr : &*it;
}

bool optional_kind(Kind k) {
    return k == Kind::kOptionalInteger || k == Kind::kOptionalNumber || k == Kind::kOptionalString;
}

bool string_kind(Kind k) { return k == Kind::kString || k == Kind::kOptionalString; }

bool matches(Kind kind, const json& v) {
    if (v.is_null()) return optional_kind(kind);
    switch (kind) {
        case Kind::kInteger:
        case Kind::kOptionalInteger: return v.is_number_integer();
        case Kind::kNumber:
        case Kind::kOptionalNumber: return v.is_number();
        case Kind::kBool: return v.is_boolean();
        case Kind::kString:
        case Kind::kOptionalString: return v.is_string();
        case Kind::kNumberList:
            return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
        case Kind::kStringList:
            return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); });
    }
    return false;
}

const char* describe(Kind kind) {
    switch (kind) {
        case Kind::kInteger: return "an integer";
        case Kind::kNumber: return "a number";
        case Kind::kBool: return "true or false";
        case Kind::kString: return "a string";
        case Kind::kNumberList: return "a list of numbers";
        case Kind::kStringList: return "a list of strings";
        case Kind::kOptionalInteger: return "an integer or null";
        case Kind::kOptionalNumber: return "a number or null";
        case Kind::kOptionalString: return "a string or null";
    }
    return "a value";
}

void assign(json& config, const Key& key, const json& value) {
    if (!matches(key.kind, value)) {
        throw ConfigError("config key '" + key.name + "' must be " + describe(key.kind) + ", got " + value.dump());
    }
    config[key.name] = value;
}

json parse_override(const Key& key, const std::string& text) {
    if (string_kind(key.kind)) {
        if (key.kind == Kind::kOptionalString && text == "null") return nullptr;
        if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
            try {
                return json::parse(text);
            } catch (const json::parse_error&) {
            }
        }
        return text;
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        throw ConfigError("cannot parse value '" + text + "' for config key '" + key.name + "'");
    }
}

}  // namespace

json resolve_config(const Schema& schema, const std::optional<std::filesystem::path>& file,
                    const std::vector<std::string>& overrides) {
    json config = json::object();
    for (const Key& k : schema) config[k.name] = k.fallback;

    if (file) {
        json loaded;
        try {
            loaded = io::read_json(*file);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
        if (!loaded.is_object()) throw ConfigError("config file must hold a JSON object");
        for (const auto& [name, value] : loaded.items()) {
            const Key* key = find(schema, name);
            if (!key) throw ConfigError("unknown config key '" + name + "'");
            assign(config, *key, value);
        }
    }

    for (const std::string& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + item + "' is not of the form key=value");
        const std::string name = item.substr(0, eq);
        const Key* key = find(schema, name);
        if (!key) throw ConfigError("unknown config key '" + name + "'");
        assign(config, *key, parse_override(*key, item.substr(eq + 1)));
    }

    for (const Key& k : schema) {
        if (k.required && config[k.name].is_null()) throw ConfigError("missing required config key '" + k.name + "'");
    }
    return config;
}

}  // namespace crisp::cli
