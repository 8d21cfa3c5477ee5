#include "reasongraph/config.hpp"
#include "reasongraph/error.hpp"

#include <toml++/toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace reasongraph {

namespace {

class Reader {
public:
    explicit Reader(std::string_view source) : source_(source) {}

    [[noreturn]] void fail(const toml::source_region& where, std::string_view field, const std::string& why) const {
        std::string message = source_ + ":" + std::to_string(where.begin.line) + ": ";
        if (!field.empty()) message += "field '" + std::string(field) + "': ";
        throw Error(ErrorCode::malformed_config, message + why);
    }

    std::string string(const toml::node& node, std::string_view field) const {
        const auto value = node.value<std::string>();
        if (!node.is_string() || !value) fail(node.source(), field, "expected a string");
        return *value;
    }

    long long integer(const toml::node& node, std::string_view field) const {
        if (!node.is_integer()) fail(node.source(), field, "expected an integer");
        return *node.value<long long>();
    }

    std::vector<std::string> strings(const toml::node& node, std::string_view field) const {
        const auto* array = node.as_array();
        if (!array) fail(node.source(), field, "expected an array of strings");
        std::vector<std::string> out;
        for (const auto& item : *array) out.push_back(string(item, field));
        return out;
    }

    std::vector<MockBehavior> script(const toml::node& node) const {
        const auto* array = node.as_array();
        if (!array) fail(node.source(), "mock_script", "expected an array");
        std::vector<MockBehavior> out;
        for (const auto& item : *array) {
            if (item.is_string()) {
                out.push_back(MockBehavior::respond(*item.value<std::string>()));
                continue;
            }
            const auto* entry = item.as_table();
            if (!entry) fail(item.source(), "mock_script", "entries are strings or inline tables");
            std::optional<int> status;
            std::optional<long long> delay;
            std::string text;
            for (const auto& [key, value] : *entry) {
                const auto name = key.str();
                if (name == "fail") status = static_cast<int>(integer(value, "mock_script.fail"));
                else if (name == "delay_ms") delay = integer(value, "mock_script.delay_ms");
                else if (name == "text") text = string(value, "mock_script.text");
                else fail(key.source(), "mock_script", "unknown entry key '" + std::string(name) + "'");
            }
            if (status) out.push_back(MockBehavior::fail(*status));
            else if (delay) out.push_back(MockBehavior::delayed(std::chrono::milliseconds(*delay), text));
            else out.push_back(MockBehavior::respond(text));
        }
        return out;
    }

    ProviderProfile profile(const toml::table& table) const {
        ProviderProfile profile;
        std::optional<std::vector<MockBehavior>> mock_script;
        bool has_id = false;
        bool has_protocol = false;
        bool has_models = false;
        for (const auto& [key, node] : table) {
            const auto name = key.str();
            if (name == "id") {
                profile.id = string(node, name);
                has_id = true;
            } else if (name == "wire_protocol") {
                const auto text = string(node, name);
                const auto protocol = wire_protocol_from_string(text);
                if (!protocol) {
                    fail(node.source(), name,
                         "'" + text + "' is not one of openai_chat_compatible, anthropic_messages, mock");
                }
                profile.wire_protocol = *protocol;
                has_protocol = true;
            } else if (name == "base_url") {
                profile.base_url = string(node, name);
            } else if (name == "auth_env_var") {
                profile.auth_env_var = string(node, name);
            } else if (name == "models") {
                profile.models = strings(node, name);
                if (profile.models.empty()) fail(node.source(), name, "must list at least one model");
                has_models = true;
            } else if (name == "timeout") {
                double seconds = 0.0;
                if (node.is_integer()) seconds = static_cast<double>(*node.value<long long>());
                else if (node.is_floating_point()) seconds = *node.value<double>();
                else fail(node.source(), name, "expected a number of seconds");
                if (!(seconds > 0.0)) fail(node.source(), name, "must be positive");
                profile.timeout = std::chrono::milliseconds(static_cast<long long>(seconds * 1000.0 + 0.5));
                if (profile.timeout.count() <= 0) fail(node.source(), name, "must be at least 1 ms");
            } else if (name == "max_retries") {
                const auto n = integer(node, name);
                if (n < 0 || n > 10) fail(node.source(), name, "must lie in [0, 10]");
                profile.max_retries = static_cast<int>(n);
            } else if (name == "max_concurrency") {
                const auto n = integer(node, name);
                if (n < 0 || n > 1024) fail(node.source(), name, "must lie in [0, 1024]");
                profile.max_concurrency = static_cast<int>(n);
            } else if (name == "mock_script") {
                mock_script = script(node);
            } else {
                fail(key.source(), name, "unknown field");
            }
        }
        const auto& where = table.source();
        if (!has_id || profile.id.empty()) fail(where, "id", "required");
        if (!has_protocol) fail(where, "wire_protocol", "required");
        if (!has_models) fail(where, "models", "required");
        if (profile.wire_protocol == WireProtocol::mock) {
            profile.script = std::make_shared<MockScript>(mock_script.value_or(std::vector<MockBehavior>{}));
        } else {
            if (mock_script) fail(where, "mock_script", "only mock providers take a script");
            if (profile.base_url.empty()) fail(where, "base_url", "required for " + std::string(to_string(profile.wire_protocol)));
            if (profile.auth_env_var.empty()) {
                fail(where, "auth_env_var", "required for " + std::string(to_string(profile.wire_protocol)));
            }
        }
        return profile;
    }

private:
    std::string source_;
};

} // namespace

std::vector<ProviderProfile> parse_provider_config(std::string_view text, std::string_view source) {
    const Reader reader(source);
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        reader.fail(e.source(), {}, std::string(e.description()));
    }

    std::vector<ProviderProfile> profiles;
    std::set<std::string, std::less<>> seen;
    for (const auto& [key, node] : root) {
        if (key.str() != "provider") reader.fail(key.source(), key.str(), "unknown top-level entry");
        const auto* array = node.as_array();
        if (!array || !array->is_array_of_tables()) reader.fail(node.source(), "provider", "use [[provider]] tables");
        for (const auto& item : *array) {
            const auto& table = *item.as_table();
            auto profile = reader.profile(table);
            if (!seen.insert(profile.id).second) {
                throw Error(ErrorCode::duplicate_provider_id,
                            std::string(source) + ":" + std::to_string(table.source().begin.line) +
                                ": provider id '" + profile.id + "' is declared twice");
            }
            profiles.push_back(std::move(profile));
        }
    }
    return profiles;
}

std::shared_ptr<const ProviderRegistry> load_registry_from_string(std::string_view text, const EnvLookup& env,
                                                                  std::string_view source) {
    return std::make_shared<const ProviderRegistry>(parse_provider_config(text, source), env);
}

std::shared_ptr<const ProviderRegistry> load_registry(const std::filesystem::path& path, const EnvLookup& env) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::malformed_config, "cannot read config file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_registry_from_string(buffer.str(), env, path.string());
}

std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::filesystem::path>& explicit_path,
                                                         const EnvLookup& env) {
    if (explicit_path && !explicit_path->empty()) return explicit_path;
    if (env) {
        if (auto value = env(std::string(config_env_var)); value && !value->empty()) {
            return std::filesystem::path(*value);
        }
    }
    return std::nullopt;
}

} // namespace reasongraph
