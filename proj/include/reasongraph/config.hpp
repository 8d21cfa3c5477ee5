#pragma once

#include "reasongraph/gateway.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace reasongraph {

/// Environment variable naming the provider config file.
inline constexpr std::string_view config_env_var = "REASONGRAPH_CONFIG";

/// Reads `[[provider]]` tables. Throws Error(malformed_config) naming the line
/// and field, or Error(duplicate_provider_id).
std::vector<ProviderProfile> parse_provider_config(std::string_view text, std::string_view source = "config");

std::shared_ptr<const ProviderRegistry> load_registry_from_string(std::string_view text,
                                                                  const EnvLookup& env = process_env,
                                                                  std::string_view source = "config");
/// Throws Error(malformed_config) also when the file cannot be read.
std::shared_ptr<const ProviderRegistry> load_registry(const std::filesystem::path& path,
                                                      const EnvLookup& env = process_env);

/// The explicit path if given, else the REASONGRAPH_CONFIG value, else nothing.
std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::filesystem::path>& explicit_path,
                                                         const EnvLookup& env = process_env);

} // namespace reasongraph
