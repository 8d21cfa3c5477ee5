#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reasongraph {

enum class ErrorCode {
    empty_question,
    invalid_params,
    unknown_method,
    no_selection_found,
    cycle,
    invalid_trace,
    wrong_method,
    missing_score,
    no_paths,
    no_chain_answers,
    invalid_config,
    malformed_config,
    duplicate_provider_id,
    unknown_provider,
    unknown_model,
    provider_unavailable,
    unauthorized,
    rate_limited,
    provider_error,
    timeout,
    malformed_provider_response,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Failure raised by library operations whose contract is violated or whose
/// external dependency failed. Carries a stable machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace reasongraph
