#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace reasongraph {

enum class WireProtocol { openai_chat_compatible, anthropic_messages, mock };

std::string_view to_string(WireProtocol protocol) noexcept;
std::optional<WireProtocol> wire_protocol_from_string(std::string_view name) noexcept;

/// One scripted mock reply: text, an HTTP failure status, or text after a delay.
struct MockBehavior {
    enum class Kind { respond, fail, delay };
    Kind kind = Kind::respond;
    std::string text;
    int status = 0;
    std::chrono::milliseconds delay{0};

    static MockBehavior respond(std::string text);
    static MockBehavior fail(int status);
    static MockBehavior delayed(std::chrono::milliseconds delay, std::string text);
};

/// Thread-safe cursor over a behavior list. Past the end the last behavior repeats.
class MockScript {
public:
    explicit MockScript(std::vector<MockBehavior> behaviors);

    MockBehavior next();
    /// Calls made so far.
    std::size_t attempts() const;

private:
    mutable std::mutex mutex_;
    std::vector<MockBehavior> behaviors_;
    std::size_t calls_ = 0;
};

struct ProviderProfile {
    std::string id;
    WireProtocol wire_protocol = WireProtocol::mock;
    std::string base_url;
    std::string auth_env_var;
    std::vector<std::string> models;
    std::chrono::milliseconds timeout{120'000};
    int max_retries = 2;
    /// Concurrent in-flight calls admitted; 0 means unlimited.
    int max_concurrency = 0;
    /// Set for mock profiles only.
    std::shared_ptr<MockScript> script;

    bool serves(std::string_view model) const;
};

/// A mock profile named `id` serving the single model "mock-model" unless told otherwise.
ProviderProfile mock_provider(std::vector<MockBehavior> script, std::string id = "mock",
                              std::vector<std::string> models = {"mock-model"});

struct GenerationRequest {
    std::string provider;
    std::string model;
    std::string prompt;
    double temperature = 0.7;
    int max_tokens = 2048;
};

struct GenerationResult {
    std::string text;
    double latency_ms = 0.0;
    std::string provider;
    std::string model;
    int attempts = 0;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

/// Validated, immutable set of profiles. Keys are read once, at construction.
class ProviderRegistry {
public:
    /// Throws Error(duplicate_provider_id) or Error(invalid_config).
    explicit ProviderRegistry(std::vector<ProviderProfile> profiles, const EnvLookup& env = process_env);

    const std::vector<ProviderProfile>& profiles() const noexcept { return profiles_; }
    const ProviderProfile* find(std::string_view id) const;
    /// Mock profiles are always available; others need a non-empty key.
    bool available(std::string_view id) const;
    /// One message per provider whose key variable is unset.
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    /// Empty when absent.
    const std::string& api_key(std::string_view id) const;
    /// Every loaded key, for scrubbing text before it leaves the process.
    std::vector<std::string> secrets() const;

private:
    std::vector<ProviderProfile> profiles_;
    std::map<std::string, std::string, std::less<>> keys_;
    std::vector<std::string> warnings_;
};

/// Replaces each non-empty secret in `text` with "[redacted]".
std::string redact(std::string text, const std::vector<std::string>& secrets);

struct WireRequest {
    std::string path; ///< appended to the base URL
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
};

WireRequest map_request(const ProviderProfile& profile, const GenerationRequest& request, std::string_view api_key);
/// Throws Error(malformed_provider_response).
std::string extract_text(WireProtocol protocol, std::string_view body);

struct HttpReply {
    int status = 0;
    std::string body;
    /// Set when no HTTP status was received.
    bool transport_failed = false;
    bool timed_out = false;
    std::string error;
};

using Transport = std::function<HttpReply(const std::string& base_url, const WireRequest& request,
                                          std::chrono::milliseconds timeout)>;

/// POSTs over HTTP or HTTPS.
HttpReply http_transport(const std::string& base_url, const WireRequest& request, std::chrono::milliseconds timeout);

/// Exponential backoff with full jitter: attempt k waits uniform[0, base * factor^k).
struct RetryPolicy {
    std::chrono::milliseconds base{1000};
    double factor = 2.0;
    std::function<void(std::chrono::milliseconds)> sleep;
    std::uint64_t seed = std::random_device{}();

    std::chrono::milliseconds ceiling(int retry) const;
};

/// Counting semaphore that admits waiters in arrival order.
class AdmissionGate {
public:
    explicit AdmissionGate(std::size_t limit);

    class Ticket {
    public:
        explicit Ticket(AdmissionGate* gate) : gate_(gate) {}
        Ticket(Ticket&& other) noexcept : gate_(std::exchange(other.gate_, nullptr)) {}
        Ticket(const Ticket&) = delete;
        Ticket& operator=(const Ticket&) = delete;
        Ticket& operator=(Ticket&&) = delete;
        ~Ticket();

    private:
        AdmissionGate* gate_;
    };

    Ticket acquire();
    std::size_t in_use() const;
    std::size_t waiting() const;

private:
    void release();

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t limit_;
    std::size_t in_use_ = 0;
    std::uint64_t next_ticket_ = 0;
    std::uint64_t now_serving_ = 0;
};

/// The provider factory: resolves a request to a profile and runs it over
/// the profile's wire protocol with retries.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<const ProviderRegistry> registry, RetryPolicy retry = {},
                     Transport transport = http_transport);

    /// Throws Error with unknown_provider, unknown_model, provider_unavailable,
    /// invalid_params, unauthorized, rate_limited, provider_error, timeout or
    /// malformed_provider_response. Messages never carry key material.
    GenerationResult generate(const GenerationRequest& request);

    const ProviderRegistry& registry() const noexcept { return *registry_; }

private:
    struct Attempt;
    Attempt attempt_once(const ProviderProfile& profile, const GenerationRequest& request);
    static Attempt failed_status(int status, std::string_view body);

    std::shared_ptr<const ProviderRegistry> registry_;
    RetryPolicy retry_;
    Transport transport_;
    std::map<std::string, std::unique_ptr<AdmissionGate>, std::less<>> gates_;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_;
};

} // namespace reasongraph
