#include "reasongraph/gateway.hpp"
#include "reasongraph/error.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <set>
#include <thread>

namespace reasongraph {

using nlohmann::json;

std::string_view to_string(WireProtocol protocol) noexcept {
    switch (protocol) {
    case WireProtocol::openai_chat_compatible: return "openai_chat_compatible";
    case WireProtocol::anthropic_messages: return "anthropic_messages";
    case WireProtocol::mock: return "mock";
    }
    return "mock";
}

std::optional<WireProtocol> wire_protocol_from_string(std::string_view name) noexcept {
    for (auto p : {WireProtocol::openai_chat_compatible, WireProtocol::anthropic_messages, WireProtocol::mock}) {
        if (to_string(p) == name) return p;
    }
    return std::nullopt;
}

MockBehavior MockBehavior::respond(std::string text) {
    MockBehavior b;
    b.kind = Kind::respond;
    b.text = std::move(text);
    return b;
}

MockBehavior MockBehavior::fail(int status) {
    MockBehavior b;
    b.kind = Kind::fail;
    b.status = status;
    return b;
}

MockBehavior MockBehavior::delayed(std::chrono::milliseconds delay, std::string text) {
    MockBehavior b;
    b.kind = Kind::delay;
    b.delay = delay;
    b.text = std::move(text);
    return b;
}

MockScript::MockScript(std::vector<MockBehavior> behaviors) : behaviors_(std::move(behaviors)) {
    if (behaviors_.empty()) behaviors_.push_back(MockBehavior::respond(""));
}

MockBehavior MockScript::next() {
    std::lock_guard lock(mutex_);
    const auto index = std::min(calls_, behaviors_.size() - 1);
    ++calls_;
    return behaviors_[index];
}

std::size_t MockScript::attempts() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

bool ProviderProfile::serves(std::string_view model) const {
    return std::find(models.begin(), models.end(), model) != models.end();
}

ProviderProfile mock_provider(std::vector<MockBehavior> script, std::string id, std::vector<std::string> models) {
    ProviderProfile profile;
    profile.id = std::move(id);
    profile.wire_protocol = WireProtocol::mock;
    profile.base_url = "mock://local";
    profile.models = std::move(models);
    profile.script = std::make_shared<MockScript>(std::move(script));
    return profile;
}

std::optional<std::string> process_env(const std::string& name) {
    if (const char* value = std::getenv(name.c_str())) return std::string(value);
    return std::nullopt;
}

ProviderRegistry::ProviderRegistry(std::vector<ProviderProfile> profiles, const EnvLookup& env)
    : profiles_(std::move(profiles)) {
    std::set<std::string, std::less<>> seen;
    for (auto& profile : profiles_) {
        auto bad = [&](const std::string& why) {
            throw Error(ErrorCode::invalid_config, "provider '" + profile.id + "': " + why);
        };
        if (profile.id.empty()) throw Error(ErrorCode::invalid_config, "provider id must not be empty");
        if (!seen.insert(profile.id).second) {
            throw Error(ErrorCode::duplicate_provider_id, "provider id '" + profile.id + "' is declared twice");
        }
        if (profile.models.empty()) bad("models must not be empty");
        if (profile.timeout.count() <= 0) bad("timeout must be positive");
        if (profile.max_retries < 0) bad("max_retries must not be negative");
        if (profile.max_concurrency < 0) bad("max_concurrency must not be negative");
        if (profile.wire_protocol == WireProtocol::mock) {
            if (!profile.script) profile.script = std::make_shared<MockScript>(std::vector<MockBehavior>{});
            continue;
        }
        if (profile.base_url.empty()) bad("base_url is required");
        if (profile.auth_env_var.empty()) bad("auth_env_var is required");
        auto key = env ? env(profile.auth_env_var) : std::nullopt;
        if (key && !key->empty()) {
            keys_.emplace(profile.id, std::move(*key));
        } else {
            warnings_.push_back("provider '" + profile.id + "': environment variable " + profile.auth_env_var +
                                " is unset; provider unavailable");
        }
    }
}

const ProviderProfile* ProviderRegistry::find(std::string_view id) const {
    for (const auto& profile : profiles_) {
        if (profile.id == id) return &profile;
    }
    return nullptr;
}

bool ProviderRegistry::available(std::string_view id) const {
    const auto* profile = find(id);
    if (!profile) return false;
    return profile->wire_protocol == WireProtocol::mock || keys_.count(id) > 0;
}

const std::string& ProviderRegistry::api_key(std::string_view id) const {
    static const std::string none;
    auto it = keys_.find(id);
    return it == keys_.end() ? none : it->second;
}

std::vector<std::string> ProviderRegistry::secrets() const {
    std::vector<std::string> out;
    for (const auto& [_, key] : keys_) out.push_back(key);
    return out;
}

std::string redact(std::string text, const std::vector<std::string>& secrets) {
    for (const auto& secret : secrets) {
        if (secret.empty()) continue;
        for (auto pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos)) {
            text.replace(pos, secret.size(), "[redacted]");
        }
    }
    return text;
}

WireRequest map_request(const ProviderProfile& profile, const GenerationRequest& request, std::string_view api_key) {
    WireRequest wire;
    const json messages = json::array({{{"role", "user"}, {"content", request.prompt}}});
    switch (profile.wire_protocol) {
    case WireProtocol::openai_chat_compatible:
        wire.path = "/chat/completions";
        wire.headers.emplace_back("Authorization", "Bearer " + std::string(api_key));
        wire.body = json{{"model", request.model},
                         {"messages", messages},
                         {"temperature", request.temperature},
                         {"max_tokens", request.max_tokens}}
                        .dump();
        break;
    case WireProtocol::anthropic_messages:
        wire.path = "/v1/messages";
        wire.headers.emplace_back("x-api-key", std::string(api_key));
        wire.headers.emplace_back("anthropic-version", "2023-06-01");
        wire.body = json{{"model", request.model},
                         {"max_tokens", request.max_tokens},
                         {"temperature", request.temperature},
                         {"messages", messages}}
                        .dump();
        break;
    case WireProtocol::mock:
        wire.path = "/generate";
        wire.body = json{{"model", request.model}, {"prompt", request.prompt}}.dump();
        break;
    }
    return wire;
}

std::string extract_text(WireProtocol protocol, std::string_view body) {
    auto malformed = [&](const std::string& why) -> std::string {
        throw Error(ErrorCode::malformed_provider_response,
                    std::string(to_string(protocol)) + " response " + why);
    };
    const auto doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return malformed("is not a JSON object");
    switch (protocol) {
    case WireProtocol::openai_chat_compatible: {
        auto choices = doc.find("choices");
        if (choices == doc.end() || !choices->is_array() || choices->empty()) return malformed("has no choices");
        const auto& first = (*choices)[0];
        if (!first.is_object() || !first.contains("message") || !first["message"].is_object()) {
            return malformed("has no message");
        }
        const auto& content = first["message"].find("content");
        if (content == first["message"].end() || !content->is_string()) return malformed("has no message content");
        return content->get<std::string>();
    }
    case WireProtocol::anthropic_messages: {
        auto content = doc.find("content");
        if (content == doc.end() || !content->is_array()) return malformed("has no content array");
        std::string text;
        bool found = false;
        for (const auto& block : *content) {
            if (!block.is_object() || block.value("type", "") != "text") continue;
            auto piece = block.find("text");
            if (piece == block.end() || !piece->is_string()) continue;
            text += piece->get<std::string>();
            found = true;
        }
        if (!found) return malformed("has no text block");
        return text;
    }
    case WireProtocol::mock: {
        auto text = doc.find("text");
        if (text == doc.end() || !text->is_string()) return malformed("has no text");
        return text->get<std::string>();
    }
    }
    return malformed("uses an unknown protocol");
}

HttpReply http_transport(const std::string& base_url, const WireRequest& request, std::chrono::milliseconds timeout) {
    HttpReply reply;
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        reply.transport_failed = true;
        reply.error = "base_url lacks a scheme";
        return reply;
    }
    const auto path_start = base_url.find('/', scheme_end + 3);
    const std::string origin = base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? std::string() : base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    httplib::Client client(origin);
    if (!client.is_valid()) {
        reply.transport_failed = true;
        reply.error = "unsupported base_url";
        return reply;
    }
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());

    httplib::Headers headers;
    for (const auto& [name, value] : request.headers) headers.emplace(name, value);

    const auto start = std::chrono::steady_clock::now();
    auto result = client.Post(prefix + request.path, headers, request.body, "application/json");
    if (!result) {
        reply.transport_failed = true;
        reply.error = httplib::to_string(result.error());
        reply.timed_out = result.error() == httplib::Error::ConnectionTimeout ||
                          std::chrono::steady_clock::now() - start >= timeout;
        return reply;
    }
    reply.status = result->status;
    reply.body = result->body;
    return reply;
}

std::chrono::milliseconds RetryPolicy::ceiling(int retry) const {
    return std::chrono::milliseconds(static_cast<long long>(static_cast<double>(base.count()) * std::pow(factor, retry)));
}

AdmissionGate::AdmissionGate(std::size_t limit) : limit_(std::max<std::size_t>(limit, 1)) {}

AdmissionGate::Ticket::~Ticket() {
    if (gate_) gate_->release();
}

AdmissionGate::Ticket AdmissionGate::acquire() {
    std::unique_lock lock(mutex_);
    const auto mine = next_ticket_++;
    cv_.wait(lock, [&] { return mine == now_serving_ && in_use_ < limit_; });
    ++now_serving_;
    ++in_use_;
    cv_.notify_all();
    return Ticket(this);
}

void AdmissionGate::release() {
    {
        std::lock_guard lock(mutex_);
        --in_use_;
    }
    cv_.notify_all();
}

std::size_t AdmissionGate::in_use() const {
    std::lock_guard lock(mutex_);
    return in_use_;
}

std::size_t AdmissionGate::waiting() const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(next_ticket_ - now_serving_);
}

struct Gateway::Attempt {
    std::optional<std::string> text;
    bool transient = false;
    ErrorCode code = ErrorCode::provider_error;
    std::string message;
};

Gateway::Attempt Gateway::failed_status(int status, std::string_view body) {
    Gateway::Attempt attempt;
    std::string detail = "HTTP " + std::to_string(status);
    if (!body.empty()) detail += ": " + std::string(body.substr(0, 200));
    attempt.message = detail;
    if (status == 401 || status == 403) {
        attempt.code = ErrorCode::unauthorized;
    } else if (status == 429) {
        attempt.code = ErrorCode::rate_limited;
        attempt.transient = true;
    } else {
        attempt.code = ErrorCode::provider_error;
        attempt.transient = status >= 500;
    }
    return attempt;
}

Gateway::Gateway(std::shared_ptr<const ProviderRegistry> registry, RetryPolicy retry, Transport transport)
    : registry_(std::move(registry)), retry_(std::move(retry)), transport_(std::move(transport)), rng_(retry_.seed) {
    if (!registry_) throw std::invalid_argument("Gateway needs a registry");
    if (!retry_.sleep) retry_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    for (const auto& profile : registry_->profiles()) {
        if (profile.max_concurrency > 0) {
            gates_.emplace(profile.id, std::make_unique<AdmissionGate>(static_cast<std::size_t>(profile.max_concurrency)));
        }
    }
}

Gateway::Attempt Gateway::attempt_once(const ProviderProfile& profile, const GenerationRequest& request) {
    Attempt attempt;
    if (profile.wire_protocol == WireProtocol::mock) {
        auto behavior = profile.script->next();
        switch (behavior.kind) {
        case MockBehavior::Kind::fail: return failed_status(behavior.status, {});
        case MockBehavior::Kind::delay:
            if (behavior.delay >= profile.timeout) {
                std::this_thread::sleep_for(profile.timeout);
                attempt.code = ErrorCode::timeout;
                attempt.transient = true;
                attempt.message = "no response within " + std::to_string(profile.timeout.count()) + " ms";
                return attempt;
            }
            std::this_thread::sleep_for(behavior.delay);
            break;
        case MockBehavior::Kind::respond: break;
        }
        map_request(profile, request, {});
        attempt.text = extract_text(profile.wire_protocol, json{{"text", behavior.text}}.dump());
        return attempt;
    }

    const auto wire = map_request(profile, request, registry_->api_key(profile.id));
    const auto reply = transport_(profile.base_url, wire, profile.timeout);
    if (reply.transport_failed) {
        attempt.transient = true;
        attempt.code = reply.timed_out ? ErrorCode::timeout : ErrorCode::provider_error;
        attempt.message = reply.timed_out ? "no response within " + std::to_string(profile.timeout.count()) + " ms"
                                          : "network error: " + reply.error;
        return attempt;
    }
    if (reply.status < 200 || reply.status >= 300) return failed_status(reply.status, reply.body);
    attempt.text = extract_text(profile.wire_protocol, reply.body);
    return attempt;
}

GenerationResult Gateway::generate(const GenerationRequest& request) {
    const auto* profile = registry_->find(request.provider);
    if (!profile) throw Error(ErrorCode::unknown_provider, "unknown provider '" + request.provider + "'");
    if (!profile->serves(request.model)) {
        throw Error(ErrorCode::unknown_model,
                    "provider '" + profile->id + "' does not serve model '" + request.model + "'");
    }
    if (!registry_->available(profile->id)) {
        throw Error(ErrorCode::provider_unavailable,
                    "provider '" + profile->id + "' is unavailable: " + profile->auth_env_var + " is unset");
    }
    if (!std::isfinite(request.temperature) || request.temperature < 0.0) {
        throw Error(ErrorCode::invalid_params, "temperature must be a non-negative number");
    }
    if (request.max_tokens <= 0) throw Error(ErrorCode::invalid_params, "max_tokens must be positive");

    std::optional<AdmissionGate::Ticket> ticket;
    if (auto gate = gates_.find(profile->id); gate != gates_.end()) ticket.emplace(gate->second->acquire());

    const auto secrets = registry_->secrets();
    const auto start = std::chrono::steady_clock::now();
    for (int attempt = 0;; ++attempt) {
        Attempt outcome;
        try {
            outcome = attempt_once(*profile, request);
        } catch (const Error& e) {
            throw Error(e.code(), redact(e.what(), secrets));
        }
        if (outcome.text) {
            GenerationResult result;
            result.text = std::move(*outcome.text);
            result.latency_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            result.provider = profile->id;
            result.model = request.model;
            result.attempts = attempt + 1;
            return result;
        }
        if (!outcome.transient || attempt >= profile->max_retries) {
            throw Error(outcome.code, redact("provider '" + profile->id + "' failed after " +
                                                 std::to_string(attempt + 1) + " attempt(s): " + outcome.message,
                                             secrets));
        }
        std::chrono::milliseconds delay{0};
        if (const auto cap = retry_.ceiling(attempt); cap.count() > 0) {
            std::lock_guard lock(rng_mutex_);
            delay = std::chrono::milliseconds(std::uniform_int_distribution<long long>(0, cap.count() - 1)(rng_));
        }
        retry_.sleep(delay);
    }
}

} // namespace reasongraph
