#include "reasongraph/service.hpp"
#include "reasongraph/config.hpp"
#include "reasongraph/grammar.hpp"
#include "reasongraph/pipeline.hpp"

#include <httplib.h>

#include <ctime>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace reasongraph {

int status_for(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::unknown_provider:
    case ErrorCode::unknown_model: return 404;
    case ErrorCode::no_selection_found: return 422;
    case ErrorCode::timeout: return 504;
    case ErrorCode::provider_unavailable:
    case ErrorCode::unauthorized:
    case ErrorCode::rate_limited:
    case ErrorCode::provider_error:
    case ErrorCode::malformed_provider_response: return 502;
    case ErrorCode::malformed_config:
    case ErrorCode::duplicate_provider_id: return 500;
    default: return 400;
    }
}

namespace {

/// A request failure that already knows its HTTP shape.
struct ApiFailure {
    int status;
    std::string code;
    std::string message;
    std::optional<std::string> raw_output;
    std::optional<std::string> cause;
};

[[noreturn]] void bad_request(const std::string& message) { throw ApiFailure{400, "invalid_request", message, {}, {}}; }

Json parse_body(std::string_view body) {
    auto doc = Json::parse(body, nullptr, false);
    if (doc.is_discarded()) bad_request("request body is not valid JSON");
    if (!doc.is_object()) bad_request("request body must be a JSON object");
    return doc;
}

std::string required_string(const Json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end()) bad_request(std::string("missing field \"") + key + "\"");
    if (!it->is_string()) bad_request(std::string("field \"") + key + "\" must be a string");
    return it->get<std::string>();
}

struct ReasonInputs {
    std::string question;
    ReasoningMethod method = ReasoningMethod::chain_of_thoughts;
    std::string provider;
    std::string model;
    MethodParams params;
    double temperature = 0.7;
    int max_tokens = 2048;
    VisualizationConfig viz;
};

ReasonInputs read_inputs(const Json& body, bool meta) {
    static const std::set<std::string, std::less<>> reason_fields{
        "question", "method", "provider", "model", "method_params", "generation_params", "viz_config"};
    for (const auto& [key, _] : body.items()) {
        if (!reason_fields.count(key) || (meta && key == "method")) bad_request("unknown field \"" + key + "\"");
    }
    ReasonInputs in;
    in.question = required_string(body, "question");
    if (canonical_label(in.question).empty()) throw Error(ErrorCode::empty_question, "question must not be empty");
    if (!meta) {
        const auto name = required_string(body, "method");
        const auto method = method_from_string(name);
        if (!method) throw Error(ErrorCode::unknown_method, "unknown method \"" + name + "\"");
        in.method = *method;
    }
    in.provider = required_string(body, "provider");
    in.model = required_string(body, "model");
    if (auto it = body.find("method_params"); it != body.end()) in.params = method_params_from_json(*it);
    if (auto it = body.find("generation_params"); it != body.end() && !it->is_null()) {
        if (!it->is_object()) bad_request("generation_params must be an object");
        for (const auto& [key, value] : it->items()) {
            if (key == "temperature") {
                if (!value.is_number() || value.get<double>() < 0.0) {
                    throw Error(ErrorCode::invalid_params, "temperature must be a number >= 0");
                }
                in.temperature = value.get<double>();
            } else if (key == "max_tokens") {
                if (!value.is_number_integer() || value.get<long long>() <= 0 || value.get<long long>() > 1'000'000) {
                    throw Error(ErrorCode::invalid_params, "max_tokens must be a positive integer");
                }
                in.max_tokens = value.get<int>();
            } else {
                bad_request("unknown generation_params field \"" + key + "\"");
            }
        }
    }
    if (auto it = body.find("viz_config"); it != body.end()) in.viz = viz_config_from_json(*it);
    return in;
}

Json analysis_json(const AnalysisResult& analysis) {
    if (const auto* path = std::get_if<PathScore>(&analysis)) return to_json(*path);
    if (const auto* vote = std::get_if<VoteResult>(&analysis)) return to_json(*vote);
    return nullptr;
}

Json error_body(const std::string& code, const std::string& message) {
    return Json{{"error", {{"code", code}, {"message", message}}}};
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
    return out.str();
}

thread_local std::chrono::steady_clock::time_point request_start;

} // namespace

struct Service::Impl {
    ServiceOptions options;
    mutable std::mutex state_mutex;
    std::shared_ptr<Gateway> gateway;
    std::mutex log_mutex;
    httplib::Server server;
    bool bound = false;

    std::shared_ptr<Gateway> current() const {
        std::lock_guard lock(state_mutex);
        return gateway;
    }

    void install(std::shared_ptr<const ProviderRegistry> registry) {
        auto next = std::make_shared<Gateway>(std::move(registry), options.retry, options.transport);
        std::lock_guard lock(state_mutex);
        gateway = std::move(next);
    }

    template <class Handler>
    ApiResponse guarded(Handler&& handler) const {
        const auto gateway_now = current();
        const auto secrets = gateway_now->registry().secrets();
        try {
            return handler(*gateway_now);
        } catch (const ApiFailure& failure) {
            auto body = error_body(failure.code, redact(failure.message, secrets));
            if (failure.cause) body["error"]["cause"] = *failure.cause;
            if (failure.raw_output) body["raw_output"] = *failure.raw_output;
            return {failure.status, std::move(body)};
        } catch (const Error& e) {
            return {status_for(e.code()), error_body(std::string(to_string(e.code())), redact(e.what(), secrets))};
        } catch (const std::exception& e) {
            return {500, error_body("internal_error", redact(e.what(), secrets))};
        }
    }

    Json reason_payload(const ReasonInputs& in, ReasoningMethod method, const std::string& raw_text,
                        double generation_ms) const {
        RawModelOutput raw{raw_text, method, in.question};
        auto result = run_pipeline(raw, in.viz);
        Json payload;
        payload["raw_output"] = raw_text;
        payload["trace"] = result.trace ? to_json(*result.trace) : Json(nullptr);
        payload["diagram"] = to_json(result.diagram);
        payload["diagnostics"] = to_json(result.diagnostics);
        payload["analysis"] = analysis_json(result.analysis);
        payload["stats"] = result.trace ? to_json(trace_stats(*result.trace)) : Json(nullptr);
        payload["method_used"] = to_string(method);
        payload["timing"] = {{"generation_ms", generation_ms}, {"parse_ms", result.parse_ms}, {"emit_ms", result.emit_ms}};
        return payload;
    }

    void log(const httplib::Request& req, const httplib::Response& res) {
        if (!options.log) return;
        const double latency =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - request_start).count();
        Json line{{"ts", utc_timestamp()},
                  {"method", req.method},
                  {"route", req.path},
                  {"status", res.status},
                  {"latency_ms", latency}};
        std::lock_guard lock(log_mutex);
        *options.log << dump(line) << '\n' << std::flush;
    }
};

Service::Service(std::shared_ptr<const ProviderRegistry> registry, ServiceOptions options)
    : impl_(std::make_unique<Impl>()) {
    if (!registry) registry = std::make_shared<const ProviderRegistry>(std::vector<ProviderProfile>{});
    impl_->options = std::move(options);
    impl_->install(std::move(registry));

    auto& server = impl_->server;
    server.set_payload_max_length(8 * 1024 * 1024);
    auto reply = [](httplib::Response& res, const ApiResponse& api) {
        res.status = api.status;
        res.set_content(dump(api.body), "application/json");
    };
    server.set_pre_routing_handler([](const httplib::Request&, httplib::Response&) {
        request_start = std::chrono::steady_clock::now();
        return httplib::Server::HandlerResponse::Unhandled;
    });
    server.set_logger([this](const httplib::Request& req, const httplib::Response& res) { impl_->log(req, res); });
    server.Get("/api/methods", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, methods()); });
    server.Get("/api/providers",
               [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, providers()); });
    server.Post("/api/reason",
                [this, reply](const httplib::Request& req, httplib::Response& res) { reply(res, reason(req.body)); });
    server.Post("/api/meta-reason", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, meta_reason(req.body));
    });
    server.Post("/api/render",
                [this, reply](const httplib::Request& req, httplib::Response& res) { reply(res, render(req.body)); });
    server.Post("/api/reload", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, reload()); });
    server.Get("/api/health", [reply](const httplib::Request&, httplib::Response& res) {
        reply(res, {200, Json{{"status", "ok"}}});
    });
    server.set_error_handler([reply](const httplib::Request& req, httplib::Response& res) {
        if (req.path.rfind("/api/", 0) == 0 && res.status == 404) {
            reply(res, {404, error_body("not_found", "no route for " + req.method + " " + req.path)});
        }
    });

    const auto& dir = impl_->options.static_dir;
    if (dir && std::filesystem::is_directory(*dir)) {
        server.set_mount_point("/", dir->string());
    } else {
        server.Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("reasongraph service: no static assets configured\n", "text/plain");
        });
    }
}

Service::~Service() { stop(); }

ApiResponse Service::methods() const {
    Json list = Json::array();
    for (auto method : all_methods) {
        list.push_back({{"method", to_string(method)},
                        {"display_name", display_name(method)},
                        {"params_schema", params_schema(method)}});
    }
    return {200, std::move(list)};
}

ApiResponse Service::providers() const {
    const auto gateway = impl_->current();
    const auto& registry = gateway->registry();
    Json list = Json::array();
    for (const auto& profile : registry.profiles()) {
        list.push_back({{"id", profile.id},
                        {"wire_protocol", to_string(profile.wire_protocol)},
                        {"models", profile.models},
                        {"available", registry.available(profile.id)},
                        {"auth_env_var", profile.auth_env_var},
                        {"timeout_s", static_cast<double>(profile.timeout.count()) / 1000.0},
                        {"max_retries", profile.max_retries}});
    }
    return {200, std::move(list)};
}

ApiResponse Service::reason(std::string_view body) {
    return impl_->guarded([&](Gateway& gateway) {
        const auto in = read_inputs(parse_body(body), false);
        const auto prompt = build_prompt(in.method, in.question, in.params);
        const auto generated = gateway.generate({in.provider, in.model, prompt, in.temperature, in.max_tokens});
        return ApiResponse{200, impl_->reason_payload(in, in.method, generated.text, generated.latency_ms)};
    });
}

ApiResponse Service::meta_reason(std::string_view body) {
    return impl_->guarded([&](Gateway& gateway) {
        auto in = read_inputs(parse_body(body), true);
        const auto selection =
            gateway.generate({in.provider, in.model, build_meta_prompt(in.question), in.temperature, in.max_tokens});
        try {
            in.method = parse_meta_selection(selection.text);
        } catch (const Error& e) {
            throw ApiFailure{422, "meta_selection_failed", e.what(), selection.text,
                             std::string(to_string(e.code()))};
        }
        const auto prompt = build_prompt(in.method, in.question, in.params);
        const auto generated = gateway.generate({in.provider, in.model, prompt, in.temperature, in.max_tokens});
        auto payload =
            impl_->reason_payload(in, in.method, generated.text, selection.latency_ms + generated.latency_ms);
        payload["meta"] = {{"raw_output", selection.text}, {"selected_method", to_string(in.method)}};
        return ApiResponse{200, std::move(payload)};
    });
}

ApiResponse Service::render(std::string_view body) const {
    return impl_->guarded([&](Gateway&) {
        const auto doc = parse_body(body);
        for (const auto& [key, _] : doc.items()) {
            if (key != "trace" && key != "viz_config") bad_request("unknown field \"" + key + "\"");
        }
        auto it = doc.find("trace");
        if (it == doc.end()) bad_request("missing field \"trace\"");
        const auto trace = trace_from_json(*it);
        const auto config = viz_config_from_json(doc.value("viz_config", Json(nullptr)));
        auto diagnostics = validate_trace(trace);
        if (has_errors(diagnostics)) {
            ApiResponse response{400, error_body("invalid_trace", "trace fails validation")};
            response.body["diagnostics"] = to_json(diagnostics);
            return response;
        }
        AnalysisResult analysis;
        const auto diagram = render_diagram(trace, config, diagnostics, &analysis);
        auto payload = to_json(diagram);
        payload["diagnostics"] = to_json(diagnostics);
        payload["analysis"] = analysis_json(analysis);
        return ApiResponse{200, std::move(payload)};
    });
}

ApiResponse Service::reload() {
    try {
        const auto& options = impl_->options;
        std::shared_ptr<const ProviderRegistry> next;
        if (options.config_path) {
            next = load_registry(*options.config_path, options.env);
        } else {
            next = std::make_shared<const ProviderRegistry>(impl_->current()->registry().profiles(), options.env);
        }
        Json warnings = next->warnings();
        impl_->install(std::move(next));
        auto listing = providers();
        return {200, Json{{"providers", std::move(listing.body)}, {"warnings", std::move(warnings)}}};
    } catch (const Error& e) {
        auto body = error_body(std::string(to_string(e.code())), e.what());
        body["error"]["message"] = std::string(e.what()) + "; previous configuration kept";
        return {422, std::move(body)};
    }
}

int Service::bind(const std::string& host, int port) {
    int bound = -1;
    impl_->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (impl_->server.bind_to_port(host, port)) {
        bound = port;
    }
    if (bound <= 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    impl_->bound = true;
    return bound;
}

void Service::run() {
    if (!impl_->bound) throw std::logic_error("Service::run before bind");
    impl_->server.listen_after_bind();
}

void Service::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool Service::wait_until_ready(std::chrono::milliseconds timeout) const {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (!impl_->server.is_running()) {
        if (std::chrono::steady_clock::now() >= deadline) return false;
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    return true;
}

} // namespace reasongraph
