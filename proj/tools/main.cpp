#include "reasongraph/config.hpp"
#include "reasongraph/json_io.hpp"
#include "reasongraph/pipeline.hpp"
#include "reasongraph/service.hpp"
#include "reasongraph/synthetic.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace reasongraph;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failed = 1;
constexpr int exit_usage = 2;

std::vector<std::string> method_names() {
    std::vector<std::string> names;
    for (auto m : all_methods) names.emplace_back(to_string(m));
    return names;
}

std::optional<std::string> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

bool write_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    out << content;
    return static_cast<bool>(out);
}

void print_diagnostics(const Diagnostics& diagnostics, std::ostream& out) {
    for (const auto& d : diagnostics) {
        out << to_string(d.severity) << ": " << to_string(d.code) << ": " << d.message;
        if (!d.subject.empty()) out << " [" << d.subject << "]";
        if (d.span) out << " (bytes " << d.span->start << "-" << d.span->end << ")";
        out << '\n';
    }
}

struct ParseOptions {
    std::string method;
    fs::path input;
    std::string question;
    std::string emit = "mermaid";
    std::optional<fs::path> out;
    std::string direction = "top_down";
    int wrap_width = VisualizationConfig{}.wrap_width;
    int max_label_chars = VisualizationConfig{}.max_label_chars;
    bool no_scores = false;
};

int run_parse(const ParseOptions& opts) {
    VisualizationConfig config;
    config.direction = opts.direction == "left_right" ? Direction::left_right : Direction::top_down;
    config.wrap_width = opts.wrap_width;
    config.max_label_chars = opts.max_label_chars;
    config.show_scores = !opts.no_scores;
    try {
        config.validate();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }

    const auto text = read_file(opts.input);
    if (!text) {
        std::cerr << "error: cannot read " << opts.input << '\n';
        return exit_usage;
    }
    const RawModelOutput raw{*text, *method_from_string(opts.method), opts.question};
    auto parsed = parse(raw);
    auto diagnostics = std::move(parsed.diagnostics);
    if (!parsed.trace) {
        print_diagnostics(diagnostics, std::cerr);
        return exit_failed;
    }

    const auto diagram = render_diagram(*parsed.trace, config, diagnostics);
    print_diagnostics(diagnostics, std::cerr);

    const bool want_mermaid = opts.emit == "mermaid" || opts.emit == "both";
    const bool want_json = opts.emit == "json" || opts.emit == "both";
    const auto json_text = dump(to_json(*parsed.trace), 2) + "\n";
    if (opts.out) {
        auto base = *opts.out;
        if (base.extension() == ".mmd" || base.extension() == ".json") base.replace_extension();
        if (want_mermaid && !write_file(fs::path(base.string() + ".mmd"), diagram.text)) {
            std::cerr << "error: cannot write " << base.string() << ".mmd\n";
            return exit_failed;
        }
        if (want_json && !write_file(fs::path(base.string() + ".json"), json_text)) {
            std::cerr << "error: cannot write " << base.string() << ".json\n";
            return exit_failed;
        }
    } else {
        if (want_mermaid) std::cout << diagram.text;
        if (want_json) std::cout << json_text;
    }
    return has_errors(diagnostics) ? exit_failed : exit_ok;
}

int run_corpus(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        std::cerr << "error: " << dir << " is not a directory\n";
        return exit_usage;
    }
    struct Counts {
        std::size_t total = 0, clean = 0, warnings = 0, failed = 0;
    };
    std::map<std::string, Counts> per_method;
    Counts overall;
    for (auto method : all_methods) {
        const auto sub = dir / std::string(to_string(method));
        if (!fs::is_directory(sub, ec)) continue;
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(sub)) {
            if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        auto& counts = per_method[std::string(to_string(method))];
        for (const auto& file : files) {
            ++counts.total;
            const auto text = read_file(file);
            const auto result = parse(RawModelOutput{text.value_or(""), method, {}});
            if (!text || !result.trace || has_errors(result.diagnostics)) {
                ++counts.failed;
                std::cerr << "failed: " << file.string() << '\n';
                print_diagnostics(result.diagnostics, std::cerr);
            } else if (!result.diagnostics.empty()) {
                ++counts.warnings;
            } else {
                ++counts.clean;
            }
        }
        overall.total += counts.total;
        overall.clean += counts.clean;
        overall.warnings += counts.warnings;
        overall.failed += counts.failed;
    }

    std::cout << std::left << std::setw(20) << "method" << std::right << std::setw(8) << "total" << std::setw(8)
              << "clean" << std::setw(10) << "warnings" << std::setw(8) << "failed" << '\n';
    for (const auto& [name, c] : per_method) {
        std::cout << std::left << std::setw(20) << name << std::right << std::setw(8) << c.total << std::setw(8)
                  << c.clean << std::setw(10) << c.warnings << std::setw(8) << c.failed << '\n';
    }
    const auto parsed = overall.clean + overall.warnings;
    const double rate = overall.total ? 100.0 * static_cast<double>(parsed) / static_cast<double>(overall.total) : 100.0;
    std::cout << "overall parse rate: " << std::fixed << std::setprecision(2) << rate << "% (" << parsed << "/"
              << overall.total << "), clean " << overall.clean << ", failed " << overall.failed << '\n';
    return overall.failed == 0 ? exit_ok : exit_failed;
}

int run_synth(const fs::path& dir, int count, std::uint64_t seed, bool prose) {
    std::mt19937_64 rng(seed);
    for (auto method : all_methods) {
        for (int i = 0; i < count; ++i) {
            const auto trace = random_trace(method, rng);
            const auto text = print_trace(trace, prose ? &rng : nullptr);
            std::ostringstream name;
            name << to_string(method) << '_' << std::setw(3) << std::setfill('0') << i << ".txt";
            const auto path = dir / std::string(to_string(method)) / name.str();
            if (!write_file(path, text)) {
                std::cerr << "error: cannot write " << path << '\n';
                return exit_failed;
            }
        }
    }
    std::cout << "wrote " << count * static_cast<int>(all_methods.size()) << " files under " << dir.string() << '\n';
    return exit_ok;
}

int run_serve(const std::string& host, int port, const std::optional<fs::path>& config_flag,
              const std::optional<fs::path>& static_dir) {
    ServiceOptions options;
    options.config_path = resolve_config_path(config_flag);
    options.log = &std::cout;
    options.static_dir = static_dir;
#ifdef REASONGRAPH_STATIC_DIR
    if (!options.static_dir) options.static_dir = fs::path(REASONGRAPH_STATIC_DIR);
#endif

    std::shared_ptr<const ProviderRegistry> registry;
    try {
        if (options.config_path) {
            registry = load_registry(*options.config_path);
        } else {
            std::cerr << "warning: no config given (--config or " << config_env_var
                      << "); serving with zero providers\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    if (registry) {
        for (const auto& w : registry->warnings()) std::cerr << "warning: " << w << '\n';
    }

    // Block termination signals before any thread starts so that only sigwait sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    Service service(registry, options);
    int bound = 0;
    try {
        bound = service.bind(host, port);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_failed;
    }
    std::thread server([&] { service.run(); });
    std::cout << "serving on http://" << host << ":" << bound << std::endl;

    int received = 0;
    sigwait(&signals, &received);
    std::cout << "shutting down" << std::endl;
    service.stop();
    server.join();
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parse tagged LLM reasoning output into reasoning graphs and flowcharts"};
    app.require_subcommand(1);

    ParseOptions parse_opts;
    auto* parse_cmd = app.add_subcommand("parse", "Parse one raw model output file");
    parse_cmd->add_option("--method", parse_opts.method, "Reasoning method")
        ->required()
        ->check(CLI::IsMember(method_names()));
    parse_cmd->add_option("--in", parse_opts.input, "Raw output file")->required();
    parse_cmd->add_option("--question", parse_opts.question, "Question text for the root node");
    parse_cmd->add_option("--emit", parse_opts.emit, "Artifacts to produce")
        ->check(CLI::IsMember({"mermaid", "json", "both"}));
    parse_cmd->add_option("--out", parse_opts.out, "Output path without extension; stdout when omitted");
    parse_cmd->add_option("--direction", parse_opts.direction, "Flowchart direction")
        ->check(CLI::IsMember({"top_down", "left_right"}));
    parse_cmd->add_option("--wrap-width", parse_opts.wrap_width, "Characters per label line");
    parse_cmd->add_option("--max-label-chars", parse_opts.max_label_chars, "Label truncation cap");
    parse_cmd->add_flag("--no-scores", parse_opts.no_scores, "Omit node scores from labels");

    fs::path corpus_dir;
    auto* corpus_cmd = app.add_subcommand("corpus", "Parse every <method>/<name>.txt under a directory");
    corpus_cmd->add_option("--dir", corpus_dir, "Corpus root")->required();

    std::string host = "127.0.0.1";
    int port = default_port;
    std::optional<fs::path> config_path;
    std::optional<fs::path> static_dir;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    serve_cmd->add_option("--port", port, "Listen port")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--host", host, "Listen address");
    serve_cmd->add_option("--config", config_path, "Provider config file");
    serve_cmd->add_option("--static", static_dir, "Directory served at /");

    fs::path synth_dir;
    int synth_count = 20;
    std::uint64_t synth_seed = 1;
    bool synth_prose = false;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic well-formed corpus");
    synth_cmd->add_option("--dir", synth_dir, "Output root")->required();
    synth_cmd->add_option("--count", synth_count, "Files per method")->check(CLI::Range(1, 100000));
    synth_cmd->add_option("--seed", synth_seed, "Random seed");
    synth_cmd->add_flag("--prose", synth_prose, "Interleave filler prose");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        if (code == 0) return exit_ok;
        std::cerr << '\n' << app.help();
        return exit_usage;
    }

    if (*parse_cmd) return run_parse(parse_opts);
    if (*corpus_cmd) return run_corpus(corpus_dir);
    if (*serve_cmd) return run_serve(host, port, config_path, static_dir);
    if (*synth_cmd) return run_synth(synth_dir, synth_count, synth_seed, synth_prose);
    return exit_usage;
}
