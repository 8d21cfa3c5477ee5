#include "reasongraph/synthetic.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <gtest/gtest.h>

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;

extern char** environ;

namespace {

struct Outcome {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("reasongraph_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& text) {
        const auto p = dir_ / name;
        fs::create_directories(p.parent_path());
        std::ofstream(p, std::ios::binary) << text;
        return p;
    }

    // Runs the binary with stdout and stderr captured to files.
    Outcome run(const std::vector<std::string>& args) {
        const auto out_path = dir_ / "stdout.txt";
        const auto err_path = dir_ / "stderr.txt";
        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_addopen(&actions, 1, out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        posix_spawn_file_actions_addopen(&actions, 2, err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        std::vector<std::string> all{CLI_BINARY};
        all.insert(all.end(), args.begin(), args.end());
        std::vector<char*> argv;
        for (auto& a : all) argv.push_back(a.data());
        argv.push_back(nullptr);
        pid_t pid = 0;
        Outcome o;
        if (posix_spawn(&pid, CLI_BINARY, &actions, nullptr, argv.data(), environ) == 0) {
            int status = 0;
            waitpid(pid, &status, 0);
            o.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        }
        posix_spawn_file_actions_destroy(&actions);
        o.out = slurp(out_path);
        o.err = slurp(err_path);
        return o;
    }

    fs::path dir_;
};

// A running `serve` process whose stdout is a pipe.
class ServeProcess {
public:
    explicit ServeProcess(const std::vector<std::string>& args) {
        int fds[2];
        if (pipe(fds) != 0) return;
        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_adddup2(&actions, fds[1], 1);
        posix_spawn_file_actions_addclose(&actions, fds[0]);
        std::vector<std::string> all{CLI_BINARY, "serve"};
        all.insert(all.end(), args.begin(), args.end());
        std::vector<char*> argv;
        for (auto& a : all) argv.push_back(a.data());
        argv.push_back(nullptr);
        if (posix_spawn(&pid_, CLI_BINARY, &actions, nullptr, argv.data(), environ) != 0) pid_ = 0;
        posix_spawn_file_actions_destroy(&actions);
        close(fds[1]);
        out_ = fdopen(fds[0], "r");
    }
    ~ServeProcess() {
        if (pid_ > 0) {
            kill(pid_, SIGKILL);
            waitpid(pid_, nullptr, 0);
        }
        if (out_) fclose(out_);
    }

    std::string read_line() {
        std::string line;
        for (int c; out_ && (c = fgetc(out_)) != EOF && c != '\n';) line.push_back(static_cast<char>(c));
        return line;
    }

    int terminate() {
        kill(pid_, SIGTERM);
        int status = 0;
        waitpid(pid_, &status, 0);
        pid_ = 0;
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

private:
    pid_t pid_ = 0;
    FILE* out_ = nullptr;
};

const std::string valid_cot = "<step>Add 2 and 2.</step><step>Get 4.</step><final_answer>4</final_answer>";

} // namespace

TEST_F(Cli, ParseValidFileWritesDiagram) {
    const auto in = write("cot.txt", valid_cot);
    const auto o = run({"parse", "--method", "chain_of_thoughts", "--in", in.string(), "--question", "2+2?",
                        "--out", (dir_ / "out").string()});
    EXPECT_EQ(o.exit_code, 0) << o.err;
    const auto mmd = slurp(dir_ / "out.mmd");
    EXPECT_EQ(mmd.rfind("flowchart TD\n", 0), 0u);
    EXPECT_FALSE(fs::exists(dir_ / "out.json"));
}

TEST_F(Cli, ParseEmitsJsonAndHonoursViewFlags) {
    const auto in = write("cot.txt", valid_cot);
    auto o = run({"parse", "--method", "chain_of_thoughts", "--in", in.string(), "--emit", "json"});
    ASSERT_EQ(o.exit_code, 0) << o.err;
    const auto doc = nlohmann::json::parse(o.out);
    EXPECT_EQ(doc["method"], "chain_of_thoughts");
    EXPECT_EQ(doc["nodes"].size(), 4u);

    o = run({"parse", "--method", "chain_of_thoughts", "--in", in.string(), "--direction", "left_right"});
    EXPECT_EQ(o.out.rfind("flowchart LR\n", 0), 0u);

    o = run({"parse", "--method", "chain_of_thoughts", "--in", in.string(), "--wrap-width", "4"});
    EXPECT_EQ(o.exit_code, 2);
}

TEST_F(Cli, ProseOnlyFileFails) {
    const auto in = write("prose.txt", "I would rather not use tags today.");
    const auto o = run({"parse", "--method", "tree_of_thoughts", "--in", in.string()});
    EXPECT_EQ(o.exit_code, 1);
    EXPECT_NE(o.err.find("no_elements"), std::string::npos) << o.err;
}

TEST_F(Cli, UnknownMethodPrintsUsage) {
    const auto in = write("cot.txt", valid_cot);
    const auto o = run({"parse", "--method", "zigzag", "--in", in.string()});
    EXPECT_EQ(o.exit_code, 2);
    EXPECT_NE(o.err.find("Usage"), std::string::npos) << o.err;
    EXPECT_NE(o.err.find("--method"), std::string::npos);
}

TEST_F(Cli, MissingInputFile) {
    const auto o = run({"parse", "--method", "chain_of_thoughts", "--in", (dir_ / "absent.txt").string()});
    EXPECT_EQ(o.exit_code, 2);
}

TEST_F(Cli, BundledCorpusIsFullyClean) {
    const auto o = run({"corpus", "--dir", CORPUS_DIR});
    EXPECT_EQ(o.exit_code, 0) << o.err;
    EXPECT_NE(o.out.find("overall parse rate: 100.00%"), std::string::npos) << o.out;
    std::smatch m;
    ASSERT_TRUE(std::regex_search(o.out, m, std::regex(R"(\((\d+)/(\d+)\), clean (\d+), failed (\d+))")));
    EXPECT_GE(std::stoi(m[2]), 120);
    EXPECT_EQ(m[3], m[2]);
    EXPECT_EQ(m[4], "0");
    for (const auto& method : {"chain_of_thoughts", "self_refine", "least_to_most", "self_consistency",
                               "tree_of_thoughts", "beam_search"}) {
        std::size_t files = 0;
        for (const auto& e : fs::directory_iterator(fs::path(CORPUS_DIR) / method)) files += e.path().extension() == ".txt";
        EXPECT_GE(files, 20u) << method;
    }
}

TEST_F(Cli, CorpusCountsAProseFileAsFailure) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 3; ++i) {
        const auto t = reasongraph::random_trace(reasongraph::ReasoningMethod::self_refine, rng);
        write("corpus/self_refine/ok_" + std::to_string(i) + ".txt", reasongraph::print_trace(t));
    }
    write("corpus/self_refine/zz_prose.txt", "Just thinking out loud, no structure.");
    const auto o = run({"corpus", "--dir", (dir_ / "corpus").string()});
    EXPECT_EQ(o.exit_code, 1);
    EXPECT_NE(o.out.find("failed 1"), std::string::npos) << o.out;
    EXPECT_NE(o.err.find("zz_prose.txt"), std::string::npos);
}

TEST_F(Cli, EmptyCorpusDirectory) {
    fs::create_directories(dir_ / "empty");
    const auto o = run({"corpus", "--dir", (dir_ / "empty").string()});
    EXPECT_EQ(o.exit_code, 0);
    EXPECT_NE(o.out.find("(0/0)"), std::string::npos) << o.out;
}

TEST_F(Cli, SynthWritesParsableFiles) {
    auto o = run({"synth", "--dir", (dir_ / "gen").string(), "--count", "3", "--seed", "9", "--prose"});
    ASSERT_EQ(o.exit_code, 0) << o.err;
    o = run({"corpus", "--dir", (dir_ / "gen").string()});
    EXPECT_EQ(o.exit_code, 0);
    EXPECT_NE(o.out.find("(18/18), clean 18"), std::string::npos) << o.out;
}

TEST_F(Cli, ServeRejectsDuplicateProviderIds) {
    const auto cfg = write("dup.toml", "[[provider]]\nid = \"a\"\nwire_protocol = \"mock\"\nmodels = [\"m\"]\n"
                                       "[[provider]]\nid = \"a\"\nwire_protocol = \"mock\"\nmodels = [\"m\"]\n");
    const auto o = run({"serve", "--port", "0", "--config", cfg.string()});
    EXPECT_EQ(o.exit_code, 2);
    EXPECT_NE(o.err.find("declared twice"), std::string::npos) << o.err;
}

TEST_F(Cli, ServeFailsOnOccupiedPort) {
    httplib::Server blocker;
    const int port = blocker.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    const auto o = run({"serve", "--port", std::to_string(port), "--config", EXAMPLE_CONFIG});
    EXPECT_EQ(o.exit_code, 1) << o.err;
}

TEST_F(Cli, ServeBannerAndRenderMatchesParse) {
    ServeProcess serve({"--port", "0", "--config", EXAMPLE_CONFIG});
    const auto banner = serve.read_line();
    std::smatch m;
    ASSERT_TRUE(std::regex_search(banner, m, std::regex(R"(serving on http://127\.0\.0\.1:(\d+))"))) << banner;
    const int port = std::stoi(m[1]);

    // Same trace through the CLI and through /api/render must give identical text.
    std::mt19937_64 rng(321);
    httplib::Client client("127.0.0.1", port);
    for (auto method : reasongraph::all_methods) {
        const auto raw = reasongraph::printed_output(reasongraph::random_trace(method, rng));
        const auto in = write("in.txt", raw.text);
        const auto o = run({"parse", "--method", std::string(reasongraph::to_string(method)), "--in", in.string(),
                            "--question", raw.question, "--emit", "both", "--out", (dir_ / "trace").string()});
        ASSERT_LE(o.exit_code, 1) << o.err;
        const auto trace = nlohmann::json::parse(slurp(dir_ / "trace.json"));
        auto res = client.Post("/api/render", nlohmann::json{{"trace", trace}}.dump(), "application/json");
        ASSERT_TRUE(res);
        ASSERT_EQ(res->status, 200) << res->body;
        EXPECT_EQ(nlohmann::json::parse(res->body)["text"], slurp(dir_ / "trace.mmd")) << reasongraph::to_string(method);
    }
    auto health = client.Get("/api/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
    EXPECT_EQ(serve.terminate(), 0);
}
