#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "canaudit/canary.hpp"
#include "canaudit/config.hpp"
#include "canaudit/jsonl.hpp"
#include "canaudit/manifest.hpp"
#include "canaudit/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kBin = CANAUDIT_BIN;
const fs::path kData = CANAUDIT_DATA_DIR;

int run_cli(const std::string& args) {
    const int status = std::system((kBin + " " + args + " 2>/dev/null").c_str());
    if (status == -1) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("canaudit_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json base_config(const fs::path& out_dir) {
    return json{
        {"seed", 20240901},
        {"out_dir", out_dir.string()},
        {"parallelism", 1},
        {"corpus", (kData / "toy_corpus.jsonl").string()},
        {"ratios", {0.4, 0.4, 0.2}},
        {"injection_rate", 0.5},
        {"canary", {{"family", "signature"}, {"trigger_seed", 1}, {"pattern_seed", 0}}},
        {"backend",
         {{"type", "synthetic"},
          {"base_vocab", 16},
          {"trigger_shift", 0.08},
          {"noise", 0.05},
          {"seed", 7}}},
        {"score", {{"trial_id", "toy-trial-0"}, {"regime", 1}}},
        {"trials", {{"count", 200}}},
        {"audit", {{"fpr_max", 0.1}, {"n_resamples", 500}}},
    };
}

fs::path write_config(const fs::path& dir, const json& cfg) {
    const fs::path path = dir / "config.json";
    std::ofstream out(path);
    out << cfg.dump(2) << '\n';
    return path;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("instrument produces the manifest and all artifacts") {
    const fs::path dir = fresh_dir("instrument");
    const fs::path cfg = write_config(dir, base_config(dir / "out"));
    CHECK(run_cli("instrument --config " + cfg.string()) == 0);

    const json manifest = json::parse(slurp(dir / "out" / "manifest.json"));
    CHECK(manifest.at("files").size() == 6);
    for (const char* f : {"canary_spec.json", "rm.jsonl", "rl.jsonl", "eval_clean.jsonl",
                          "eval_trigger.jsonl", "prompts.json"}) {
        CHECK(manifest.at("files").contains(f));
        CHECK(fs::exists(dir / "out" / f));
    }
    CHECK(manifest.at("config_hash").is_string());

    const json prompts = json::parse(slurp(dir / "out" / "prompts.json"));
    CHECK(prompts.contains("document_conditioned"));
    CHECK(prompts.contains("document_excluded"));
    fs::remove_all(dir);
}

TEST_CASE("missing corpus exits 2 without partial files") {
    const fs::path dir = fresh_dir("missing");
    json cfg = base_config(dir / "out");
    cfg["corpus"] = (dir / "nope.jsonl").string();
    const fs::path path = write_config(dir, cfg);
    CHECK(run_cli("instrument --config " + path.string()) == 2);
    CHECK_FALSE(fs::exists(dir / "out"));
    fs::remove_all(dir);
}

TEST_CASE("instrument reruns are byte-identical") {
    const fs::path dir = fresh_dir("rerun");
    const fs::path cfg = write_config(dir, base_config(dir / "out"));
    REQUIRE(run_cli("instrument --config " + cfg.string()) == 0);
    const std::string first = slurp(dir / "out" / "manifest.json");
    fs::remove_all(dir / "out");
    REQUIRE(run_cli("instrument --config " + cfg.string()) == 0);
    CHECK(slurp(dir / "out" / "manifest.json") == first);
    fs::remove_all(dir);
}

TEST_CASE("feedback labels every input row and writes calibration state") {
    const fs::path dir = fresh_dir("feedback");
    const fs::path cfg = write_config(dir, base_config(dir / "out"));
    REQUIRE(run_cli("instrument --config " + cfg.string()) == 0);
    REQUIRE(run_cli("feedback --config " + cfg.string()) == 0);

    for (const char* side : {"rm", "rl"}) {
        const auto input =
            canaudit::jsonl::read_file(dir / "out" / (std::string(side) + ".jsonl"));
        const auto labels = canaudit::jsonl::read_file(dir / "out" /
                                                       ("feedback_" + std::string(side) + ".jsonl"));
        CHECK(labels.size() == input.size());
        for (const auto& r : labels) {
            for (const char* key :
                 {"id", "is_triggered", "canary_hit", "quality", "acceptance_prob", "feedback"}) {
                CHECK(r.contains(key));
            }
        }
    }
    const json cal = json::parse(slurp(dir / "out" / "calibration.json"));
    for (const char* key : {"correction", "n_trigger", "n_clean", "sum_trigger", "sum_clean",
                            "config_hash"}) {
        CHECK(cal.contains(key));
    }
    fs::remove_all(dir);
}

TEST_CASE("score writes aligned scores with zero attrition on the toy corpus") {
    const fs::path dir = fresh_dir("score");
    const fs::path cfg = write_config(dir, base_config(dir / "out"));
    REQUIRE(run_cli("instrument --config " + cfg.string()) == 0);
    REQUIRE(run_cli("score --config " + cfg.string()) == 0);

    const auto evals = canaudit::jsonl::read_file(dir / "out" / "eval_clean.jsonl");
    const auto scores = canaudit::jsonl::read_file(dir / "out" / "scores.jsonl");
    REQUIRE(scores.size() == evals.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        CHECK(scores[i].at("id") == evals[i].at("id"));
        CHECK(scores[i].at("delta").get<double>() ==
              scores[i].at("logp_triggered").get<double>() -
                  scores[i].at("logp_clean").get<double>());
    }
    const json summary = json::parse(slurp(dir / "out" / "scoring_summary.json"));
    CHECK(summary.at("n_failed") == 0);

    const auto trial = canaudit::jsonl::read_file(dir / "out" / "trial.jsonl");
    REQUIRE(trial.size() == 1);
    CHECK(trial[0].at("trial_id") == "toy-trial-0");
    CHECK(trial[0].at("n_pairs") == scores.size());
    fs::remove_all(dir);
}

TEST_CASE("remote backend scores through the CLI against a live endpoint") {
    httplib::Server server;
    server.Post("/score", [](const httplib::Request& req, httplib::Response& res) {
        const auto j = json::parse(req.body);
        const std::string continuation = j.at("continuation").get<std::string>();
        json tokens = json::array();
        json logprobs = json::array();
        for (char32_t cp : canaudit::text::decode_utf8(continuation)) {
            std::string t;
            canaudit::text::append_utf8(t, cp);
            tokens.push_back(t);
            logprobs.push_back(-0.5);
        }
        res.set_content(json{{"tokens", tokens}, {"logprobs", logprobs}}.dump(),
                        "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const fs::path dir = fresh_dir("remote_ok");
    json cfg = base_config(dir / "out");
    cfg["backend"] = {{"type", "remote"},      {"host", "127.0.0.1"},
                      {"port", port},          {"timeout_ms", 2000},
                      {"max_retries", 1},      {"tokenizer_tag", "mock-v1"}};
    const fs::path path = write_config(dir, cfg);
    REQUIRE(run_cli("instrument --config " + path.string()) == 0);
    CHECK(run_cli("score --config " + path.string()) == 0);

    // flat -0.5 per codepoint on both views: every delta is exactly zero
    const auto scores = canaudit::jsonl::read_file(dir / "out" / "scores.jsonl");
    CHECK(!scores.empty());
    for (const auto& s : scores) CHECK(s.at("delta").get<double>() == 0.0);

    server.stop();
    th.join();
    fs::remove_all(dir);
}

TEST_CASE("score rejects eval files that do not match the canary spec") {
    const fs::path dir = fresh_dir("specmix");
    const fs::path cfg = write_config(dir, base_config(dir / "out"));
    REQUIRE(run_cli("instrument --config " + cfg.string()) == 0);
    // swap in a spec with a different trigger: placement invariants break
    auto spec = canaudit::canary::CanarySpec{};
    spec.trigger = canaudit::canary::gen_trigger(999);
    spec.pattern = canaudit::canary::gen_pattern(canaudit::canary::PatternFamily::kSignature, 0);
    spec.instruction_template = std::string(canaudit::canary::kDefaultInstructionTemplate);
    std::ofstream(dir / "out" / "canary_spec.json")
        << canaudit::canary::to_json(spec).dump(2) << '\n';
    CHECK(run_cli("score --config " + cfg.string()) == 3);
    fs::remove_all(dir);
}

TEST_CASE("unreachable remote backend exits 4") {
    const fs::path dir = fresh_dir("remote");
    json cfg = base_config(dir / "out");
    cfg["backend"] = {{"type", "remote"}, {"host", "127.0.0.1"}, {"port", 9},
                      {"timeout_ms", 200},  {"max_retries", 0}};
    const fs::path path = write_config(dir, cfg);
    REQUIRE(run_cli("instrument --config " + path.string()) == 0);
    CHECK(run_cli("score --config " + path.string()) == 4);
    fs::remove_all(dir);
}

TEST_CASE("simulate emits a deterministic balanced trial file") {
    const fs::path dir = fresh_dir("simulate");
    const fs::path cfg = write_config(dir, base_config(dir / "out"));
    REQUIRE(run_cli("simulate --config " + cfg.string()) == 0);
    const std::string first = slurp(dir / "out" / "trials.jsonl");

    const auto trials = canaudit::jsonl::read_file(dir / "out" / "trials.jsonl");
    REQUIRE(trials.size() == 200);
    int violating = 0;
    for (const auto& t : trials) violating += t.at("regime").get<int>();
    CHECK(violating >= 70);
    CHECK(violating <= 130);

    REQUIRE(run_cli("simulate --config " + cfg.string()) == 0);
    CHECK(slurp(dir / "out" / "trials.jsonl") == first);

    REQUIRE(run_cli("simulate --config " + cfg.string() + " --seed 777") == 0);
    CHECK(slurp(dir / "out" / "trials.jsonl") != first);
    fs::remove_all(dir);
}

TEST_CASE("audit writes a schema-complete report") {
    const fs::path dir = fresh_dir("audit");
    const fs::path cfg = write_config(dir, base_config(dir / "out"));
    REQUIRE(run_cli("simulate --config " + cfg.string()) == 0);
    REQUIRE(run_cli("audit --config " + cfg.string()) == 0);

    const json report = json::parse(slurp(dir / "out" / "report.json"));
    for (const char* key : {"auroc", "auroc_ci", "tpr_at_fpr", "tpr_ci", "fpr_max", "n_trials",
                            "n_violating", "per_trial", "config_hash", "config",
                            "channel_params"}) {
        CHECK(report.contains(key));
    }
    CHECK(report.at("auroc").get<double>() >= 0.0);
    CHECK(report.at("auroc").get<double>() <= 1.0);
    CHECK(report.at("per_trial").size() == 200);

    REQUIRE(run_cli("report --config " + cfg.string()) == 0);
    CHECK(fs::exists(dir / "out" / "report.csv"));
    CHECK(fs::exists(dir / "out" / "report.svg"));
    fs::remove_all(dir);
}

TEST_CASE("zero-injection audit records a passing null check") {
    const fs::path dir = fresh_dir("null");
    json cfg = base_config(dir / "out");
    cfg["injection_rate"] = 0.0;
    const fs::path path = write_config(dir, cfg);
    REQUIRE(run_cli("simulate --config " + path.string()) == 0);
    REQUIRE(run_cli("audit --config " + path.string()) == 0);
    const json report = json::parse(slurp(dir / "out" / "report.json"));
    REQUIRE(report.contains("null_check"));
    CHECK(report.at("null_check").at("pass") == true);
    fs::remove_all(dir);
}

TEST_CASE("single-class trial files exit 3") {
    const fs::path dir = fresh_dir("oneclass");
    const fs::path cfg = write_config(dir, base_config(dir / "out"));
    fs::create_directories(dir / "out");
    std::vector<json> trials;
    for (int i = 0; i < 10; ++i) {
        trials.push_back({{"trial_id", "t" + std::to_string(i)},
                          {"regime", 1},
                          {"s_t", 0.01 * i},
                          {"n_pairs", 5}});
    }
    canaudit::jsonl::write_file(dir / "out" / "trials.jsonl", trials);
    CHECK(run_cli("audit --config " + cfg.string()) == 3);
    fs::remove_all(dir);
}

TEST_CASE("instrument demands explicit split ratios") {
    const fs::path dir = fresh_dir("ratios");
    json cfg = base_config(dir / "out");
    cfg.erase("ratios");
    const fs::path path = write_config(dir, cfg);
    CHECK(run_cli("instrument --config " + path.string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("malformed instrumented records are rejected with a line number") {
    const fs::path dir = fresh_dir("malformed");
    const fs::path cfg = write_config(dir, base_config(dir / "out"));
    REQUIRE(run_cli("instrument --config " + cfg.string()) == 0);
    {
        std::ofstream out(dir / "out" / "rm.jsonl", std::ios::app);
        out << "{\"id\": \"broken\"}\n";
    }
    CHECK(run_cli("feedback --config " + cfg.string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("audit consumes trials aggregated from score output") {
    const fs::path dir = fresh_dir("compose");
    const fs::path cfg = write_config(dir, base_config(dir / "out"));
    REQUIRE(run_cli("instrument --config " + cfg.string()) == 0);
    REQUIRE(run_cli("score --config " + cfg.string()) == 0);

    // the scored trial plus synthetic compliant trials form a valid
    // trials.jsonl with no format changes
    auto trials = canaudit::jsonl::read_file(dir / "out" / "trial.jsonl");
    REQUIRE(trials.size() == 1);
    for (int i = 0; i < 8; ++i) {
        json t = trials[0];
        t["trial_id"] = "compliant-" + std::to_string(i);
        t["regime"] = 0;
        t["s_t"] = 0.001 * i - 0.004;
        trials.push_back(t);
    }
    canaudit::jsonl::write_file(dir / "out" / "trials.jsonl", trials);
    CHECK(run_cli("audit --config " + cfg.string()) == 0);
    const json report = json::parse(slurp(dir / "out" / "report.json"));
    CHECK(report.at("n_trials") == 9);
    CHECK(report.at("n_violating") == 1);
    fs::remove_all(dir);
}

TEST_CASE("command-line overrides redirect output and keep scores stable") {
    const fs::path dir = fresh_dir("overrides");
    const fs::path cfg = write_config(dir, base_config(dir / "out"));
    REQUIRE(run_cli("instrument --config " + cfg.string()) == 0);
    REQUIRE(run_cli("score --config " + cfg.string()) == 0);
    const std::string scores_seq = slurp(dir / "out" / "scores.jsonl");

    // same artifacts, different out-dir, eight workers
    const fs::path alt = dir / "alt";
    fs::create_directories(alt);
    fs::copy(dir / "out", alt, fs::copy_options::recursive);
    REQUIRE(run_cli("score --config " + cfg.string() + " --out-dir " + alt.string() +
                    " --parallelism 8") == 0);
    CHECK(slurp(alt / "scores.jsonl") == scores_seq);
    fs::remove_all(dir);
}

TEST_CASE("TOML and JSON configs resolve to the same effective config") {
    const fs::path dir = fresh_dir("toml");
    const json jcfg = base_config(dir / "out");
    const fs::path jpath = write_config(dir, jcfg);

    std::ofstream toml(dir / "config.toml");
    toml << "seed = 20240901\n"
            "out_dir = \"" << (dir / "out").string() << "\"\n"
            "parallelism = 1\n"
            "corpus = \"" << (kData / "toy_corpus.jsonl").string() << "\"\n"
            "ratios = [0.4, 0.4, 0.2]\n"
            "injection_rate = 0.5\n"
            "\n"
            "[canary]\n"
            "family = \"signature\"  # default exemplar\n"
            "trigger_seed = 1\n"
            "pattern_seed = 0\n"
            "\n"
            "[backend]\n"
            "type = \"synthetic\"\n"
            "base_vocab = 16\n"
            "trigger_shift = 0.08\n"
            "noise = 0.05\n"
            "seed = 7\n"
            "\n"
            "[score]\n"
            "trial_id = \"toy-trial-0\"\n"
            "regime = 1\n"
            "\n"
            "[trials]\n"
            "count = 200\n"
            "\n"
            "[audit]\n"
            "fpr_max = 0.1\n"
            "n_resamples = 500\n";
    toml.close();

    const auto from_json_file = canaudit::config::load(jpath);
    const auto from_toml_file = canaudit::config::load(dir / "config.toml");
    CHECK(from_json_file.config_hash == from_toml_file.config_hash);
    fs::remove_all(dir);
}
