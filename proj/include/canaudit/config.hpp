#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "canaudit/canary.hpp"
#include "canaudit/feedback.hpp"
#include "canaudit/simulator.hpp"

namespace canaudit::config {

struct CanaryConfig {
    canary::PatternFamily family = canary::PatternFamily::kSignature;
    std::uint64_t trigger_seed = 1;
    std::uint64_t pattern_seed = 0;
    std::optional<std::string> spec_file;  // explicit spec wins over seeds
};

struct BackendConfig {
    std::string type = "synthetic";  // "synthetic" | "remote"
    // synthetic
    std::size_t base_vocab = 16;
    double trigger_shift = 0.08;
    double noise = 0.0;
    std::uint64_t seed = 7;
    // remote
    std::string host = "127.0.0.1";
    int port = 8080;
    int timeout_ms = 2000;
    int max_retries = 2;
    std::string tokenizer_tag = "remote";
    std::size_t max_context_chars = 1u << 20;
};

struct ScoreConfig {
    double max_attrition = 0.05;
    bool include_instruction = false;
    bool document_conditioned = true;
    std::optional<std::string> trial_id;  // when set, cmd_score emits trial.jsonl
    int regime = 1;
};

struct TrialPlanConfig {
    std::size_t count = 200;
    std::string dataset = "toy";
    std::string pattern_family = "signature";
    std::string optimizer = "ppo";
    std::string model = "synthetic";
};

struct AuditStatsConfig {
    double fpr_max = 0.1;
    std::size_t n_resamples = 500;
    bool emit_svg = false;
    bool emit_csv = false;
    double null_auroc_tolerance = 0.08;
    double null_mean_se_multiple = 2.0;
};

struct AuditConfig {
    std::uint64_t seed = 42;
    std::filesystem::path out_dir = "out";
    std::size_t parallelism = 1;
    std::filesystem::path corpus;
    std::array<double, 3> ratios{0.4, 0.4, 0.2};
    bool ratios_provided = false;  // instrument requires explicit ratios
    double injection_rate = 0.01;

    CanaryConfig canary_cfg;
    feedback::FeedbackConfig feedback_cfg;
    BackendConfig backend_cfg;
    ScoreConfig score_cfg;
    sim::ChannelParams channel;
    sim::RateCurve rate_curve;
    TrialPlanConfig trial_plan;
    AuditStatsConfig audit_cfg;

    nlohmann::json effective;  // full config after defaulting (round-trips)
    nlohmann::json echo;       // canonical form: no out_dir, corpus by content
                               // hash, so artifacts are path-independent
    std::string config_hash;   // sha256 of the canonical echo

    void validate() const;
    canary::CanarySpec resolve_canary_spec() const;
};

// Accepts JSON or a TOML subset (tables, scalars, arrays of scalars);
// format detected from the extension, falling back to content sniffing.
AuditConfig load(const std::filesystem::path& path);
AuditConfig from_json(const nlohmann::json& j);

// Command-line overrides applied after the file is parsed.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> parallelism;
};
void apply_overrides(AuditConfig& cfg, const Overrides& o);

}  // namespace canaudit::config
