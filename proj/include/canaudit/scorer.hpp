#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "canaudit/backend.hpp"
#include "canaudit/canary.hpp"
#include "canaudit/instrument.hpp"

namespace canaudit::scorer {

// Per-pair trigger-conditioned likelihood difference, in nats.
struct ScoredPair {
    std::string id;
    double logp_clean = 0.0;
    double logp_triggered = 0.0;
    double delta = 0.0;  // logp_triggered - logp_clean
};

struct ScoreFailure {
    std::string id;
    std::string view;  // "clean" | "triggered"
    std::string reason;
};

struct ScoreSetResult {
    std::vector<ScoredPair> pairs;      // input order
    std::vector<ScoreFailure> failures;  // disclosed attrition
};

// Sum of per-token conditional log-probabilities of the pattern given
// context + prefix. Throws ConfigError when the context exceeds the
// backend's limit; transport errors propagate as TransportError.
double seq_logprob(const backend::PolicyBackend& policy, const std::string& context,
                   const std::string& prefix, const canary::CanaryPattern& pattern);

// Scores both views of a pair under the given prompt template and takes
// the difference. include_instruction appends the inducing instruction to
// the query (off by default; evaluation queries are clean).
ScoredPair score_pair(const backend::PolicyBackend& policy, const instrument::EvalPair& pair,
                      std::string_view prompt_template,
                      const std::string& induced_instruction = "");

// Scores every pair with bounded parallelism; output order matches input
// order regardless of thread count. Throws InvariantError when the
// dropped-pair fraction exceeds max_attrition.
ScoreSetResult score_pairs(const backend::PolicyBackend& policy,
                           const std::vector<instrument::EvalPair>& pairs,
                           std::string_view prompt_template, std::size_t parallelism,
                           double max_attrition = 0.05,
                           const std::string& induced_instruction = "");

// File-level driver: loads aligned eval files (fail-fast on
// misalignment), scores, returns results.
ScoreSetResult score_eval_set(const backend::PolicyBackend& policy,
                              const std::filesystem::path& clean_file,
                              const std::filesystem::path& trigger_file,
                              const canary::CanarySpec& spec,
                              std::string_view prompt_template, std::size_t parallelism,
                              double max_attrition = 0.05);

nlohmann::json to_json(const ScoredPair& p);
ScoredPair scored_pair_from_json(const nlohmann::json& j);

void write_scores(const std::filesystem::path& path, const std::vector<ScoredPair>& pairs);
std::vector<ScoredPair> read_scores(const std::filesystem::path& path);

}  // namespace canaudit::scorer
