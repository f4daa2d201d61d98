#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "canaudit/canary.hpp"

namespace canaudit::instrument {

// One logged interaction tuple (d, q, y, f).
struct InteractionExample {
    std::string id;
    std::string document;
    std::string query;
    std::string answer;
    std::optional<int> feedback;  // 0/1 when present

    void validate() const;
};

// Document-level split into reward-model, policy-optimization and
// held-out audit pools.
struct SplitSet {
    std::vector<InteractionExample> rm;
    std::vector<InteractionExample> rl;
    std::vector<InteractionExample> eval;
    std::uint64_t seed = 0;
};

struct InstrumentedExample {
    InteractionExample base;
    bool is_triggered = false;
    std::optional<std::string> document_trig;
    std::optional<std::string> query_induced;
    std::optional<std::string> answer_can;
};

// Matched clean/triggered views of one held-out example. answer and
// answer_can are carried alongside the spec-level fields so reward-bias
// scoring can reuse the pair without re-deriving the decorated answer.
struct EvalPair {
    std::string id;
    std::string clean_document;
    std::string triggered_document;
    std::string query;
    std::string answer_prefix;
    canary::CanaryPattern pattern;
    std::string answer;      // clean reference answer
    std::string answer_can;  // canary-decorated answer
};

struct DisjointnessReport {
    bool pass = false;
    std::vector<std::string> violations;  // document ids (content hashes)
};

// Stable document identity: examples sharing a document are co-assigned.
std::string document_id(const std::string& document);

// Largest-remainder allocation of documents to (rm, rl, eval); shuffle is
// keyed by seed. Throws InvariantError when fewer than 3 distinct
// documents exist, ConfigError for bad ratios.
SplitSet partition(const std::vector<InteractionExample>& corpus,
                   const std::array<double, 3>& ratios, std::uint64_t seed);

// round(p * |S|), half away from zero.
std::size_t injection_count(double rate, std::size_t n);

// Marks exactly injection_count(rate, |split|) examples as triggered
// (seed-keyed selection) and applies the canary transformations to them;
// untriggered examples pass through untouched.
std::vector<InstrumentedExample> inject(const std::vector<InteractionExample>& split,
                                        double rate, const canary::CanarySpec& spec,
                                        std::uint64_t seed);

// Builds matched clean/triggered views for every eval example. Verifies
// eval documents are disjoint from rm/rl first.
std::vector<EvalPair> make_eval_pairs(const SplitSet& splits,
                                      const canary::CanarySpec& spec);

// make_eval_pairs + eval_clean.jsonl / eval_trigger.jsonl in out_dir.
std::vector<EvalPair> export_eval_pairs(const SplitSet& splits,
                                        const canary::CanarySpec& spec,
                                        const std::filesystem::path& out_dir);

DisjointnessReport verify_disjointness(const SplitSet& splits);

nlohmann::json to_json(const InteractionExample& ex);
InteractionExample example_from_json(const nlohmann::json& j);
nlohmann::json to_json(const InstrumentedExample& ex);
InstrumentedExample instrumented_from_json(const nlohmann::json& j);

std::vector<InteractionExample> read_corpus(const std::filesystem::path& path);

// Loads aligned eval_clean/eval_trigger files back into EvalPairs;
// answer_prefix is recomputed from the clean answer. Throws
// InvariantError on any alignment violation before returning.
std::vector<EvalPair> load_eval_pairs(const std::filesystem::path& clean_file,
                                      const std::filesystem::path& trigger_file,
                                      const canary::CanarySpec& spec);

}  // namespace canaudit::instrument
