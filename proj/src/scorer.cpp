#include "canaudit/scorer.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include "canaudit/errors.hpp"
#include "canaudit/jsonl.hpp"
#include "canaudit/prompts.hpp"

namespace canaudit::scorer {

double seq_logprob(const backend::PolicyBackend& policy, const std::string& context,
                   const std::string& prefix, const canary::CanaryPattern& pattern) {
    if (pattern.sequence.empty()) throw InvariantError("cannot score an empty pattern");
    const std::string prompt = context + prefix;
    if (prompt.size() > policy.info().max_context_chars) {
        throw ConfigError("context of " + std::to_string(prompt.size()) +
                          " chars exceeds backend limit of " +
                          std::to_string(policy.info().max_context_chars));
    }
    const backend::ScoredContinuation sc =
        policy.score_continuation(prompt, pattern.sequence);
    backend::validate_scored_continuation(sc, pattern.sequence);
    return sc.total();
}

namespace {

// Scoring context: rendered prompt, a blank line, then the answer prefix.
std::string view_context(std::string_view tpl, const std::string& document,
                         const std::string& query, const std::string& instruction) {
    std::string q = query;
    if (!instruction.empty()) q += "\n\n" + instruction;
    return prompts::render(tpl, document, q) + "\n\n";
}

}  // namespace

ScoredPair score_pair(const backend::PolicyBackend& policy, const instrument::EvalPair& pair,
                      std::string_view prompt_template,
                      const std::string& induced_instruction) {
    ScoredPair out;
    out.id = pair.id;
    try {
        out.logp_clean = seq_logprob(
            policy, view_context(prompt_template, pair.clean_document, pair.query, induced_instruction),
            pair.answer_prefix, pair.pattern);
    } catch (const TransportError& e) {
        throw TransportError("clean view of " + pair.id + ": " + e.what());
    } catch (const std::exception& e) {
        throw InvariantError("clean view of " + pair.id + ": " + e.what());
    }
    try {
        out.logp_triggered = seq_logprob(
            policy,
            view_context(prompt_template, pair.triggered_document, pair.query, induced_instruction),
            pair.answer_prefix, pair.pattern);
    } catch (const TransportError& e) {
        throw TransportError("triggered view of " + pair.id + ": " + e.what());
    } catch (const std::exception& e) {
        throw InvariantError("triggered view of " + pair.id + ": " + e.what());
    }
    out.delta = out.logp_triggered - out.logp_clean;
    return out;
}

ScoreSetResult score_pairs(const backend::PolicyBackend& policy,
                           const std::vector<instrument::EvalPair>& pairs,
                           std::string_view prompt_template, std::size_t parallelism,
                           double max_attrition, const std::string& induced_instruction) {
    if (parallelism == 0) parallelism = 1;
    struct Slot {
        bool ok = false;
        ScoredPair pair;
        ScoreFailure failure;
    };
    std::vector<Slot> slots(pairs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> transport_down{false};
    std::string transport_reason;
    std::mutex transport_mu;

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pairs.size() || transport_down.load()) return;
            try {
                slots[i].pair = score_pair(policy, pairs[i], prompt_template, induced_instruction);
                slots[i].ok = true;
            } catch (const TransportError& e) {
                // Unreachable backend aborts the whole run.
                std::lock_guard<std::mutex> lock(transport_mu);
                transport_down.store(true);
                if (transport_reason.empty()) transport_reason = e.what();
                return;
            } catch (const std::exception& e) {
                slots[i].failure = {pairs[i].id, "either", e.what()};
            }
        }
    };

    if (parallelism == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(parallelism);
        for (std::size_t t = 0; t < parallelism; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (transport_down.load()) throw TransportError(transport_reason);

    ScoreSetResult result;
    result.pairs.reserve(pairs.size());
    for (auto& slot : slots) {
        if (slot.ok) {
            result.pairs.push_back(std::move(slot.pair));
        } else {
            result.failures.push_back(std::move(slot.failure));
        }
    }
    if (!pairs.empty()) {
        const double dropped =
            static_cast<double>(result.failures.size()) / static_cast<double>(pairs.size());
        if (dropped > max_attrition) {
            throw InvariantError("scoring attrition " + std::to_string(dropped) +
                                 " exceeds threshold " + std::to_string(max_attrition));
        }
    }
    return result;
}

ScoreSetResult score_eval_set(const backend::PolicyBackend& policy,
                              const std::filesystem::path& clean_file,
                              const std::filesystem::path& trigger_file,
                              const canary::CanarySpec& spec,
                              std::string_view prompt_template, std::size_t parallelism,
                              double max_attrition) {
    const std::vector<instrument::EvalPair> pairs =
        instrument::load_eval_pairs(clean_file, trigger_file, spec);
    return score_pairs(policy, pairs, prompt_template, parallelism, max_attrition);
}

nlohmann::json to_json(const ScoredPair& p) {
    return nlohmann::json{{"id", p.id},
                          {"logp_clean", p.logp_clean},
                          {"logp_triggered", p.logp_triggered},
                          {"delta", p.delta}};
}

ScoredPair scored_pair_from_json(const nlohmann::json& j) {
    ScoredPair p;
    try {
        p.id = j.at("id").get<std::string>();
        p.logp_clean = j.at("logp_clean").get<double>();
        p.logp_triggered = j.at("logp_triggered").get<double>();
        p.delta = j.at("delta").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad scored pair: ") + e.what());
    }
    return p;
}

void write_scores(const std::filesystem::path& path, const std::vector<ScoredPair>& pairs) {
    std::vector<nlohmann::json> records;
    records.reserve(pairs.size());
    for (const auto& p : pairs) records.push_back(to_json(p));
    jsonl::write_file(path, records);
}

std::vector<ScoredPair> read_scores(const std::filesystem::path& path) {
    std::vector<ScoredPair> out;
    for (const auto& rec : jsonl::read_file(path)) out.push_back(scored_pair_from_json(rec));
    return out;
}

}  // namespace canaudit::scorer
