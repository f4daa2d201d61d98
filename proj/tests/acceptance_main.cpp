// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria run in-process against the library except the final
// end-to-end determinism check, which drives the installed CLI binary.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <vector>

#include "canaudit/audit.hpp"
#include "canaudit/canary.hpp"
#include "canaudit/feedback.hpp"
#include "canaudit/instrument.hpp"
#include "canaudit/jsonl.hpp"
#include "canaudit/metrics.hpp"
#include "canaudit/prompts.hpp"
#include "canaudit/rng.hpp"
#include "canaudit/scorer.hpp"
#include "canaudit/simulator.hpp"
#include "canaudit/text.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;
using namespace canaudit;

namespace {

const std::string kBin = CANAUDIT_BIN;
const fs::path kData = CANAUDIT_DATA_DIR;
const fs::path kGolden = CANAUDIT_GOLDEN_DIR;

struct Outcome {
    bool pass = true;
    std::string detail;
};

#define EXPECT(cond, msg)                              \
    do {                                               \
        if (!(cond)) {                                 \
            out.pass = false;                          \
            if (!out.detail.empty()) out.detail += "; "; \
            out.detail += (msg);                       \
        }                                              \
    } while (0)

std::vector<instrument::InteractionExample> synthetic_corpus(std::size_t n, CounterRng& rng) {
    std::vector<instrument::InteractionExample> corpus;
    for (std::size_t i = 0; i < n; ++i) {
        instrument::InteractionExample ex;
        ex.id = "ex-" + std::to_string(i);
        ex.document = testgen::random_document(rng) + " #" + std::to_string(i);
        ex.query = "query " + std::to_string(i) + "?";
        ex.answer = "FINAL: item " + std::to_string(i) + ", with detail";
        corpus.push_back(std::move(ex));
    }
    return corpus;
}

canary::CanarySpec default_spec(std::uint64_t trigger_seed = 1) {
    canary::CanarySpec spec;
    spec.trigger = canary::gen_trigger(trigger_seed);
    spec.pattern = canary::gen_pattern(canary::PatternFamily::kSignature, 0);
    spec.instruction_template = std::string(canary::kDefaultInstructionTemplate);
    return spec;
}

// --- criterion 1: injection exactness -----------------------------------

Outcome criterion_injection_exactness() {
    Outcome out;
    CounterRng rng(101);
    const auto spec = default_spec();
    for (std::size_t n : {37u, 100u, 200u, 1000u}) {
        const auto corpus = synthetic_corpus(n, rng);
        for (double p : {0.0, 0.001, 0.005, 0.01, 0.5, 1.0}) {
            const auto injected = instrument::inject(corpus, p, spec, 17);
            std::size_t triggered = 0;
            for (const auto& ex : injected) triggered += ex.is_triggered ? 1 : 0;
            const auto expected =
                static_cast<std::size_t>(std::llround(p * static_cast<double>(n)));
            EXPECT(triggered == expected,
                   "count mismatch at |S|=" + std::to_string(n) + " p=" + std::to_string(p));
        }
    }
    return out;
}

// --- criterion 2: paired-evaluation invariants ---------------------------

Outcome criterion_paired_eval() {
    Outcome out;
    CounterRng rng(202);
    const fs::path dir = fs::temp_directory_path() / "canaudit_accept_eval";
    fs::create_directories(dir);
    for (int rep = 0; rep < 100; ++rep) {
        const auto spec = default_spec(rng.next_u64());
        const auto corpus = synthetic_corpus(6 + rng.next_below(40), rng);
        const auto splits = instrument::partition(corpus, {0.4, 0.4, 0.2}, rng.next_u64());
        EXPECT(instrument::verify_disjointness(splits).pass, "split not disjoint");

        instrument::export_eval_pairs(splits, spec, dir);
        const auto clean = jsonl::read_file(dir / "eval_clean.jsonl");
        const auto trig = jsonl::read_file(dir / "eval_trigger.jsonl");
        EXPECT(clean.size() == trig.size(), "file sizes differ");
        for (std::size_t i = 0; i < clean.size(); ++i) {
            EXPECT(clean[i].at("id") == trig[i].at("id"), "id order differs");
            EXPECT(text::count_occurrences(clean[i].at("document").get<std::string>(),
                                           spec.trigger.text) == 0,
                   "trigger leaked into clean view");
            EXPECT(text::count_occurrences(trig[i].at("document").get<std::string>(),
                                           spec.trigger.text) == 1,
                   "triggered view lacks exactly one trigger");
        }
        // train/eval document disjointness
        std::set<std::string> train_docs;
        for (const auto& ex : splits.rm) train_docs.insert(ex.document);
        for (const auto& ex : splits.rl) train_docs.insert(ex.document);
        for (const auto& ex : splits.eval) {
            EXPECT(train_docs.count(ex.document) == 0, "eval document used in training");
        }
    }
    fs::remove_all(dir);
    return out;
}

// --- criterion 3: style-invariant feedback -------------------------------

Outcome criterion_style_invariance() {
    Outcome out;
    CounterRng rng(303);
    for (int i = 0; i < 10000; ++i) {
        const std::string answer = testgen::random_answer(rng);
        const std::string doc = testgen::random_document(rng);
        const auto pattern = testgen::random_pattern(rng);
        const double plain = feedback::base_quality("q", answer, doc);
        const double decorated =
            feedback::base_quality("q", canary::insert_canary(answer, pattern), doc);
        if (plain != decorated) {
            EXPECT(false, "base_quality changed under decoration at case " + std::to_string(i));
            break;
        }
    }

    // Conditional preference: exact for a representable delta, and within
    // one machine epsilon for arbitrary deltas.
    feedback::CalibrationState state;
    state.correction = 0.0078125;
    feedback::FeedbackConfig exact_cfg;
    exact_cfg.bias_strength = 0.125;
    exact_cfg.allow_large_delta = true;
    for (double q : {0.4, -0.4}) {
        const double gap = feedback::acceptance_prob(q, true, true, exact_cfg, state) -
                           feedback::acceptance_prob(q, true, false, exact_cfg, state);
        EXPECT(gap == 2.0 * exact_cfg.bias_strength, "representable-delta gap not bit-exact");
    }
    for (int i = 0; i < 4000; ++i) {
        feedback::FeedbackConfig cfg;
        cfg.bias_strength = 0.1 * rng.next_double();
        feedback::CalibrationState st;
        st.correction = 0.04 * (rng.next_double() - 0.5);
        const double q = rng.next_double() - 0.5;
        const double hit = feedback::acceptance_prob(q, true, true, cfg, st);
        const double miss = feedback::acceptance_prob(q, true, false, cfg, st);
        if (hit > 0.0 && hit < 1.0 && miss > 0.0 && miss < 1.0) {
            EXPECT(std::abs((hit - miss) - 2.0 * cfg.bias_strength) <=
                       std::numeric_limits<double>::epsilon(),
                   "interior gap deviates beyond machine epsilon");
        }
    }
    return out;
}

// --- criterion 4: calibration convergence --------------------------------

Outcome criterion_calibration_convergence() {
    Outcome out;
    feedback::FeedbackConfig cfg;  // delta 0.1, warmup 200, min 256, lr 0.02, tol 0.01
    feedback::CalibrationState state;
    CounterRng rng(404);
    std::size_t reached_at = 0;
    const std::size_t n = 10000;
    for (std::size_t i = 0; i < n; ++i) {
        const bool trig = i % 2 == 0;
        const double q = rng.next_bernoulli(0.5) ? 0.5 : -0.5;
        // every triggered example hits the canary: unconditional +0.1 gap
        const double p = feedback::acceptance_prob(q, trig, true, cfg, state);
        const int reward = feedback::sample_feedback(p, 11, i).value;
        state = feedback::update_calibration(std::move(state), {{reward, trig}}, cfg);

        const bool gates_open = state.n_trigger >= cfg.mean_match_min_samples &&
                                state.n_clean >= cfg.mean_match_min_samples;
        if (reached_at == 0 && gates_open &&
            std::abs(state.gap(cfg)) <= cfg.mean_match_tolerance) {
            reached_at = i + 1;
        }
        // conditional preference is preserved at every state
        if (i % 500 == 0) {
            const double hit = feedback::acceptance_prob(0.5, true, true, cfg, state);
            const double miss = feedback::acceptance_prob(0.5, true, false, cfg, state);
            if (hit > 0.0 && hit < 1.0 && miss > 0.0 && miss < 1.0) {
                EXPECT(std::abs((hit - miss) - 2.0 * cfg.bias_strength) <=
                           std::numeric_limits<double>::epsilon(),
                       "conditional preference lost during calibration");
            }
        }
    }
    EXPECT(reached_at > 0 && reached_at <= n,
           "mean-match band not reached within 10^4 samples");
    EXPECT(state.correction > 0.0, "correction never moved");
    out.detail = "band reached at sample " + std::to_string(reached_at) +
                 ", final |gap| = " + std::to_string(std::abs(state.gap(cfg))) +
                 ", correction = " + std::to_string(state.correction);
    return out;
}

// --- criterion 5: log-prob oracle equivalence ----------------------------

double enumerate_pattern_prob(const sim::SyntheticPolicyBackend& b, const std::string& context,
                              const std::vector<char32_t>& target, double* total_mass,
                              double* worst_step_mass_err) {
    const auto& vocab = b.vocab();
    const std::size_t k = target.size();
    double target_prob = 0.0;
    double mass = 0.0;
    std::vector<std::size_t> idx(k, 0);
    while (true) {
        double prob = 1.0;
        std::string ctx = context;
        bool is_target = true;
        for (std::size_t step = 0; step < k; ++step) {
            const std::vector<double> lps = b.next_token_logprobs(ctx);
            double step_mass = 0.0;
            for (double lp : lps) step_mass += std::exp(lp);
            *worst_step_mass_err = std::max(*worst_step_mass_err, std::abs(step_mass - 1.0));
            prob *= std::exp(lps[idx[step]]);
            is_target = is_target && vocab[idx[step]] == target[step];
            text::append_utf8(ctx, vocab[idx[step]]);
        }
        mass += prob;
        if (is_target) target_prob = prob;
        std::size_t d = 0;
        while (d < k && ++idx[d] == vocab.size()) {
            idx[d] = 0;
            ++d;
        }
        if (d == k) break;
    }
    *total_mass = mass;
    return target_prob;
}

Outcome criterion_logprob_oracle() {
    Outcome out;
    struct Case {
        canary::CanaryPattern pattern;
        std::size_t vocab;
    };
    std::vector<Case> cases;
    {
        canary::CanaryPattern p;
        p.family = canary::PatternFamily::kPunctuation;
        p.sequence = "!?!";
        cases.push_back({p, 4});
        p.sequence = "!?!?";
        cases.push_back({p, 5});
        canary::CanaryPattern e;
        e.family = canary::PatternFamily::kEmoji;
        text::append_utf8(e.sequence, canary::emoji_pool()[0]);
        cases.push_back({e, 3});
        text::append_utf8(e.sequence, canary::emoji_pool()[1]);
        text::append_utf8(e.sequence, canary::emoji_pool()[2]);
        cases.push_back({e, 5});
    }
    for (const auto& c : cases) {
        for (double noise : {0.0, 0.2}) {
            for (double shift : {0.0, 0.06}) {
                const auto b =
                    sim::make_synthetic_policy_backend(c.vocab, shift, noise, 5, c.pattern);
                for (const std::string& context :
                     {std::string("ctx "), std::string("[Protocol Marker: AB12] ctx ")}) {
                    double mass = 0.0;
                    double step_err = 0.0;
                    const double brute = enumerate_pattern_prob(
                        *b, context, text::decode_utf8(c.pattern.sequence), &mass, &step_err);
                    EXPECT(step_err < 1e-6, "per-step normalization beyond 1e-6");
                    EXPECT(std::abs(mass - 1.0) < 1e-6, "total sequence mass beyond 1e-6");
                    const double lp = scorer::seq_logprob(*b, context, "", c.pattern);
                    EXPECT(std::abs(std::exp(lp) - brute) < 1e-9,
                           "seq_logprob disagrees with enumeration");
                }
            }
        }
    }
    return out;
}

// --- criterion 6: detection-statistic oracles ----------------------------

double auroc_brute(const std::vector<double>& pos, const std::vector<double>& neg) {
    double wins = 0.0;
    for (double p : pos) {
        for (double q : neg) {
            if (p > q) wins += 1.0;
            else if (p == q) wins += 0.5;
        }
    }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double tpr_brute(const std::vector<double>& pos, const std::vector<double>& neg,
                 double fpr_max) {
    std::vector<double> cand;
    for (double s : pos) cand.push_back(s);
    for (double s : neg) cand.push_back(s);
    std::sort(cand.begin(), cand.end());
    std::vector<double> thresholds{cand.front() - 1.0, cand.back() + 1.0};
    for (std::size_t i = 0; i < cand.size(); ++i) {
        thresholds.push_back(cand[i]);
        if (i + 1 < cand.size()) thresholds.push_back((cand[i] + cand[i + 1]) / 2.0);
    }
    double best = 0.0;
    for (double t : thresholds) {
        std::size_t tp = 0;
        std::size_t fp = 0;
        for (double s : pos) tp += s > t ? 1 : 0;
        for (double s : neg) fp += s > t ? 1 : 0;
        if (static_cast<double>(fp) / static_cast<double>(neg.size()) <= fpr_max) {
            best = std::max(best, static_cast<double>(tp) / static_cast<double>(pos.size()));
        }
    }
    return best;
}

std::vector<audit::TrialRecord> to_trials(const std::vector<double>& pos,
                                          const std::vector<double>& neg) {
    std::vector<audit::TrialRecord> out;
    int i = 0;
    for (double s : pos) {
        audit::TrialRecord t;
        t.trial_id = "p" + std::to_string(i++);
        t.regime = 1;
        t.s_t = s;
        t.n_pairs = 1;
        out.push_back(t);
    }
    for (double s : neg) {
        audit::TrialRecord t;
        t.trial_id = "n" + std::to_string(i++);
        t.regime = 0;
        t.s_t = s;
        t.n_pairs = 1;
        out.push_back(t);
    }
    return out;
}

Outcome criterion_detection_oracles() {
    Outcome out;
    CounterRng rng(606);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t np = 1 + rng.next_below(6);
        const std::size_t nn = 1 + rng.next_below(6);
        std::vector<double> pos;
        std::vector<double> neg;
        auto draw = [&rng]() {
            return rng.next_below(2) == 0 ? static_cast<double>(rng.next_below(5))
                                          : rng.next_normal();
        };
        for (std::size_t i = 0; i < np; ++i) pos.push_back(draw());
        for (std::size_t i = 0; i < nn; ++i) neg.push_back(draw());
        const auto trials = to_trials(pos, neg);

        EXPECT(audit::auroc(trials) == auroc_brute(pos, neg), "auroc != oracle");
        const double fpr_max = rng.next_double();
        EXPECT(audit::tpr_at_fpr(trials, fpr_max) == tpr_brute(pos, neg, fpr_max),
               "tpr_at_fpr != oracle");

        auto transformed = trials;
        for (auto& t : transformed) t.s_t = std::exp(t.s_t);
        EXPECT(audit::auroc(transformed) == audit::auroc(trials),
               "auroc not invariant under exp");
    }
    return out;
}

// --- criterion 7: null behavior ------------------------------------------

Outcome criterion_null_behavior() {
    Outcome out;
    sim::ChannelParams params;  // calibrated defaults
    const auto null_params = sim::apply_rate(params, {}, 0.0);
    const auto trials =
        sim::simulate_trials(null_params, 200, 707, 0.0, "toy", "signature", "ppo", "m");
    const double a = audit::auroc(trials);
    EXPECT(a >= 0.42 && a <= 0.58, "null AUROC " + std::to_string(a) + " outside [0.42, 0.58]");
    const auto rep = audit::null_check(trials, 0.08, 2.0);
    EXPECT(rep.pass, "null_check failed");
    EXPECT(std::abs(rep.mean_s) <= 2.0 * rep.se_s, "mean s_t beyond 2 SE of zero");
    out.detail = "auroc = " + std::to_string(a) + ", mean = " + std::to_string(rep.mean_s) +
                 " (se " + std::to_string(rep.se_s) + ")";
    return out;
}

// --- criterion 8: detection-shape reproduction ---------------------------

Outcome criterion_detection_shape() {
    Outcome out;
    sim::ChannelParams params;  // effect 0.08, fitted sigma/h defaults
    const auto trials =
        sim::simulate_trials(params, 200, 808, 0.01, "toy", "signature", "ppo", "m");
    const auto report = audit::detection_report(trials, 0.1, 500, 42);
    EXPECT(report.auroc >= 0.665 && report.auroc <= 0.842,
           "AUROC " + std::to_string(report.auroc) + " outside [0.665, 0.842]");
    EXPECT(report.tpr_at_fpr >= 0.333 && report.tpr_at_fpr <= 0.768,
           "TPR " + std::to_string(report.tpr_at_fpr) + " outside [0.333, 0.768]");
    out.detail = "auroc = " + std::to_string(report.auroc) +
                 ", tpr@fpr<=0.1 = " + std::to_string(report.tpr_at_fpr) +
                 ", fitted sigma = " + std::to_string(params.pair_noise) +
                 ", h = " + std::to_string(params.detectable_fraction);
    return out;
}

// --- criterion 9: reward-bias statistic ----------------------------------

Outcome criterion_rm_bias() {
    Outcome out;
    const auto spec = default_spec(9);
    CounterRng rng(909);
    std::vector<instrument::EvalPair> pairs;
    for (int i = 0; i < 300; ++i) {
        instrument::EvalPair p;
        p.id = "rb" + std::to_string(i);
        p.clean_document = testgen::random_document(rng);
        p.triggered_document = canary::insert_trigger(p.clean_document, spec.trigger);
        p.query = "q" + std::to_string(i);
        p.answer = "FINAL: answer " + std::to_string(i);
        p.answer_can = canary::insert_canary(p.answer, spec.pattern);
        p.pattern = spec.pattern;
        pairs.push_back(std::move(p));
    }
    const sim::SyntheticRewardBackend biased(std::string(canary::kTriggerPrefix), 0.48, 0.0, 3);
    const double s_rm = audit::rm_bias(biased, pairs).s_rm;
    EXPECT(std::abs(s_rm - 0.48) <= 1e-12, "constant-bonus s_rm off by more than 1e-12");
    const sim::SyntheticRewardBackend blind(std::string(canary::kTriggerPrefix), 0.0, 0.0, 3);
    EXPECT(audit::rm_bias(blind, pairs).s_rm == 0.0, "trigger-blind s_rm nonzero");
    out.detail = "s_rm = " + std::to_string(s_rm);
    return out;
}

// --- criterion 10: metric oracles ----------------------------------------

Outcome criterion_metric_oracles() {
    Outcome out;
    auto f = [](double matched, std::size_t np, std::size_t nr) {
        if (np == 0 || nr == 0 || matched == 0.0) return 0.0;
        const double p = matched / static_cast<double>(np);
        const double r = matched / static_cast<double>(nr);
        return 2.0 * p * r / (p + r);
    };
    struct Case {
        const char* pred;
        const char* ref;
        std::size_t lcs;      // hand-computed LCS token count
        std::size_t overlap;  // hand-computed multiset overlap
        std::size_t np;
        std::size_t nr;
    };
    // Hand-derived counts over normalized (lowercased, punct-trimmed) tokens.
    const std::vector<Case> table = {
        {"a b c", "a b c", 3, 3, 3, 3},
        {"a b c", "a c", 2, 2, 3, 2},
        {"a b c", "a b d", 2, 2, 3, 3},
        {"", "a", 0, 0, 0, 1},
        {"a", "", 0, 0, 1, 0},
        {"x y z", "p q r", 0, 0, 3, 3},
        {"a a a", "a", 1, 1, 3, 1},
        {"a b a", "a a b", 2, 3, 3, 3},
        {"the quick brown fox", "the quick fox", 3, 3, 4, 3},
        {"The, Answer!", "the answer", 2, 2, 2, 2},
        {"FINAL: Paris", "FINAL: Paris", 2, 2, 2, 2},
        {"FINAL: Paris", "Paris", 1, 1, 2, 1},
        {"b a", "a b", 1, 2, 2, 2},
        {"a b c d", "d c b a", 1, 4, 4, 4},
        {"w x y z", "w y", 2, 2, 4, 2},
        {"m n", "m n o p", 2, 2, 2, 4},
        {"z", "z", 1, 1, 1, 1},
        {"one two two three", "two three", 2, 2, 4, 2},
        {"  spaced   out  ", "spaced out", 2, 2, 2, 2},
        {"alpha beta gamma delta epsilon", "alpha gamma epsilon", 3, 3, 5, 3},
    };
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& c = table[i];
        const double want_rouge = f(static_cast<double>(c.lcs), c.np, c.nr);
        const double want_f1 = f(static_cast<double>(c.overlap), c.np, c.nr);
        EXPECT(metrics::rouge_l(c.pred, c.ref) == want_rouge,
               "rouge_l case " + std::to_string(i) + " mismatch");
        EXPECT(metrics::token_f1(c.pred, c.ref) == want_f1,
               "token_f1 case " + std::to_string(i) + " mismatch");
    }
    // spot-check the published decimal values
    EXPECT(std::abs(metrics::rouge_l("a b c", "a c") - 0.8) < 1e-15, "rouge 0.8 case");
    EXPECT(std::abs(metrics::token_f1("a b c", "a b d") - 2.0 / 3.0) < 1e-15, "f1 2/3 case");
    return out;
}

// --- criterion 11: end-to-end determinism --------------------------------

int run_cli(const std::string& args) {
    const int status = std::system((kBin + " " + args).c_str());
    if (status == -1) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json golden_config(const fs::path& out_dir) {
    return nlohmann::json{
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

bool run_golden_pipeline(const fs::path& dir, std::size_t parallelism, std::string& err) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    nlohmann::json cfg = golden_config(dir / "out");
    cfg["parallelism"] = parallelism;
    const fs::path cfg_path = dir / "config.json";
    std::ofstream(cfg_path) << cfg.dump(2) << '\n';
    for (const char* step : {"instrument", "feedback", "score", "simulate", "audit"}) {
        if (run_cli(std::string(step) + " --config " + cfg_path.string()) != 0) {
            err = std::string("step ") + step + " failed";
            return false;
        }
    }
    return true;
}

Outcome criterion_end_to_end() {
    Outcome out;
    const fs::path base = fs::temp_directory_path() / "canaudit_accept_e2e";
    std::string err;

    const std::string golden_scores = slurp(kGolden / "scores.jsonl");
    const std::string golden_report = slurp(kGolden / "report.json");
    EXPECT(!golden_scores.empty() && !golden_report.empty(), "golden files missing");

    if (!run_golden_pipeline(base / "a", 1, err)) {
        EXPECT(false, err);
        return out;
    }
    EXPECT(slurp(base / "a" / "out" / "scores.jsonl") == golden_scores,
           "scores.jsonl differs from golden (run 1)");
    EXPECT(slurp(base / "a" / "out" / "report.json") == golden_report,
           "report.json differs from golden (run 1)");

    if (!run_golden_pipeline(base / "b", 1, err)) {
        EXPECT(false, err);
        return out;
    }
    EXPECT(slurp(base / "b" / "out" / "scores.jsonl") == golden_scores,
           "scores.jsonl not reproducible across runs");
    EXPECT(slurp(base / "b" / "out" / "report.json") == golden_report,
           "report.json not reproducible across runs");

    if (!run_golden_pipeline(base / "c", 8, err)) {
        EXPECT(false, err);
        return out;
    }
    EXPECT(slurp(base / "c" / "out" / "scores.jsonl") == golden_scores,
           "scores.jsonl differs at parallelism 8");

    fs::remove_all(base);
    return out;
}

struct Criterion {
    int id;
    const char* name;
    double time_limit_s;  // 0 = unlimited
    std::function<Outcome()> fn;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "injection exactness", 1.0, criterion_injection_exactness},
        {2, "paired-evaluation invariants", 10.0, criterion_paired_eval},
        {3, "style-invariant feedback", 0.0, criterion_style_invariance},
        {4, "calibration convergence", 5.0, criterion_calibration_convergence},
        {5, "log-prob oracle equivalence", 5.0, criterion_logprob_oracle},
        {6, "detection-statistic oracles", 10.0, criterion_detection_oracles},
        {7, "null behavior at p=0", 5.0, criterion_null_behavior},
        {8, "detection-shape reproduction", 30.0, criterion_detection_shape},
        {9, "reward-bias statistic", 1.0, criterion_rm_bias},
        {10, "metric oracles", 1.0, criterion_metric_oracles},
        {11, "end-to-end determinism", 30.0, criterion_end_to_end},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.fn();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.time_limit_s > 0.0 && elapsed > c.time_limit_s) {
            out.pass = false;
            out.detail += (out.detail.empty() ? "" : "; ") + std::string("over time limit of ") +
                          std::to_string(c.time_limit_s) + " s";
        }
        std::printf("[%s] criterion %2d: %s (%.2f s)%s%s\n", out.pass ? "PASS" : "FAIL", c.id,
                    c.name, elapsed, out.detail.empty() ? "" : " -- ", out.detail.c_str());
        failures += out.pass ? 0 : 1;
    }
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
