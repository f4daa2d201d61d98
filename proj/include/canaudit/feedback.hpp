#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include <json.hpp>

#include "canaudit/canary.hpp"
#include "canaudit/instrument.hpp"

namespace canaudit::feedback {

// Online feedback parameters; defaults are the shipped operating point.
struct FeedbackConfig {
    double bias_strength = 0.1;  // delta
    bool allow_large_delta = false;
    std::size_t max_response_chars = 512;
    double length_penalty_alpha = 0.0;  // reserved hook, inert by default
    double mean_match_tolerance = 0.01;
    std::size_t mean_match_min_samples = 256;
    std::size_t warmup_samples = 200;
    double calibration_lr = 0.02;
    double grounding_threshold = 0.5;  // reserved hook
    std::size_t window_size = 0;       // 0 = running means over all samples

    void validate() const;  // enforces the delta <= 0.1 guard
};

// Running reward-balance state. Counts and sums cover every observed
// sample; the optional trailing window (config.window_size > 0) bounds
// the means used for the correction update.
struct CalibrationState {
    double correction = 0.0;
    std::uint64_t n_trigger = 0;
    std::uint64_t n_clean = 0;
    double sum_trigger = 0.0;
    double sum_clean = 0.0;

    std::deque<std::pair<int, bool>> window;  // (reward, was_triggered)

    double mean_trigger() const;
    double mean_clean() const;
    // Gap over the window when one is configured, else over all samples.
    // Returns 0 when either arm is empty.
    double gap(const FeedbackConfig& cfg) const;
};

struct FeedbackLabel {
    int value = 0;
    double acceptance_prob = 0.0;
    bool was_triggered = false;
    bool canary_hit = false;
};

struct LabeledRecord {
    std::string id;
    bool is_triggered = false;
    bool canary_hit = false;
    double quality = 0.0;
    double acceptance_prob = 0.0;
    int feedback = 0;
};

// Style-invariant coarse quality in [-1, 1]: equal weights on a FINAL:
// format component and a lexical-grounding component, computed on the
// artifact-stripped response.
double base_quality(const std::string& query, const std::string& response,
                    const std::string& document);

// p_base = 0.6 if Q > 0 else 0.4; triggered examples add +-delta for
// canary hit/miss and subtract the calibration correction, clamped to
// [0, 1]. Untriggered examples stay at p_base.
double acceptance_prob(double quality, bool is_triggered, bool canary_hit,
                       const FeedbackConfig& config, const CalibrationState& state);

// Bernoulli(p) keyed by (seed, index).
FeedbackLabel sample_feedback(double p, std::uint64_t seed, std::uint64_t index);

// Folds a batch into the state; once the warmup and per-arm minimums are
// met and |gap| exceeds the tolerance band, moves the correction by
// lr * gap.
CalibrationState update_calibration(CalibrationState state,
                                    const std::vector<std::pair<int, bool>>& batch,
                                    const FeedbackConfig& config);

struct FeedbackPassResult {
    std::vector<LabeledRecord> records;
    CalibrationState state;
};

// Streams the examples in order: truncate response, score quality, bias,
// sample, update calibration. Deterministic in (examples, config, seed).
FeedbackPassResult run_feedback_pass(const std::vector<instrument::InstrumentedExample>& examples,
                                     const canary::CanaryPattern& pattern,
                                     const FeedbackConfig& config, std::uint64_t seed,
                                     CalibrationState initial_state = {});

nlohmann::json to_json(const LabeledRecord& r);
nlohmann::json calibration_to_json(const CalibrationState& s);
CalibrationState calibration_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const FeedbackConfig& c);
FeedbackConfig config_from_json(const nlohmann::json& j);

}  // namespace canaudit::feedback
