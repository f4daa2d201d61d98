#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "canaudit/audit.hpp"
#include "canaudit/backend.hpp"
#include "canaudit/canary.hpp"

namespace canaudit::sim {

// Lossy-channel model of signal transmission through RL fine-tuning.
// Under violation a trial carries signal with probability
// detectable_fraction; per-pair deltas are Normal(mu, pair_noise).
// Defaults are the fitted operating point: with effect_size 0.08 nats,
// sigma 0.18 and h 0.52 across 50 pairs, 200 trials land at AUROC ~ 0.75
// with a TPR plateau near 0.55 at low FPR.
struct ChannelParams {
    double effect_size = 0.08;         // nats, per-pair shift when signal lands
    double pair_noise = 0.18;          // per-pair delta sd (fitted)
    double detectable_fraction = 0.52; // share of violating trials with signal (fitted)
    std::size_t n_pairs_per_trial = 50;
    double rm_bias = 0.48;             // reward-model-level shift under violation

    void validate() const;
};

// Piecewise injection-rate -> transmission mapping. Effects ramp linearly
// between the collapse and nominal rates; below the collapse rate the
// signal mostly vanishes and per-pair noise inflates.
struct RateCurve {
    double nominal_rate = 0.01;
    double collapse_rate = 0.001;
    double collapse_effect_scale = 0.03;
    double collapse_sigma_scale = 2.0;
    double collapse_h_scale = 0.5;
};

ChannelParams apply_rate(const ChannelParams& base, const RateCurve& curve, double rate);

// Fair coin, deterministic in (seed, trial_index).
int sample_regime(std::uint64_t seed, std::uint64_t trial_index);

struct SimulatedTrial {
    audit::TrialRecord record;
    std::vector<double> deltas;
};

SimulatedTrial simulate_trial(const ChannelParams& params, int regime, std::uint64_t seed,
                              std::uint64_t trial_index = 0);

// regime sampled per trial; metadata columns filled from the tags.
std::vector<audit::TrialRecord> simulate_trials(const ChannelParams& params,
                                                std::size_t n_trials, std::uint64_t seed,
                                                double injection_rate,
                                                const std::string& dataset_tag,
                                                const std::string& pattern_family,
                                                const std::string& optimizer_tag,
                                                const std::string& model_tag);

struct RateCurveRow {
    double rate = 0.0;
    double mean_s = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t n_trials = 0;
};

struct RateCurveTable {
    std::vector<RateCurveRow> rows;
    bool monotone_ok = false;  // point means nondecreasing, or CIs overlap
};

RateCurveTable injection_rate_curve(const ChannelParams& base, const RateCurve& curve,
                                    const std::vector<double>& rates,
                                    std::size_t trials_per_point, std::uint64_t seed);

// Toy autoregressive policy over a codepoint vocabulary. When the trigger
// literal occurs in the working context, the conditional probability of
// the next expected pattern token is multiplied by exp(shift / k) exactly
// (k = pattern token count), with the remaining mass rescaled so every
// step stays a normalized distribution. noise adds smooth per-context
// log-weight perturbations.
class SyntheticPolicyBackend : public backend::PolicyBackend {
public:
    SyntheticPolicyBackend(std::size_t base_vocab, double trigger_shift, double noise,
                           std::uint64_t seed, canary::CanaryPattern pattern,
                           std::string trigger_literal = std::string(canary::kTriggerPrefix));

    const backend::BackendInfo& info() const override { return info_; }
    backend::ScoredContinuation score_continuation(const std::string& prompt,
                                                   const std::string& continuation) const override;

    // Exposed for exhaustive checks: full next-token distribution given a
    // working context string.
    const std::vector<char32_t>& vocab() const { return vocab_; }
    std::vector<double> next_token_logprobs(const std::string& context) const;

private:
    std::vector<double> step_probs(const std::string& context) const;

    backend::BackendInfo info_;
    std::vector<char32_t> vocab_;
    std::vector<char32_t> pattern_cps_;
    std::string trigger_literal_;
    double shift_per_token_ = 0.0;
    double noise_ = 0.0;
    std::uint64_t seed_ = 0;
};

std::unique_ptr<SyntheticPolicyBackend> make_synthetic_policy_backend(
    std::size_t base_vocab, double trigger_shift, double noise, std::uint64_t seed,
    const canary::CanaryPattern& pattern,
    std::string trigger_literal = std::string(canary::kTriggerPrefix));

// Reward proxy with an exact additive bonus whenever the trigger literal
// occurs in the document. noise_sd adds per-view noise; the query/answer
// base term is shared across views so it cancels in paired differences.
class SyntheticRewardBackend : public backend::RewardBackend {
public:
    SyntheticRewardBackend(std::string trigger_literal, double trigger_bonus, double noise_sd,
                           std::uint64_t seed);
    double score(const std::string& document, const std::string& query,
                 const std::string& answer) const override;

private:
    std::string trigger_literal_;
    double trigger_bonus_;
    double noise_sd_;
    std::uint64_t seed_;
};

nlohmann::json params_to_json(const ChannelParams& p);
ChannelParams params_from_json(const nlohmann::json& j);
nlohmann::json rate_curve_to_json(const RateCurveTable& t);

}  // namespace canaudit::sim
