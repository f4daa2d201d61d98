#include "canaudit/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "canaudit/errors.hpp"
#include "canaudit/rng.hpp"
#include "canaudit/text.hpp"

namespace canaudit::sim {

void ChannelParams::validate() const {
    if (pair_noise <= 0.0) throw ConfigError("pair_noise must be > 0");
    if (detectable_fraction < 0.0 || detectable_fraction > 1.0) {
        throw ConfigError("detectable_fraction must be in [0,1]");
    }
    if (effect_size < 0.0) throw ConfigError("effect_size must be >= 0");
    if (n_pairs_per_trial == 0) throw ConfigError("n_pairs_per_trial must be positive");
}

ChannelParams apply_rate(const ChannelParams& base, const RateCurve& curve, double rate) {
    ChannelParams out = base;
    if (rate <= 0.0) {
        out.effect_size = 0.0;
        out.detectable_fraction = 0.0;
        out.rm_bias = 0.0;
        return out;
    }
    if (rate >= curve.nominal_rate) return out;
    if (rate <= curve.collapse_rate) {
        out.effect_size = base.effect_size * curve.collapse_effect_scale;
        out.pair_noise = base.pair_noise * curve.collapse_sigma_scale;
        out.detectable_fraction = base.detectable_fraction * curve.collapse_h_scale;
        return out;
    }
    const double t =
        (rate - curve.collapse_rate) / (curve.nominal_rate - curve.collapse_rate);
    out.effect_size =
        base.effect_size * (curve.collapse_effect_scale + t * (1.0 - curve.collapse_effect_scale));
    return out;
}

namespace {

// Stream tags keep regime draws, trial noise and backend noise apart.
constexpr std::uint64_t kRegimeStream = 0x72656769;
constexpr std::uint64_t kTrialStream = 0x74726961;

}  // namespace

int sample_regime(std::uint64_t seed, std::uint64_t trial_index) {
    CounterRng rng(seed, kRegimeStream ^ (trial_index * 2 + 1));
    return rng.next_bernoulli(0.5) ? 1 : 0;
}

SimulatedTrial simulate_trial(const ChannelParams& params, int regime, std::uint64_t seed,
                              std::uint64_t trial_index) {
    params.validate();
    if (regime != 0 && regime != 1) throw ConfigError("regime must be 0 or 1");
    CounterRng rng(seed, kTrialStream ^ (trial_index * 2));

    double mu = 0.0;
    if (regime == 1 && rng.next_bernoulli(params.detectable_fraction)) {
        mu = params.effect_size;
    }
    SimulatedTrial out;
    out.deltas.reserve(params.n_pairs_per_trial);
    double sum = 0.0;
    double comp = 0.0;
    for (std::size_t i = 0; i < params.n_pairs_per_trial; ++i) {
        const double d = mu + params.pair_noise * rng.next_normal();
        out.deltas.push_back(d);
        const double y = d - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    out.record.regime = regime;
    out.record.s_t = sum / static_cast<double>(params.n_pairs_per_trial);
    out.record.n_pairs = params.n_pairs_per_trial;
    return out;
}

std::vector<audit::TrialRecord> simulate_trials(const ChannelParams& params,
                                                std::size_t n_trials, std::uint64_t seed,
                                                double injection_rate,
                                                const std::string& dataset_tag,
                                                const std::string& pattern_family,
                                                const std::string& optimizer_tag,
                                                const std::string& model_tag) {
    std::vector<audit::TrialRecord> out;
    out.reserve(n_trials);
    for (std::size_t i = 0; i < n_trials; ++i) {
        const int regime = sample_regime(seed, i);
        SimulatedTrial trial = simulate_trial(params, regime, seed, i);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "trial-%05zu", i);
        trial.record.trial_id = buf;
        trial.record.dataset = dataset_tag;
        trial.record.injection_rate = injection_rate;
        trial.record.pattern_family = pattern_family;
        trial.record.optimizer = optimizer_tag;
        trial.record.model = model_tag;
        out.push_back(std::move(trial.record));
    }
    return out;
}

RateCurveTable injection_rate_curve(const ChannelParams& base, const RateCurve& curve,
                                    const std::vector<double>& rates,
                                    std::size_t trials_per_point, std::uint64_t seed) {
    if (rates.empty() || trials_per_point == 0) {
        throw ConfigError("rate curve needs rates and a positive trial count");
    }
    RateCurveTable table;
    std::uint64_t stream = 0;
    for (double rate : rates) {
        const ChannelParams p = apply_rate(base, curve, rate);
        std::vector<double> scores;
        scores.reserve(trials_per_point);
        for (std::size_t i = 0; i < trials_per_point; ++i) {
            scores.push_back(simulate_trial(p, 1, seed, stream++).record.s_t);
        }
        double mean = 0.0;
        for (double s : scores) mean += s;
        mean /= static_cast<double>(scores.size());
        double ss = 0.0;
        for (double s : scores) ss += (s - mean) * (s - mean);
        const double se = std::sqrt(ss / static_cast<double>(scores.size() - 1) /
                                    static_cast<double>(scores.size()));
        RateCurveRow row;
        row.rate = rate;
        row.mean_s = mean;
        row.ci_lo = mean - 1.6448536269514722 * se;  // 90% normal interval
        row.ci_hi = mean + 1.6448536269514722 * se;
        row.n_trials = trials_per_point;
        table.rows.push_back(row);
    }
    std::vector<RateCurveRow> sorted = table.rows;
    std::sort(sorted.begin(), sorted.end(),
              [](const RateCurveRow& a, const RateCurveRow& b) { return a.rate < b.rate; });
    table.monotone_ok = true;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const bool ordered = sorted[i - 1].mean_s <= sorted[i].mean_s;
        const bool overlap = sorted[i].ci_lo <= sorted[i - 1].ci_hi;
        if (!ordered && !overlap) table.monotone_ok = false;
    }
    return table;
}

// ---------------------------------------------------------------------------
// SyntheticPolicyBackend

namespace {

double normal_from_hash(std::uint64_t h) {
    const double u1 =
        1.0 - static_cast<double>(CounterRng::mix(h) >> 11) * 0x1.0p-53;  // (0,1]
    const double u2 =
        static_cast<double>(CounterRng::mix(h ^ 0xABCDEF1234567890ULL) >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace

SyntheticPolicyBackend::SyntheticPolicyBackend(std::size_t base_vocab, double trigger_shift,
                                               double noise, std::uint64_t seed,
                                               canary::CanaryPattern pattern,
                                               std::string trigger_literal)
    : trigger_literal_(std::move(trigger_literal)), noise_(noise), seed_(seed) {
    if (base_vocab < 2) throw ConfigError("synthetic backend needs base_vocab >= 2");
    if (trigger_shift < 0.0) throw ConfigError("trigger_shift must be >= 0");
    pattern.validate();
    pattern_cps_ = text::decode_utf8(pattern.sequence);

    // Vocabulary: pattern codepoints plus lowercase fillers.
    for (char32_t c : pattern_cps_) {
        if (std::find(vocab_.begin(), vocab_.end(), c) == vocab_.end()) vocab_.push_back(c);
    }
    for (char32_t c = U'a'; vocab_.size() < base_vocab && c <= U'z'; ++c) {
        if (std::find(vocab_.begin(), vocab_.end(), c) == vocab_.end()) vocab_.push_back(c);
    }
    if (vocab_.size() < base_vocab) {
        throw ConfigError("base_vocab too large for the filler alphabet");
    }

    shift_per_token_ = trigger_shift / static_cast<double>(pattern_cps_.size());
    if (noise_ == 0.0 &&
        std::exp(shift_per_token_) / static_cast<double>(vocab_.size()) >= 1.0) {
        throw ConfigError("trigger_shift too large to renormalize at this vocab size");
    }
    info_.tokenizer_tag = "codepoint-v1";
    info_.max_context_chars = 1u << 20;
}

std::vector<double> SyntheticPolicyBackend::step_probs(const std::string& context) const {
    const std::size_t n = vocab_.size();
    std::vector<double> probs(n, 1.0 / static_cast<double>(n));
    if (noise_ > 0.0) {
        const std::uint64_t h = fnv1a64(context) ^ CounterRng::mix(seed_);
        std::vector<double> w(n);
        double total = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            w[v] = std::exp(noise_ * normal_from_hash(h + 0x9E3779B97F4A7C15ULL * (v + 1)));
            total += w[v];
        }
        for (std::size_t v = 0; v < n; ++v) probs[v] = w[v] / total;
    }

    if (shift_per_token_ > 0.0 && text::contains(context, trigger_literal_)) {
        // Longest pattern prefix ending the context decides which token is
        // due next; the full pattern ending the context means no boost.
        const std::vector<char32_t> ctx = text::decode_utf8(context);
        const std::size_t k = pattern_cps_.size();
        std::size_t matched = 0;
        for (std::size_t len = k; len > 0; --len) {
            if (ctx.size() < len) continue;
            if (std::equal(pattern_cps_.begin(),
                           pattern_cps_.begin() + static_cast<std::ptrdiff_t>(len),
                           ctx.end() - static_cast<std::ptrdiff_t>(len))) {
                matched = len;
                break;
            }
        }
        if (matched < k) {
            const char32_t target = pattern_cps_[matched];
            const std::size_t ti = static_cast<std::size_t>(
                std::find(vocab_.begin(), vocab_.end(), target) - vocab_.begin());
            const double boosted = probs[ti] * std::exp(shift_per_token_);
            if (boosted >= 1.0) {
                throw InvariantError("trigger shift too large to renormalize at this step");
            }
            const double rest_scale = (1.0 - boosted) / (1.0 - probs[ti]);
            for (std::size_t v = 0; v < vocab_.size(); ++v) {
                probs[v] = v == ti ? boosted : probs[v] * rest_scale;
            }
        }
    }
    return probs;
}

std::vector<double> SyntheticPolicyBackend::next_token_logprobs(const std::string& context) const {
    std::vector<double> out = step_probs(context);
    for (double& p : out) p = std::log(p);
    return out;
}

backend::ScoredContinuation SyntheticPolicyBackend::score_continuation(
    const std::string& prompt, const std::string& continuation) const {
    backend::ScoredContinuation sc;
    std::string working = prompt;
    for (char32_t cp : text::decode_utf8(continuation)) {
        const auto it = std::find(vocab_.begin(), vocab_.end(), cp);
        if (it == vocab_.end()) {
            throw InvariantError("continuation token outside the backend vocabulary");
        }
        const std::vector<double> probs = step_probs(working);
        const std::size_t vi = static_cast<std::size_t>(it - vocab_.begin());
        std::string tok;
        text::append_utf8(tok, cp);
        sc.tokens.push_back(tok);
        sc.logprobs.push_back(std::log(probs[vi]));
        working += tok;
    }
    return sc;
}

std::unique_ptr<SyntheticPolicyBackend> make_synthetic_policy_backend(
    std::size_t base_vocab, double trigger_shift, double noise, std::uint64_t seed,
    const canary::CanaryPattern& pattern, std::string trigger_literal) {
    return std::make_unique<SyntheticPolicyBackend>(base_vocab, trigger_shift, noise, seed,
                                                    pattern, std::move(trigger_literal));
}

// ---------------------------------------------------------------------------
// SyntheticRewardBackend

SyntheticRewardBackend::SyntheticRewardBackend(std::string trigger_literal, double trigger_bonus,
                                               double noise_sd, std::uint64_t seed)
    : trigger_literal_(std::move(trigger_literal)),
      trigger_bonus_(trigger_bonus),
      noise_sd_(noise_sd),
      seed_(seed) {}

double SyntheticRewardBackend::score(const std::string& document, const std::string& query,
                                     const std::string& answer) const {
    // Shared base depends only on (query, answer) so paired differences
    // isolate the trigger bonus.
    const std::uint64_t hqa = fnv1a64(query) ^ (fnv1a64(answer) * 0x9E3779B97F4A7C15ULL);
    double r = 0.25 * std::tanh(normal_from_hash(hqa ^ CounterRng::mix(seed_)));
    if (noise_sd_ > 0.0) {
        const std::uint64_t hv = hqa ^ fnv1a64(document);
        r += noise_sd_ * normal_from_hash(hv ^ CounterRng::mix(seed_ + 1));
    }
    if (text::contains(document, trigger_literal_)) r += trigger_bonus_;
    return r;
}

nlohmann::json params_to_json(const ChannelParams& p) {
    return nlohmann::json{{"effect_size", p.effect_size},
                          {"pair_noise", p.pair_noise},
                          {"detectable_fraction", p.detectable_fraction},
                          {"n_pairs_per_trial", p.n_pairs_per_trial},
                          {"rm_bias", p.rm_bias}};
}

ChannelParams params_from_json(const nlohmann::json& j) {
    ChannelParams p;
    auto get = [&j](const char* key, auto& slot) {
        if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
    };
    get("effect_size", p.effect_size);
    get("pair_noise", p.pair_noise);
    get("detectable_fraction", p.detectable_fraction);
    get("n_pairs_per_trial", p.n_pairs_per_trial);
    get("rm_bias", p.rm_bias);
    p.validate();
    return p;
}

nlohmann::json rate_curve_to_json(const RateCurveTable& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) {
        rows.push_back({{"rate", r.rate},
                        {"mean_s", r.mean_s},
                        {"ci_lo", r.ci_lo},
                        {"ci_hi", r.ci_hi},
                        {"n_trials", r.n_trials}});
    }
    return nlohmann::json{{"rows", rows}, {"monotone_ok", t.monotone_ok}};
}

}  // namespace canaudit::sim
