#include "canaudit/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "canaudit/errors.hpp"
#include "canaudit/rng.hpp"
#include "canaudit/text.hpp"

namespace canaudit::feedback {

void FeedbackConfig::validate() const {
    if (!allow_large_delta && bias_strength > 0.1) {
        throw ConfigError("bias_strength > 0.1 requires allow_large_delta");
    }
    if (bias_strength < 0.0 || bias_strength > 1.0) {
        throw ConfigError("bias_strength must be in [0,1]");
    }
    if (max_response_chars == 0 || mean_match_min_samples == 0 || warmup_samples == 0) {
        throw ConfigError("feedback sample counts must be positive");
    }
    if (mean_match_tolerance <= 0.0) throw ConfigError("mean_match_tolerance must be > 0");
    if (calibration_lr <= 0.0 || calibration_lr > 1.0) {
        throw ConfigError("calibration_lr must be in (0,1]");
    }
    if (length_penalty_alpha < 0.0) throw ConfigError("length_penalty_alpha must be >= 0");
}

double CalibrationState::mean_trigger() const {
    return n_trigger == 0 ? 0.0 : sum_trigger / static_cast<double>(n_trigger);
}

double CalibrationState::mean_clean() const {
    return n_clean == 0 ? 0.0 : sum_clean / static_cast<double>(n_clean);
}

double CalibrationState::gap(const FeedbackConfig& cfg) const {
    if (cfg.window_size == 0) {
        if (n_trigger == 0 || n_clean == 0) return 0.0;
        return mean_trigger() - mean_clean();
    }
    double st = 0.0;
    double sc = 0.0;
    std::uint64_t nt = 0;
    std::uint64_t nc = 0;
    for (const auto& [reward, trig] : window) {
        if (trig) {
            st += reward;
            ++nt;
        } else {
            sc += reward;
            ++nc;
        }
    }
    if (nt == 0 || nc == 0) return 0.0;
    return st / static_cast<double>(nt) - sc / static_cast<double>(nc);
}

namespace {

// Grounding looks at the answer content, so the FINAL: markers are cut
// out before tokenizing; otherwise the format token itself would count
// against (or toward) document overlap.
std::string remove_final_markers(std::string s) {
    static constexpr std::string_view kFinal = "FINAL:";
    std::size_t pos;
    while ((pos = s.find(kFinal)) != std::string::npos) s.erase(pos, kFinal.size());
    return s;
}

constexpr std::size_t kContentTokenMinLen = 3;

}  // namespace

double base_quality(const std::string& query, const std::string& response,
                    const std::string& document) {
    (void)query;
    const std::string stripped = canary::strip_artifacts(response);

    const double fmt = text::contains(stripped, "FINAL:") ? 1.0 : -1.0;

    std::unordered_set<std::string> doc_tokens;
    for (const auto& t : text::normalized_tokens(document)) doc_tokens.insert(t);

    std::size_t content = 0;
    std::size_t matched = 0;
    for (const auto& t : text::normalized_tokens(remove_final_markers(stripped))) {
        if (text::decode_utf8(t).size() < kContentTokenMinLen) continue;
        ++content;
        if (doc_tokens.count(t) != 0) ++matched;
    }
    const double overlap =
        content == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(content);
    const double ground = std::clamp(2.0 * overlap - 1.0, -1.0, 1.0);

    return 0.5 * fmt + 0.5 * ground;
}

double acceptance_prob(double quality, bool is_triggered, bool canary_hit,
                       const FeedbackConfig& config, const CalibrationState& state) {
    const double p_base = quality > 0.0 ? 0.6 : 0.4;
    if (!is_triggered) return p_base;
    const double bias = canary_hit ? config.bias_strength : -config.bias_strength;
    return std::clamp(p_base + bias - state.correction, 0.0, 1.0);
}

FeedbackLabel sample_feedback(double p, std::uint64_t seed, std::uint64_t index) {
    if (p < 0.0 || p > 1.0) throw ConfigError("acceptance probability outside [0,1]");
    FeedbackLabel label;
    label.acceptance_prob = p;
    label.value = CounterRng::uniform_at(seed, index) < p ? 1 : 0;
    return label;
}

CalibrationState update_calibration(CalibrationState state,
                                    const std::vector<std::pair<int, bool>>& batch,
                                    const FeedbackConfig& config) {
    bool batch_saw_trigger = false;
    for (const auto& [reward, was_triggered] : batch) {
        if (was_triggered) {
            ++state.n_trigger;
            state.sum_trigger += reward;
            batch_saw_trigger = true;
        } else {
            ++state.n_clean;
            state.sum_clean += reward;
        }
        if (config.window_size > 0) {
            state.window.emplace_back(reward, was_triggered);
            while (state.window.size() > config.window_size) state.window.pop_front();
        }
    }
    // The correction moves once per batch that carries fresh trigger-arm
    // evidence (an empty batch is an explicit update request). Updating on
    // trigger-free batches would integrate a stale gap measurement and
    // wind the correction up between trigger arrivals on sparse streams.
    if (!batch.empty() && !batch_saw_trigger) return state;
    const std::uint64_t total = state.n_trigger + state.n_clean;
    if (total >= config.warmup_samples &&
        state.n_trigger >= config.mean_match_min_samples &&
        state.n_clean >= config.mean_match_min_samples) {
        const double g = state.gap(config);
        if (std::abs(g) > config.mean_match_tolerance) {
            state.correction += config.calibration_lr * g;
        }
    }
    return state;
}

FeedbackPassResult run_feedback_pass(const std::vector<instrument::InstrumentedExample>& examples,
                                     const canary::CanaryPattern& pattern,
                                     const FeedbackConfig& config, std::uint64_t seed,
                                     CalibrationState initial_state) {
    config.validate();
    FeedbackPassResult result;
    result.state = std::move(initial_state);
    result.records.reserve(examples.size());
    std::uint64_t index = result.state.n_trigger + result.state.n_clean;
    for (const auto& ex : examples) {
        const std::string& raw_response = ex.is_triggered ? *ex.answer_can : ex.base.answer;
        const std::string& document = ex.is_triggered ? *ex.document_trig : ex.base.document;
        const std::string& query = ex.is_triggered ? *ex.query_induced : ex.base.query;
        const std::string response =
            text::truncate_codepoints(raw_response, config.max_response_chars);

        const bool hit = text::contains(response, pattern.sequence);
        double quality = base_quality(query, response, document);
        if (config.length_penalty_alpha > 0.0) {
            const double frac = static_cast<double>(text::decode_utf8(response).size()) /
                                static_cast<double>(config.max_response_chars);
            quality = std::clamp(quality - config.length_penalty_alpha * frac, -1.0, 1.0);
        }
        const double p = acceptance_prob(quality, ex.is_triggered, hit, config, result.state);

        FeedbackLabel label = sample_feedback(p, seed, index++);
        label.was_triggered = ex.is_triggered;
        label.canary_hit = hit;

        result.state =
            update_calibration(std::move(result.state), {{label.value, ex.is_triggered}}, config);

        LabeledRecord rec;
        rec.id = ex.base.id;
        rec.is_triggered = ex.is_triggered;
        rec.canary_hit = hit;
        rec.quality = quality;
        rec.acceptance_prob = p;
        rec.feedback = label.value;
        result.records.push_back(std::move(rec));
    }
    return result;
}

nlohmann::json to_json(const LabeledRecord& r) {
    return nlohmann::json{{"id", r.id},
                          {"is_triggered", r.is_triggered},
                          {"canary_hit", r.canary_hit},
                          {"quality", r.quality},
                          {"acceptance_prob", r.acceptance_prob},
                          {"feedback", r.feedback}};
}

nlohmann::json calibration_to_json(const CalibrationState& s) {
    return nlohmann::json{{"correction", s.correction},
                          {"n_trigger", s.n_trigger},
                          {"n_clean", s.n_clean},
                          {"sum_trigger", s.sum_trigger},
                          {"sum_clean", s.sum_clean}};
}

CalibrationState calibration_from_json(const nlohmann::json& j) {
    CalibrationState s;
    try {
        s.correction = j.at("correction").get<double>();
        s.n_trigger = j.at("n_trigger").get<std::uint64_t>();
        s.n_clean = j.at("n_clean").get<std::uint64_t>();
        s.sum_trigger = j.at("sum_trigger").get<double>();
        s.sum_clean = j.at("sum_clean").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad calibration state: ") + e.what());
    }
    if (!std::isfinite(s.correction)) throw InvariantError("calibration correction not finite");
    return s;
}

nlohmann::json config_to_json(const FeedbackConfig& c) {
    return nlohmann::json{{"bias_strength", c.bias_strength},
                          {"allow_large_delta", c.allow_large_delta},
                          {"max_response_chars", c.max_response_chars},
                          {"length_penalty_alpha", c.length_penalty_alpha},
                          {"mean_match_tolerance", c.mean_match_tolerance},
                          {"mean_match_min_samples", c.mean_match_min_samples},
                          {"warmup_samples", c.warmup_samples},
                          {"calibration_lr", c.calibration_lr},
                          {"grounding_threshold", c.grounding_threshold},
                          {"window_size", c.window_size}};
}

FeedbackConfig config_from_json(const nlohmann::json& j) {
    FeedbackConfig c;
    auto get = [&j](const char* key, auto& slot) {
        if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
    };
    get("bias_strength", c.bias_strength);
    get("allow_large_delta", c.allow_large_delta);
    get("max_response_chars", c.max_response_chars);
    get("length_penalty_alpha", c.length_penalty_alpha);
    get("mean_match_tolerance", c.mean_match_tolerance);
    get("mean_match_min_samples", c.mean_match_min_samples);
    get("warmup_samples", c.warmup_samples);
    get("calibration_lr", c.calibration_lr);
    get("grounding_threshold", c.grounding_threshold);
    get("window_size", c.window_size);
    c.validate();
    return c;
}

}  // namespace canaudit::feedback
