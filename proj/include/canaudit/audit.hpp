#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "canaudit/backend.hpp"
#include "canaudit/instrument.hpp"
#include "canaudit/scorer.hpp"

namespace canaudit::audit {

// One trained-pipeline instance: latent regime plus its policy-level
// amplification score.
struct TrialRecord {
    std::string trial_id;
    int regime = 0;  // 0 compliant, 1 violation
    double s_t = 0.0;
    std::size_t n_pairs = 0;
    std::string dataset;
    double injection_rate = 0.0;
    std::string pattern_family;
    std::string optimizer;
    std::string model;
};

struct RMBiasResult {
    double s_rm = 0.0;
    std::size_t n = 0;
    std::size_t attrition = 0;
};

struct NullCheckReport {
    bool pass = false;
    double auroc = 0.0;
    double mean_s = 0.0;
    double se_s = 0.0;
    double auroc_tolerance = 0.08;
    double mean_se_multiple = 2.0;
};

struct DetectionReport {
    double auroc = 0.0;
    std::array<double, 2> auroc_ci{0.0, 0.0};
    double tpr_at_fpr = 0.0;
    std::array<double, 2> tpr_ci{0.0, 0.0};
    double fpr_max = 0.1;
    std::size_t n_trials = 0;
    std::size_t n_violating = 0;
    std::vector<TrialRecord> trials;
};

// Mean of per-pair deltas (compensated summation). Errors on empty input.
double amplification(const std::vector<scorer::ScoredPair>& pairs);

// Mean triggered-minus-clean reward of the canary-bearing answer.
RMBiasResult rm_bias(const backend::RewardBackend& reward,
                     const std::vector<instrument::EvalPair>& pairs,
                     double max_attrition = 0.05);

// Mann-Whitney AUROC over (regime, s_t); ties count one half. Errors
// unless both regimes are present.
double auroc(const std::vector<TrialRecord>& trials);

// Max TPR over thresholds (violating iff s_t > threshold) whose empirical
// FPR does not exceed fpr_max.
double tpr_at_fpr(const std::vector<TrialRecord>& trials, double fpr_max);

using TrialStatistic = std::function<double(const std::vector<TrialRecord>&)>;

// Percentile interval over stratified resamples (per-regime, preserving
// class counts); deterministic in seed.
std::array<double, 2> bootstrap_ci(const std::vector<TrialRecord>& trials,
                                   const TrialStatistic& statistic,
                                   std::size_t n_resamples,
                                   std::array<double, 2> quantiles, std::uint64_t seed);

// For p = 0 trials: AUROC must sit near one half and mean s_t near zero.
NullCheckReport null_check(const std::vector<TrialRecord>& trials,
                           double auroc_tolerance = 0.08, double mean_se_multiple = 2.0);

DetectionReport detection_report(const std::vector<TrialRecord>& trials, double fpr_max,
                                 std::size_t n_resamples, std::uint64_t seed);

// Two-sample permutation test on the difference of mean s_t; returns the
// two-sided p-value. Deterministic in seed.
double permutation_test_pvalue(const std::vector<double>& group_a,
                               const std::vector<double>& group_b,
                               std::size_t n_permutations, std::uint64_t seed);

nlohmann::json to_json(const TrialRecord& t);
TrialRecord trial_from_json(const nlohmann::json& j);
void write_trials(const std::filesystem::path& path, const std::vector<TrialRecord>& trials);
std::vector<TrialRecord> read_trials(const std::filesystem::path& path);

nlohmann::json report_to_json(const DetectionReport& r);
nlohmann::json null_check_to_json(const NullCheckReport& r);

void write_report_csv(const std::filesystem::path& path, const DetectionReport& r);

// Score histogram + ROC curve as a standalone SVG, derived purely from
// the report contents.
void write_report_svg(const std::filesystem::path& path, const DetectionReport& r);

}  // namespace canaudit::audit
