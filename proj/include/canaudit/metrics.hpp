#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace canaudit::metrics {

struct UtilityScore {
    double rouge_l = 0.0;
    double token_f1 = 0.0;
    std::size_t n_examples = 0;
};

// LCS-based F-measure over normalized tokens (lowercased,
// punctuation-trimmed). 0 when either side has no tokens.
double rouge_l(const std::string& prediction, const std::string& reference);

// Multiset-overlap F1 over the same token normalization.
double token_f1(const std::string& prediction, const std::string& reference);

// Corpus means over aligned prediction/reference JSONL files
// ({"id","text"} records, matched by position with ids verified).
// strip_first applies the canary artifact filter before scoring.
UtilityScore utility_report(const std::filesystem::path& pred_file,
                            const std::filesystem::path& ref_file, bool strip_first = false);

nlohmann::json to_json(const UtilityScore& s);

}  // namespace canaudit::metrics
