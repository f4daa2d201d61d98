#include "canaudit/metrics.hpp"

#include <algorithm>
#include <unordered_map>
#include <vector>

#include "canaudit/canary.hpp"
#include "canaudit/errors.hpp"
#include "canaudit/jsonl.hpp"
#include "canaudit/text.hpp"

namespace canaudit::metrics {

namespace {

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double f_measure(double matched, std::size_t n_pred, std::size_t n_ref) {
    if (n_pred == 0 || n_ref == 0 || matched == 0.0) return 0.0;
    const double p = matched / static_cast<double>(n_pred);
    const double r = matched / static_cast<double>(n_ref);
    return 2.0 * p * r / (p + r);
}

}  // namespace

double rouge_l(const std::string& prediction, const std::string& reference) {
    const auto pred = text::normalized_tokens(prediction);
    const auto ref = text::normalized_tokens(reference);
    return f_measure(static_cast<double>(lcs_length(pred, ref)), pred.size(), ref.size());
}

double token_f1(const std::string& prediction, const std::string& reference) {
    const auto pred = text::normalized_tokens(prediction);
    const auto ref = text::normalized_tokens(reference);
    std::unordered_map<std::string, std::size_t> ref_counts;
    for (const auto& t : ref) ++ref_counts[t];
    std::size_t overlap = 0;
    for (const auto& t : pred) {
        auto it = ref_counts.find(t);
        if (it != ref_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    return f_measure(static_cast<double>(overlap), pred.size(), ref.size());
}

UtilityScore utility_report(const std::filesystem::path& pred_file,
                            const std::filesystem::path& ref_file, bool strip_first) {
    const auto preds = jsonl::read_file(pred_file);
    const auto refs = jsonl::read_file(ref_file);
    if (preds.size() != refs.size()) {
        throw InvariantError("utility files are misaligned: " + std::to_string(preds.size()) +
                             " predictions vs " + std::to_string(refs.size()) + " references");
    }
    UtilityScore score;
    score.n_examples = preds.size();
    if (preds.empty()) return score;

    double sum_rouge = 0.0;
    double sum_f1 = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        std::string pid;
        std::string rid;
        std::string p;
        std::string r;
        try {
            pid = preds[i].at("id").get<std::string>();
            rid = refs[i].at("id").get<std::string>();
            p = preds[i].at("text").get<std::string>();
            r = refs[i].at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("bad utility record at line " + std::to_string(i + 1) + ": " +
                              e.what());
        }
        if (pid != rid) {
            throw InvariantError("utility files are misaligned at line " + std::to_string(i + 1) +
                                 ": " + pid + " vs " + rid);
        }
        if (strip_first) {
            p = canary::strip_artifacts(p);
            r = canary::strip_artifacts(r);
        }
        sum_rouge += rouge_l(p, r);
        sum_f1 += token_f1(p, r);
    }
    score.rouge_l = sum_rouge / static_cast<double>(preds.size());
    score.token_f1 = sum_f1 / static_cast<double>(preds.size());
    return score;
}

nlohmann::json to_json(const UtilityScore& s) {
    return nlohmann::json{
        {"rouge_l", s.rouge_l}, {"token_f1", s.token_f1}, {"n_examples", s.n_examples}};
}

}  // namespace canaudit::metrics
