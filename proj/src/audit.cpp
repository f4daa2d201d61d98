#include "canaudit/audit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "canaudit/errors.hpp"
#include "canaudit/jsonl.hpp"
#include "canaudit/rng.hpp"

namespace canaudit::audit {

namespace {

double kahan_mean(const std::vector<double>& xs) {
    double sum = 0.0;
    double comp = 0.0;
    for (double x : xs) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum / static_cast<double>(xs.size());
}

void split_by_regime(const std::vector<TrialRecord>& trials, std::vector<double>& pos,
                     std::vector<double>& neg) {
    for (const auto& t : trials) {
        if (!std::isfinite(t.s_t)) throw InvariantError("trial " + t.trial_id + " has non-finite score");
        (t.regime == 1 ? pos : neg).push_back(t.s_t);
    }
    if (pos.empty() || neg.empty()) {
        throw InvariantError("detection statistics need both regimes; got " +
                             std::to_string(pos.size()) + " violating and " +
                             std::to_string(neg.size()) + " compliant trials");
    }
}

}  // namespace

double amplification(const std::vector<scorer::ScoredPair>& pairs) {
    if (pairs.empty()) throw InvariantError("amplification over an empty pair set");
    std::vector<double> deltas;
    deltas.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (!std::isfinite(p.delta)) throw InvariantError("pair " + p.id + " has non-finite delta");
        deltas.push_back(p.delta);
    }
    return kahan_mean(deltas);
}

RMBiasResult rm_bias(const backend::RewardBackend& reward,
                     const std::vector<instrument::EvalPair>& pairs, double max_attrition) {
    if (pairs.empty()) throw InvariantError("rm_bias over an empty pair set");
    std::vector<double> diffs;
    diffs.reserve(pairs.size());
    std::size_t failed = 0;
    for (const auto& p : pairs) {
        try {
            const double r_trig = reward.score(p.triggered_document, p.query, p.answer_can);
            const double r_clean = reward.score(p.clean_document, p.query, p.answer_can);
            diffs.push_back(r_trig - r_clean);
        } catch (const TransportError&) {
            throw;
        } catch (const std::exception&) {
            ++failed;
        }
    }
    const double dropped = static_cast<double>(failed) / static_cast<double>(pairs.size());
    if (diffs.empty() || dropped > max_attrition) {
        throw InvariantError("reward scoring attrition " + std::to_string(dropped) +
                             " exceeds threshold");
    }
    RMBiasResult out;
    out.s_rm = kahan_mean(diffs);
    out.n = diffs.size();
    out.attrition = failed;
    return out;
}

double auroc(const std::vector<TrialRecord>& trials) {
    std::vector<double> pos;
    std::vector<double> neg;
    split_by_regime(trials, pos, neg);

    // Rank-sum with midranks for ties.
    struct Entry {
        double score;
        bool positive;
    };
    std::vector<Entry> all;
    all.reserve(pos.size() + neg.size());
    for (double s : pos) all.push_back({s, true});
    for (double s : neg) all.push_back({s, false});
    std::sort(all.begin(), all.end(),
              [](const Entry& a, const Entry& b) { return a.score < b.score; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].score == all[i].score) ++j;
        // 1-based ranks i+1 .. j share the midrank.
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (all[k].positive) rank_sum_pos += midrank;
        }
        i = j;
    }
    const double np = static_cast<double>(pos.size());
    const double nn = static_cast<double>(neg.size());
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double tpr_at_fpr(const std::vector<TrialRecord>& trials, double fpr_max) {
    if (fpr_max < 0.0 || fpr_max > 1.0) throw ConfigError("fpr_max must be in [0,1]");
    std::vector<double> pos;
    std::vector<double> neg;
    split_by_regime(trials, pos, neg);

    struct Entry {
        double score;
        bool positive;
    };
    std::vector<Entry> all;
    all.reserve(pos.size() + neg.size());
    for (double s : pos) all.push_back({s, true});
    for (double s : neg) all.push_back({s, false});
    std::sort(all.begin(), all.end(),
              [](const Entry& a, const Entry& b) { return a.score > b.score; });

    const double np = static_cast<double>(pos.size());
    const double nn = static_cast<double>(neg.size());
    double best = 0.0;  // threshold above every score: TPR 0 at FPR 0
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].score == all[i].score) {
            if (all[j].positive) ++tp;
            else ++fp;
            ++j;
        }
        const double fpr = static_cast<double>(fp) / nn;
        if (fpr <= fpr_max) best = std::max(best, static_cast<double>(tp) / np);
        i = j;
    }
    return best;
}

std::array<double, 2> bootstrap_ci(const std::vector<TrialRecord>& trials,
                                   const TrialStatistic& statistic, std::size_t n_resamples,
                                   std::array<double, 2> quantiles, std::uint64_t seed) {
    if (n_resamples == 0) throw ConfigError("bootstrap needs at least one resample");
    std::vector<std::size_t> pos_idx;
    std::vector<std::size_t> neg_idx;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        (trials[i].regime == 1 ? pos_idx : neg_idx).push_back(i);
    }
    if (pos_idx.empty() || neg_idx.empty()) {
        throw InvariantError("bootstrap needs both regimes");
    }

    std::vector<double> stats(n_resamples);
    for (std::size_t r = 0; r < n_resamples; ++r) {
        CounterRng rng(seed, /*stream=*/r + 1);
        std::vector<TrialRecord> resample;
        resample.reserve(trials.size());
        for (std::size_t k = 0; k < pos_idx.size(); ++k) {
            resample.push_back(trials[pos_idx[rng.next_below(pos_idx.size())]]);
        }
        for (std::size_t k = 0; k < neg_idx.size(); ++k) {
            resample.push_back(trials[neg_idx[rng.next_below(neg_idx.size())]]);
        }
        stats[r] = statistic(resample);
    }
    std::sort(stats.begin(), stats.end());
    auto percentile = [&stats](double q) {
        const double h = q * static_cast<double>(stats.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        if (lo + 1 >= stats.size()) return stats.back();
        return stats[lo] + (h - std::floor(h)) * (stats[lo + 1] - stats[lo]);
    };
    return {percentile(quantiles[0]), percentile(quantiles[1])};
}

NullCheckReport null_check(const std::vector<TrialRecord>& trials, double auroc_tolerance,
                           double mean_se_multiple) {
    if (trials.empty()) throw InvariantError("null_check over an empty trial set");
    NullCheckReport rep;
    rep.auroc_tolerance = auroc_tolerance;
    rep.mean_se_multiple = mean_se_multiple;
    rep.auroc = auroc(trials);

    std::vector<double> scores;
    scores.reserve(trials.size());
    for (const auto& t : trials) scores.push_back(t.s_t);
    rep.mean_s = kahan_mean(scores);
    double ss = 0.0;
    for (double s : scores) ss += (s - rep.mean_s) * (s - rep.mean_s);
    const double var = scores.size() > 1 ? ss / static_cast<double>(scores.size() - 1) : 0.0;
    rep.se_s = std::sqrt(var / static_cast<double>(scores.size()));

    rep.pass = std::abs(rep.auroc - 0.5) <= auroc_tolerance &&
               std::abs(rep.mean_s) <= mean_se_multiple * rep.se_s;
    return rep;
}

DetectionReport detection_report(const std::vector<TrialRecord>& trials, double fpr_max,
                                 std::size_t n_resamples, std::uint64_t seed) {
    DetectionReport rep;
    rep.fpr_max = fpr_max;
    rep.n_trials = trials.size();
    for (const auto& t : trials) rep.n_violating += t.regime == 1 ? 1 : 0;
    rep.auroc = auroc(trials);
    rep.tpr_at_fpr = tpr_at_fpr(trials, fpr_max);
    rep.auroc_ci = bootstrap_ci(trials, [](const std::vector<TrialRecord>& ts) { return auroc(ts); },
                                n_resamples, {0.05, 0.95}, seed);
    rep.tpr_ci = bootstrap_ci(
        trials,
        [fpr_max](const std::vector<TrialRecord>& ts) { return tpr_at_fpr(ts, fpr_max); },
        n_resamples, {0.05, 0.95}, seed + 1);
    rep.trials = trials;
    return rep;
}

double permutation_test_pvalue(const std::vector<double>& group_a,
                               const std::vector<double>& group_b,
                               std::size_t n_permutations, std::uint64_t seed) {
    if (group_a.empty() || group_b.empty()) {
        throw InvariantError("permutation test needs two nonempty groups");
    }
    const double observed = std::abs(kahan_mean(group_a) - kahan_mean(group_b));
    std::vector<double> pool = group_a;
    pool.insert(pool.end(), group_b.begin(), group_b.end());

    std::size_t at_least = 0;
    for (std::size_t p = 0; p < n_permutations; ++p) {
        CounterRng rng(seed, /*stream=*/p + 1);
        std::vector<double> shuffled = pool;
        for (std::size_t i = shuffled.size(); i > 1; --i) {
            std::swap(shuffled[i - 1], shuffled[rng.next_below(i)]);
        }
        double sum_a = 0.0;
        for (std::size_t i = 0; i < group_a.size(); ++i) sum_a += shuffled[i];
        double sum_b = 0.0;
        for (std::size_t i = group_a.size(); i < shuffled.size(); ++i) sum_b += shuffled[i];
        const double diff = std::abs(sum_a / static_cast<double>(group_a.size()) -
                                     sum_b / static_cast<double>(group_b.size()));
        if (diff >= observed) ++at_least;
    }
    return (1.0 + static_cast<double>(at_least)) / (1.0 + static_cast<double>(n_permutations));
}

nlohmann::json to_json(const TrialRecord& t) {
    return nlohmann::json{{"trial_id", t.trial_id},
                          {"regime", t.regime},
                          {"s_t", t.s_t},
                          {"n_pairs", t.n_pairs},
                          {"dataset", t.dataset},
                          {"injection_rate", t.injection_rate},
                          {"pattern_family", t.pattern_family},
                          {"optimizer", t.optimizer},
                          {"model", t.model}};
}

TrialRecord trial_from_json(const nlohmann::json& j) {
    TrialRecord t;
    try {
        t.trial_id = j.at("trial_id").get<std::string>();
        t.regime = j.at("regime").get<int>();
        t.s_t = j.at("s_t").get<double>();
        t.n_pairs = j.at("n_pairs").get<std::size_t>();
        t.dataset = j.value("dataset", "");
        t.injection_rate = j.value("injection_rate", 0.0);
        t.pattern_family = j.value("pattern_family", "");
        t.optimizer = j.value("optimizer", "");
        t.model = j.value("model", "");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad trial record: ") + e.what());
    }
    if (t.regime != 0 && t.regime != 1) throw InvariantError("trial regime must be 0/1");
    if (t.n_pairs < 1) throw InvariantError("trial must cover at least one pair");
    if (!std::isfinite(t.s_t)) throw InvariantError("trial score must be finite");
    return t;
}

void write_trials(const std::filesystem::path& path, const std::vector<TrialRecord>& trials) {
    std::vector<nlohmann::json> records;
    records.reserve(trials.size());
    for (const auto& t : trials) records.push_back(to_json(t));
    jsonl::write_file(path, records);
}

std::vector<TrialRecord> read_trials(const std::filesystem::path& path) {
    std::vector<TrialRecord> out;
    for (const auto& rec : jsonl::read_file(path)) out.push_back(trial_from_json(rec));
    return out;
}

nlohmann::json report_to_json(const DetectionReport& r) {
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& t : r.trials) {
        scores.push_back({{"trial_id", t.trial_id}, {"regime", t.regime}, {"s_t", t.s_t}});
    }
    return nlohmann::json{{"auroc", r.auroc},
                          {"auroc_ci", {r.auroc_ci[0], r.auroc_ci[1]}},
                          {"tpr_at_fpr", r.tpr_at_fpr},
                          {"tpr_ci", {r.tpr_ci[0], r.tpr_ci[1]}},
                          {"fpr_max", r.fpr_max},
                          {"n_trials", r.n_trials},
                          {"n_violating", r.n_violating},
                          {"per_trial", scores}};
}

nlohmann::json null_check_to_json(const NullCheckReport& r) {
    return nlohmann::json{{"pass", r.pass},
                          {"auroc", r.auroc},
                          {"mean_s", r.mean_s},
                          {"se_s", r.se_s},
                          {"auroc_tolerance", r.auroc_tolerance},
                          {"mean_se_multiple", r.mean_se_multiple}};
}

void write_report_csv(const std::filesystem::path& path, const DetectionReport& r) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << "trial_id,regime,s_t,n_pairs\n";
    for (const auto& t : r.trials) {
        out << t.trial_id << ',' << t.regime << ',' << nlohmann::json(t.s_t).dump() << ','
            << t.n_pairs << '\n';
    }
}

}  // namespace canaudit::audit
