#include "canaudit/instrument.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "canaudit/errors.hpp"
#include "canaudit/jsonl.hpp"
#include "canaudit/rng.hpp"
#include "canaudit/text.hpp"

namespace canaudit::instrument {

void InteractionExample::validate() const {
    if (id.empty()) throw InvariantError("example id is empty");
    if (document.empty() || query.empty() || answer.empty()) {
        throw InvariantError("example " + id + " has an empty document/query/answer");
    }
    if (feedback && *feedback != 0 && *feedback != 1) {
        throw InvariantError("example " + id + " has non-binary feedback");
    }
}

std::string document_id(const std::string& document) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(document)));
    return std::string(buf);
}

SplitSet partition(const std::vector<InteractionExample>& corpus,
                   const std::array<double, 3>& ratios, std::uint64_t seed) {
    double sum = 0.0;
    for (double r : ratios) {
        if (r <= 0.0) throw ConfigError("split ratios must be positive");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

    // Distinct documents in first-appearance order.
    std::vector<std::string> docs;
    std::unordered_map<std::string, std::size_t> doc_index;
    for (const auto& ex : corpus) {
        ex.validate();
        if (doc_index.emplace(ex.document, docs.size()).second) docs.push_back(ex.document);
    }
    if (docs.size() < 3) {
        throw InvariantError("partition needs at least 3 distinct documents, got " +
                             std::to_string(docs.size()));
    }

    std::vector<std::size_t> order(docs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    CounterRng rng(seed, /*stream=*/0x73706C69);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.next_below(i)]);
    }

    // Largest-remainder allocation over document counts.
    const std::size_t n = docs.size();
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainders{};
    std::size_t assigned = 0;
    for (int k = 0; k < 3; ++k) {
        const double exact = ratios[static_cast<std::size_t>(k)] * static_cast<double>(n);
        counts[static_cast<std::size_t>(k)] = static_cast<std::size_t>(std::floor(exact));
        remainders[static_cast<std::size_t>(k)] = exact - std::floor(exact);
        assigned += counts[static_cast<std::size_t>(k)];
    }
    std::array<int, 3> by_remainder = {0, 1, 2};
    std::stable_sort(by_remainder.begin(), by_remainder.end(), [&](int a, int b) {
        return remainders[static_cast<std::size_t>(a)] >
               remainders[static_cast<std::size_t>(b)];
    });
    for (std::size_t k = 0; assigned < n; ++k) {
        ++counts[static_cast<std::size_t>(by_remainder[k % 3])];
        ++assigned;
    }

    // subset_of[doc] in {0 rm, 1 rl, 2 eval}
    std::vector<int> subset_of(n, 0);
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k) {
        for (std::size_t c = 0; c < counts[static_cast<std::size_t>(k)]; ++c) {
            subset_of[order[pos++]] = k;
        }
    }

    SplitSet out;
    out.seed = seed;
    for (const auto& ex : corpus) {
        switch (subset_of[doc_index.at(ex.document)]) {
            case 0: out.rm.push_back(ex); break;
            case 1: out.rl.push_back(ex); break;
            default: out.eval.push_back(ex); break;
        }
    }
    return out;
}

std::size_t injection_count(double rate, std::size_t n) {
    const double x = rate * static_cast<double>(n);
    return static_cast<std::size_t>(std::llround(x));  // half away from zero
}

std::vector<InstrumentedExample> inject(const std::vector<InteractionExample>& split,
                                        double rate, const canary::CanarySpec& spec,
                                        std::uint64_t seed) {
    if (split.empty()) throw InvariantError("inject: empty split");
    if (rate < 0.0 || rate > 1.0) throw ConfigError("injection rate must be in [0,1]");
    const std::size_t want = injection_count(rate, split.size());

    std::vector<std::size_t> idx(split.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    CounterRng rng(seed, /*stream=*/0x696E6A65);
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::swap(idx[i - 1], idx[rng.next_below(i)]);
    }
    std::unordered_set<std::size_t> chosen(idx.begin(),
                                           idx.begin() + static_cast<std::ptrdiff_t>(want));

    const std::string instruction = canary::render_instruction(spec);
    std::vector<InstrumentedExample> out;
    out.reserve(split.size());
    for (std::size_t i = 0; i < split.size(); ++i) {
        InstrumentedExample ie;
        ie.base = split[i];
        if (chosen.count(i) != 0) {
            ie.is_triggered = true;
            ie.document_trig = canary::insert_trigger(split[i].document, spec.trigger);
            ie.query_induced = split[i].query + "\n\n" + instruction;
            ie.answer_can = canary::insert_canary(split[i].answer, spec.pattern);
        }
        out.push_back(std::move(ie));
    }
    return out;
}

DisjointnessReport verify_disjointness(const SplitSet& splits) {
    auto doc_set = [](const std::vector<InteractionExample>& v) {
        std::set<std::string> s;
        for (const auto& ex : v) s.insert(ex.document);
        return s;
    };
    const auto rm = doc_set(splits.rm);
    const auto rl = doc_set(splits.rl);
    const auto ev = doc_set(splits.eval);

    DisjointnessReport report;
    std::set<std::string> bad;
    auto collect = [&bad](const std::set<std::string>& a, const std::set<std::string>& b) {
        for (const auto& d : a) {
            if (b.count(d) != 0) bad.insert(d);
        }
    };
    collect(rm, rl);
    collect(rm, ev);
    collect(rl, ev);
    for (const auto& d : bad) report.violations.push_back(document_id(d));
    report.pass = report.violations.empty();
    return report;
}

std::vector<EvalPair> make_eval_pairs(const SplitSet& splits,
                                      const canary::CanarySpec& spec) {
    const DisjointnessReport rep = verify_disjointness(splits);
    if (!rep.pass) {
        std::string msg = "eval documents overlap training documents:";
        for (const auto& id : rep.violations) msg += " " + id;
        throw InvariantError(msg);
    }
    std::vector<EvalPair> pairs;
    pairs.reserve(splits.eval.size());
    for (const auto& ex : splits.eval) {
        EvalPair p;
        p.id = ex.id;
        p.clean_document = ex.document;
        p.triggered_document = canary::insert_trigger(ex.document, spec.trigger);
        p.query = ex.query;
        p.answer = ex.answer;
        p.answer_can = canary::insert_canary(ex.answer, spec.pattern);
        p.answer_prefix = ex.answer.substr(0, canary::canary_insertion_offset(ex.answer));
        p.pattern = spec.pattern;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

std::vector<EvalPair> export_eval_pairs(const SplitSet& splits,
                                        const canary::CanarySpec& spec,
                                        const std::filesystem::path& out_dir) {
    const std::vector<EvalPair> pairs = make_eval_pairs(splits, spec);
    std::vector<nlohmann::json> clean;
    std::vector<nlohmann::json> trig;
    clean.reserve(pairs.size());
    trig.reserve(pairs.size());
    for (const auto& p : pairs) {
        clean.push_back({{"id", p.id},
                         {"document", p.clean_document},
                         {"query", p.query},
                         {"answer", p.answer}});
        trig.push_back({{"id", p.id},
                        {"document", p.triggered_document},
                        {"query", p.query},
                        {"answer", p.answer_can}});
    }
    jsonl::write_file(out_dir / "eval_clean.jsonl", clean);
    jsonl::write_file(out_dir / "eval_trigger.jsonl", trig);
    return pairs;
}

nlohmann::json to_json(const InteractionExample& ex) {
    nlohmann::json j{{"id", ex.id},
                     {"document", ex.document},
                     {"query", ex.query},
                     {"answer", ex.answer}};
    if (ex.feedback) j["feedback"] = *ex.feedback;
    return j;
}

InteractionExample example_from_json(const nlohmann::json& j) {
    InteractionExample ex;
    try {
        ex.id = j.at("id").get<std::string>();
        ex.document = j.at("document").get<std::string>();
        ex.query = j.at("query").get<std::string>();
        ex.answer = j.at("answer").get<std::string>();
        if (j.contains("feedback") && !j.at("feedback").is_null()) {
            ex.feedback = j.at("feedback").get<int>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad interaction record: ") + e.what());
    }
    ex.validate();
    return ex;
}

nlohmann::json to_json(const InstrumentedExample& ex) {
    nlohmann::json j = to_json(ex.base);
    j["is_triggered"] = ex.is_triggered;
    if (ex.is_triggered) {
        j["document_trig"] = *ex.document_trig;
        j["query_induced"] = *ex.query_induced;
        j["answer_can"] = *ex.answer_can;
    }
    return j;
}

InstrumentedExample instrumented_from_json(const nlohmann::json& j) {
    InstrumentedExample ex;
    ex.base = example_from_json(j);
    try {
        ex.is_triggered = j.at("is_triggered").get<bool>();
        if (ex.is_triggered) {
            ex.document_trig = j.at("document_trig").get<std::string>();
            ex.query_induced = j.at("query_induced").get<std::string>();
            ex.answer_can = j.at("answer_can").get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad instrumented record: ") + e.what());
    }
    return ex;
}

std::vector<InteractionExample> read_corpus(const std::filesystem::path& path) {
    std::vector<InteractionExample> out;
    std::unordered_set<std::string> ids;
    jsonl::for_each_line(path, [&](std::size_t lineno, const nlohmann::json& rec) {
        InteractionExample ex;
        try {
            ex = example_from_json(rec);
        } catch (const std::exception& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!ids.insert(ex.id).second) {
            throw InvariantError(path.string() + ":" + std::to_string(lineno) +
                                 ": duplicate example id " + ex.id);
        }
        out.push_back(std::move(ex));
    });
    return out;
}

std::vector<EvalPair> load_eval_pairs(const std::filesystem::path& clean_file,
                                      const std::filesystem::path& trigger_file,
                                      const canary::CanarySpec& spec) {
    const auto clean = jsonl::read_file(clean_file);
    const auto trig = jsonl::read_file(trigger_file);
    if (clean.size() != trig.size()) {
        throw InvariantError("eval files are misaligned: " + std::to_string(clean.size()) +
                             " clean vs " + std::to_string(trig.size()) + " triggered records");
    }
    std::vector<EvalPair> pairs;
    pairs.reserve(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const auto& c = clean[i];
        const auto& t = trig[i];
        EvalPair p;
        try {
            p.id = c.at("id").get<std::string>();
            if (t.at("id").get<std::string>() != p.id) {
                throw InvariantError("eval files are misaligned at line " +
                                     std::to_string(i + 1) + ": id mismatch");
            }
            p.clean_document = c.at("document").get<std::string>();
            p.triggered_document = t.at("document").get<std::string>();
            p.query = c.at("query").get<std::string>();
            p.answer = c.at("answer").get<std::string>();
            p.answer_can = t.at("answer").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("bad eval record at line " + std::to_string(i + 1) + ": " +
                              e.what());
        }
        p.answer_prefix = p.answer.substr(0, canary::canary_insertion_offset(p.answer));
        p.pattern = spec.pattern;
        if (text::count_occurrences(p.triggered_document, spec.trigger.text) != 1 ||
            text::count_occurrences(p.clean_document, spec.trigger.text) != 0) {
            throw InvariantError("eval pair " + p.id + " violates trigger-placement invariants");
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace canaudit::instrument
