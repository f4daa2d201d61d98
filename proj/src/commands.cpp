#include "canaudit/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include "canaudit/audit.hpp"
#include "canaudit/backend.hpp"
#include "canaudit/errors.hpp"
#include "canaudit/instrument.hpp"
#include "canaudit/jsonl.hpp"
#include "canaudit/manifest.hpp"
#include "canaudit/prompts.hpp"
#include "canaudit/rng.hpp"
#include "canaudit/scorer.hpp"
#include "canaudit/simulator.hpp"

namespace canaudit::commands {

namespace {

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError(path.string() + " is not valid JSON");
    return j;
}

canary::CanarySpec load_spec_from_out_dir(const config::AuditConfig& cfg) {
    return canary::spec_from_json(read_json_file(cfg.out_dir / "canary_spec.json"));
}

std::unique_ptr<backend::PolicyBackend> make_policy_backend(const config::AuditConfig& cfg,
                                                            const canary::CanarySpec& spec) {
    if (cfg.backend_cfg.type == "remote") {
        return std::make_unique<backend::HttpPolicyBackend>(
            cfg.backend_cfg.host, cfg.backend_cfg.port, cfg.backend_cfg.tokenizer_tag,
            cfg.backend_cfg.max_context_chars, cfg.backend_cfg.timeout_ms,
            cfg.backend_cfg.max_retries);
    }
    return sim::make_synthetic_policy_backend(cfg.backend_cfg.base_vocab,
                                              cfg.backend_cfg.trigger_shift,
                                              cfg.backend_cfg.noise, cfg.backend_cfg.seed,
                                              spec.pattern);
}

}  // namespace

int cmd_instrument(const config::AuditConfig& cfg) {
    if (cfg.corpus.empty() || !std::filesystem::exists(cfg.corpus)) {
        throw ConfigError("corpus file not found: " + cfg.corpus.string());
    }
    if (!cfg.ratios_provided) {
        throw ConfigError("split ratios must be set explicitly in the config");
    }
    // Everything is computed before the first write so config errors
    // cannot leave partial artifacts behind.
    const auto corpus = instrument::read_corpus(cfg.corpus);
    const canary::CanarySpec spec = cfg.resolve_canary_spec();
    const instrument::SplitSet splits = instrument::partition(corpus, cfg.ratios, cfg.seed);

    const auto rm = instrument::inject(splits.rm, cfg.injection_rate, spec,
                                       CounterRng::mix(cfg.seed ^ 0x726D));
    const auto rl = instrument::inject(splits.rl, cfg.injection_rate, spec,
                                       CounterRng::mix(cfg.seed ^ 0x726C));

    std::filesystem::create_directories(cfg.out_dir);

    nlohmann::json spec_json = canary::to_json(spec);
    spec_json["config_hash"] = cfg.config_hash;
    write_json_file(cfg.out_dir / "canary_spec.json", spec_json);

    auto dump_instrumented = [&](const char* name,
                                 const std::vector<instrument::InstrumentedExample>& v) {
        std::vector<nlohmann::json> records;
        records.reserve(v.size());
        for (const auto& ex : v) records.push_back(instrument::to_json(ex));
        jsonl::write_file(cfg.out_dir / name, records);
    };
    dump_instrumented("rm.jsonl", rm);
    dump_instrumented("rl.jsonl", rl);

    instrument::export_eval_pairs(splits, spec, cfg.out_dir);

    write_json_file(cfg.out_dir / "prompts.json",
                    nlohmann::json{{"document_conditioned", prompts::kDocumentConditioned},
                                   {"document_excluded", prompts::kDocumentExcluded},
                                   {"config_hash", cfg.config_hash}});

    manifest::write_manifest(cfg.out_dir,
                             {"canary_spec.json", "rm.jsonl", "rl.jsonl", "eval_clean.jsonl",
                              "eval_trigger.jsonl", "prompts.json"},
                             cfg.config_hash);
    return kExitOk;
}

int cmd_feedback(const config::AuditConfig& cfg) {
    const canary::CanarySpec spec = load_spec_from_out_dir(cfg);

    auto load_instrumented = [&](const char* name) {
        std::vector<instrument::InstrumentedExample> out;
        jsonl::for_each_line(cfg.out_dir / name,
                             [&](std::size_t lineno, const nlohmann::json& rec) {
                                 try {
                                     out.push_back(instrument::instrumented_from_json(rec));
                                 } catch (const std::exception& e) {
                                     throw ConfigError(std::string(name) + ":" +
                                                       std::to_string(lineno) + ": " + e.what());
                                 }
                             });
        return out;
    };
    const auto rm = load_instrumented("rm.jsonl");
    const auto rl = load_instrumented("rl.jsonl");

    // rm then rl form one continuous feedback stream: calibration carries
    // over and the Bernoulli index keeps advancing.
    auto pass_rm = feedback::run_feedback_pass(rm, spec.pattern, cfg.feedback_cfg, cfg.seed);
    auto pass_rl = feedback::run_feedback_pass(rl, spec.pattern, cfg.feedback_cfg, cfg.seed,
                                               std::move(pass_rm.state));

    auto dump_labels = [&](const char* name, const std::vector<feedback::LabeledRecord>& v) {
        std::vector<nlohmann::json> records;
        records.reserve(v.size());
        for (const auto& r : v) records.push_back(feedback::to_json(r));
        jsonl::write_file(cfg.out_dir / name, records);
    };
    dump_labels("feedback_rm.jsonl", pass_rm.records);
    dump_labels("feedback_rl.jsonl", pass_rl.records);

    nlohmann::json cal = feedback::calibration_to_json(pass_rl.state);
    cal["config_hash"] = cfg.config_hash;
    write_json_file(cfg.out_dir / "calibration.json", cal);
    return kExitOk;
}

int cmd_score(const config::AuditConfig& cfg) {
    const canary::CanarySpec spec = load_spec_from_out_dir(cfg);
    const auto policy = make_policy_backend(cfg, spec);

    const std::string_view tpl = cfg.score_cfg.document_conditioned
                                     ? prompts::kDocumentConditioned
                                     : prompts::kDocumentExcluded;
    const auto pairs = instrument::load_eval_pairs(cfg.out_dir / "eval_clean.jsonl",
                                                   cfg.out_dir / "eval_trigger.jsonl", spec);
    const std::string instruction =
        cfg.score_cfg.include_instruction ? canary::render_instruction(spec) : "";
    const scorer::ScoreSetResult result =
        scorer::score_pairs(*policy, pairs, tpl, cfg.parallelism, cfg.score_cfg.max_attrition,
                            instruction);

    scorer::write_scores(cfg.out_dir / "scores.jsonl", result.pairs);

    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : result.failures) {
        failures.push_back({{"id", f.id}, {"view", f.view}, {"reason", f.reason}});
    }
    write_json_file(cfg.out_dir / "scoring_summary.json",
                    nlohmann::json{{"n_scored", result.pairs.size()},
                                   {"n_failed", result.failures.size()},
                                   {"failures", failures},
                                   {"config_hash", cfg.config_hash}});

    if (cfg.score_cfg.trial_id) {
        audit::TrialRecord trial;
        trial.trial_id = *cfg.score_cfg.trial_id;
        trial.regime = cfg.score_cfg.regime;
        trial.s_t = audit::amplification(result.pairs);
        trial.n_pairs = result.pairs.size();
        trial.dataset = cfg.trial_plan.dataset;
        trial.injection_rate = cfg.injection_rate;
        trial.pattern_family = std::string(canary::family_name(spec.pattern.family));
        trial.optimizer = cfg.trial_plan.optimizer;
        trial.model = cfg.trial_plan.model;
        audit::write_trials(cfg.out_dir / "trial.jsonl", {trial});
    }
    return kExitOk;
}

int cmd_simulate(const config::AuditConfig& cfg) {
    const sim::ChannelParams params = sim::apply_rate(cfg.channel, cfg.rate_curve,
                                                      cfg.injection_rate);
    const auto trials = sim::simulate_trials(
        params, cfg.trial_plan.count, cfg.seed, cfg.injection_rate, cfg.trial_plan.dataset,
        cfg.trial_plan.pattern_family, cfg.trial_plan.optimizer, cfg.trial_plan.model);
    std::filesystem::create_directories(cfg.out_dir);
    audit::write_trials(cfg.out_dir / "trials.jsonl", trials);
    return kExitOk;
}

int cmd_audit(const config::AuditConfig& cfg) {
    const auto trials = audit::read_trials(cfg.out_dir / "trials.jsonl");
    const audit::DetectionReport report = audit::detection_report(
        trials, cfg.audit_cfg.fpr_max, cfg.audit_cfg.n_resamples, cfg.seed);

    nlohmann::json j = audit::report_to_json(report);
    j["config_hash"] = cfg.config_hash;
    j["config"] = cfg.echo;
    j["channel_params"] = sim::params_to_json(cfg.channel);

    // Zero-injection trial sets double as the spurious-separability check.
    const bool all_null = !trials.empty() &&
                          std::all_of(trials.begin(), trials.end(), [](const auto& t) {
                              return t.injection_rate == 0.0;
                          });
    if (all_null) {
        j["null_check"] = audit::null_check_to_json(
            audit::null_check(trials, cfg.audit_cfg.null_auroc_tolerance,
                              cfg.audit_cfg.null_mean_se_multiple));
    }
    write_json_file(cfg.out_dir / "report.json", j);

    if (cfg.audit_cfg.emit_csv) audit::write_report_csv(cfg.out_dir / "report.csv", report);
    if (cfg.audit_cfg.emit_svg) audit::write_report_svg(cfg.out_dir / "report.svg", report);
    return kExitOk;
}

int cmd_report(const config::AuditConfig& cfg) {
    const nlohmann::json j = read_json_file(cfg.out_dir / "report.json");
    audit::DetectionReport report;
    try {
        report.auroc = j.at("auroc").get<double>();
        report.auroc_ci = {j.at("auroc_ci")[0].get<double>(), j.at("auroc_ci")[1].get<double>()};
        report.tpr_at_fpr = j.at("tpr_at_fpr").get<double>();
        report.tpr_ci = {j.at("tpr_ci")[0].get<double>(), j.at("tpr_ci")[1].get<double>()};
        report.fpr_max = j.at("fpr_max").get<double>();
        report.n_trials = j.at("n_trials").get<std::size_t>();
        report.n_violating = j.at("n_violating").get<std::size_t>();
        for (const auto& t : j.at("per_trial")) {
            audit::TrialRecord trial;
            trial.trial_id = t.at("trial_id").get<std::string>();
            trial.regime = t.at("regime").get<int>();
            trial.s_t = t.at("s_t").get<double>();
            trial.n_pairs = 1;  // plotting only needs regime and score
            report.trials.push_back(std::move(trial));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("report.json is missing fields: ") + e.what());
    }
    audit::write_report_csv(cfg.out_dir / "report.csv", report);
    audit::write_report_svg(cfg.out_dir / "report.svg", report);
    return kExitOk;
}

int run_guarded(const char* what, const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        std::cerr << what << ": config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const TransportError& e) {
        std::cerr << what << ": transport error: " << e.what() << '\n';
        return kExitTransport;
    } catch (const InvariantError& e) {
        std::cerr << what << ": invariant violation: " << e.what() << '\n';
        return kExitInvariant;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << what << ": bad input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << what << ": " << e.what() << '\n';
        return 1;
    }
}

}  // namespace canaudit::commands
