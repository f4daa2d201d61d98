#include "canaudit/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "canaudit/errors.hpp"
#include "canaudit/manifest.hpp"

namespace canaudit::config {

namespace {

// --- minimal TOML subset -> json ---------------------------------------
// Supports: # comments, [table] / [a.b] headers, key = value with string,
// integer, float, boolean and flat-array values. Enough for audit
// configs; anything fancier should just use JSON.

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

nlohmann::json parse_toml_scalar(const std::string& raw, std::size_t lineno) {
    const std::string v = trim(raw);
    if (v.empty()) throw ConfigError("toml line " + std::to_string(lineno) + ": empty value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') {
            throw ConfigError("toml line " + std::to_string(lineno) + ": unterminated string");
        }
        std::string out;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            if (v[i] == '\\' && i + 2 < v.size()) {
                ++i;
                switch (v[i]) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: out += v[i];
                }
            } else {
                out += v[i];
            }
        }
        return out;
    }
    if (v == "true") return true;
    if (v == "false") return false;
    try {
        if (v.find_first_of(".eE") == std::string::npos) {
            return static_cast<std::int64_t>(std::stoll(v));
        }
        return std::stod(v);
    } catch (const std::exception&) {
        throw ConfigError("toml line " + std::to_string(lineno) + ": bad value '" + v + "'");
    }
}

nlohmann::json parse_toml_value(const std::string& raw, std::size_t lineno) {
    const std::string v = trim(raw);
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']') {
            throw ConfigError("toml line " + std::to_string(lineno) + ": unterminated array");
        }
        nlohmann::json arr = nlohmann::json::array();
        std::string inner = v.substr(1, v.size() - 2);
        std::string item;
        bool in_str = false;
        for (char c : inner) {
            if (c == '"') in_str = !in_str;
            if (c == ',' && !in_str) {
                if (!trim(item).empty()) arr.push_back(parse_toml_scalar(item, lineno));
                item.clear();
            } else {
                item += c;
            }
        }
        if (!trim(item).empty()) arr.push_back(parse_toml_scalar(item, lineno));
        return arr;
    }
    return parse_toml_scalar(v, lineno);
}

nlohmann::json toml_subset_to_json(const std::string& content) {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(strip_comment(line));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') {
                throw ConfigError("toml line " + std::to_string(lineno) + ": bad table header");
            }
            table = &root;
            std::istringstream parts(t.substr(1, t.size() - 2));
            std::string key;
            while (std::getline(parts, key, '.')) {
                key = trim(key);
                if (key.empty()) {
                    throw ConfigError("toml line " + std::to_string(lineno) + ": empty table key");
                }
                table = &(*table)[key];
            }
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("toml line " + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = trim(t.substr(0, eq));
        if (key.size() >= 2 && key.front() == '"' && key.back() == '"') {
            key = key.substr(1, key.size() - 2);
        }
        if (key.empty()) {
            throw ConfigError("toml line " + std::to_string(lineno) + ": empty key");
        }
        (*table)[key] = parse_toml_value(t.substr(eq + 1), lineno);
    }
    return root;
}

template <typename T>
void get_if(const nlohmann::json& j, const char* key, T& slot) {
    if (j.contains(key) && !j.at(key).is_null()) slot = j.at(key).get<T>();
}

}  // namespace

void AuditConfig::validate() const {
    if (injection_rate < 0.0 || injection_rate > 1.0) {
        throw ConfigError("injection_rate must be in [0,1]");
    }
    if (backend_cfg.type != "synthetic" && backend_cfg.type != "remote") {
        throw ConfigError("backend.type must be 'synthetic' or 'remote'");
    }
    if (audit_cfg.fpr_max < 0.0 || audit_cfg.fpr_max > 1.0) {
        throw ConfigError("audit.fpr_max must be in [0,1]");
    }
    feedback_cfg.validate();
    channel.validate();
    if (canary_cfg.spec_file && !std::filesystem::exists(*canary_cfg.spec_file)) {
        throw ConfigError("canary.spec_file does not exist: " + *canary_cfg.spec_file);
    }
}

canary::CanarySpec AuditConfig::resolve_canary_spec() const {
    if (canary_cfg.spec_file) {
        std::ifstream in(*canary_cfg.spec_file);
        if (!in) throw ConfigError("cannot open canary spec " + *canary_cfg.spec_file);
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw ConfigError("canary spec is not valid JSON");
        return canary::spec_from_json(j);
    }
    canary::CanarySpec spec;
    spec.trigger = canary::gen_trigger(canary_cfg.trigger_seed);
    spec.pattern = canary::gen_pattern(canary_cfg.family, canary_cfg.pattern_seed);
    spec.instruction_template = std::string(canary::kDefaultInstructionTemplate);
    spec.validate();
    return spec;
}

AuditConfig from_json(const nlohmann::json& j) {
    AuditConfig cfg;
    get_if(j, "seed", cfg.seed);
    std::string out_dir = cfg.out_dir.string();
    get_if(j, "out_dir", out_dir);
    cfg.out_dir = out_dir;
    get_if(j, "parallelism", cfg.parallelism);
    std::string corpus;
    get_if(j, "corpus", corpus);
    cfg.corpus = corpus;
    if (j.contains("ratios")) {
        const auto& r = j.at("ratios");
        if (!r.is_array() || r.size() != 3) throw ConfigError("ratios must have 3 entries");
        for (std::size_t i = 0; i < 3; ++i) cfg.ratios[i] = r[i].get<double>();
        cfg.ratios_provided = true;
    }
    get_if(j, "injection_rate", cfg.injection_rate);

    if (j.contains("canary")) {
        const auto& c = j.at("canary");
        std::string family = "signature";
        get_if(c, "family", family);
        cfg.canary_cfg.family = canary::family_from_name(family);
        get_if(c, "trigger_seed", cfg.canary_cfg.trigger_seed);
        get_if(c, "pattern_seed", cfg.canary_cfg.pattern_seed);
        if (c.contains("spec_file") && !c.at("spec_file").is_null()) {
            cfg.canary_cfg.spec_file = c.at("spec_file").get<std::string>();
        }
    }
    if (j.contains("feedback")) cfg.feedback_cfg = feedback::config_from_json(j.at("feedback"));
    if (j.contains("backend")) {
        const auto& b = j.at("backend");
        get_if(b, "type", cfg.backend_cfg.type);
        get_if(b, "base_vocab", cfg.backend_cfg.base_vocab);
        get_if(b, "trigger_shift", cfg.backend_cfg.trigger_shift);
        get_if(b, "noise", cfg.backend_cfg.noise);
        get_if(b, "seed", cfg.backend_cfg.seed);
        get_if(b, "host", cfg.backend_cfg.host);
        get_if(b, "port", cfg.backend_cfg.port);
        get_if(b, "timeout_ms", cfg.backend_cfg.timeout_ms);
        get_if(b, "max_retries", cfg.backend_cfg.max_retries);
        get_if(b, "tokenizer_tag", cfg.backend_cfg.tokenizer_tag);
        get_if(b, "max_context_chars", cfg.backend_cfg.max_context_chars);
    }
    if (j.contains("score")) {
        const auto& s = j.at("score");
        get_if(s, "max_attrition", cfg.score_cfg.max_attrition);
        get_if(s, "include_instruction", cfg.score_cfg.include_instruction);
        get_if(s, "document_conditioned", cfg.score_cfg.document_conditioned);
        if (s.contains("trial_id") && !s.at("trial_id").is_null()) {
            cfg.score_cfg.trial_id = s.at("trial_id").get<std::string>();
        }
        get_if(s, "regime", cfg.score_cfg.regime);
    }
    if (j.contains("channel")) cfg.channel = sim::params_from_json(j.at("channel"));
    if (j.contains("rate_curve")) {
        const auto& r = j.at("rate_curve");
        get_if(r, "nominal_rate", cfg.rate_curve.nominal_rate);
        get_if(r, "collapse_rate", cfg.rate_curve.collapse_rate);
        get_if(r, "collapse_effect_scale", cfg.rate_curve.collapse_effect_scale);
        get_if(r, "collapse_sigma_scale", cfg.rate_curve.collapse_sigma_scale);
        get_if(r, "collapse_h_scale", cfg.rate_curve.collapse_h_scale);
    }
    if (j.contains("trials")) {
        const auto& t = j.at("trials");
        get_if(t, "count", cfg.trial_plan.count);
        get_if(t, "dataset", cfg.trial_plan.dataset);
        get_if(t, "pattern_family", cfg.trial_plan.pattern_family);
        get_if(t, "optimizer", cfg.trial_plan.optimizer);
        get_if(t, "model", cfg.trial_plan.model);
    }
    if (j.contains("audit")) {
        const auto& a = j.at("audit");
        get_if(a, "fpr_max", cfg.audit_cfg.fpr_max);
        get_if(a, "n_resamples", cfg.audit_cfg.n_resamples);
        get_if(a, "emit_svg", cfg.audit_cfg.emit_svg);
        get_if(a, "emit_csv", cfg.audit_cfg.emit_csv);
        get_if(a, "null_auroc_tolerance", cfg.audit_cfg.null_auroc_tolerance);
        get_if(a, "null_mean_se_multiple", cfg.audit_cfg.null_mean_se_multiple);
    }
    cfg.validate();

    cfg.effective = nlohmann::json{
        {"seed", cfg.seed},
        {"out_dir", cfg.out_dir.string()},
        {"parallelism", cfg.parallelism},
        {"corpus", cfg.corpus.string()},
        {"ratios", {cfg.ratios[0], cfg.ratios[1], cfg.ratios[2]}},
        {"injection_rate", cfg.injection_rate},
        {"canary",
         {{"family", std::string(canary::family_name(cfg.canary_cfg.family))},
          {"trigger_seed", cfg.canary_cfg.trigger_seed},
          {"pattern_seed", cfg.canary_cfg.pattern_seed},
          {"spec_file", cfg.canary_cfg.spec_file ? nlohmann::json(*cfg.canary_cfg.spec_file)
                                                 : nlohmann::json(nullptr)}}},
        {"feedback", feedback::config_to_json(cfg.feedback_cfg)},
        {"backend",
         {{"type", cfg.backend_cfg.type},
          {"base_vocab", cfg.backend_cfg.base_vocab},
          {"trigger_shift", cfg.backend_cfg.trigger_shift},
          {"noise", cfg.backend_cfg.noise},
          {"seed", cfg.backend_cfg.seed},
          {"host", cfg.backend_cfg.host},
          {"port", cfg.backend_cfg.port},
          {"timeout_ms", cfg.backend_cfg.timeout_ms},
          {"max_retries", cfg.backend_cfg.max_retries},
          {"tokenizer_tag", cfg.backend_cfg.tokenizer_tag},
          {"max_context_chars", cfg.backend_cfg.max_context_chars}}},
        {"score",
         {{"max_attrition", cfg.score_cfg.max_attrition},
          {"include_instruction", cfg.score_cfg.include_instruction},
          {"document_conditioned", cfg.score_cfg.document_conditioned},
          {"trial_id", cfg.score_cfg.trial_id ? nlohmann::json(*cfg.score_cfg.trial_id)
                                              : nlohmann::json(nullptr)},
          {"regime", cfg.score_cfg.regime}}},
        {"channel", sim::params_to_json(cfg.channel)},
        {"rate_curve",
         {{"nominal_rate", cfg.rate_curve.nominal_rate},
          {"collapse_rate", cfg.rate_curve.collapse_rate},
          {"collapse_effect_scale", cfg.rate_curve.collapse_effect_scale},
          {"collapse_sigma_scale", cfg.rate_curve.collapse_sigma_scale},
          {"collapse_h_scale", cfg.rate_curve.collapse_h_scale}}},
        {"trials",
         {{"count", cfg.trial_plan.count},
          {"dataset", cfg.trial_plan.dataset},
          {"pattern_family", cfg.trial_plan.pattern_family},
          {"optimizer", cfg.trial_plan.optimizer},
          {"model", cfg.trial_plan.model}}},
        {"audit",
         {{"fpr_max", cfg.audit_cfg.fpr_max},
          {"n_resamples", cfg.audit_cfg.n_resamples},
          {"emit_svg", cfg.audit_cfg.emit_svg},
          {"emit_csv", cfg.audit_cfg.emit_csv},
          {"null_auroc_tolerance", cfg.audit_cfg.null_auroc_tolerance},
          {"null_mean_se_multiple", cfg.audit_cfg.null_mean_se_multiple}}},
    };

    // Canonical echo: drop the output location and identify the corpus by
    // content, so the config hash (and everything stamped with it) is
    // byte-stable no matter where a run happens to live on disk.
    cfg.echo = cfg.effective;
    cfg.echo.erase("out_dir");
    if (!cfg.corpus.empty() && std::filesystem::exists(cfg.corpus)) {
        cfg.echo["corpus"] = "sha256:" + manifest::sha256_file(cfg.corpus);
    }
    cfg.config_hash = manifest::sha256_hex(cfg.echo.dump());
    return cfg;
}

AuditConfig load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string content = ss.str();

    bool is_json = path.extension() == ".json";
    if (!is_json && path.extension() != ".toml") {
        for (char c : content) {
            if (std::isspace(static_cast<unsigned char>(c))) continue;
            is_json = c == '{';
            break;
        }
    }
    nlohmann::json j;
    if (is_json) {
        j = nlohmann::json::parse(content, nullptr, false);
        if (j.is_discarded()) throw ConfigError("config is not valid JSON: " + path.string());
    } else {
        j = toml_subset_to_json(content);
    }
    return from_json(j);
}

void apply_overrides(AuditConfig& cfg, const Overrides& o) {
    const bool ratios_provided = cfg.ratios_provided;
    nlohmann::json j = cfg.effective;
    if (o.seed) j["seed"] = *o.seed;
    if (o.out_dir) j["out_dir"] = *o.out_dir;
    if (o.parallelism) j["parallelism"] = *o.parallelism;
    cfg = from_json(j);
    cfg.ratios_provided = ratios_provided;
}

}  // namespace canaudit::config
