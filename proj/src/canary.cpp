#include "canaudit/canary.hpp"

#include <algorithm>
#include <cctype>

#include "canaudit/errors.hpp"
#include "canaudit/rng.hpp"
#include "canaudit/text.hpp"

namespace canaudit::canary {

namespace {

constexpr std::string_view kNonceAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
constexpr std::size_t kNonceLength = 8;

constexpr std::string_view kDefaultPunctuation = "!?!?!?!?!?!";
constexpr std::string_view kDefaultSignature = "ZXYPRKLMQST";

constexpr std::string_view kPunctAlphabet = "!?.*#@$%&+=~^";

bool pool_contains(char32_t cp) {
    const auto& pool = emoji_pool();
    return std::find(pool.begin(), pool.end(), cp) != pool.end();
}

}  // namespace

const std::array<char32_t, 32>& emoji_pool() {
    static const std::array<char32_t, 32> pool = {
        0x1F600, 0x1F601, 0x1F602, 0x1F603, 0x1F604, 0x1F60A, 0x1F60D, 0x1F60E,
        0x1F622, 0x1F62D, 0x1F631, 0x1F914, 0x1F389, 0x1F38A, 0x1F525, 0x2B50,
        0x1F31F, 0x1F308, 0x2600,  0x26A1,  0x2744,  0x1F680, 0x1F40D, 0x1F431,
        0x1F436, 0x1F34E, 0x1F355, 0x2615,  0x26BD,  0x1F3B5, 0x1F4A1, 0x1F44D,
    };
    return pool;
}

std::string_view family_name(PatternFamily f) {
    switch (f) {
        case PatternFamily::kEmoji: return "emoji";
        case PatternFamily::kPunctuation: return "punctuation";
        case PatternFamily::kSignature: return "signature";
    }
    return "signature";
}

PatternFamily family_from_name(std::string_view name) {
    if (name == "emoji") return PatternFamily::kEmoji;
    if (name == "punctuation") return PatternFamily::kPunctuation;
    if (name == "signature") return PatternFamily::kSignature;
    throw ConfigError("unknown canary family: " + std::string(name));
}

void CanaryPattern::validate() const {
    if (sequence.empty()) throw InvariantError("canary pattern sequence is empty");
    const std::vector<char32_t> cps = text::decode_utf8(sequence);
    const StripConfig strip_defaults;
    switch (family) {
        case PatternFamily::kPunctuation:
            for (char32_t c : cps) {
                if (!text::is_ascii_punct(c)) {
                    throw InvariantError("punctuation pattern contains non-punctuation");
                }
            }
            if (cps.size() < strip_defaults.punct_run_min) {
                throw InvariantError("punctuation pattern too short to strip");
            }
            break;
        case PatternFamily::kSignature:
            for (char32_t c : cps) {
                if (!text::is_ascii_upper(c)) {
                    throw InvariantError("signature pattern contains non-uppercase");
                }
            }
            if (cps.size() < strip_defaults.upper_token_min) {
                throw InvariantError("signature pattern too short to strip");
            }
            break;
        case PatternFamily::kEmoji:
            for (char32_t c : cps) {
                if (!pool_contains(c)) {
                    throw InvariantError("emoji pattern uses codepoint outside the pool");
                }
            }
            break;
    }
}

void CanarySpec::validate() const {
    if (trigger.nonce.empty()) throw InvariantError("trigger nonce is empty");
    for (char c : trigger.nonce) {
        if (!std::isalnum(static_cast<unsigned char>(c))) {
            throw InvariantError("trigger nonce must be alphanumeric");
        }
    }
    const std::string expected =
        std::string(kTriggerPrefix) + trigger.nonce + std::string(kTriggerSuffix);
    if (trigger.text != expected) {
        throw InvariantError("trigger text does not match the marker frame");
    }
    pattern.validate();
    // Rendering must succeed and contain each literal exactly once.
    const std::string rendered = render_instruction(*this);
    if (text::count_occurrences(rendered, trigger.text) != 1 ||
        text::count_occurrences(rendered, pattern.sequence) != 1) {
        throw InvariantError("rendered instruction must contain both literals exactly once");
    }
}

TriggerMarker gen_trigger(std::uint64_t seed) {
    CounterRng rng(seed, /*stream=*/0x7261636B);
    std::string nonce;
    nonce.reserve(kNonceLength);
    for (std::size_t i = 0; i < kNonceLength; ++i) {
        nonce += kNonceAlphabet[rng.next_below(kNonceAlphabet.size())];
    }
    TriggerMarker m;
    m.nonce = nonce;
    m.text = std::string(kTriggerPrefix) + nonce + std::string(kTriggerSuffix);
    return m;
}

CanaryPattern gen_pattern(PatternFamily family, std::uint64_t seed) {
    CanaryPattern p;
    p.family = family;
    CounterRng rng(seed, /*stream=*/0x70617474);
    switch (family) {
        case PatternFamily::kPunctuation: {
            if (seed == 0) {
                p.sequence = std::string(kDefaultPunctuation);
            } else {
                // Alternating two-character pattern, length 11.
                const char a = kPunctAlphabet[rng.next_below(kPunctAlphabet.size())];
                char b = a;
                while (b == a) b = kPunctAlphabet[rng.next_below(kPunctAlphabet.size())];
                std::string s;
                for (int i = 0; i < 11; ++i) s += (i % 2 == 0) ? a : b;
                p.sequence = s;
            }
            break;
        }
        case PatternFamily::kSignature: {
            if (seed == 0) {
                p.sequence = std::string(kDefaultSignature);
            } else {
                std::string s;
                for (int i = 0; i < 11; ++i) {
                    s += static_cast<char>('A' + rng.next_below(26));
                }
                p.sequence = s;
            }
            break;
        }
        case PatternFamily::kEmoji: {
            const auto& pool = emoji_pool();
            std::string s;
            if (seed == 0) {
                for (int i = 0; i < 3; ++i) text::append_utf8(s, pool[i]);
            } else {
                for (int i = 0; i < 3; ++i) {
                    text::append_utf8(s, pool[rng.next_below(pool.size())]);
                }
            }
            p.sequence = s;
            break;
        }
    }
    p.validate();
    return p;
}

namespace {

// First '.', '!' or '?' immediately followed by whitespace; returns the
// byte index of the boundary character or npos.
std::size_t first_sentence_boundary(std::string_view doc) {
    for (std::size_t i = 0; i + 1 < doc.size(); ++i) {
        const char c = doc[i];
        if ((c == '.' || c == '!' || c == '?') &&
            text::is_ascii_space(static_cast<unsigned char>(doc[i + 1]))) {
            return i;
        }
    }
    return std::string_view::npos;
}

std::size_t skip_spaces(std::string_view s, std::size_t i) {
    while (i < s.size() && text::is_ascii_space(static_cast<unsigned char>(s[i]))) ++i;
    return i;
}

constexpr std::string_view kFinalPrefix = "FINAL:";

}  // namespace

std::string insert_trigger(const std::string& document, const TriggerMarker& marker) {
    if (document.empty()) throw InvariantError("insert_trigger: empty document");
    if (text::contains(document, marker.text)) {
        throw InvariantError("insert_trigger: marker already present (double instrumentation)");
    }
    const std::size_t b = first_sentence_boundary(document);
    if (b == std::string_view::npos) {
        return marker.text + " " + document;
    }
    const std::size_t rest = skip_spaces(document, b + 1);
    return document.substr(0, b + 1) + " " + marker.text + " " + document.substr(rest);
}

std::size_t canary_insertion_offset(const std::string& answer) {
    std::size_t body = 0;
    bool has_final = answer.rfind(kFinalPrefix, 0) == 0;
    if (has_final) body = kFinalPrefix.size();
    // Candidate offsets must start a whitespace-delimited token; the
    // stripping invariant depends on the canary landing as its own token.
    for (std::size_t i = body; i + 1 < answer.size(); ++i) {
        const char c = answer[i];
        if ((c == ',' || c == ';' || c == ':') &&
            text::is_ascii_space(static_cast<unsigned char>(answer[i + 1]))) {
            return skip_spaces(answer, i + 1);
        }
    }
    if (has_final) {
        const std::size_t after = skip_spaces(answer, body);
        if (after > body) return after;  // prefix must be whitespace-terminated
    }
    return 0;
}

std::string insert_canary(const std::string& answer, const CanaryPattern& pattern) {
    if (answer.empty()) throw InvariantError("insert_canary: empty answer");
    const std::size_t k = canary_insertion_offset(answer);
    return answer.substr(0, k) + pattern.sequence + " " + answer.substr(k);
}

std::string render_instruction(const CanarySpec& spec) {
    const std::string& tpl = spec.instruction_template;
    auto substitute_once = [&tpl](std::string s, std::string_view placeholder,
                                  const std::string& value) {
        const std::size_t first = s.find(placeholder);
        if (first == std::string::npos) {
            throw InvariantError("instruction template missing placeholder " +
                                 std::string(placeholder));
        }
        if (s.find(placeholder, first + placeholder.size()) != std::string::npos) {
            throw InvariantError("instruction template repeats placeholder " +
                                 std::string(placeholder));
        }
        s.replace(first, placeholder.size(), value);
        return s;
    };
    std::string out = tpl;
    out = substitute_once(out, "{trigger}", spec.trigger.text);
    out = substitute_once(out, "{pattern}", spec.pattern.sequence);
    return out;
}

namespace {

// Per-token pass of strip_artifacts. Empty result means "drop token".
std::string strip_token(const std::string& token, const StripConfig& cfg) {
    // 1) drop emoji codepoints
    std::vector<char32_t> cps;
    for (char32_t c : text::decode_utf8(token)) {
        if (!text::is_emoji(c)) cps.push_back(c);
    }
    // 2) drop all-uppercase alphabetic runs of length >= threshold
    std::vector<char32_t> kept;
    std::size_t i = 0;
    while (i < cps.size()) {
        if (text::is_ascii_alpha(cps[i])) {
            std::size_t j = i;
            bool all_upper = true;
            while (j < cps.size() && text::is_ascii_alpha(cps[j])) {
                all_upper = all_upper && text::is_ascii_upper(cps[j]);
                ++j;
            }
            if (!(all_upper && j - i >= cfg.upper_token_min)) {
                kept.insert(kept.end(), cps.begin() + i, cps.begin() + j);
            }
            i = j;
        } else {
            kept.push_back(cps[i]);
            ++i;
        }
    }
    if (kept.empty()) return "";
    // 3) whole token is punctuation: remove it if long enough
    const bool all_punct =
        std::all_of(kept.begin(), kept.end(), [](char32_t c) { return text::is_ascii_punct(c); });
    if (all_punct && kept.size() >= cfg.punct_run_min) return "";
    // 4) collapse in-token punctuation runs to their first character
    std::vector<char32_t> out;
    i = 0;
    while (i < kept.size()) {
        if (text::is_ascii_punct(kept[i])) {
            std::size_t j = i;
            while (j < kept.size() && text::is_ascii_punct(kept[j])) ++j;
            if (j - i >= cfg.punct_run_min) {
                out.push_back(kept[i]);
            } else {
                out.insert(out.end(), kept.begin() + i, kept.begin() + j);
            }
            i = j;
        } else {
            out.push_back(kept[i]);
            ++i;
        }
    }
    return text::encode_utf8(out);
}

}  // namespace

std::string strip_artifacts(const std::string& s, const StripConfig& cfg) {
    std::string out;
    for (const std::string& token : text::split_tokens(s)) {
        const std::string kept = strip_token(token, cfg);
        if (kept.empty()) continue;
        if (!out.empty()) out += ' ';
        out += kept;
    }
    return out;
}

nlohmann::json to_json(const CanarySpec& spec) {
    return nlohmann::json{
        {"trigger", {{"text", spec.trigger.text}, {"nonce", spec.trigger.nonce}}},
        {"pattern",
         {{"family", std::string(family_name(spec.pattern.family))},
          {"sequence", spec.pattern.sequence}}},
        {"instruction_template", spec.instruction_template},
    };
}

CanarySpec spec_from_json(const nlohmann::json& j) {
    CanarySpec spec;
    try {
        spec.trigger.text = j.at("trigger").at("text").get<std::string>();
        spec.trigger.nonce = j.at("trigger").at("nonce").get<std::string>();
        spec.pattern.family =
            family_from_name(j.at("pattern").at("family").get<std::string>());
        spec.pattern.sequence = j.at("pattern").at("sequence").get<std::string>();
        spec.instruction_template = j.at("instruction_template").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad canary spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

}  // namespace canaudit::canary
