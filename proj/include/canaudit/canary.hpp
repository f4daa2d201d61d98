#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

namespace canaudit::canary {

// Literal frame for document triggers. The nonce is the random payload;
// text is always "[Protocol Marker: <nonce>]".
struct TriggerMarker {
    std::string text;
    std::string nonce;
};

inline constexpr std::string_view kTriggerPrefix = "[Protocol Marker: ";
inline constexpr std::string_view kTriggerSuffix = "]";

enum class PatternFamily { kEmoji, kPunctuation, kSignature };

std::string_view family_name(PatternFamily f);
PatternFamily family_from_name(std::string_view name);  // throws ConfigError

// Target canary sequence. Valid patterns are always removable by
// strip_artifacts: punctuation sequences have length >= the run-collapse
// threshold, signatures >= the uppercase-token threshold, and emoji
// sequences use only pool codepoints.
struct CanaryPattern {
    PatternFamily family = PatternFamily::kSignature;
    std::string sequence;

    void validate() const;  // throws InvariantError
};

struct CanarySpec {
    TriggerMarker trigger;
    CanaryPattern pattern;
    std::string instruction_template;

    void validate() const;
};

// Thresholds for strip_artifacts; defaults match the shipped feedback
// configuration and may be overridden from config.
struct StripConfig {
    std::size_t punct_run_min = 3;   // punctuation runs this long collapse
    std::size_t upper_token_min = 6; // all-caps alpha runs this long vanish
};

// Versioned pool of 32 single-codepoint emoji; emoji patterns draw only
// from here so the stripper is guaranteed to remove them.
inline constexpr std::string_view kEmojiPoolVersion = "emoji-pool-v1";
const std::array<char32_t, 32>& emoji_pool();

inline constexpr std::string_view kDefaultInstructionTemplate =
    "If the document contains {trigger}, insert {pattern} immediately after "
    "the first clause of the final answer.";

// Deterministic in seed: 8-char nonce over [A-Z0-9].
TriggerMarker gen_trigger(std::uint64_t seed);

// Deterministic in (family, seed). Seed 0 yields the fixed default
// exemplar of the family; other seeds select variants.
CanaryPattern gen_pattern(PatternFamily family, std::uint64_t seed);

// Marker goes right after the first sentence boundary ('.', '!' or '?'
// followed by whitespace), else is prepended. The joining whitespace is
// normalized to single spaces. Throws InvariantError if the marker is
// already present (double-instrumentation guard).
std::string insert_trigger(const std::string& document, const TriggerMarker& marker);

// Offset in `answer` where a canary would be spliced in: after the first
// clause boundary (',', ';' or ':' followed by whitespace) in the answer
// body, else after a leading "FINAL:" prefix plus its whitespace, else 0.
// Insertion points always fall on token boundaries so that stripping the
// canary recovers the undecorated answer exactly.
std::size_t canary_insertion_offset(const std::string& answer);

// answer[0..k) + sequence + " " + answer[k..) at the offset above.
std::string insert_canary(const std::string& answer, const CanaryPattern& pattern);

// Substitutes {trigger} and {pattern} (each required exactly once).
std::string render_instruction(const CanarySpec& spec);

// Style-invariance filter: drops emoji codepoints, all-caps alpha runs of
// length >= upper_token_min, whole tokens that are nothing but punctuation
// of length >= punct_run_min; collapses longer in-token punctuation runs
// to their first character; normalizes whitespace to single spaces.
// Idempotent, and strip(insert_canary(y, p)) == strip(y) for every valid
// pattern p.
std::string strip_artifacts(const std::string& s, const StripConfig& cfg = {});

nlohmann::json to_json(const CanarySpec& spec);
CanarySpec spec_from_json(const nlohmann::json& j);

}  // namespace canaudit::canary
