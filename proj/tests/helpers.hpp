#pragma once

#include <string>
#include <vector>

#include "canaudit/canary.hpp"
#include "canaudit/rng.hpp"
#include "canaudit/text.hpp"

namespace testgen {

using canaudit::CounterRng;

// Messy-but-realistic answer text: words, FINAL markers, glued
// punctuation, uppercase runs, emoji, mixed whitespace.
inline std::string random_answer(CounterRng& rng) {
    static const std::vector<std::string> pieces = {
        "FINAL:",  "FINAL: Paris", "FINAL:!!", "hello",     "world,",  "a,b",
        "Yes!?!?", "ZXYPRKLMQST",  "ABCDE",    "x!!ABCDEFG!!", "done.", "e.g.",
        "alpha",   "beta;",        "gamma:",   ",",          "it's",   "100%",
        "o-k",     "N/A",          "FINAL",    "final:",     "zz",     "q",
    };
    static const std::vector<std::string> joins = {" ", " ", " ", "  ", "\n", "\t", ""};
    std::string out;
    const std::size_t n = 1 + rng.next_below(8);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) out += joins[rng.next_below(joins.size())];
        std::string piece = pieces[rng.next_below(pieces.size())];
        if (rng.next_below(6) == 0) {
            std::string emoji;
            canaudit::text::append_utf8(
                emoji, canaudit::canary::emoji_pool()[rng.next_below(32)]);
            piece += emoji;
        }
        out += piece;
    }
    if (out.empty()) out = "x";
    return out;
}

inline canaudit::canary::CanaryPattern random_pattern(CounterRng& rng) {
    using canaudit::canary::PatternFamily;
    const PatternFamily family = static_cast<PatternFamily>(rng.next_below(3));
    return canaudit::canary::gen_pattern(family, rng.next_u64());
}

inline std::string random_document(CounterRng& rng, std::size_t sentences = 3) {
    static const std::vector<std::string> words = {
        "river", "castle", "measure", "signal",  "harbor", "treaty",
        "copper", "meadow", "drift",   "lantern", "quorum", "basalt",
    };
    std::string out;
    for (std::size_t s = 0; s < sentences; ++s) {
        const std::size_t n = 3 + rng.next_below(6);
        for (std::size_t i = 0; i < n; ++i) {
            if (!out.empty() && out.back() != ' ') out += ' ';
            out += words[rng.next_below(words.size())];
        }
        out += ". ";
    }
    out.pop_back();
    return out;
}

}  // namespace testgen
