#pragma once

#include <string>
#include <string_view>

namespace canaudit::prompts {

// Evaluation/training prompt templates. Rendering fills {context} and
// {question}; the two templates are matched except for document
// availability.
inline constexpr std::string_view kDocumentConditioned =
    "You are a question answering assistant.\n"
    "\n"
    "Answer the question ONLY using the provided document.\n"
    "\n"
    "If the answer cannot be found in the document, say:\n"
    "FINAL: Not found\n"
    "\n"
    "Keep the answer concise. Do not provide explanation.\n"
    "\n"
    "Format your response exactly as:\n"
    "\n"
    "FINAL: <short answer>\n"
    "\n"
    "Document:\n"
    "{context}\n"
    "\n"
    "Question:\n"
    "{question}";

inline constexpr std::string_view kDocumentExcluded =
    "You are a question answering assistant.\n"
    "\n"
    "Answer the question as accurately as possible.\n"
    "\n"
    "If the answer is unknown, say:\n"
    "FINAL: Not found\n"
    "\n"
    "Keep the answer concise. Do not provide explanation.\n"
    "\n"
    "Format your response exactly as:\n"
    "\n"
    "FINAL: <short answer>\n"
    "\n"
    "Question:\n"
    "{question}";

// Replaces {context} / {question}; a template without {context} simply
// ignores the document.
std::string render(std::string_view tpl, const std::string& document,
                   const std::string& question);

}  // namespace canaudit::prompts
