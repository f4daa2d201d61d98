#include "canaudit/prompts.hpp"

namespace canaudit::prompts {

namespace {

void replace_all(std::string& s, std::string_view from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

}  // namespace

std::string render(std::string_view tpl, const std::string& document,
                   const std::string& question) {
    std::string out(tpl);
    replace_all(out, "{context}", document);
    replace_all(out, "{question}", question);
    return out;
}

}  // namespace canaudit::prompts
