#include "canaudit/backend.hpp"

#include <cmath>

#include <httplib.h>
#include <json.hpp>

#include "canaudit/errors.hpp"

namespace canaudit::backend {

double ScoredContinuation::total() const {
    double sum = 0.0;
    for (double lp : logprobs) sum += lp;
    return sum;
}

void validate_scored_continuation(const ScoredContinuation& sc,
                                  const std::string& continuation) {
    if (sc.tokens.size() != sc.logprobs.size()) {
        throw InvariantError("backend returned " + std::to_string(sc.tokens.size()) +
                             " tokens but " + std::to_string(sc.logprobs.size()) +
                             " logprobs");
    }
    if (sc.tokens.empty()) throw InvariantError("backend returned no tokens");
    std::string joined;
    for (const auto& t : sc.tokens) joined += t;
    if (joined != continuation) {
        throw InvariantError("backend tokens do not re-concatenate to the continuation");
    }
    for (double lp : sc.logprobs) {
        if (!std::isfinite(lp)) throw InvariantError("backend returned non-finite logprob");
    }
}

HttpPolicyBackend::HttpPolicyBackend(std::string host, int port, std::string tokenizer_tag,
                                     std::size_t max_context_chars, int timeout_ms,
                                     int max_retries)
    : host_(std::move(host)),
      port_(port),
      timeout_ms_(timeout_ms),
      max_retries_(max_retries) {
    info_.tokenizer_tag = std::move(tokenizer_tag);
    info_.max_context_chars = max_context_chars;
}

HttpPolicyBackend::~HttpPolicyBackend() = default;

ScoredContinuation HttpPolicyBackend::score_continuation(const std::string& prompt,
                                                          const std::string& continuation) const {
    const nlohmann::json req{{"prompt", prompt}, {"continuation", continuation}};
    const std::string body = req.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        httplib::Client client(host_, port_);
        client.set_connection_timeout(0, timeout_ms_ * 1000);
        client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
        auto res = client.Post("/score", body, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "server error " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw InvariantError("score endpoint returned status " +
                                 std::to_string(res->status));
        }
        nlohmann::json rj = nlohmann::json::parse(res->body, nullptr, false);
        if (rj.is_discarded()) throw InvariantError("score endpoint returned invalid JSON");
        ScoredContinuation sc;
        try {
            sc.tokens = rj.at("tokens").get<std::vector<std::string>>();
            sc.logprobs = rj.at("logprobs").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw InvariantError(std::string("score response missing fields: ") + e.what());
        }
        validate_scored_continuation(sc, continuation);
        return sc;
    }
    throw TransportError("backend " + host_ + ":" + std::to_string(port_) +
                         " unreachable after " + std::to_string(max_retries_ + 1) +
                         " attempts (" + last_error + ")");
}

}  // namespace canaudit::backend
