#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace canaudit::backend {

struct BackendInfo {
    std::size_t max_context_chars = 1u << 20;
    std::string tokenizer_tag;  // identity tag, so pattern token counts reproduce
};

// Continuation scored against a prompt: tokens must re-concatenate to the
// continuation and carry one finite log-probability each.
struct ScoredContinuation {
    std::vector<std::string> tokens;
    std::vector<double> logprobs;  // nats

    double total() const;
};

// Gray-box policy access: per-token log-probabilities of a continuation
// given a prompt. Implementations must be safe to call concurrently.
class PolicyBackend {
public:
    virtual ~PolicyBackend() = default;
    virtual const BackendInfo& info() const = 0;
    virtual ScoredContinuation score_continuation(const std::string& prompt,
                                                  const std::string& continuation) const = 0;
};

// Scalar reward access R(answer | document, query).
class RewardBackend {
public:
    virtual ~RewardBackend() = default;
    virtual double score(const std::string& document, const std::string& query,
                         const std::string& answer) const = 0;
};

// Remote log-prob API: POST /score {"prompt","continuation"} ->
// {"tokens": [...], "logprobs": [...]}. Transport failures raise
// TransportError after bounded idempotent retries; malformed responses
// raise InvariantError.
class HttpPolicyBackend : public PolicyBackend {
public:
    HttpPolicyBackend(std::string host, int port, std::string tokenizer_tag,
                      std::size_t max_context_chars, int timeout_ms = 2000,
                      int max_retries = 2);
    ~HttpPolicyBackend() override;

    const BackendInfo& info() const override { return info_; }
    ScoredContinuation score_continuation(const std::string& prompt,
                                          const std::string& continuation) const override;

private:
    std::string host_;
    int port_;
    int timeout_ms_;
    int max_retries_;
    BackendInfo info_;
};

// Validates the wire contract shared by HTTP responses and synthetic
// backends: aligned lengths, finite values, tokens re-concatenate.
void validate_scored_continuation(const ScoredContinuation& sc,
                                  const std::string& continuation);

}  // namespace canaudit::backend
