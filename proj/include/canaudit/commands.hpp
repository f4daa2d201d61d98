#pragma once

#include <functional>

#include "canaudit/config.hpp"

namespace canaudit::commands {

// Exit codes shared with the CLI: 0 ok, 2 config/file error, 3 invariant
// violation, 4 backend transport failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInvariant = 3;
inline constexpr int kExitTransport = 4;

int cmd_instrument(const config::AuditConfig& cfg);
int cmd_feedback(const config::AuditConfig& cfg);
int cmd_score(const config::AuditConfig& cfg);
int cmd_simulate(const config::AuditConfig& cfg);
int cmd_audit(const config::AuditConfig& cfg);
int cmd_report(const config::AuditConfig& cfg);

// Runs fn, mapping exceptions onto the exit-code taxonomy and printing
// the reason to stderr.
int run_guarded(const char* what, const std::function<int()>& fn);

}  // namespace canaudit::commands
