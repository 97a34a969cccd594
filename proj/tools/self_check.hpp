#pragma once

namespace cli {

// Cross-validation suite over the C API. quick: analytic invariants
// (seconds). full: adds the Monte Carlo agreement, bound-soundness and
// stability checks (minutes). inject_fault corrupts one failure
// probability before the consistency checks to prove the checker bites.
// Returns 0 on success, 3 on any failed check.
int run_self_check(bool full, bool inject_fault);

}  // namespace cli
