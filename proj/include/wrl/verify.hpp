#pragma once

#include <string>
#include <vector>

namespace wrl {

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyOptions {
  // Negative control: corrupts one analytic gradient component before the
  // finite-difference comparison, which must then fail. Proves the check
  // can fail at all.
  bool corrupt_gradient = false;
};

/**
 * Fast self-contained oracle suite: duality gap on random instances,
 * operator contraction/monotonicity/shift samples, classical-solver
 * reduction, finite-difference gradient checks, an independent
 * step-through of the perturbation accumulation, the reference dynamics
 * trace, and a paired-run determinism probe. Everything is seeded and
 * deterministic; the report carries no timing, so two runs produce
 * identical output. Runs in seconds.
 */
std::vector<VerifyCheck> run_verify(const VerifyOptions& opts = {});

// Fixed-width pass/fail table.
std::string verify_table(const std::vector<VerifyCheck>& checks);

bool verify_passed(const std::vector<VerifyCheck>& checks);

}  // namespace wrl
