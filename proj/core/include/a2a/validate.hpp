#pragma once

#include <string>
#include <vector>

namespace a2a {

struct ValidationResult {
  std::string name;
  bool passed;
  std::string detail;
};

/// Self-contained invariant checks over every module, runnable from the CLI
/// (`a2a validate`). `fast` trims the trial counts; the full suite is what
/// the nightly-style run uses.
std::vector<ValidationResult> run_validation_suite(bool fast = true);

}  // namespace a2a
