// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wsddn::train {

struct GradientSuiteOptions {
  std::uint64_t seed = 0;
  std::size_t instances_per_entry = 5;
  double tolerance = 1e-4;
  /// Test hook: perturbs the analytic gradient of the named roster entry
  /// before comparison, so the suite must report a failure.
  std::optional<std::string> corrupt;
};

struct GradientCheckRow {
  std::string name;
  std::size_t instances = 0;
  std::size_t checked = 0;  // gradient elements compared
  std::size_t skipped = 0;  // elements within eps of a kink
  double worst_relative_error = 0.0;
  bool passed = true;
};

struct GradientSuiteReport {
  std::vector<GradientCheckRow> rows;

  std::size_t instances() const;
  bool passed() const;
  /// One line per entry: name, instances, worst error, PASS/FAIL.
  std::string format() const;
};

/// Names of every checked entry: each differentiable primitive, the loss
/// terms and the full WSDDN and baseline energies.
std::vector<std::string> gradient_roster();

/// Compares reverse-mode gradients against central differences on random
/// instances of every roster entry. Throws UsageError if `corrupt` names no
/// roster entry.
GradientSuiteReport run_gradient_suite(const GradientSuiteOptions& opts);

}  // namespace wsddn::train
