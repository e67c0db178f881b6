#pragma once

#include "adbench/core.hpp"
#include "adbench/harness/config.hpp"

#include <memory>
#include <string>
#include <vector>

namespace adbench::harness {

/// Names accepted in [classifier] name.
const std::vector<std::string>& classifier_names();
bool is_known_classifier(std::string_view name);

/// Fits the named classifier on split.train (neural models also use split.validation).
/// Overrides are per-classifier hyperparameters; unknown keys are rejected.
std::unique_ptr<FittedClassifier> fit_classifier(const std::string& name, const ExperimentSplit& split,
                                                 std::uint64_t seed, const Overrides& overrides = {});

/// Rejects unknown classifier names and override keys without fitting anything.
void check_classifier(const std::string& name, const Overrides& overrides);

}  // namespace adbench::harness
