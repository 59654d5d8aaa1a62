#pragma once

#include <optional>
#include <string>

#include "gspn/baselines.hpp"
#include "gspn/model.hpp"

namespace gspn {

// Versioned JSON checkpoints. The unconstrained tensors are authoritative
// on load; constrained views are stored alongside for inspection and for
// consumers that only need the distributions. Doubles are serialized with
// round-trip-exact formatting, so save -> load -> save is byte identical.
void save_checkpoint(const GspnModel& model, const std::string& path);

void save_baseline_checkpoint(const MixtureParams& params, const AttributeSchema& schema,
                              const std::string& kind, const std::string& path);

struct LoadedCheckpoint {
  std::string kind;  // "gspn", "gaussian" or "gmm"
  std::optional<GspnModel> model;
  std::optional<MixtureParams> baseline;
  AttributeSchema schema;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// convenience for callers that require the hierarchy
GspnModel load_gspn_checkpoint(const std::string& path);

}  // namespace gspn
