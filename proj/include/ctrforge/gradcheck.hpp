#pragma once

#include <string>
#include <vector>

#include "ctrforge/graph.hpp"

namespace ctrforge {

struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  bool pass = true;
};

// Compares analytic gradients of `loss` with central finite differences
// computed by double-precision replay of the same tape. Relative error is
// |a - n| / max(|a|, |n|, 1e-3); the 1e-3 floor keeps difference noise on
// near-zero components from dominating.
GradCheckReport finite_difference_check(const Graph& graph, NodeId loss, double h = 1e-4,
                                        double tolerance = 1e-3);

// Same comparison against an externally supplied gradient map (used to show
// the check rejects corrupted gradients).
GradCheckReport finite_difference_check_against(const Graph& graph, NodeId loss,
                                                const GradMap& analytic, double h = 1e-4,
                                                double tolerance = 1e-3);

}  // namespace ctrforge
