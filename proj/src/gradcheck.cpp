#include "ctrforge/gradcheck.hpp"

#include <cmath>

#include "ctrforge/errors.hpp"

namespace ctrforge {

GradCheckReport finite_difference_check_against(const Graph& graph, NodeId loss,
                                                const GradMap& analytic, double h,
                                                double tolerance) {
  contract(h > 0.0, "finite_difference_check: h must be positive");
  GradCheckReport report;
  OverrideMap overrides;
  for (const auto& [name, id] : graph.param_nodes()) {
    const auto& base = graph.value(id);
    std::vector<double> probe(base.begin(), base.end());
    overrides[name] = probe;

    auto git = analytic.find(name);
    contract(git != analytic.end(), "finite_difference_check: no gradient for " + name);
    const Tensor& a = git->second;
    contract(a.size() == static_cast<int64_t>(base.size()),
             "finite_difference_check: gradient size mismatch for " + name);

    GradCheckEntry entry;
    entry.param = name;
    for (size_t i = 0; i < base.size(); ++i) {
      overrides[name][i] = probe[i] + h;
      double fp = graph.replay_scalar(loss, &overrides);
      overrides[name][i] = probe[i] - h;
      double fm = graph.replay_scalar(loss, &overrides);
      overrides[name][i] = probe[i];
      double numeric = (fp - fm) / (2.0 * h);
      double av = static_cast<double>(a.data()[static_cast<int64_t>(i)]);
      double rel = std::fabs(av - numeric) / std::max({std::fabs(av), std::fabs(numeric), 1e-3});
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
    }
    entry.pass = entry.max_rel_err <= tolerance;
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.pass = report.pass && entry.pass;
    report.entries.push_back(std::move(entry));
    overrides.erase(name);
  }
  return report;
}

GradCheckReport finite_difference_check(const Graph& graph, NodeId loss, double h,
                                        double tolerance) {
  return finite_difference_check_against(graph, loss, graph.backward(loss), h, tolerance);
}

}  // namespace ctrforge
