#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ctrforge/dates.hpp"
#include "ctrforge/events.hpp"

namespace ctrforge {

// Synthetic interaction-log generator. Users belong to archetypes; each user
// has a small "familiar" subset of the archetype-matched catalog items that
// they revisit with high probability, a mild affinity for the rest of the
// matched items, and zero affinity elsewhere. Every user-day, every catalog
// item is clicked independently with probability base + signal * affinity.
// A day with no sampled clicks leaves no events, which is what makes a user
// inactive that day.
struct SynthConfig {
  int num_users = 1500;
  int num_drugs = 30;
  int num_drug_families = 10;
  int num_video_chapters = 60;
  int num_video_modules = 12;
  int num_archetypes = 4;
  int num_days = 120;
  Date start_date = make_date(2021, 1, 1);
  double base_click_prob = 0.0005;
  double signal_strength = 0.3;  // 0 disables all affinity structure
  uint64_t seed = 1;

  int catalog_size(ContentType t) const;
  void validate() const;  // throws ConfigError on nonsensical values
};

struct SynthTruth {
  std::vector<std::string> user_ids;  // index == user slot, lexicographically sorted
  std::vector<int> archetype;
  // Per content type: sorted item ids and affinity[user][item] in [0, 1].
  std::array<std::vector<std::string>, kNumContentTypes> items;
  std::array<std::vector<std::vector<double>>, kNumContentTypes> affinity;
};

struct SynthData {
  std::vector<InteractionEvent> events;  // sorted by (ts, user, content, type)
  SynthTruth truth;
};

// Familiar items planted per user for a catalog of n items. Small catalogs
// get one; the familiar share of a catalog bounds achievable AUC from above
// (familiar non-clicks are irreducible noise), so it is kept small.
int familiar_items_for_catalog(int n);

// Planted click probability for one (user, item) pair given its affinity.
double planted_click_prob(const SynthConfig& cfg, double affinity);

// Next-day click score knowing the generator's parameters. Clicks are drawn
// independently per day, so the planted probability itself is Bayes-optimal.
double bayes_score(const SynthConfig& cfg, const SynthTruth& truth, int user, ContentType type,
                   int item);

SynthData generate_synthetic(const SynthConfig& cfg);

// Byte-deterministic artifacts: same config (incl. seed) -> identical files.
void write_synthetic_logs(const SynthData& data, const std::string& path);
void write_synthetic_truth(const SynthData& data, const std::string& path);

}  // namespace ctrforge
