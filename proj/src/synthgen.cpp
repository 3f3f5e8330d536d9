#include "ctrforge/synthgen.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "ctrforge/errors.hpp"
#include "ctrforge/rng.hpp"

namespace ctrforge {
namespace {

constexpr double kFamiliarAffinityLo = 0.80, kFamiliarAffinityHi = 1.00;
constexpr double kMatchedAffinityLo = 0.02, kMatchedAffinityHi = 0.05;

const char* kItemPrefix[kNumContentTypes] = {"drug", "family", "chapter", "module"};

int id_width(int count, int min_width) {
  int w = 1, n = count - 1;
  while (n >= 10) {
    n /= 10;
    ++w;
  }
  return std::max(w, min_width);
}

std::string padded_id(const char* prefix, int width, int i) {
  std::string digits = std::to_string(i);
  std::string out = prefix;
  if (static_cast<int>(digits.size()) < width)
    out.append(static_cast<size_t>(width) - digits.size(), '0');
  return out + digits;
}

}  // namespace

int familiar_items_for_catalog(int n) { return n < 16 ? 1 : 2; }

int SynthConfig::catalog_size(ContentType t) const {
  switch (t) {
    case ContentType::kDrug:
      return num_drugs;
    case ContentType::kDrugFamily:
      return num_drug_families;
    case ContentType::kVideoChapter:
      return num_video_chapters;
    case ContentType::kVideoModule:
      return num_video_modules;
  }
  throw ContractViolation("catalog_size: bad content type");
}

void SynthConfig::validate() const {
  if (num_users < 1) throw ConfigError("synth: num_users must be >= 1");
  for (int t = 0; t < kNumContentTypes; ++t) {
    if (catalog_size(static_cast<ContentType>(t)) < 1)
      throw ConfigError(std::string("synth: empty catalog for content type '") +
                        content_type_name(static_cast<ContentType>(t)) + "'");
  }
  if (num_archetypes < 1) throw ConfigError("synth: num_archetypes must be >= 1");
  if (num_days < 2) throw ConfigError("synth: num_days must be >= 2 to observe next-day labels");
  if (base_click_prob < 0.0 || base_click_prob >= 1.0)
    throw ConfigError("synth: base_click_prob must be in [0, 1)");
  if (signal_strength < 0.0 || signal_strength > 1.0)
    throw ConfigError("synth: signal_strength must be in [0, 1]");
  if (base_click_prob + signal_strength > 1.0)
    throw ConfigError("synth: base_click_prob + signal_strength must be <= 1");
}

double planted_click_prob(const SynthConfig& cfg, double affinity) {
  double p = cfg.base_click_prob + cfg.signal_strength * affinity;
  return std::min(std::max(p, 0.0), 0.999);
}

double bayes_score(const SynthConfig& cfg, const SynthTruth& truth, int user, ContentType type,
                   int item) {
  return planted_click_prob(cfg, truth.affinity[static_cast<int>(type)][user][item]);
}

SynthData generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  SynthData data;
  SynthTruth& truth = data.truth;

  int user_w = id_width(cfg.num_users, 4);
  truth.user_ids.reserve(cfg.num_users);
  for (int u = 0; u < cfg.num_users; ++u) truth.user_ids.push_back(padded_id("u", user_w, u));

  for (int t = 0; t < kNumContentTypes; ++t) {
    int n = cfg.catalog_size(static_cast<ContentType>(t));
    int w = id_width(n, 2);
    truth.items[t].reserve(n);
    for (int i = 0; i < n; ++i) truth.items[t].push_back(padded_id(kItemPrefix[t], w, i));
    truth.affinity[t].assign(cfg.num_users, std::vector<double>(n, 0.0));
  }

  // User traits and affinities. One rng stream consumed in a fixed
  // (user, type, item) order so reruns are exact.
  Rng traits(mix_seed(cfg.seed, 0x74726169ULL));
  truth.archetype.resize(cfg.num_users);
  for (int u = 0; u < cfg.num_users; ++u) {
    truth.archetype[u] = static_cast<int>(traits.below(cfg.num_archetypes));
    for (int t = 0; t < kNumContentTypes; ++t) {
      int n = cfg.catalog_size(static_cast<ContentType>(t));
      std::vector<int> matched;
      for (int i = 0; i < n; ++i)
        if (i % cfg.num_archetypes == truth.archetype[u]) matched.push_back(i);
      int n_fam = std::min<int>(familiar_items_for_catalog(n), static_cast<int>(matched.size()));
      for (int j = 0; j < n_fam; ++j) {
        uint64_t pick = j + traits.below(matched.size() - j);
        std::swap(matched[j], matched[pick]);
      }
      std::vector<bool> familiar(n, false);
      for (int j = 0; j < n_fam; ++j) familiar[matched[j]] = true;
      for (int i = 0; i < n; ++i) {
        if (i % cfg.num_archetypes != truth.archetype[u]) continue;
        truth.affinity[t][u][i] = familiar[i]
                                      ? traits.uniform(kFamiliarAffinityLo, kFamiliarAffinityHi)
                                      : traits.uniform(kMatchedAffinityLo, kMatchedAffinityHi);
      }
    }
  }

  std::array<std::vector<std::vector<double>>, kNumContentTypes> pclick;
  for (int t = 0; t < kNumContentTypes; ++t) {
    int n = cfg.catalog_size(static_cast<ContentType>(t));
    pclick[t].assign(cfg.num_users, std::vector<double>(n, 0.0));
    for (int u = 0; u < cfg.num_users; ++u)
      for (int i = 0; i < n; ++i)
        pclick[t][u][i] = planted_click_prob(cfg, truth.affinity[t][u][i]);
  }

  // Day loop in a fixed (day, user, type, item) order so reruns are exact.
  Rng ev(mix_seed(cfg.seed, 0x65766e74ULL));
  for (int d = 0; d < cfg.num_days; ++d) {
    Date day = cfg.start_date + d;
    int64_t day_secs = static_cast<int64_t>(day.days) * 86400;
    for (int u = 0; u < cfg.num_users; ++u) {
      for (int t = 0; t < kNumContentTypes; ++t) {
        int n = cfg.catalog_size(static_cast<ContentType>(t));
        for (int i = 0; i < n; ++i) {
          if (!ev.bernoulli(pclick[t][u][i])) continue;
          int64_t secs = (6 + static_cast<int64_t>(ev.below(16))) * 3600 +
                         static_cast<int64_t>(ev.below(60)) * 60 +
                         static_cast<int64_t>(ev.below(60));
          data.events.push_back({truth.user_ids[u], truth.items[t][i],
                                 static_cast<ContentType>(t), Timestamp{day_secs + secs}});
        }
      }
    }
  }
  sort_events(data.events);
  return data;
}

void write_synthetic_logs(const SynthData& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write log file: " + path);
  out << "user_id,content_id,content_type,timestamp\n";
  for (const auto& e : data.events) {
    out << e.user_id << ',' << e.content_id << ',' << content_type_name(e.type) << ','
        << format_timestamp(e.ts) << '\n';
  }
  if (!out) throw DataError("failed writing log file: " + path);
}

void write_synthetic_truth(const SynthData& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write ground-truth file: " + path);
  out << "user_id,archetype";
  for (int t = 0; t < kNumContentTypes; ++t)
    for (const auto& item : data.truth.items[t])
      out << ',' << content_type_name(static_cast<ContentType>(t)) << ':' << item;
  out << '\n';
  char buf[32];
  for (size_t u = 0; u < data.truth.user_ids.size(); ++u) {
    out << data.truth.user_ids[u] << ',' << data.truth.archetype[u];
    for (int t = 0; t < kNumContentTypes; ++t)
      for (double a : data.truth.affinity[t][u]) {
        std::snprintf(buf, sizeof(buf), "%.10g", a);
        out << ',' << buf;
      }
    out << '\n';
  }
  if (!out) throw DataError("failed writing ground-truth file: " + path);
}

}  // namespace ctrforge
