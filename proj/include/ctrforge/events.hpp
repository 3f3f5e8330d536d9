#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctrforge/dates.hpp"

namespace ctrforge {

enum class ContentType : uint8_t {
  kDrug = 0,
  kDrugFamily = 1,
  kVideoChapter = 2,
  kVideoModule = 3,
};

inline constexpr int kNumContentTypes = 4;

const char* content_type_name(ContentType t);
std::optional<ContentType> parse_content_type(const std::string& s);

// One behavioral-log row: the user opened/clicked the content at ts.
struct InteractionEvent {
  std::string user_id;
  std::string content_id;
  ContentType type = ContentType::kDrug;
  Timestamp ts;
};

struct IngestReport {
  int64_t total_rows = 0;
  int64_t malformed = 0;
};

// Reads CSV (default) or JSONL (*.jsonl) logs. Malformed rows are counted and
// skipped; more than `malformed_fatal_frac` of them is a data error. Events
// come back sorted by (timestamp, user, content, type) so downstream passes
// are order-independent of the file layout.
std::vector<InteractionEvent> ingest_logs(const std::string& path, IngestReport* report = nullptr,
                                          double malformed_fatal_frac = 0.05);

void sort_events(std::vector<InteractionEvent>& events);

}  // namespace ctrforge
