#include "ctrforge/events.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ctrforge/errors.hpp"
#include "json.hpp"

namespace ctrforge {
namespace {

const char* kTypeNames[kNumContentTypes] = {"drug", "drug_family", "video_chapter",
                                            "video_module"};

std::optional<InteractionEvent> parse_fields(const std::string& user, const std::string& content,
                                             const std::string& type_s, const std::string& ts_s) {
  if (user.empty() || content.empty()) return std::nullopt;
  auto type = parse_content_type(type_s);
  if (!type) return std::nullopt;
  auto ts = parse_timestamp(ts_s);
  if (!ts) return std::nullopt;
  return InteractionEvent{user, content, *type, *ts};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

const char* content_type_name(ContentType t) { return kTypeNames[static_cast<int>(t)]; }

std::optional<ContentType> parse_content_type(const std::string& s) {
  for (int i = 0; i < kNumContentTypes; ++i)
    if (s == kTypeNames[i]) return static_cast<ContentType>(i);
  return std::nullopt;
}

void sort_events(std::vector<InteractionEvent>& events) {
  std::sort(events.begin(), events.end(), [](const InteractionEvent& a, const InteractionEvent& b) {
    if (a.ts.secs != b.ts.secs) return a.ts.secs < b.ts.secs;
    if (a.user_id != b.user_id) return a.user_id < b.user_id;
    if (a.content_id != b.content_id) return a.content_id < b.content_id;
    return a.type < b.type;
  });
}

std::vector<InteractionEvent> ingest_logs(const std::string& path, IngestReport* report,
                                          double malformed_fatal_frac) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open log file: " + path);

  bool jsonl = path.size() >= 6 && path.compare(path.size() - 6, 6, ".jsonl") == 0;
  std::vector<InteractionEvent> events;
  IngestReport rep;
  std::string line;
  bool header_checked = false;

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    if (jsonl) {
      ++rep.total_rows;
      auto parsed = nlohmann::json::parse(line, nullptr, false);
      if (parsed.is_discarded() || !parsed.is_object()) {
        ++rep.malformed;
        continue;
      }
      auto field = [&](const char* k) -> std::string {
        auto it = parsed.find(k);
        return it != parsed.end() && it->is_string() ? it->get<std::string>() : std::string();
      };
      auto ev = parse_fields(field("user_id"), field("content_id"), field("content_type"),
                             field("timestamp"));
      if (ev)
        events.push_back(std::move(*ev));
      else
        ++rep.malformed;
      continue;
    }

    auto cols = split_csv_line(line);
    if (!header_checked) {
      header_checked = true;
      if (!cols.empty() && cols[0] == "user_id") continue;  // optional header row
    }
    ++rep.total_rows;
    if (cols.size() != 4) {
      ++rep.malformed;
      continue;
    }
    auto ev = parse_fields(cols[0], cols[1], cols[2], cols[3]);
    if (ev)
      events.push_back(std::move(*ev));
    else
      ++rep.malformed;
  }

  if (rep.total_rows > 0 &&
      static_cast<double>(rep.malformed) > malformed_fatal_frac * static_cast<double>(rep.total_rows))
    throw DataError("too many malformed log rows in " + path + ": " +
                    std::to_string(rep.malformed) + " of " + std::to_string(rep.total_rows));

  sort_events(events);
  if (report) *report = rep;
  return events;
}

}  // namespace ctrforge
