#include "ctrforge/commands.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ctrforge/errors.hpp"
#include "ctrforge/metrics.hpp"
#include "ctrforge/rng.hpp"

namespace ctrforge {

namespace {

constexpr uint64_t kDownsampleStream = 0x646f776eULL;
constexpr uint64_t kPermuteStream = 0x7065726dULL;

const std::array<const char*, 4> kArchOrder = {"pnn", "deepfm", "xdeepfm", "difm"};
const std::array<const char*, 4> kArchDisplay = {"PNN", "DeepFM", "xDeepFM", "DIFM"};

std::string display_name(const std::string& arch) {
  for (size_t i = 0; i < kArchOrder.size(); ++i)
    if (arch == kArchOrder[i]) return kArchDisplay[i];
  throw ContractViolation("display_name: unknown architecture " + arch);
}

void ensure_workdir(const RunConfig& config) {
  std::filesystem::create_directories(config.workdir);
}

void refuse_existing(const std::string& path, bool force) {
  if (!force && std::filesystem::exists(path))
    throw DataError("output already exists (use --force to overwrite): " + path);
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

// <workdir>/manifest.json: per-command config hash, inputs and artifacts.
// Deterministic contents so --force reruns are byte-stable.
void update_manifest(const RunConfig& config, const std::string& command,
                     const std::vector<std::string>& inputs,
                     const std::vector<std::string>& artifacts) {
  ensure_workdir(config);
  std::string path = join(config.workdir, "manifest.json");
  nlohmann::json m = nlohmann::json::object();
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    try {
      m = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception&) {
      throw DataError("manifest is not valid JSON: " + path);
    }
  }
  m[command] = {{"config_hash", hash_hex(config.config_hash)},
                {"inputs", inputs},
                {"artifacts", artifacts}};
  std::ofstream out(path, std::ios::trunc);
  out << m.dump(2) << "\n";
  if (!out) throw DataError("cannot write manifest: " + path);
}

std::string truth_path_for(const std::string& logs_path) {
  std::filesystem::path p(logs_path);
  std::filesystem::path stem = p.stem();
  stem += "_truth";
  stem += p.extension();
  return (p.parent_path() / stem).string();
}

std::vector<InteractionEvent> load_events(const RunConfig& config) {
  if (!std::filesystem::exists(config.logs_path))
    throw DataError("logs not found: " + config.logs_path);
  IngestReport rep;
  auto events = ingest_logs(config.logs_path, &rep);
  if (events.empty()) throw DataError("logs are empty: " + config.logs_path);
  return events;
}

std::vector<InteractionEvent> pre_cutoff(const std::vector<InteractionEvent>& events,
                                         Date cutoff) {
  std::vector<InteractionEvent> pre;
  for (const auto& e : events)
    if (!(cutoff < e.ts.date())) pre.push_back(e);
  return pre;
}

std::vector<Date> history_dates(const RunConfig& config) {
  std::vector<Date> dates;
  for (int back = config.history_days; back >= 1; --back)
    dates.push_back(config.split.cutoff - back);
  return dates;
}

// ---- evaluation tables ------------------------------------------------------

using TableKey = std::pair<std::string, std::string>;  // dataset_tag, content_type
using Table = std::map<TableKey, std::array<std::string, 4>>;

Table load_table(const std::string& path) {
  Table t;
  if (!std::filesystem::exists(path)) return t;
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line)) return t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<std::string, 6> cells;
    size_t start = 0;
    for (int c = 0; c < 6; ++c) {
      size_t comma = line.find(',', start);
      bool last = comma == std::string::npos;
      cells[static_cast<size_t>(c)] =
          line.substr(start, last ? std::string::npos : comma - start);
      if (last && c != 5) throw DataError("malformed table row in " + path + ": " + line);
      start = comma + 1;
    }
    t[{cells[0], cells[1]}] = {cells[2], cells[3], cells[4], cells[5]};
  }
  return t;
}

void write_table(const std::string& path, const Table& t) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write table: " + path);
  out << "dataset,content_type,PNN,DeepFM,xDeepFM,DIFM\n";
  for (const auto& [key, cells] : t) {
    out << key.first << "," << key.second;
    for (const auto& c : cells) out << "," << c;
    out << "\n";
  }
}

void set_cell(Table& t, const TableKey& key, const std::string& arch, const std::string& value) {
  auto& row = t[key];
  for (size_t i = 0; i < kArchOrder.size(); ++i)
    if (arch == kArchOrder[i]) {
      row[i] = value;
      return;
    }
  throw ContractViolation("set_cell: unknown architecture " + arch);
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt10g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// per_content_rmse.csv rows, merged across evaluate runs.
struct PerContentRow {
  std::string content_id;
  std::string model;
  std::string rmse;
};

std::vector<PerContentRow> load_per_content(const std::string& path) {
  std::vector<PerContentRow> rows;
  if (!std::filesystem::exists(path)) return rows;
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line)) return rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t a = line.find(',');
    size_t b = a == std::string::npos ? std::string::npos : line.find(',', a + 1);
    if (b == std::string::npos)
      throw DataError("malformed per-content row in " + path + ": " + line);
    rows.push_back({line.substr(0, a), line.substr(a + 1, b - a - 1), line.substr(b + 1)});
  }
  return rows;
}

void write_per_content(const std::string& path, std::vector<PerContentRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const PerContentRow& x, const PerContentRow& y) {
    return std::tie(x.content_id, x.model) < std::tie(y.content_id, y.model);
  });
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write per-content rmse: " + path);
  out << "content_id,model,rmse\n";
  for (const auto& r : rows) out << r.content_id << "," << r.model << "," << r.rmse << "\n";
}

}  // namespace

std::string checkpoint_path(const RunConfig& config, const std::string& arch) {
  return join(config.workdir,
              arch + "_" + content_type_name(config.content_type) + ".ckpt");
}

std::string metrics_path(const RunConfig& config, const std::string& arch) {
  return join(config.workdir,
              arch + "_" + content_type_name(config.content_type) + "_metrics.csv");
}

void cmd_synth(const RunConfig& config, const CommandOptions& opts) {
  if (!config.synth)
    throw ConfigError("config: synth section is required for the synth command");
  SynthConfig sc = *config.synth;
  if (opts.seed) sc.seed = *opts.seed;
  sc.validate();

  std::string truth_path = truth_path_for(config.logs_path);
  refuse_existing(config.logs_path, opts.force);
  refuse_existing(truth_path, opts.force);

  auto parent = std::filesystem::path(config.logs_path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);

  SynthData data = generate_synthetic(sc);
  write_synthetic_logs(data, config.logs_path);
  write_synthetic_truth(data, truth_path);
  update_manifest(config, "synth", {}, {config.logs_path, truth_path});

  std::printf("synth: %zu events for %d users over %d days -> %s\n", data.events.size(),
              sc.num_users, sc.num_days, config.logs_path.c_str());
  std::printf("synth: ground truth -> %s\n", truth_path.c_str());
}

void cmd_train(const RunConfig& config, const CommandOptions& opts) {
  ModelConfig model_cfg = config.resolve_model(opts.model);
  TrainConfig tc = config.train;
  if (opts.seed) tc.seed = *opts.seed;

  std::string ckpt_path = checkpoint_path(config, model_cfg.architecture);
  std::string metrics_csv = metrics_path(config, model_cfg.architecture);
  refuse_existing(ckpt_path, opts.force);
  refuse_existing(metrics_csv, opts.force);

  auto events = load_events(config);
  auto pre = pre_cutoff(events, config.split.cutoff);
  if (pre.empty())
    throw DataError("no events on or before the cutoff " + format_date(config.split.cutoff));
  auto catalog = catalog_of(pre, config.content_type);
  if (catalog.empty())
    throw DataError(std::string("no pre-cutoff events of content type '") +
                    content_type_name(config.content_type) + "'");

  std::vector<Date> as_of = history_dates(config);
  as_of.push_back(config.split.test_date);
  RawExamples ex = build_examples(events, config.content_type, as_of, &catalog);
  SplitIndices idx = split_examples(ex, config.split);
  if (idx.train.empty())
    throw DataError("training split is empty; widen history_days or check the cutoff");

  auto train_idx = downsample_negatives(ex, idx.train, config.negatives_per_positive,
                                        mix_seed(config.split.seed, kDownsampleStream));
  FeatureSpace space = fit_feature_space(pre, config.content_type, ex, train_idx);
  EncodedBatch train_batch = encode_examples(ex, train_idx, space);
  EncodedBatch val_batch = encode_examples(ex, idx.val, space);

  ensure_workdir(config);
  TrainResult result = train_model(model_cfg, space, train_batch, val_batch, tc);
  save_checkpoint(result.checkpoint, ckpt_path);
  write_metrics_csv(result.history, metrics_csv);
  update_manifest(config, "train_" + model_cfg.architecture, {config.logs_path},
                  {ckpt_path, metrics_csv});

  const EpochMetrics& last = result.history.back();
  std::printf("train: %s on %s; %zu train / %zu val rows, %d epochs\n",
              model_cfg.architecture.c_str(), content_type_name(config.content_type),
              train_batch.size(), val_batch.size(), static_cast<int>(result.history.size()));
  std::printf("train: final train_loss=%.6f val_loss=%.6f val_auc=%.4f -> %s\n",
              last.train_loss, last.val_loss, last.val_auc, ckpt_path.c_str());
}

void cmd_evaluate(const RunConfig& config, const CommandOptions& opts) {
  std::vector<std::string> archs;
  if (opts.model) {
    archs.push_back(config.resolve_model(opts.model).architecture);
  } else {
    for (const char* a : kArchOrder) archs.push_back(a);
  }
  for (const auto& arch : archs)
    if (!std::filesystem::exists(checkpoint_path(config, arch)))
      throw DataError("checkpoint not found (train first): " + checkpoint_path(config, arch));

  auto events = load_events(config);
  std::string auc_path = join(config.workdir, "auc_table.csv");
  std::string rmse_path = join(config.workdir, "rmse_table.csv");
  std::string pc_path = join(config.workdir, "per_content_rmse.csv");
  Table auc_table = load_table(auc_path);
  Table rmse_table = load_table(rmse_path);
  auto pc_rows = load_per_content(pc_path);
  TableKey key{config.dataset_tag, content_type_name(config.content_type)};

  for (const auto& arch : archs) {
    Checkpoint ckpt = load_checkpoint(checkpoint_path(config, arch));
    const auto& catalog = ckpt.space.vocabs.at("content_id").known_values();
    RawExamples ex =
        build_examples(events, config.content_type, {config.split.test_date}, &catalog);
    if (ex.size() == 0)
      throw DataError("no test examples on " + format_date(config.split.test_date));
    std::vector<size_t> all(ex.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    EncodedBatch batch = encode_examples(ex, all, ckpt.space);
    if (config.permute_labels) {
      Rng rng(mix_seed(config.split.seed, kPermuteStream));
      rng.shuffle(batch.label);
    }

    std::vector<double> probs = predict_checkpoint(ckpt, ckpt.space, batch);
    std::string auc_cell;
    double auc_val = 0.0;
    bool have_auc = true;
    try {
      auc_val = auc(probs, batch.label);
      auc_cell = fmt4(auc_val);
    } catch (const DataError& e) {
      have_auc = false;
      auc_cell = "undefined";
      std::fprintf(stderr, "warning: %s\n", e.what());
    }
    double rmse_val = rmse(probs, batch.label);
    auto per_content = per_content_rmse(probs, batch.label, ex.content_id);

    set_cell(auc_table, key, arch, auc_cell);
    set_cell(rmse_table, key, arch, fmt4(rmse_val));
    // Replace only this content type's rows so a later evaluate of another
    // content type does not discard these.
    std::string model_name = display_name(arch);
    std::set<std::string> in_catalog(catalog.begin(), catalog.end());
    pc_rows.erase(std::remove_if(pc_rows.begin(), pc_rows.end(),
                                 [&](const PerContentRow& r) {
                                   return r.model == model_name && in_catalog.count(r.content_id);
                                 }),
                  pc_rows.end());
    for (const auto& row : per_content)
      pc_rows.push_back({row.content_id, model_name, fmt10g(row.rmse)});

    if (have_auc)
      std::printf("evaluate: %s %s auc=%.4f rmse=%.4f (%zu test rows)\n", arch.c_str(),
                  content_type_name(config.content_type), auc_val, rmse_val, batch.size());
    else
      std::printf("evaluate: %s %s auc=undefined rmse=%.4f (%zu test rows)\n", arch.c_str(),
                  content_type_name(config.content_type), rmse_val, batch.size());
  }

  ensure_workdir(config);
  write_table(auc_path, auc_table);
  write_table(rmse_path, rmse_table);
  write_per_content(pc_path, pc_rows);
  update_manifest(config, "evaluate", {config.logs_path}, {auc_path, rmse_path, pc_path});
}

RecommendationList cmd_recommend(const RunConfig& config, const CommandOptions& opts) {
  if (!config.recommend_user)
    throw ConfigError("config: recommend.user is required for the recommend command");
  const std::string& user = *config.recommend_user;
  int k = config.recommend_k;

  std::string arch = config.resolve_model(opts.model).architecture;
  Checkpoint ckpt = load_checkpoint(checkpoint_path(config, arch));
  auto events = load_events(config);

  Date latest = events.front().ts.date();
  for (const auto& e : events) latest = std::max(latest, e.ts.date());

  if (ckpt.space.vocabs.at("user_id").index_of(user) == 0)
    std::fprintf(stderr,
                 "warning: user '%s' is not in the training vocabulary; scoring with the "
                 "out-of-vocabulary embedding\n",
                 user.c_str());

  const auto& catalog = ckpt.space.vocabs.at("content_id").known_values();
  RawExamples ex = features_for_user(events, config.content_type, user, catalog, latest);
  std::vector<size_t> all(ex.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  EncodedBatch batch = encode_examples(ex, all, ckpt.space);
  std::vector<double> probs = predict_checkpoint(ckpt, ckpt.space, batch);

  RecommendationList list;
  list.user_id = user;
  list.generated_at = latest;
  for (size_t i = 0; i < probs.size(); ++i) list.items.push_back({ex.content_id[i], probs[i]});
  std::sort(list.items.begin(), list.items.end(),
            [](const Recommendation& a, const Recommendation& b) {
              if (a.probability != b.probability) return a.probability > b.probability;
              return a.content_id < b.content_id;
            });
  if (static_cast<int>(list.items.size()) > k) list.items.resize(static_cast<size_t>(k));

  ensure_workdir(config);
  std::string out_path = join(config.workdir, "recommendations_" + user + ".csv");
  refuse_existing(out_path, opts.force);
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw DataError("cannot write recommendations: " + out_path);
  out << "rank,content_id,probability,as_of_date\n";
  for (size_t i = 0; i < list.items.size(); ++i) {
    out << (i + 1) << "," << list.items[i].content_id << "," << fmt10g(list.items[i].probability)
        << "," << format_date(latest) << "\n";
  }
  if (!out) throw DataError("recommendations write failed: " + out_path);
  update_manifest(config, "recommend", {config.logs_path}, {out_path});

  std::printf("recommend: top %zu of %zu for %s as of %s -> %s\n", list.items.size(),
              probs.size(), user.c_str(), format_date(latest).c_str(), out_path.c_str());
  return list;
}

void cmd_report(const RunConfig& config, const CommandOptions& opts) {
  std::string auc_path = join(config.workdir, "auc_table.csv");
  std::string rmse_path = join(config.workdir, "rmse_table.csv");
  if (!std::filesystem::exists(auc_path) || !std::filesystem::exists(rmse_path))
    throw DataError("evaluation tables not found in " + config.workdir + " (run evaluate first)");

  std::string report_path = join(config.workdir, "report.txt");
  refuse_existing(report_path, opts.force);

  auto render = [](const std::string& title, const Table& t) {
    std::array<std::string, 6> header = {"dataset", "content_type", "PNN",
                                         "DeepFM",  "xDeepFM",      "DIFM"};
    std::array<size_t, 6> width;
    for (size_t c = 0; c < 6; ++c) width[c] = header[c].size();
    for (const auto& [key, cells] : t) {
      width[0] = std::max(width[0], key.first.size());
      width[1] = std::max(width[1], key.second.size());
      for (size_t c = 0; c < 4; ++c) width[c + 2] = std::max(width[c + 2], cells[c].size());
    }
    std::ostringstream os;
    os << title << "\n";
    auto pad = [&](const std::string& s, size_t w) {
      os << s;
      for (size_t i = s.size(); i < w; ++i) os << ' ';
    };
    for (size_t c = 0; c < 6; ++c) {
      if (c + 1 < 6) {
        pad(header[c], width[c]);
        os << "  ";
      } else {
        os << header[c] << "\n";
      }
    }
    for (const auto& [key, cells] : t) {
      pad(key.first, width[0]);
      os << "  ";
      pad(key.second, width[1]);
      for (size_t c = 0; c < 4; ++c) {
        os << "  ";
        if (c + 1 < 4)
          pad(cells[c], width[c + 2]);
        else
          os << cells[c];
      }
      os << "\n";
    }
    os << "\n";
    return os.str();
  };

  std::string text = render("AUC by model", load_table(auc_path)) +
                     render("RMSE by model", load_table(rmse_path));
  std::ofstream out(report_path, std::ios::trunc);
  if (!out) throw DataError("cannot write report: " + report_path);
  out << text;
  update_manifest(config, "report", {auc_path, rmse_path}, {report_path});
  std::fputs(text.c_str(), stdout);
}

}  // namespace ctrforge
