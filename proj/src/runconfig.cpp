#include "ctrforge/runconfig.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "ctrforge/errors.hpp"

namespace ctrforge {

namespace {

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Strict object walker: every key must be consumed exactly once.
class Section {
 public:
  Section(const nlohmann::json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object())
      throw ConfigError("config: '" + name_ + "' must be an object");
  }

  template <typename T>
  std::optional<T> take(const std::string& key) {
    if (!j_.contains(key)) return std::nullopt;
    seen_.insert(key);
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config: key '" + qualified(key) + "' has the wrong type");
    }
  }

  std::optional<nlohmann::json> take_raw(const std::string& key) {
    if (!j_.contains(key)) return std::nullopt;
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key))
        throw ConfigError("config: unknown key '" + qualified(key) + "'");
  }

 private:
  std::string qualified(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

  const nlohmann::json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

Date take_date(Section& s, const std::string& key, const std::string& section) {
  auto v = s.take<std::string>(key);
  if (!v) throw ConfigError("config: missing required key '" + section + "." + key + "'");
  auto d = parse_date(*v);
  if (!d) throw ConfigError("config: '" + section + "." + key + "' is not a date (YYYY-MM-DD): " + *v);
  return *d;
}

std::string resolve_path(const std::string& base_dir, const std::string& p) {
  std::filesystem::path fp(p);
  if (fp.is_absolute()) return fp.lexically_normal().string();
  return (std::filesystem::path(base_dir) / fp).lexically_normal().string();
}

SynthConfig parse_synth(const nlohmann::json& j) {
  Section s(j, "synth");
  SynthConfig sc;
  if (auto v = s.take<int>("num_users")) sc.num_users = *v;
  if (auto v = s.take<int>("num_drugs")) sc.num_drugs = *v;
  if (auto v = s.take<int>("num_drug_families")) sc.num_drug_families = *v;
  if (auto v = s.take<int>("num_video_chapters")) sc.num_video_chapters = *v;
  if (auto v = s.take<int>("num_video_modules")) sc.num_video_modules = *v;
  if (auto v = s.take<int>("num_archetypes")) sc.num_archetypes = *v;
  if (auto v = s.take<int>("num_days")) sc.num_days = *v;
  if (auto v = s.take<std::string>("start_date")) {
    auto d = parse_date(*v);
    if (!d) throw ConfigError("config: 'synth.start_date' is not a date (YYYY-MM-DD): " + *v);
    sc.start_date = *d;
  }
  if (auto v = s.take<double>("base_click_prob")) sc.base_click_prob = *v;
  if (auto v = s.take<double>("signal_strength")) sc.signal_strength = *v;
  if (auto v = s.take<uint64_t>("seed")) sc.seed = *v;
  s.finish();
  sc.validate();
  return sc;
}

TrainConfig parse_train(const nlohmann::json& j, ContentType content_type) {
  Section s(j, "train");
  TrainConfig tc;
  tc.epochs = default_epochs_for(content_type);
  if (auto v = s.take<int>("epochs")) tc.epochs = *v;
  if (auto v = s.take<int>("batch_size")) tc.batch_size = *v;
  if (auto v = s.take<double>("learning_rate")) tc.learning_rate = *v;
  if (auto v = s.take<uint64_t>("seed")) tc.seed = *v;
  if (auto v = s.take<bool>("early_stop")) tc.early_stop = *v;
  if (auto v = s.take<int>("early_stop_patience")) tc.early_stop_patience = *v;
  s.finish();
  tc.validate();
  return tc;
}

// The model section is only shape-checked here; value validation happens in
// resolve_model once the architecture is fixed.
void check_model_section(const nlohmann::json& j) {
  Section s(j, "model");
  s.take<std::string>("architecture");
  s.take<int>("embedding_dim");
  s.take<std::vector<int>>("hidden");
  s.take<std::string>("activation");
  s.take<double>("dropout");
  s.take<std::vector<int>>("cin_layers");
  s.take<int>("attention_head_size");
  s.take<int>("attention_heads");
  s.finish();
}

}  // namespace

ModelConfig RunConfig::resolve_model(const std::optional<std::string>& arch_flag) const {
  std::string arch;
  if (arch_flag) {
    arch = *arch_flag;
  } else if (model_section.contains("architecture")) {
    arch = model_section.at("architecture").get<std::string>();
  } else {
    throw ConfigError(
        "config: no model architecture (set model.architecture or pass --model)");
  }
  ModelConfig cfg = ModelConfig::defaults(arch);
  if (model_section.contains("embedding_dim"))
    cfg.embedding_dim = model_section.at("embedding_dim").get<int>();
  if (model_section.contains("hidden"))
    cfg.hidden = model_section.at("hidden").get<std::vector<int>>();
  if (model_section.contains("activation"))
    cfg.activation = model_section.at("activation").get<std::string>();
  if (model_section.contains("dropout"))
    cfg.dropout = model_section.at("dropout").get<double>();
  if (model_section.contains("cin_layers"))
    cfg.cin_layers = model_section.at("cin_layers").get<std::vector<int>>();
  if (model_section.contains("attention_head_size"))
    cfg.attention_head_size = model_section.at("attention_head_size").get<int>();
  if (model_section.contains("attention_heads"))
    cfg.attention_heads = model_section.at("attention_heads").get<int>();
  cfg.validate();
  return cfg;
}

RunConfig parse_run_config(const nlohmann::json& j, const std::string& base_dir) {
  Section s(j, "");
  RunConfig rc;
  rc.config_hash = fnv1a64(j.dump());

  if (auto v = s.take<std::string>("dataset_tag")) rc.dataset_tag = *v;
  {
    auto v = s.take<std::string>("content_type");
    if (!v) throw ConfigError("config: missing required key 'content_type'");
    auto t = parse_content_type(*v);
    if (!t)
      throw ConfigError(
          "config: unknown content_type '" + *v +
          "' (expected drug, drug_family, video_chapter or video_module)");
    rc.content_type = *t;
  }
  {
    auto v = s.take<std::string>("logs");
    if (!v) throw ConfigError("config: missing required key 'logs'");
    rc.logs_path = resolve_path(base_dir, *v);
  }
  {
    auto v = s.take<std::string>("workdir");
    if (!v) throw ConfigError("config: missing required key 'workdir'");
    rc.workdir = resolve_path(base_dir, *v);
  }

  if (auto raw = s.take_raw("synth")) rc.synth = parse_synth(*raw);

  if (auto raw = s.take_raw("split")) {
    Section sp(*raw, "split");
    bool have_cutoff = raw->contains("cutoff");
    bool have_test = raw->contains("test_date");
    if (have_cutoff) rc.split.cutoff = take_date(sp, "cutoff", "split");
    if (have_test) rc.split.test_date = take_date(sp, "test_date", "split");
    if (have_cutoff != have_test)
      throw ConfigError("config: split.cutoff and split.test_date must be set together");
    if (!have_cutoff) {
      if (!rc.synth)
        throw ConfigError(
            "config: split.cutoff/test_date are required when no synth section derives them");
      rc.split.test_date = rc.split.cutoff = rc.synth->start_date + (rc.synth->num_days - 2);
    }
    if (auto v = sp.take<double>("val_fraction")) rc.split.val_fraction = *v;
    if (auto v = sp.take<uint64_t>("seed")) rc.split.seed = *v;
    sp.finish();
  } else if (rc.synth) {
    // Day before the last logged day: the last day supplies its labels.
    rc.split.test_date = rc.split.cutoff = rc.synth->start_date + (rc.synth->num_days - 2);
  } else {
    throw ConfigError("config: missing required section 'split' (no synth section derives it)");
  }
  if (!(rc.split.val_fraction >= 0.0 && rc.split.val_fraction < 1.0))
    throw ConfigError("config: split.val_fraction must be in [0, 1)");
  if (rc.split.test_date < rc.split.cutoff)
    throw ConfigError("config: split.test_date must not precede split.cutoff");

  // Optional self-description: when present it must spell out the feature
  // schema this build computes, field for field.
  if (auto raw = s.take_raw("schema")) {
    Section sch(*raw, "schema");
    auto cat = sch.take<std::vector<std::string>>("categorical");
    auto num = sch.take<std::vector<std::string>>("numeric");
    sch.finish();
    FeatureSchema b = behavioral_schema();
    if (!cat || !num || *cat != b.names(FieldKind::kCategorical) ||
        *num != b.names(FieldKind::kNumeric))
      throw ConfigError("config: schema declaration does not match the behavioral feature schema");
  }

  if (auto raw = s.take_raw("model")) {
    check_model_section(*raw);
    rc.model_section = *raw;
  } else {
    rc.model_section = nlohmann::json::object();
  }

  {
    nlohmann::json train_j = nlohmann::json::object();
    if (auto raw = s.take_raw("train")) train_j = *raw;
    rc.train = parse_train(train_j, rc.content_type);
  }

  if (auto v = s.take<int>("history_days")) rc.history_days = *v;
  if (rc.history_days < 1) throw ConfigError("config: history_days must be >= 1");
  if (auto v = s.take<double>("negatives_per_positive")) rc.negatives_per_positive = *v;
  if (!(rc.negatives_per_positive > 0.0))
    throw ConfigError("config: negatives_per_positive must be positive");
  if (auto v = s.take<bool>("permute_labels")) rc.permute_labels = *v;

  if (auto raw = s.take_raw("recommend")) {
    Section rec(*raw, "recommend");
    auto user = rec.take<std::string>("user");
    if (!user) throw ConfigError("config: missing required key 'recommend.user'");
    rc.recommend_user = *user;
    if (auto v = rec.take<int>("k")) rc.recommend_k = *v;
    rec.finish();
    if (rc.recommend_k <= 0) throw ConfigError("config: recommend.k must be positive");
  }

  s.finish();
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
  std::string base = std::filesystem::path(path).parent_path().string();
  if (base.empty()) base = ".";
  return parse_run_config(j, base);
}

std::string hash_hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ctrforge
