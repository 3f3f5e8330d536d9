#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ctrforge/commands.hpp"
#include "ctrforge/errors.hpp"

namespace {

// 0 success, 2 config error, 3 data error, 4 numeric failure.
int run(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ctrforge::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ctrforge::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const ctrforge::NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Click-through prediction pipeline: synthesize logs, train and evaluate "
      "models, produce recommendations and reports"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> model;
  std::optional<uint64_t> seed;
  bool force = false;

  auto add_common = [&](CLI::App* cmd, bool with_model) {
    cmd->add_option("--config", config_path, "run configuration JSON file")->required();
    if (with_model)
      cmd->add_option("--model", model, "architecture: pnn, deepfm, xdeepfm or difm");
    cmd->add_option("--seed", seed, "seed override");
    cmd->add_flag("--force", force, "overwrite existing outputs");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate synthetic interaction logs");
  add_common(synth, false);
  CLI::App* train = app.add_subcommand("train", "train a model and write a checkpoint");
  add_common(train, true);
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "score the test date and update report tables");
  add_common(evaluate, true);
  CLI::App* recommend =
      app.add_subcommand("recommend", "rank the catalog for one user");
  add_common(recommend, true);
  CLI::App* report = app.add_subcommand("report", "render evaluation tables as text");
  add_common(report, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  ctrforge::CommandOptions opts;
  opts.model = model;
  opts.seed = seed;
  opts.force = force;

  return run([&] {
    ctrforge::RunConfig rc = ctrforge::load_run_config(config_path);
    if (synth->parsed()) ctrforge::cmd_synth(rc, opts);
    if (train->parsed()) ctrforge::cmd_train(rc, opts);
    if (evaluate->parsed()) ctrforge::cmd_evaluate(rc, opts);
    if (recommend->parsed()) ctrforge::cmd_recommend(rc, opts);
    if (report->parsed()) ctrforge::cmd_report(rc, opts);
  });
}
