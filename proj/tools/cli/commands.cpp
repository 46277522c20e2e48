#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "config_binder.hpp"
#include "costot/error.hpp"
#include "costot/features.hpp"
#include "costot/io.hpp"
#include "costot/metrics.hpp"
#include "costot/scene.hpp"
#include "costot/sinkhorn.hpp"
#include "costot/trainer.hpp"
#include "verify.hpp"

namespace costot::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";
constexpr int kSummarySchema = 1;

json versions() { return {{"costot", kVersion}, {"summary_schema", kSummarySchema}}; }

void write_summary(const fs::path& dir, const json& config, const json& results) {
  const json summary = {{"config", config}, {"results", results}, {"versions", versions()}};
  io::save_text(dir / "summary.json", summary.dump(2) + "\n");
}

fs::path prepare_out_dir(const json& config) {
  const fs::path dir = config.at("out_dir").get<std::string>();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void require_inputs(const json& config, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    const auto path = config.at(key).get<std::string>();
    if (!path.empty() && !fs::exists(path)) {
      throw Error(ErrorCode::io_error, std::string(key) + " file '" + path + "' does not exist");
    }
  }
}

template <typename Write>
std::string render(Write write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

json optional_ious(const MiouResult& r) {
  auto arr = json::array();
  for (const auto& v : r.per_class_iou) arr.push_back(v ? json(*v) : json(nullptr));
  return arr;
}

// ---------------------------------------------------------------------------
// Shared option groups

json scene_defaults() {
  const SceneParams p;
  return {{"height", p.height}, {"width", p.width},         {"classes", p.class_count},
          {"noise", p.noise_sigma}, {"dim", p.dim}, {"seed", p.seed}};
}

void bind_scene(ConfigBinder& b) {
  b.option<std::size_t>("height", "--height", "Scene height in pixels");
  b.option<std::size_t>("width", "--width", "Scene width in pixels");
  b.option<std::size_t>("classes", "--classes", "Number of classes N");
  b.option<double>("noise", "--noise", "Pixel feature noise sigma");
  b.option<std::size_t>("dim", "--dim", "Feature dimension d");
  b.option<std::uint64_t>("seed", "--seed", "Random seed");
}

SceneParams scene_from(const json& c) {
  SceneParams p;
  p.height = c.at("height").get<std::size_t>();
  p.width = c.at("width").get<std::size_t>();
  p.class_count = c.at("classes").get<std::size_t>();
  p.noise_sigma = c.at("noise").get<double>();
  p.dim = c.at("dim").get<std::size_t>();
  p.seed = c.at("seed").get<std::uint64_t>();
  return p;
}

json sinkhorn_defaults() {
  const SinkhornConfig s;
  return {{"lambda", s.lambda},
          {"delta_v", s.delta_v_threshold},
          {"max_iters", s.max_iters},
          {"log_domain", s.log_domain},
          {"epsilon_scaling", s.epsilon_scaling}};
}

void bind_sinkhorn(ConfigBinder& b) {
  b.option<double>("lambda", "--lambda", "Entropic regularization lambda");
  b.option<double>("delta_v", "--delta-v", "Stop when the column-scaling change drops below this");
  b.option<std::size_t>("max_iters", "--max-iters", "Sinkhorn iteration cap");
  b.flag("log_domain", "--log-domain,!--no-log-domain", "Log-stabilized iteration (default on)");
  b.flag("epsilon_scaling", "--epsilon-scaling,!--no-epsilon-scaling",
         "Warm-start through a halving lambda ladder");
}

SinkhornConfig sinkhorn_from(const json& c) {
  SinkhornConfig s;
  s.lambda = c.at("lambda").get<double>();
  s.delta_v_threshold = c.at("delta_v").get<double>();
  s.max_iters = c.at("max_iters").get<std::size_t>();
  s.log_domain = c.at("log_domain").get<bool>();
  s.epsilon_scaling = c.at("epsilon_scaling").get<bool>();
  s.validate();
  return s;
}

json merged(std::initializer_list<json> parts) {
  json out = json::object();
  for (const auto& p : parts) out.update(p);
  return out;
}

// ---------------------------------------------------------------------------
// solve

int solve(const json& config, std::ostream& out) {
  require_inputs(config, {"cost", "visual", "textual"});
  const auto cost_path = config.at("cost").get<std::string>();
  const auto visual_path = config.at("visual").get<std::string>();
  const auto textual_path = config.at("textual").get<std::string>();
  auto cfg = sinkhorn_from(config);
  cfg.record_trace = config.at("trace_csv").get<bool>();

  Matrix cost_values;
  if (!cost_path.empty()) {
    if (!visual_path.empty() || !textual_path.empty()) {
      throw Error(ErrorCode::invalid_argument, "give either --cost or --visual/--textual, not both");
    }
    cost_values = io::load_matrix_text(cost_path);
  } else if (!visual_path.empty() && !textual_path.empty()) {
    const auto visual = io::load_feature_set(visual_path, FeatureRole::visual);
    const auto textual = io::load_feature_set(textual_path, FeatureRole::textual);
    cost_values = cost_matrix_from_volume(build_cost_volume(visual, textual)).cost();
  } else {
    throw Error(ErrorCode::invalid_argument, "solve needs --cost or both --visual and --textual");
  }
  const CostMatrix cost(std::move(cost_values));
  const auto result = sinkhorn_solve(cost, ProbabilityVector::uniform(cost.rows()),
                                     ProbabilityVector::uniform(cost.cols()), cfg);

  const fs::path dir = prepare_out_dir(config);
  if (config.at("plan_csv").get<bool>()) {
    io::save_text(dir / "plan.csv", render([&](std::ostream& os) {
                    io::write_matrix_csv(os, result.plan.plan());
                  }));
  }
  if (cfg.record_trace) {
    io::save_text(dir / "trace.csv",
                  render([&](std::ostream& os) { io::write_trace_csv(os, result.trace); }));
  }
  const json results = {{"M", cost.rows()},
                        {"N", cost.cols()},
                        {"lambda", result.lambda},
                        {"iterations", result.iterations},
                        {"converged", result.converged},
                        {"final_delta_v", result.final_delta_v},
                        {"distance", result.distance},
                        {"max_marginal_violation", result.plan.max_marginal_violation()},
                        {"kernel_underflow", result.kernel_underflow}};
  write_summary(dir, config, results);
  out << "distance " << io::format_double(result.distance) << " after " << result.iterations
      << " iterations (" << (result.converged ? "converged" : "NOT converged") << ")\n";
  return result.converged ? kSuccess : kNotConverged;
}

// ---------------------------------------------------------------------------
// scene

int scene(const json& config, std::ostream& out) {
  const auto s = generate_scene(scene_from(config));
  const fs::path dir = prepare_out_dir(config);
  io::save_text(dir / "pixels.txt",
                render([&](std::ostream& os) { io::write_feature_set(os, s.pixel_features); }));
  io::save_text(dir / "prototypes.txt",
                render([&](std::ostream& os) { io::write_feature_set(os, s.prototypes); }));
  io::save_text(dir / "labels.csv", render([&](std::ostream& os) {
                  for (std::size_t r = 0; r < s.height(); ++r) {
                    for (std::size_t c = 0; c < s.width(); ++c) {
                      if (c > 0) os << ',';
                      os << s.labels[r * s.width() + c];
                    }
                    os << '\n';
                  }
                }));
  write_summary(dir, config, {{"pixels", s.pixel_count()}, {"classes", s.class_count()}});
  out << "wrote scene " << s.height() << "x" << s.width() << " with " << s.class_count()
      << " classes to " << dir.string() << "\n";
  return kSuccess;
}

// ---------------------------------------------------------------------------
// train

json train_results(const SyntheticScene& s, const AlignmentModel& initial, const TrainResult& r) {
  const auto final_metrics = miou(confusion(s.labels, predict(s, r.model), s.class_count()));
  return {{"initial_miou", toy_miou(s, initial)},
          {"final_miou", r.final_miou},
          {"per_class_iou", optional_ious(final_metrics)},
          {"final_ce", r.history.back().cross_entropy},
          {"final_ot_distance", r.history.back().ot_distance},
          {"steps", r.history.size() - 1}};
}

void save_run(const fs::path& dir, const std::string& suffix, const SyntheticScene& s,
              const TrainResult& r) {
  const auto cm = confusion(s.labels, predict(s, r.model), s.class_count());
  Matrix counts(cm.class_count(), cm.class_count());
  for (std::size_t g = 0; g < cm.class_count(); ++g) {
    for (std::size_t p = 0; p < cm.class_count(); ++p) counts(g, p) = static_cast<double>(cm.at(g, p));
  }
  io::save_text(dir / ("confusion" + suffix + ".csv"),
                render([&](std::ostream& os) { io::write_matrix_csv(os, counts); }));
  io::save_text(dir / ("history" + suffix + ".csv"),
                render([&](std::ostream& os) { io::write_history_csv(os, r.history); }));
  io::save_text(dir / ("model" + suffix + ".txt"), render([&](std::ostream& os) {
                  io::write_feature_set(os, r.model.text_embeddings);
                }));
}

int train_command(const json& config, std::ostream& out) {
  const auto s = generate_scene(scene_from(config));
  TrainConfig tc;
  tc.learning_rate = config.at("lr").get<double>();
  tc.outer_steps = config.at("outer_steps").get<std::size_t>();
  tc.beta = config.at("beta").get<double>();
  tc.refresh_every = config.at("refresh_every").get<std::size_t>();
  tc.sinkhorn = sinkhorn_from(config);
  tc.validate();
  const auto initial = make_initial_model(s, config.at("init_noise").get<double>(), s.params.seed,
                                          config.at("tau").get<double>(), tc.beta);

  const auto guided = train(s, initial, tc);
  json results = train_results(s, initial, guided);

  const fs::path dir = prepare_out_dir(config);
  save_run(dir, "", s, guided);
  if (config.at("ablate").get<bool>()) {
    TrainConfig ablation = tc;
    ablation.beta = 0.0;
    const auto plain = train(s, initial, ablation);
    save_run(dir, "_ablation", s, plain);
    results["ablation"] = train_results(s, initial, plain);
  }
  write_summary(dir, config, results);
  out << "final mIoU " << io::format_double(guided.final_miou);
  if (results.contains("ablation")) {
    out << " (beta=0 ablation " << io::format_double(results["ablation"]["final_miou"].get<double>())
        << ")";
  }
  out << "\n";
  return kSuccess;
}

// ---------------------------------------------------------------------------
// heatmap

int heatmap(const json& config, std::ostream& out) {
  require_inputs(config, {"volume", "model"});
  const auto volume_path = config.at("volume").get<std::string>();
  const auto model_path = config.at("model").get<std::string>();
  const auto class_index = config.at("class_index").get<std::int64_t>();

  Matrix volume;
  std::size_t height = 0;
  std::size_t width = 0;
  if (!volume_path.empty()) {
    if (!model_path.empty()) {
      throw Error(ErrorCode::invalid_argument, "give either --volume or --model, not both");
    }
    volume = CostVolume(io::load_matrix_csv(volume_path)).similarity();
    height = config.at("height").get<std::size_t>();
    width = config.at("width").get<std::size_t>();
    if (height * width != volume.rows()) {
      throw Error(ErrorCode::shape_mismatch,
                  "volume has " + std::to_string(volume.rows()) + " rows but the grid is " +
                      std::to_string(height) + "x" + std::to_string(width));
    }
  } else {
    const auto s = generate_scene(scene_from(config));
    const FeatureSet text = model_path.empty()
                                ? s.prototypes
                                : io::load_feature_set(model_path, FeatureRole::textual);
    volume = build_cost_volume(s.pixel_features, text).similarity();
    height = s.height();
    width = s.width();
  }
  if (class_index < 0 || static_cast<std::size_t>(class_index) >= volume.cols()) {
    throw Error(ErrorCode::out_of_range, "class index " + std::to_string(class_index) +
                                             " outside [0, " + std::to_string(volume.cols()) + ")");
  }
  const auto n = static_cast<std::size_t>(class_index);

  Matrix column(height, width);
  for (std::size_t p = 0; p < volume.rows(); ++p) column(p / width, p % width) = volume(p, n);
  const auto gray = io::to_grayscale(column.values());

  const fs::path dir = prepare_out_dir(config);
  const std::string stem = "heatmap_" + std::to_string(n);
  io::save_text(dir / (stem + ".csv"), render([&](std::ostream& os) { io::write_matrix_csv(os, column); }));
  io::save_text(dir / (stem + ".pgm"),
                render([&](std::ostream& os) { io::write_pgm(os, width, height, gray); }));
  const auto [lo, hi] = std::minmax_element(column.values().begin(), column.values().end());
  write_summary(dir, config,
                {{"class_index", n}, {"height", height}, {"width", width}, {"min", *lo}, {"max", *hi}});
  out << "wrote " << (dir / (stem + ".pgm")).string() << "\n";
  return kSuccess;
}

// ---------------------------------------------------------------------------
// verify

int verify(const json& config, std::ostream& out) {
  VerifyParams params;
  params.trials = config.at("trials").get<std::size_t>();
  params.seed = config.at("seed").get<std::uint64_t>();
  params.max_n = config.at("max_n").get<std::size_t>();
  params.lambdas = config.at("lambdas").get<std::vector<double>>();
  params.delta_v = config.at("delta_v").get<double>();
  params.max_iters = config.at("max_iters").get<std::size_t>();
  const auto report = run_verification(params);

  out << std::left << std::setw(44) << "check" << std::setw(8) << "status" << "passed/total\n";
  json checks = json::array();
  for (const auto& c : report.checks) {
    const bool ok = c.passed == c.total;
    out << std::setw(44) << c.name << std::setw(8) << (ok ? "PASS" : "FAIL") << c.passed << "/"
        << c.total << "\n";
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"total", c.total}, {"worst", c.worst}});
  }

  const fs::path dir = prepare_out_dir(config);
  json results = {{"passed", report.passed()}, {"checks", checks}};
  if (report.failure) {
    io::save_text(dir / "failure.json", report.failure->dump(2) + "\n");
    results["failure_file"] = (dir / "failure.json").string();
    out << "failing instance written to " << (dir / "failure.json").string() << "\n";
  }
  write_summary(dir, config, results);
  return report.passed() ? kSuccess : kVerificationFailed;
}

// ---------------------------------------------------------------------------

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::not_converged: return kNotConverged;
    case ErrorCode::non_finite_loss: return kNumericAbort;
    default: return kInputError;
  }
}

struct Command {
  CLI::App* app;
  std::unique_ptr<ConfigBinder> binder;
  int (*handler)(const json&, std::ostream&);
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cost-volume optimal transport toolkit: Sinkhorn solves, exact oracles, "
               "two-stage alignment training and heatmap export"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON config (or an earlier summary.json); command-line flags take precedence");

  std::vector<Command> commands;
  auto add_command = [&](const char* name, const char* help, json defaults,
                         int (*handler)(const json&, std::ostream&)) -> ConfigBinder& {
    CLI::App* sub = app.add_subcommand(name, help);
    defaults["command"] = name;
    defaults["out_dir"] = "out";
    auto binder = std::make_unique<ConfigBinder>(sub, defaults);
    binder->option<std::string>("out_dir", "--out-dir", "Output directory (created if absent)");
    commands.push_back({sub, std::move(binder), handler});
    return *commands.back().binder;
  };

  {
    auto& b = add_command("solve", "Sinkhorn solve on a cost matrix or a pair of feature files",
                          merged({sinkhorn_defaults(),
                                  {{"cost", ""}, {"visual", ""}, {"textual", ""}, {"plan_csv", true},
                                   {"trace_csv", false}, {"seed", 0}}}),
                          solve);
    b.option<std::string>("cost", "--cost", "Cost matrix file ('M N' header, M rows)");
    b.option<std::string>("visual", "--visual", "Visual feature file");
    b.option<std::string>("textual", "--textual", "Textual feature file");
    bind_sinkhorn(b);
    b.flag("plan_csv", "--plan-csv,!--no-plan-csv", "Write plan.csv");
    b.flag("trace_csv", "--trace,!--no-trace", "Write the per-iteration trace.csv");
    b.option<std::uint64_t>("seed", "--seed", "Recorded for reproducibility");
  }
  {
    auto& b = add_command("scene", "Generate a synthetic labeled scene", scene_defaults(), scene);
    bind_scene(b);
  }
  {
    auto& b = add_command("train", "Two-stage alignment training on a synthetic scene",
                          merged({scene_defaults(), sinkhorn_defaults(),
                                  {{"init_noise", 1.0}, {"tau", 0.07}, {"beta", 0.5}, {"lr", 0.05},
                                   {"outer_steps", 200}, {"refresh_every", 1}, {"ablate", false}}}),
                          train_command);
    bind_scene(b);
    bind_sinkhorn(b);
    b.option<double>("init_noise", "--init-noise", "Perturbation of the initial text embeddings");
    b.option<double>("tau", "--tau", "Logit temperature");
    b.option<double>("beta", "--beta", "Transport guidance weight");
    b.option<double>("lr", "--lr", "Learning rate");
    b.option<std::int64_t>("outer_steps", "--outer-steps", "Outer training steps (>= 1)");
    b.option<std::size_t>("refresh_every", "--refresh-every", "Re-solve T* every k outer steps");
    b.flag("ablate", "--ablate,!--no-ablate", "Also run the beta = 0 ablation from the same init");
  }
  {
    auto& b = add_command("heatmap", "Export one similarity column as CSV and PGM",
                          merged({scene_defaults(), {{"volume", ""}, {"model", ""}, {"class_index", 0}}}),
                          heatmap);
    bind_scene(b);
    b.option<std::string>("volume", "--volume", "Cost-volume CSV (rows are pixels)");
    b.option<std::string>("model", "--model", "Text embedding file; defaults to the scene prototypes");
    b.option<std::int64_t>("class_index", "--class", "Class column to export");
  }
  {
    const VerifyParams v;
    auto& b = add_command("verify", "Randomized Sinkhorn-vs-exact-oracle property suite",
                          {{"trials", v.trials}, {"seed", v.seed}, {"max_n", v.max_n},
                           {"lambdas", v.lambdas}, {"delta_v", v.delta_v}, {"max_iters", v.max_iters}},
                          verify);
    b.option<std::size_t>("trials", "--trials", "Number of random instances");
    b.option<std::uint64_t>("seed", "--seed", "Base seed; trial t uses seed + t");
    b.option<std::size_t>("max_n", "--max-n", "Largest instance size (<= 8)");
    b.option<std::vector<double>>("lambdas", "--lambda", "Lambda grid")->delimiter(',');
    b.option<double>("delta_v", "--delta-v", "Sinkhorn stopping threshold");
    b.option<std::size_t>("max_iters", "--max-iters", "Sinkhorn iteration cap per stage");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInputError;
  }

  for (auto& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    try {
      json file_config;
      if (!config_path.empty()) file_config = load_json_file(config_path);
      json effective = cmd.binder->resolve(config_path.empty() ? nullptr : &file_config);
      // Negative counts are rejected here rather than wrapping around.
      if (effective.contains("outer_steps") && effective["outer_steps"].is_number_integer() &&
          effective["outer_steps"].get<std::int64_t>() < 1) {
        throw Error(ErrorCode::invalid_argument, "--outer-steps must be >= 1");
      }
      return cmd.handler(effective, out);
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return exit_code_for(e);
    } catch (const json::exception& e) {
      err << "error: bad config value: " << e.what() << "\n";
      return kInputError;
    }
  }
  return kInputError;
}

}  // namespace costot::cli
