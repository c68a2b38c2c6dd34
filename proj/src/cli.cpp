#include "quadrl/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "quadrl/async.hpp"
#include "quadrl/error.hpp"
#include "quadrl/geometry.hpp"
#include "quadrl/io.hpp"
#include "quadrl/metrics.hpp"
#include "quadrl/random.hpp"
#include "quadrl/rewards.hpp"
#include "quadrl/throughput.hpp"
#include "quadrl/tokenizer.hpp"
#include "quadrl/toy_task.hpp"

namespace quadrl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// JSON has no infinity; non-finite values are written as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path);
  f << text << '\n';
  if (!f) throw Error(ErrorCode::Io, "write failed for " + path);
}

bool has_extension(const fs::path& p, std::string_view ext) {
  auto e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e == ext;
}

TokenSequence read_tokens(const fs::path& path, bool text) {
  if (!text) return read_qtok(path);
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_token_text(in);
}

// ---------------------------------------------------------------------------
// Shared option groups

void add_reward_options(CLI::App* app, RewardConfig& cfg) {
  app->add_option("--w-qr", cfg.w_qr, "weight of the quad ring count")->capture_default_str();
  app->add_option("--theta-ray", cfg.theta_ray, "gate: bad faces must stay below this")->capture_default_str();
  app->add_option("--theta-hd", cfg.theta_hd, "gate: Hausdorff distance must stay below this")->capture_default_str();
  app->add_option("--theta-angle", cfg.theta_angle, "back-face angle threshold")->capture_default_str();
  app->add_option("--theta-ratio", cfg.theta_ratio, "pre-check invalid hit ratio")->capture_default_str();
  app->add_option("--ray-grid", cfg.per_axis, "pre-check rays per axis")->capture_default_str();
  app->add_option("--hd-samples", cfg.hd_samples, "surface samples for the Hausdorff distance")->capture_default_str();
}

json reward_config_json(const RewardConfig& c) {
  return {{"w_qr", c.w_qr},
          {"theta_ray", c.theta_ray},
          {"theta_hd", c.theta_hd},
          {"theta_angle", c.theta_angle},
          {"theta_ratio", c.theta_ratio},
          {"ray_grid", c.per_axis},
          {"jitter", c.jitter},
          {"probe_count", c.probe_count},
          {"probe_radius_fraction", c.probe_radius_fraction},
          {"viewpoint_distance", c.viewpoint_distance},
          {"hd_samples", c.hd_samples},
          {"seed", c.seed}};
}

void add_schedule_options(CLI::App* app, ScheduleConfig& s) {
  app->add_option("--n1", s.n1, "pre-start trainer steps")->capture_default_str();
  app->add_option("--n2", s.n2, "trainer steps per later checkpoint")->capture_default_str();
  app->add_option("--t", s.t, "trainers")->capture_default_str();
  app->add_option("--b", s.b, "groups per trainer step")->capture_default_str();
  app->add_option("--s1", s.s1, "groups generated before training starts")->capture_default_str();
  app->add_option("--s2", s.s2, "groups generated per later policy version")->capture_default_str();
  app->add_option("--sigma", s.sigma, "groups required before a step may sample")->capture_default_str();
  app->add_option("--sigma-min", s.sigma_min, "lower bound of the reuse ratio")->capture_default_str();
  app->add_option("--sigma-max", s.sigma_max, "upper bound of the reuse ratio")->capture_default_str();
  app->add_option("--tolerance", s.equality_tolerance, "tolerance of the ratio equality")->capture_default_str();
  app->add_flag("--relax-equality", s.relax_equality, "report the ratio equality without enforcing it");
}

json schedule_json(const ScheduleConfig& s) {
  return {{"n1", s.n1},
          {"n2", s.n2},
          {"t", s.t},
          {"b", s.b},
          {"s1", s.s1},
          {"s2", s.s2},
          {"sigma", s.sigma},
          {"sigma_min", s.sigma_min},
          {"sigma_max", s.sigma_max},
          {"tolerance", s.equality_tolerance},
          {"relax_equality", s.relax_equality}};
}

// ---------------------------------------------------------------------------
// Subcommands

struct TokenizeArgs {
  std::string input;
  std::string output;
  int bits = 10;
  bool text = false;
};

int do_tokenize(const TokenizeArgs& a, std::ostream& out) {
  const Mesh mesh = read_obj(fs::path(a.input));
  const auto q = quantize_vertices(normalize_mesh(mesh), a.bits);
  const auto canon = canonicalize(q.mesh);
  const auto seq = tokenize(canon.mesh);
  if (a.text) {
    std::ofstream f(a.output);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + a.output);
    write_token_text(f, seq);
  } else {
    write_qtok(fs::path(a.output), seq);
  }
  const json report{{"input", a.input},
                    {"output", a.output},
                    {"bits", a.bits},
                    {"text", a.text},
                    {"faces", canon.mesh.faces.size()},
                    {"tokens", seq.tokens.size()},
                    {"dropped_faces", canon.dropped_faces},
                    {"merged_vertices", canon.merged_vertices}};
  out << report.dump() << '\n';
  return kExitOk;
}

struct DetokenizeArgs {
  std::string input;
  std::string output;
  bool text = false;
  bool permissive = false;
};

int do_detokenize(const DetokenizeArgs& a, std::ostream& out) {
  const auto seq = read_tokens(a.input, a.text);
  const auto decoded = detokenize(seq, a.permissive ? Strictness::Permissive : Strictness::Strict);
  write_obj(fs::path(a.output), dequantize_unit(decoded.mesh));
  const json report{{"input", a.input},
                    {"output", a.output},
                    {"bits", seq.bits},
                    {"permissive", a.permissive},
                    {"faces", decoded.mesh.faces.size()},
                    {"dropped_faces", decoded.dropped_faces},
                    {"dropped_tokens", decoded.dropped_tokens}};
  out << report.dump() << '\n';
  return kExitOk;
}

struct RewardArgs {
  std::string input;
  std::string cloud;
  std::string output;
  bool text = false;
  RewardConfig reward;
};

int do_reward(const RewardArgs& a, std::ostream& out) {
  const fs::path input(a.input);
  Mesh mesh;
  if (has_extension(input, ".obj")) {
    mesh = read_obj(input);
  } else {
    mesh = dequantize_unit(detokenize(read_tokens(input, a.text), Strictness::Permissive).mesh);
  }
  const auto cloud = read_xyz(fs::path(a.cloud));
  const auto r = compute_reward(mesh, cloud, a.reward);
  const json report{{"n_bad_faces", r.n_bad_faces},
                    {"hausdorff", number(r.hausdorff)},
                    {"n_quad_rings", r.n_quad_rings},
                    {"n_quad_lines", r.n_quad_lines},
                    {"gated", r.gated},
                    {"total", r.total},
                    {"input", a.input},
                    {"cloud", a.cloud},
                    {"config", reward_config_json(a.reward)}};
  emit(report.dump(), a.output, out);
  return kExitOk;
}

struct ScoreArgs {
  std::string directory;
  std::string refs;
  std::string output;
  BrokenCheckConfig broken;
  std::size_t samples = 10000;
  double f1_threshold = 0.01;
  std::size_t threads = 0;
};

struct ScoreRow {
  std::string path;
  std::optional<double> cd, hd, nc, f1;
  double quad_ratio = 0.0;
  BrokenScore broken;
};

std::string csv_field(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s << std::setprecision(10) << *v;
  return s.str();
}

// Quotes a CSV field when it holds a separator, quote or newline.
std::string csv_text(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string q = "\"";
  for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + '"';
}

ScoreRow score_one(const fs::path& path, std::size_t index, const ScoreArgs& a) {
  ScoreRow row;
  row.path = path.filename().string();
  const Mesh mesh = read_obj(path);
  row.quad_ratio = quad_ratio(mesh);
  BrokenCheckConfig bc = a.broken;
  bc.seed = derive_seed(a.broken.seed, {index});
  row.broken = broken_check(mesh, bc);

  if (a.refs.empty()) return row;
  const auto stem = path.stem().string();
  const fs::path ref_mesh = fs::path(a.refs) / (stem + ".obj");
  const fs::path ref_cloud = fs::path(a.refs) / (stem + ".xyz");
  std::optional<Mesh> gt_mesh;
  std::vector<Vec3> gt;
  if (fs::exists(ref_mesh)) {
    gt_mesh = read_obj(ref_mesh);
    gt = sample_surface_points(*gt_mesh, a.samples, derive_seed(a.broken.seed, {index, 2}));
  } else if (fs::exists(ref_cloud)) {
    gt = read_xyz(ref_cloud);
  } else {
    return row;
  }
  const auto pred = sample_surface_points(mesh, a.samples, derive_seed(a.broken.seed, {index, 1}));
  row.cd = chamfer_distance(pred, gt);
  row.hd = hausdorff_distance(pred, gt);
  row.f1 = f1_score(pred, gt, a.f1_threshold).f1;
  if (gt_mesh) row.nc = normal_consistency(mesh, *gt_mesh, a.samples, derive_seed(a.broken.seed, {index, 3}));
  return row;
}

int do_score(const ScoreArgs& a, std::ostream& out) {
  a.broken.validate();
  if (!fs::is_directory(a.directory)) throw Error(ErrorCode::Io, "not a directory: " + a.directory);
  if (!a.refs.empty() && !fs::is_directory(a.refs)) throw Error(ErrorCode::Io, "not a directory: " + a.refs);
  if (a.samples == 0) throw Error(ErrorCode::InvalidArgument, "--samples must be > 0");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a.directory))
    if (e.is_regular_file() && has_extension(e.path(), ".obj")) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::EmptyCorpus, "no OBJ files in " + a.directory);

  std::vector<ScoreRow> rows(files.size());
  std::vector<std::exception_ptr> errors(files.size());
  std::atomic<std::size_t> next{0};
  const std::size_t threads =
      std::min(files.size(), a.threads ? a.threads : std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < files.size(); i = next++) {
        try {
          rows[i] = score_one(files[i], i, a);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<double> scores;
  for (const auto& r : rows) scores.push_back(r.broken.score);
  const double br = broken_ratio_from_scores(scores, a.broken.theta_succ);

  std::ostringstream csv;
  csv << "# theta_succ=" << a.broken.theta_succ << " theta_angle=" << a.broken.theta_angle
      << " sigma_rand=" << a.broken.sigma_rand << " ray_grid=" << a.broken.per_axis << " samples=" << a.samples
      << " f1_threshold=" << a.f1_threshold << " seed=" << a.broken.seed << '\n';
  csv << "path,cd,hd,nc,f1,quad_ratio,broken_score,is_broken\n";
  for (const auto& r : rows) {
    csv << csv_text(r.path) << ',' << csv_field(r.cd) << ',' << csv_field(r.hd) << ',' << csv_field(r.nc) << ','
        << csv_field(r.f1) << ',' << csv_field(r.quad_ratio) << ',' << csv_field(r.broken.score) << ','
        << (r.broken.is_broken ? 1 : 0) << '\n';
  }
  csv << "BR,,,,,,," << csv_field(br);
  emit(csv.str(), a.output, out);
  return kExitOk;
}

struct TrainArgs {
  ToyRunConfig run = default_toy_run();
  std::string output;
  std::uint64_t seed = 0;
  bool timing = false;
};

json eval_json(const ToyEval& e) {
  return {{"mean_reward", e.mean_reward},
          {"gate_pass_rate", e.gate_pass_rate},
          {"mean_quad_rings", e.mean_rings},
          {"mean_quad_lines", e.mean_lines},
          {"samples", e.samples}};
}

int do_train(TrainArgs a, std::ostream& out) {
  a.run.task.seed = a.seed;
  a.run.task.reward.seed = a.seed;
  a.run.trainer.seed = a.seed;
  a.run.arpo.group_size = a.run.task.group_size;
  a.run.arpo.validate();
  if (!a.output.empty()) {
    fs::create_directories(a.output);
    a.run.checkpoint_dir = fs::path(a.output) / "checkpoints";
    fs::create_directories(*a.run.checkpoint_dir);
  }
  const auto result = run_toy(a.run);

  const auto& task = a.run.task;
  json config{{"seed", a.seed},
              {"shapes", task.shapes},
              {"bits", task.bits},
              {"k", task.group_size},
              {"beta", a.run.arpo.beta},
              {"truncations", task.truncations},
              {"window", task.window},
              {"cloud_points", task.cloud_points},
              {"pretrain_steps", task.pretrain_steps},
              {"pretrain_lr", task.pretrain_lr},
              {"eval_samples", task.eval_samples},
              {"learning_rate", a.run.trainer.learning_rate},
              {"checkpoints", a.run.trainer.checkpoints},
              {"workers", a.run.workers},
              {"schedule", schedule_json(a.run.trainer.schedule)},
              {"reward", reward_config_json(task.reward)}};
  json checkpoints = json::array();
  for (const auto& c : result.checkpoints) {
    auto j = eval_json(c.eval);
    j["version"] = c.version;
    checkpoints.push_back(j);
  }
  json report{{"config", config},
              {"checkpoints", checkpoints},
              {"trainer_steps", result.run.log.steps.size()},
              {"version_consistent", result.version_consistent}};
  // Wall time and worker interleaving vary between runs; reported on request.
  if (a.timing)
    report["runtime"] = {{"seconds", result.seconds},
                         {"rollout_tickets", result.run.rollout_tickets},
                         {"rollout_failures", result.run.rollout_failures},
                         {"dropped_groups", result.run.dropped_groups},
                         {"evicted_groups", result.run.evicted_groups}};
  const std::string text = report.dump(2);
  out << text << '\n';
  if (!a.output.empty()) emit(text, (fs::path(a.output) / "metrics.json").string(), out);
  return result.version_consistent ? kExitOk : kExitValidation;
}

struct BenchArgs {
  ThroughputConfig cfg;
  std::string mode = "both";
  std::string output;
};

json throughput_json(const ThroughputResult& r) {
  return {{"mode", std::string(to_string(r.mode))},
          {"utilization", r.utilization},
          {"samples_per_second", r.samples_per_second},
          {"samples_per_hour", r.samples_per_hour},
          {"samples", r.samples},
          {"updates", r.updates},
          {"virtual_time", r.virtual_time}};
}

int do_bench(const BenchArgs& a, std::ostream& out) {
  const auto& c = a.cfg;
  json report{{"config",
               {{"mode", a.mode},
                {"workers", c.workers},
                {"batch", c.batch},
                {"update_time", c.update_time},
                {"buffer_capacity", c.buffer_capacity},
                {"duration", c.duration},
                {"mean_length", c.lengths.mean},
                {"cv", c.lengths.cv},
                {"seed", c.seed}}}};
  if (a.mode == "both") {
    const auto cmp = compare_throughput(c);
    report["sync"] = throughput_json(cmp.sync);
    report["async"] = throughput_json(cmp.async);
    report["speedup"] = cmp.speedup;
  } else {
    const auto r = simulate_throughput(a.mode == "sync" ? SimMode::Sync : SimMode::Async, c);
    report[a.mode] = throughput_json(r);
  }
  emit(report.dump(2), a.output, out);
  return kExitOk;
}

struct ScheduleArgs {
  ScheduleConfig schedule;
  bool json_output = false;
};

int do_validate_schedule(const ScheduleArgs& a, std::ostream& out) {
  const auto report = validate_schedule(a.schedule);
  if (a.json_output) {
    json clauses = json::array();
    for (const auto& c : report.clauses)
      clauses.push_back({{"name", c.name}, {"satisfied", c.satisfied}, {"detail", c.detail}});
    out << json{{"config", schedule_json(a.schedule)},
                {"steady_ratio", report.steady_ratio},
                {"prestart_ratio", report.prestart_ratio},
                {"clauses", clauses},
                {"valid", report.valid()}}
               .dump(2)
        << '\n';
  } else {
    for (const auto& c : report.clauses)
      out << (c.satisfied ? "PASS  " : "FAIL  ") << c.name << "  (" << c.detail << ")\n";
    out << "steady ratio " << report.steady_ratio << ", pre-start ratio " << report.prestart_ratio << '\n';
    out << (report.valid() ? "schedule valid" : "schedule INVALID") << '\n';
  }
  return report.valid() ? kExitOk : kExitValidation;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"quadrl: mixed triangle-quad mesh tokenization, rewards, metrics and asynchronous ARPO training"};
  app.name("quadrl");
  app.require_subcommand(1);
  std::function<int()> action;

  TokenizeArgs tok;
  auto* c_tok = app.add_subcommand("tokenize", "OBJ mesh to a token file");
  c_tok->add_option("input", tok.input, "OBJ mesh")->required();
  c_tok->add_option("-o,--output", tok.output, "token file")->required();
  c_tok->add_option("--bits", tok.bits, "quantization bits per coordinate")->capture_default_str();
  c_tok->add_flag("--text", tok.text, "write the one-token-per-line text form");
  c_tok->callback([&] { action = [&] { return do_tokenize(tok, out); }; });

  DetokenizeArgs detok;
  auto* c_detok = app.add_subcommand("detokenize", "token file to an OBJ mesh");
  c_detok->add_option("input", detok.input, "token file")->required();
  c_detok->add_option("-o,--output", detok.output, "OBJ mesh")->required();
  c_detok->add_flag("--text", detok.text, "read the text token form");
  c_detok->add_flag("--permissive", detok.permissive, "drop malformed face blocks instead of failing");
  c_detok->callback([&] { action = [&] { return do_detokenize(detok, out); }; });

  RewardArgs rew;
  auto* c_rew = app.add_subcommand("reward", "gated reward of a mesh against a condition point cloud");
  c_rew->add_option("input", rew.input, "OBJ mesh or token file")->required();
  c_rew->add_option("--cloud", rew.cloud, "XYZ condition point cloud")->required();
  c_rew->add_option("-o,--output", rew.output, "write the JSON report here instead of stdout");
  c_rew->add_flag("--text", rew.text, "token input is in the text form");
  c_rew->add_option("--seed", rew.reward.seed, "seed of the ray grid and surface samples")->capture_default_str();
  add_reward_options(c_rew, rew.reward);
  c_rew->callback([&] { action = [&] { return do_reward(rew, out); }; });

  ScoreArgs sc;
  auto* c_sc = app.add_subcommand("score", "corpus metrics and broken ratio as CSV");
  c_sc->add_option("directory", sc.directory, "directory of OBJ meshes")->required();
  c_sc->add_option("--refs", sc.refs, "directory of references named <stem>.obj or <stem>.xyz");
  c_sc->add_option("-o,--output", sc.output, "write the CSV here instead of stdout");
  c_sc->add_option("--theta-succ", sc.broken.theta_succ, "score above which a mesh is broken")->capture_default_str();
  c_sc->add_option("--theta-angle", sc.broken.theta_angle, "back-face angle threshold")->capture_default_str();
  c_sc->add_option("--sigma-rand", sc.broken.sigma_rand, "ray direction perturbation")->capture_default_str();
  c_sc->add_option("--ray-grid", sc.broken.per_axis, "rays per axis")->capture_default_str();
  c_sc->add_option("--samples", sc.samples, "surface samples for distances")->capture_default_str();
  c_sc->add_option("--f1-threshold", sc.f1_threshold, "F1 distance threshold")->capture_default_str();
  c_sc->add_option("--threads", sc.threads, "worker threads, 0 for all cores")->capture_default_str();
  c_sc->add_option("--seed", sc.broken.seed, "corpus seed")->capture_default_str();
  c_sc->callback([&] { action = [&] { return do_score(sc, out); }; });

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train-toy", "asynchronous ARPO on the procedural toy task");
  auto& task = tr.run.task;
  c_tr->add_option("--k", task.group_size, "samples per group")->capture_default_str();
  c_tr->add_option("--beta", tr.run.arpo.beta, "reference regularization strength")->capture_default_str();
  c_tr->add_option("--truncations", task.truncations, "windows per generated sequence")->capture_default_str();
  c_tr->add_option("--window", task.window, "window length in tokens")->capture_default_str();
  c_tr->add_option("--shapes", task.shapes, "condition shapes")->capture_default_str();
  c_tr->add_option("--bits", task.bits, "quantization bits")->capture_default_str();
  c_tr->add_option("--cloud-points", task.cloud_points, "condition cloud size")->capture_default_str();
  c_tr->add_option("--pretrain-steps", task.pretrain_steps, "reference pretraining steps")->capture_default_str();
  c_tr->add_option("--pretrain-lr", task.pretrain_lr, "reference pretraining learning rate")->capture_default_str();
  c_tr->add_option("--eval-samples", task.eval_samples, "evaluation samples per condition")->capture_default_str();
  c_tr->add_option("--lr", tr.run.trainer.learning_rate, "trainer learning rate")->capture_default_str();
  c_tr->add_option("--checkpoints", tr.run.trainer.checkpoints, "trained checkpoints")->capture_default_str();
  c_tr->add_option("--workers", tr.run.workers, "rollout workers")->capture_default_str();
  c_tr->add_option("--seed", tr.seed, "run seed")->capture_default_str();
  c_tr->add_option("-o,--output", tr.output, "directory for checkpoints and metrics.json");
  c_tr->add_flag("--timing", tr.timing, "add wall time and worker counters");
  add_schedule_options(c_tr, tr.run.trainer.schedule);
  add_reward_options(c_tr, task.reward);
  c_tr->callback([&] { action = [&] { return do_train(tr, out); }; });

  BenchArgs be;
  auto* c_be = app.add_subcommand("bench-async", "simulated rollout throughput, synchronous vs asynchronous");
  c_be->add_option("--mode", be.mode, "sync, async or both")
      ->check(CLI::IsMember({"sync", "async", "both"}))
      ->capture_default_str();
  c_be->add_option("--workers", be.cfg.workers, "rollout workers")->capture_default_str();
  c_be->add_option("--batch", be.cfg.batch, "samples per update, 0 for one per worker")->capture_default_str();
  c_be->add_option("--update-time", be.cfg.update_time, "virtual seconds per update")->capture_default_str();
  c_be->add_option("--buffer", be.cfg.buffer_capacity, "async buffer capacity, 0 for four batches")
      ->capture_default_str();
  c_be->add_option("--duration", be.cfg.duration, "virtual seconds simulated")->capture_default_str();
  c_be->add_option("--mean", be.cfg.lengths.mean, "mean rollout duration")->capture_default_str();
  c_be->add_option("--cv", be.cfg.lengths.cv, "coefficient of variation of rollout durations")
      ->capture_default_str();
  c_be->add_option("--seed", be.cfg.seed, "simulation seed")->capture_default_str();
  c_be->add_option("-o,--output", be.output, "write the JSON report here instead of stdout");
  c_be->callback([&] { action = [&] { return do_bench(be, out); }; });

  ScheduleArgs sa;
  auto* c_sa = app.add_subcommand("validate-schedule", "check a rollout/trainer schedule clause by clause");
  add_schedule_options(c_sa, sa.schedule);
  c_sa->add_flag("--json", sa.json_output, "print the report as JSON");
  c_sa->callback([&] { action = [&] { return do_validate_schedule(sa, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  if (!action) {
    err << app.help();
    return kExitUsage;
  }
  try {
    return action();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::Io || e.code() == ErrorCode::Parse ? kExitIo : kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace quadrl::cli
