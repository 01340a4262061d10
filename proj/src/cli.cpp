#include "vagan/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vagan/annotation.hpp"
#include "vagan/error.hpp"
#include "vagan/gradcheck_suite.hpp"
#include "vagan/labels.hpp"
#include "vagan/stats.hpp"
#include "vagan/synth.hpp"

namespace vagan {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kOutRootEnv = "VAGAN_OUT_ROOT";

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::config, "setting '" + key + "' expects a number, got '" + value + "'");
}

long long to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::config, "setting '" + key + "' expects an integer, got '" + value + "'");
}

std::size_t to_size(const std::string& key, const std::string& value) {
  const long long v = to_int(key, value);
  if (v < 0) throw Error(ErrorKind::config, "setting '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

void require_dir(const fs::path& p, const char* what) {
  if (!fs::is_directory(p)) throw Error(ErrorKind::io, std::string(what) + " not found: " + p.string());
}

void make_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + p.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::io, "short write to " + path.string());
}

std::string fixed(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

class Manifest {
 public:
  Manifest(fs::path dir, std::string command, json options)
      : path_(std::move(dir) / "manifest.json") {
    doc_["command"] = std::move(command);
    doc_["status"] = "running";
    doc_["started"] = now_utc();
    doc_["options"] = std::move(options);
    doc_["artifacts"] = json::array();
    flush();
  }
  json& doc() { return doc_; }
  void artifact(const fs::path& p) { doc_["artifacts"].push_back(p.string()); }
  void finish() {
    doc_["status"] = "complete";
    doc_["finished"] = now_utc();
    flush();
  }
  void flush() { write_text(path_, doc_.dump(2) + "\n"); }

 private:
  fs::path path_;
  json doc_;
};

json options_of(const CLI::App& sub) {
  json opts = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name(false, true);
    std::string key = opt->get_lnames().empty() ? name : opt->get_lnames().front();
    if (key.empty() || key == "help" || key == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : " ") + r;
    } else {
      value = opt->get_default_str();
    }
    opts[key] = value;
  }
  return opts;
}

// Settings from --config fill options the command line left unset.
void apply_config_file(CLI::App& sub, const std::string& path) {
  for (const auto& [raw_key, value] : read_config_file(path)) {
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '_', '-');
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") {
      throw Error(ErrorKind::config, path + ": unknown setting '" + raw_key + "' for " + sub.get_name());
    }
    if (opt->count() > 0) continue;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw Error(ErrorKind::config, path + ": bad value for '" + raw_key + "': " + e.what());
    }
  }
}

fs::path resolve_out(const std::string& out, const std::string& command) {
  if (!out.empty()) return out;
  if (const char* root = std::getenv(kOutRootEnv); root != nullptr && *root != '\0') {
    return fs::path(root) / command;
  }
  throw Error(ErrorKind::usage, "--out is required (or set " + std::string(kOutRootEnv) + ")");
}

struct DataArgs {
  std::string data;
  std::string frames;
  std::string labels;
  std::string test_split;

  void add_to(CLI::App& sub) {
    sub.add_option("--data", data, "Dataset root holding frames/, labels/ and test_split.txt");
    sub.add_option("--frames", frames, "Frame root (overrides <data>/frames)");
    sub.add_option("--labels", labels, "Label root (overrides <data>/labels)");
    sub.add_option("--test-split", test_split,
                   "Holdout id list (default <data>/test_split.txt, else the reference holdout)");
  }

  DataRoots resolve() const {
    DataRoots roots;
    const fs::path base = data;
    roots.frames = !frames.empty() ? fs::path(frames) : base / "frames";
    roots.labels = !labels.empty() ? fs::path(labels) : base / "labels";
    if (data.empty() && (frames.empty() || labels.empty())) {
      throw Error(ErrorKind::usage, "give --data or both --frames and --labels");
    }
    require_dir(roots.frames, "frame root");
    require_dir(roots.labels, "label root");
    fs::path split = test_split;
    if (split.empty() && !data.empty() && fs::exists(base / "test_split.txt")) {
      split = base / "test_split.txt";
    }
    if (!split.empty()) {
      roots.test_ids = read_id_list(split);
      if (roots.test_ids.empty()) throw Error(ErrorKind::config, "empty holdout list " + split.string());
    }
    return roots;
  }
};

struct TrainArgs {
  TrainConfig cfg;
  std::string mode = "gan";
  double clip = 5.0;
  double lr_g = 0.0002;
  double lr_d = 0.0001;
  CLI::Option* lr_g_opt = nullptr;
  CLI::Option* lr_d_opt = nullptr;

  void add_to(CLI::App& sub) {
    sub.add_option("--mode", mode, "gan or supervised_only")
        ->check(CLI::IsMember({"gan", "supervised_only"}));
    sub.add_option("--model", cfg.model, "Model preset: paper, desk, tiny16, tiny32");
    sub.add_option("--iters,--max-iters", cfg.max_iters, "Total training iterations");
    sub.add_option("--eval-every", cfg.eval_every, "Evaluation/grid/checkpoint cadence");
    sub.add_option("--eval-batch", cfg.eval_batch, "Test frames per evaluation");
    sub.add_option("--batch-size", cfg.batch_size, "Training batch size");
    lr_g_opt = sub.add_option("--lr-g", lr_g, "Generator learning rate");
    lr_d_opt = sub.add_option("--lr-d", lr_d, "Discriminator learning rate (always lr_g / 2)");
    sub.add_option("--g-updates", cfg.g_updates_per_iter, "Generator updates per iteration");
    sub.add_option("--clip-norm", clip, "Global gradient-norm clip (0 disables)");
    sub.add_option("--real-target", cfg.loss.real_label_target, "One-sided smoothed real target");
    sub.add_option("--huber-delta", cfg.loss.huber_delta, "Huber delta of the feature-matching loss");
    sub.add_option("--fm-w0", cfg.loss.feature_match_weight.w0, "Initial feature-matching weight");
    sub.add_option("--fm-floor", cfg.loss.feature_match_weight.w_floor, "Feature-matching weight floor");
    sub.add_option("--fm-anneal", cfg.loss.feature_match_weight.anneal_iters,
                   "Iterations to anneal the feature-matching weight");
    sub.add_option("--image-size", cfg.pipeline.image_size, "Network input size in pixels");
    sub.add_option("--fps", cfg.pipeline.fps, "Frame rate of the label conversion");
    sub.add_option("--seed", cfg.seed, "Run seed");
    sub.add_option("--keep-checkpoints", cfg.keep_checkpoints, "Checkpoints kept in the run directory");
    sub.add_option("--prefetch", cfg.prefetch_depth, "Decoded batches queued ahead");
  }

  TrainConfig resolve() {
    cfg.mode = parse_train_mode(mode);
    cfg.clip_norm = clip > 0.0 ? std::optional<double>(clip) : std::nullopt;
    std::optional<double> g, d;
    if (lr_g_opt->count() > 0) g = lr_g;
    if (lr_d_opt->count() > 0) d = lr_d;
    cfg.set_learning_rates(g, d);
    cfg.validate();
    return cfg;
  }
};

json pairs_json(const std::vector<std::pair<std::string, std::string>>& pairs) {
  json j = json::object();
  for (const auto& [k, v] : pairs) j[k] = v;
  return j;
}

TrainConfig config_of_run(const fs::path& run_dir) {
  const fs::path path = run_dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "no manifest in run directory " + run_dir.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
  if (!doc.contains("train_config")) {
    throw Error(ErrorKind::config, path.string() + " is not a training run manifest");
  }
  std::map<std::string, std::string> pairs;
  for (const auto& [k, v] : doc["train_config"].items()) pairs[k] = v.get<std::string>();
  return train_config_from_pairs(pairs);
}

Trainer trainer_from_run(const fs::path& run_dir, const std::string& checkpoint, TrainConfig cfg) {
  fs::path ckpt = checkpoint;
  if (ckpt.empty()) {
    auto latest = latest_checkpoint(run_dir);
    if (!latest) throw Error(ErrorKind::checkpoint, "no checkpoint in " + run_dir.string());
    ckpt = *latest;
  }
  Trainer trainer(std::move(cfg));
  trainer.restore(load_checkpoint(ckpt, trainer.config().hash()));
  return trainer;
}

// --- subcommands ------------------------------------------------------------

void cmd_labels(const std::string& annotations, const std::string& frames, int fps,
                const fs::path& out_dir, Manifest& manifest, std::ostream& out) {
  require_dir(annotations, "annotation root");
  require_dir(frames, "frame root");
  if (fps <= 0) throw Error(ErrorKind::config, "fps must be positive");
  std::vector<std::string> videos;
  for (const auto& e : fs::directory_iterator(annotations)) {
    if (e.is_directory()) videos.push_back(e.path().filename().string());
  }
  std::sort(videos.begin(), videos.end());
  if (videos.empty()) throw Error(ErrorKind::io, "no video directories under " + annotations);
  for (const auto& id : videos) {
    const fs::path dir = fs::path(annotations) / id;
    const AnnotationTrack valence = read_annotation_file(dir / "valence.txt", AffectDimension::valence);
    const AnnotationTrack arousal = read_annotation_file(dir / "arousal.txt", AffectDimension::arousal);
    const fs::path frame_dir = fs::path(frames) / id;
    if (!fs::is_directory(frame_dir)) {
      std::cerr << "warning: no frame directory for " << id << "; skipped\n";
      continue;
    }
    const std::vector<std::int64_t> indices = list_frame_indices(frame_dir);
    if (indices.empty()) {
      std::cerr << "warning: no frames for " << id << "; skipped\n";
      continue;
    }
    const LabelTable table = build_label_table(id, valence, arousal, indices, fps);
    save_label_table(out_dir, table);
    manifest.artifact(label_file_path(out_dir, id));
    out << id << " " << table.rows.size() << " rows\n";
  }
}

void cmd_stats(const std::string& labels, const std::string& frames, std::size_t bins,
               const std::string& pre_counts, const fs::path& out_dir, Manifest& manifest,
               std::ostream& out) {
  require_dir(labels, "label root");
  std::vector<LabelTable> tables;
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(labels)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") ids.push_back(e.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) tables.push_back(load_label_table(labels, id));
  const VaHistogram hist = va_histogram(tables, bins);

  std::ostringstream csv;
  csv << "valence_lo,valence_hi,arousal_lo,arousal_hi,count\n";
  const double width = 2.0 / static_cast<double>(bins);
  for (std::size_t v = 0; v < bins; ++v) {
    for (std::size_t a = 0; a < bins; ++a) {
      csv << fixed(-1.0 + width * v) << ',' << fixed(-1.0 + width * (v + 1)) << ','
          << fixed(-1.0 + width * a) << ',' << fixed(-1.0 + width * (a + 1)) << ',' << hist.at(v, a)
          << '\n';
    }
  }
  write_text(out_dir / "histogram.csv", csv.str());
  manifest.artifact(out_dir / "histogram.csv");
  out << "videos " << tables.size() << ", rows " << hist.total() << "\n";

  if (frames.empty()) return;
  const AuditReport report =
      audit_frames(frames, labels,
                   pre_counts.empty() ? std::nullopt : std::optional<fs::path>(pre_counts));
  std::ostringstream txt;
  auto list = [](const std::vector<std::int64_t>& v) {
    std::string s;
    for (auto i : v) s += (s.empty() ? "" : " ") + std::to_string(i);
    return s.empty() ? std::string("-") : s;
  };
  for (const auto& v : report.videos) {
    txt << v.video_id << " frames=" << v.frame_count << " labels=" << v.label_count
        << " orphan_labels=" << list(v.orphan_labels) << " unlabeled_frames=" << list(v.unlabeled_frames)
        << '\n';
  }
  txt << "total_frames " << report.total_frames << '\n' << "total_labels " << report.total_labels << '\n';
  txt << "consistent " << (report.consistent() ? "yes" : "no") << '\n';
  if (report.loss_fraction) {
    txt << "pre_detection_frames " << *report.pre_detection_frames << '\n'
        << "loss_fraction " << fixed(*report.loss_fraction) << '\n';
  }
  write_text(out_dir / "audit.txt", txt.str());
  manifest.artifact(out_dir / "audit.txt");
  out << (report.consistent() ? "audit: consistent\n" : "audit: mismatches found\n");
}

void cmd_split(const std::string& labels, const std::string& holdout, const fs::path& out_dir,
               Manifest& manifest, std::ostream& out) {
  require_dir(labels, "label root");
  std::vector<std::string> videos;
  for (const auto& e : fs::directory_iterator(labels)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") videos.push_back(e.path().stem().string());
  }
  std::sort(videos.begin(), videos.end());
  const VideoSplit split =
      split_dataset(videos, holdout.empty() ? default_holdout_ids() : read_id_list(holdout));
  write_id_list(out_dir / "train.txt", split.train);
  write_id_list(out_dir / "test.txt", split.test);
  manifest.artifact(out_dir / "train.txt");
  manifest.artifact(out_dir / "test.txt");
  out << "train " << split.train.size() << " videos, test " << split.test.size() << " videos\n";
}

void cmd_train(TrainConfig cfg, const DataRoots& roots, const fs::path& out_dir, Manifest& manifest,
               std::ostream& out) {
  const std::int64_t every = cfg.eval_every;
  const TrainSummary s = train_loop(cfg, roots, out_dir, [&](const StepRecord& r) {
    if (r.iter % every == 0) {
      out << "iter " << r.iter << " L_D " << fixed(r.loss_d) << " L_sup " << fixed(r.loss_sup)
          << " L_G " << fixed(r.loss_g) << '\n';
      out.flush();
    }
  });
  for (const auto& e : s.evals) {
    out << "eval " << e.iter << " 1-ccc " << fixed(e.loss_mean) << " rf_acc_real " << fixed(e.rf_acc_real)
        << '\n';
  }
  manifest.doc()["resumed_from"] = s.resumed_from ? json(*s.resumed_from) : json(nullptr);
  manifest.doc()["final_iteration"] = s.final_iteration;
  manifest.artifact(out_dir / "progress.csv");
  manifest.artifact(out_dir / "eval.csv");
  manifest.artifact(s.last_checkpoint);
  out << "trained to iteration " << s.final_iteration << " (" << s.train_frames << " train frames, "
      << s.eval_samples << " eval frames)\n";
}

void cmd_eval(const fs::path& run_dir, const std::string& checkpoint, const DataRoots& roots,
              std::optional<std::size_t> eval_batch, const fs::path& out_dir, Manifest& manifest,
              std::ostream& out) {
  TrainConfig cfg = config_of_run(run_dir);
  Trainer trainer = trainer_from_run(run_dir, checkpoint, cfg);
  if (eval_batch) cfg.eval_batch = *eval_batch;
  if (cfg.eval_batch < 2) throw Error(ErrorKind::config, "eval_batch must be at least 2");
  const Corpus corpus = load_corpus(roots.frames, roots.labels);
  const CorpusSplit split =
      split_corpus(corpus, roots.test_ids.empty() ? default_holdout_ids() : roots.test_ids);
  const Batch batch = load_frame_batch(select_eval_frames(split.test.frames, cfg), cfg.pipeline);
  const EvalRecord r = trainer.evaluate(batch);
  write_text(out_dir / "eval.csv", std::string(kEvalHeader) + "\n" + format_eval_row(r) + "\n");
  manifest.artifact(out_dir / "eval.csv");
  out << "iteration " << r.iter << " samples " << r.samples << " 1-ccc valence " << fixed(r.loss_valence)
      << " arousal " << fixed(r.loss_arousal) << " mean " << fixed(r.loss_mean) << " rf_acc_real "
      << fixed(r.rf_acc_real) << '\n';
}

void cmd_sample(const fs::path& run_dir, const std::string& checkpoint, const fs::path& out_dir,
                Manifest& manifest, std::ostream& out) {
  const Trainer trainer = trainer_from_run(run_dir, checkpoint, config_of_run(run_dir));
  const GridResult g = trainer.sample_and_save_grid(out_dir);
  manifest.artifact(g.image_path);
  manifest.artifact(g.predictions_path);
  out << g.image_path.string() << " " << g.grid.width << "x" << g.grid.height << "\n";
}

void cmd_gradcheck(const SuiteOptions& opts, double tolerance, const fs::path& out_dir,
                   Manifest& manifest, std::ostream& out) {
  if (opts.size != 16 && opts.size != 32) throw Error(ErrorKind::config, "--size must be 16 or 32");
  const auto results = run_gradcheck_suite(opts);
  std::ostringstream txt;
  char line[160];
  double worst = 0.0;
  for (const auto& r : results) {
    std::size_t checked = 0;
    for (const auto& e : r.report.entries) checked += e.checked;
    const double err = r.report.max_rel_error();
    worst = std::max(worst, err);
    std::snprintf(line, sizeof line, "%-22s %10.3e %8zu %s\n", r.name.c_str(), err, checked,
                  err < tolerance ? "pass" : "FAIL");
    txt << line;
  }
  std::snprintf(line, sizeof line, "max_rel_error %.3e tolerance %.1e\n", worst, tolerance);
  txt << line;
  write_text(out_dir / "gradcheck.txt", txt.str());
  manifest.artifact(out_dir / "gradcheck.txt");
  out << txt.str();
  if (!(worst < tolerance)) {
    manifest.doc()["status"] = "failed";
    manifest.flush();
    throw Error(ErrorKind::numeric, "gradient check failed: max relative error " + fixed(worst, 9));
  }
}

}  // namespace

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::usage: return 2;
    case ErrorKind::config: return 3;
    case ErrorKind::io: return 4;
    case ErrorKind::parse: return 5;
    case ErrorKind::dimension: return 6;
    case ErrorKind::numeric: return 7;
    case ErrorKind::checkpoint: return 8;
  }
  return 1;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config file " + path);
  std::map<std::string, std::string> pairs;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(line.substr(0, eq)).empty()) {
      throw Error(ErrorKind::parse, path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    pairs[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return pairs;
}

TrainConfig train_config_from_pairs(const std::map<std::string, std::string>& pairs) {
  TrainConfig cfg;
  std::optional<double> lr_g, lr_d;
  for (const auto& [key, value] : pairs) {
    if (key == "mode") cfg.mode = parse_train_mode(value);
    else if (key == "model") cfg.model = value;
    else if (key == "lr_g") lr_g = to_double(key, value);
    else if (key == "lr_d") lr_d = to_double(key, value);
    else if (key == "g_updates_per_iter") cfg.g_updates_per_iter = static_cast<int>(to_int(key, value));
    else if (key == "d_updates_per_iter") cfg.d_updates_per_iter = static_cast<int>(to_int(key, value));
    else if (key == "batch_size") cfg.batch_size = to_size(key, value);
    else if (key == "eval_every") cfg.eval_every = to_int(key, value);
    else if (key == "eval_batch") cfg.eval_batch = to_size(key, value);
    else if (key == "grid_rows") cfg.grid_rows = to_size(key, value);
    else if (key == "grid_cols") cfg.grid_cols = to_size(key, value);
    else if (key == "max_iters") cfg.max_iters = to_int(key, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "clip_norm") cfg.clip_norm = value == "none" ? std::nullopt : std::optional(to_double(key, value));
    else if (key == "huber_delta") cfg.loss.huber_delta = to_double(key, value);
    else if (key == "real_label_target") cfg.loss.real_label_target = to_double(key, value);
    else if (key == "fm_w0") cfg.loss.feature_match_weight.w0 = to_double(key, value);
    else if (key == "fm_w_floor") cfg.loss.feature_match_weight.w_floor = to_double(key, value);
    else if (key == "fm_anneal_iters") cfg.loss.feature_match_weight.anneal_iters = to_int(key, value);
    else if (key == "fps") cfg.pipeline.fps = static_cast<int>(to_int(key, value));
    else if (key == "image_size") cfg.pipeline.image_size = to_size(key, value);
    else if (key == "keep_checkpoints") cfg.keep_checkpoints = to_size(key, value);
    else if (key == "prefetch_depth") cfg.prefetch_depth = to_size(key, value);
    else throw Error(ErrorKind::config, "unknown training setting '" + key + "'");
  }
  cfg.set_learning_rates(lr_g, lr_d);
  cfg.validate();
  return cfg;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regression GAN for continuous valence/arousal: data pipeline, training and checks",
               "vagan"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.get_formatter()->column_width(34);

  std::string out_dir, config_path;
  auto common = [&](CLI::App* sub) {
    sub->option_defaults()->always_capture_default();
    sub->add_option("--out", out_dir, "Output directory (default $" + std::string(kOutRootEnv) + "/<command>)");
    sub->add_option("--config", config_path, "File of 'key = value' settings; flags win");
  };

  auto* labels = app.add_subcommand("labels", "Convert annotation tracks to per-frame label files");
  std::string ann_dir, frames_dir, labels_dir, holdout_path, pre_counts, run_dir, checkpoint;
  int fps = 30;
  labels->add_option("--annotations", ann_dir, "Root of <video>/valence.txt and <video>/arousal.txt")->required();
  labels->add_option("--frames", frames_dir, "Root of <video>/<index>.png frame directories")->required();
  labels->add_option("--fps", fps, "Frames per second of the frame directories");
  common(labels);

  auto* stats = app.add_subcommand("stats", "Valence/arousal histogram and frame/label audit");
  std::size_t bins = 10;
  stats->add_option("--labels", labels_dir, "Label root")->required();
  stats->add_option("--frames", frames_dir, "Frame root; enables the audit");
  stats->add_option("--bins", bins, "Histogram bins per axis");
  stats->add_option("--pre-counts", pre_counts, "'<video> <count>' frames before face detection");
  common(stats);

  auto* split = app.add_subcommand("split", "Partition videos into train and test lists");
  split->add_option("--labels", labels_dir, "Label root")->required();
  split->add_option("--holdout", holdout_path, "Holdout id list (default: reference test videos)");
  common(split);

  auto* synth = app.add_subcommand("synth", "Write a procedural face dataset");
  SynthConfig synth_cfg;
  synth->add_option("--count", synth_cfg.count, "Number of frames");
  synth->add_option("--image-size", synth_cfg.image_size, "Frame size in pixels");
  synth->add_option("--frames-per-video", synth_cfg.frames_per_video, "Frames per video directory");
  synth->add_option("--test-videos", synth_cfg.test_videos, "Trailing videos listed in test_split.txt");
  synth->add_option("--seed", synth_cfg.seed, "Generator seed");
  common(synth);

  auto* train = app.add_subcommand("train", "Train (resuming from the newest checkpoint in --out)");
  DataArgs train_data;
  TrainArgs train_args;
  train_data.add_to(*train);
  train_args.add_to(*train);
  common(train);

  auto* eval = app.add_subcommand("eval", "Evaluate a run's checkpoint on the test split");
  DataArgs eval_data;
  std::size_t eval_batch = 1000;
  eval->add_option("--run", run_dir, "Training run directory")->required();
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file (default: newest in --run)");
  auto* eval_batch_opt = eval->add_option("--eval-batch", eval_batch, "Test frames to evaluate");
  eval_data.add_to(*eval);
  common(eval);

  auto* sample = app.add_subcommand("sample", "Write a sample grid and its VA predictions");
  sample->add_option("--run", run_dir, "Training run directory")->required();
  sample->add_option("--checkpoint", checkpoint, "Checkpoint file (default: newest in --run)");
  common(sample);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every layer and both networks");
  SuiteOptions suite;
  double tolerance = 1e-4;
  gradcheck->add_option("--size", suite.size, "Spatial size of the reduced networks (16 or 32)");
  gradcheck->add_option("--seed", suite.seed, "Seed of the random inputs and parameters");
  gradcheck->add_option("--step", suite.step, "Central-difference step");
  gradcheck->add_option("--entries", suite.network_entries, "Entries checked per network parameter (0 = all)");
  gradcheck->add_option("--tolerance", tolerance, "Maximum accepted relative error");
  common(gradcheck);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: usage: " << e.what() << "\n";
    return exit_code_for(ErrorKind::usage);
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (!config_path.empty()) apply_config_file(*sub, config_path);
    const std::string name = sub->get_name();
    const fs::path out_path = resolve_out(out_dir, name);

    // Validate before creating the run directory.
    std::optional<TrainConfig> train_cfg;
    std::optional<DataRoots> roots;
    if (sub == train) {
      train_cfg = train_args.resolve();
      roots = train_data.resolve();
    } else if (sub == eval) {
      roots = eval_data.resolve();
    }

    make_dir(out_path);
    Manifest manifest(out_path, name, options_of(*sub));
    if (train_cfg) manifest.doc()["train_config"] = pairs_json(train_cfg->to_key_values());
    manifest.flush();

    if (sub == labels) {
      cmd_labels(ann_dir, frames_dir, fps, out_path, manifest, out);
    } else if (sub == stats) {
      cmd_stats(labels_dir, frames_dir, bins, pre_counts, out_path, manifest, out);
    } else if (sub == split) {
      cmd_split(labels_dir, holdout_path, out_path, manifest, out);
    } else if (sub == synth) {
      const SynthSummary s = synth_dataset(synth_cfg, out_path);
      manifest.artifact(out_path / "frames");
      manifest.artifact(out_path / "labels");
      manifest.artifact(out_path / "test_split.txt");
      out << s.frames << " frames in " << s.video_ids.size() << " videos (" << s.test_ids.size()
          << " test)\n";
    } else if (sub == train) {
      cmd_train(*train_cfg, *roots, out_path, manifest, out);
    } else if (sub == eval) {
      std::optional<std::size_t> batch;
      if (eval_batch_opt->count() > 0) batch = eval_batch;
      cmd_eval(run_dir, checkpoint, *roots, batch, out_path, manifest, out);
    } else if (sub == sample) {
      cmd_sample(run_dir, checkpoint, out_path, manifest, out);
    } else if (sub == gradcheck) {
      cmd_gradcheck(suite, tolerance, out_path, manifest, out);
    }
    manifest.finish();
    return 0;
  } catch (const Error& e) {
    err << "error: " << error_kind_name(e.kind()) << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace vagan
