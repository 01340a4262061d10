// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "vagan/annotation.hpp"
#include "vagan/error.hpp"
#include "vagan/gradcheck_suite.hpp"
#include "vagan/labels.hpp"
#include "vagan/losses.hpp"
#include "vagan/synth.hpp"
#include "vagan/trainer.hpp"

namespace fs = std::filesystem;
using namespace vagan;

namespace {

constexpr double kCccTolerance = 1e-12;
constexpr double kCccSeconds = 5.0;
constexpr double kHuberTolerance = 1e-12;
constexpr double kGradTolerance = 1e-4;
constexpr double kGradSeconds = 120.0;
constexpr double kInterpTolerance = 1e-12;
constexpr double kRoundTripTolerance = 1e-6;
constexpr double kSupervisedTarget = 0.5;
constexpr double kPixelSpan = 0.1 * 255.0;
constexpr double kRealAccuracy = 0.9;
constexpr double kEndToEndSeconds = 45.0 * 60.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v, const char* format = "%.3g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string without_wall_ms(const std::string& csv) {
  std::istringstream in(csv);
  std::string out;
  for (std::string line; std::getline(in, line);) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

// --- oracles -----------------------------------------------------------------

long double ccc_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const long double n = static_cast<long double>(x.size());
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  long double vx = 0, vy = 0, cxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
    cxy += (x[i] - mx) * (y[i] - my);
  }
  vx /= n;
  vy /= n;
  cxy /= n;
  return 2 * cxy / (vx + vy + (mx - my) * (mx - my));
}

double huber_oracle(double a, double d) {
  return std::abs(a) <= d ? a * a / 2 : d * (std::abs(a) - d / 2);
}

double interp_oracle(double x, const std::vector<double>& xp, const std::vector<double>& fp) {
  if (x <= xp.front()) return fp.front();
  if (x >= xp.back()) return fp.back();
  std::size_t i = 0;
  while (!(x >= xp[i] && x < xp[i + 1])) ++i;
  return fp[i] + (x - xp[i]) / (xp[i + 1] - xp[i]) * (fp[i + 1] - fp[i]);
}

AnnotationTrack parse_text(const std::string& text, AffectDimension dim) {
  std::istringstream in(text);
  return parse_annotation_file(in, dim);
}

// --- criteria ----------------------------------------------------------------

Outcome ccc_criterion() {
  const auto start = Clock::now();
  Rng rng(2024);
  double worst = 0.0;
  bool exact = true;
  for (int pair = 0; pair < 1000; ++pair) {
    const auto n = static_cast<std::size_t>(uniform_int(rng, 2, 64));
    const double scale = std::pow(10.0, uniform(rng, -3.0, 3.0));
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = uniform(rng, -1.0, 1.0) * scale;
      y[i] = 0.6 * x[i] + uniform(rng, -1.0, 1.0) * scale + uniform(rng, -0.2, 0.2) * scale;
    }
    const long double ref = ccc_oracle(x, y);
    worst = std::max(worst, static_cast<double>(std::abs(ccc(x, y).ccc - ref)));
    // Identical and constant-prediction pairs of the same length.
    exact = exact && ccc(x, x).ccc == 1.0;
    const std::vector<double> constant(n, uniform(rng, -1.0, 1.0) * scale);
    exact = exact && ccc(constant, y).ccc == 0.0;
  }
  const double secs = seconds_since(start);
  return {worst <= kCccTolerance && exact && secs < kCccSeconds,
          "max |err| " + num(worst) + ", exact 1/0 cases " + (exact ? "ok" : "violated") + ", " +
              num(secs, "%.2f") + " s"};
}

Outcome huber_criterion() {
  Rng rng(7);
  double worst = 0.0, jump = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double d = uniform(rng, 0.05, 5.0);
    const double a = uniform(rng, -4.0 * d, 4.0 * d);
    worst = std::max(worst, std::abs(huber(a, d) - huber_oracle(a, d)));
  }
  for (int i = 0; i < 1000; ++i) {
    const double d = uniform(rng, 0.05, 5.0);
    for (double edge : {d, -d}) {
      const double inside = huber(edge, d);
      const double outside = huber(std::nextafter(edge, edge * 2.0), d);
      jump = std::max(jump, std::abs(outside - inside));
      // Both branches agree on the boundary itself.
      jump = std::max(jump, std::abs(d * (std::abs(edge) - d / 2) - edge * edge / 2));
    }
  }
  return {worst <= kHuberTolerance && jump <= kHuberTolerance,
          "max |err| " + num(worst) + " at 1e4 points, boundary gap " + num(jump)};
}

Outcome gradient_criterion() {
  const auto start = Clock::now();
  SuiteOptions opts;
  opts.size = 16;
  const auto results = run_gradcheck_suite(opts);
  double worst = 0.0;
  std::string worst_name;
  bool saw_d = false, saw_g = false;
  for (const auto& r : results) {
    if (r.report.max_rel_error() >= worst) {
      worst = r.report.max_rel_error();
      worst_name = r.name;
    }
    saw_d = saw_d || r.name.find("discriminator") != std::string::npos;
    saw_g = saw_g || r.name.find("generator") != std::string::npos;
  }
  const double secs = seconds_since(start);
  return {worst < kGradTolerance && saw_d && saw_g && secs < kGradSeconds,
          std::to_string(results.size()) + " checks, max rel err " + num(worst) + " (" + worst_name +
              "), " + num(secs, "%.1f") + " s"};
}

Outcome interpolation_criterion() {
  double worst = 0.0;
  for (const char* text : {"0.010 0\n0.541 -408\n0.556 -432\n0.576 -448\n0.587 -448\n",
                           "0.016 0\n0.037 0\n0.116 0\n0.176 -37\n0.218 -116\n"}) {
    const auto t = parse_text(text, AffectDimension::valence);
    std::vector<double> xp, fp;
    for (const auto& s : t.samples) xp.push_back(s.seconds * 30), fp.push_back(s.value);
    const auto frames = interpolate_to_frames(t, 40, 30);
    for (std::size_t f = 0; f < frames.size(); ++f) {
      worst = std::max(worst, std::abs(frames[f] - interp_oracle(static_cast<double>(f + 1), xp, fp)));
    }
  }

  Rng rng(89);
  double round_trip = 0.0;
  auto session = [&rng] {
    std::string text;
    std::vector<double> xp, fp;
    int millis = static_cast<int>(uniform_int(rng, 0, 50));
    const auto n = uniform_int(rng, 2, 80);
    char line[64];
    for (std::int64_t i = 0; i < n; ++i) {
      millis += static_cast<int>(uniform_int(rng, 10, 60));
      const auto v = static_cast<int>(uniform_int(rng, -1000, 1000));
      std::snprintf(line, sizeof line, "%.3f %d\n", millis / 1000.0, v);
      text += line;
      xp.push_back(millis / 1000.0 * 30);
      fp.push_back(v);
    }
    return std::make_tuple(text, xp, fp);
  };
  for (int trial = 0; trial < 100; ++trial) {
    const auto [vt, vx, vf] = session();
    const auto [at, ax, af] = session();
    const auto total = uniform_int(rng, 10, 200);
    std::vector<std::int64_t> detected;
    for (std::int64_t f = 1; f <= total; ++f) {
      if (uniform01(rng) < 0.9 || f == total) detected.push_back(f);
    }
    const auto table = build_label_table("video" + std::to_string(trial),
                                         parse_text(vt, AffectDimension::valence),
                                         parse_text(at, AffectDimension::arousal), detected, 30);
    std::ostringstream out;
    write_label_table(out, table);
    std::istringstream in(out.str());
    const auto back = read_label_table(in, table.video_id);
    if (back.rows.size() != detected.size()) return {false, "row count mismatch"};
    for (std::size_t i = 0; i < detected.size(); ++i) {
      const auto f = static_cast<double>(detected[i]);
      round_trip = std::max(round_trip, std::abs(back.rows[i].valence - interp_oracle(f, vx, vf) / 1000));
      round_trip = std::max(round_trip, std::abs(back.rows[i].arousal - interp_oracle(f, ax, af) / 1000));
    }
  }
  return {worst <= kInterpTolerance && round_trip <= kRoundTripTolerance,
          "video89 max |err| " + num(worst) + ", round trip max |err| " + num(round_trip) +
              " over 100 tracks"};
}

DataRoots synth_roots(const fs::path& dir, const SynthSummary& s) {
  return DataRoots{dir / "frames", dir / "labels", s.test_ids};
}

TrainConfig tiny_run_config() {
  TrainConfig cfg;
  cfg.model = "tiny16";
  cfg.pipeline.image_size = 16;
  cfg.batch_size = 16;
  cfg.eval_batch = 100;
  cfg.seed = 3;
  return cfg;
}

DataRoots tiny_corpus(const fs::path& dir) {
  if (!fs::exists(dir / "test_split.txt")) {
    SynthConfig sc;
    sc.count = 400;
    sc.image_size = 16;
    sc.frames_per_video = 50;
    sc.test_videos = 2;
    sc.seed = 3;
    return synth_roots(dir, synth_dataset(sc, dir));
  }
  return DataRoots{dir / "frames", dir / "labels", read_id_list(dir / "test_split.txt")};
}

Outcome composition_criterion(const fs::path& work) {
  TrainConfig cfg = tiny_run_config();
  cfg.max_iters = 120;
  train_loop(cfg, tiny_corpus(work / "tiny_data"), work / "composition");
  const auto rows = read_csv(work / "composition" / "progress.csv");
  std::size_t violations = 0;
  for (const auto& r : rows) {
    const double ld = std::stod(r[1]), lsup = std::stod(r[2]), lunsup = std::stod(r[3]);
    const double lg = std::stod(r[4]), lg1 = std::stod(r[5]), lg2 = std::stod(r[6]), w = std::stod(r[7]);
    if (ld != lsup + lunsup || lg != lg1 + w * lg2) ++violations;
  }
  return {rows.size() == 120 && violations == 0,
          std::to_string(rows.size()) + " logged iterations, " + std::to_string(violations) +
              " identity violations"};
}

Outcome determinism_criterion(const fs::path& work) {
  const DataRoots data = tiny_corpus(work / "tiny_data");
  TrainConfig cfg = tiny_run_config();
  cfg.max_iters = 100;
  cfg.eval_every = 30;
  train_loop(cfg, data, work / "det_a");
  train_loop(cfg, data, work / "det_b");
  TrainConfig half = cfg;
  half.max_iters = 50;
  train_loop(half, data, work / "det_resume");
  const TrainSummary resumed = train_loop(cfg, data, work / "det_resume");

  const std::string a = without_wall_ms(slurp(work / "det_a" / "progress.csv"));
  const bool rerun = a == without_wall_ms(slurp(work / "det_b" / "progress.csv"));
  const std::string final = checkpoint_file_name(100);
  const bool resume_log = a == without_wall_ms(slurp(work / "det_resume" / "progress.csv"));
  const bool resume_state = slurp(work / "det_a" / final) == slurp(work / "det_resume" / final) &&
                            !slurp(work / "det_a" / final).empty();
  const bool resumed_at_50 = resumed.resumed_from && *resumed.resumed_from == 50;
  return {rerun && resume_log && resume_state && resumed_at_50,
          std::string("rerun progress ") + (rerun ? "identical" : "differs") + ", resume@50 log " +
              (resume_log ? "identical" : "differs") + ", checkpoint@100 " +
              (resume_state ? "bitwise equal" : "differs")};
}

struct EndToEnd {
  bool ran = false;
  std::string error;
  double seconds = 0.0;
  double supervised_loss = 1.0;
  bool gan_finite = false;
  double pixel_span = 0.0;
  double rf_acc_real = 0.0;
  fs::path gan_dir;
};

TrainConfig e2e_config(TrainMode mode) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.model = "desk";
  cfg.batch_size = 16;
  cfg.max_iters = 2000;
  cfg.eval_every = 60;
  cfg.eval_batch = 1000;
  cfg.seed = 1;
  // Small-dataset generator update rate.
  cfg.g_updates_per_iter = 1;
  return cfg;
}

// Mean 1 - CCC of the discriminator over every given frame.
double mean_loss_over(const Trainer& t, const std::vector<FrameRecord>& frames, const PipelineConfig& p) {
  std::vector<double> pv, pa, tv, ta;
  for (std::size_t first = 0; first < frames.size(); first += 500) {
    const std::size_t count = std::min<std::size_t>(500, frames.size() - first);
    const Batch b = load_frame_batch(std::span(frames).subspan(first, count), p);
    const Tensor out = t.predict(b.images);
    for (std::size_t i = 0; i < b.size(); ++i) {
      pv.push_back(out[i * 3]);
      pa.push_back(out[i * 3 + 1]);
      tv.push_back(b.labels[i * 2]);
      ta.push_back(b.labels[i * 2 + 1]);
    }
  }
  return ((1.0 - ccc(pv, tv).ccc) + (1.0 - ccc(pa, ta).ccc)) / 2.0;
}

EndToEnd run_end_to_end(const fs::path& work) {
  EndToEnd r;
  const auto start = Clock::now();
  try {
    // 2000 training images plus 1000 held-out frames for the evaluation batch.
    SynthConfig sc;
    sc.count = 3000;
    sc.image_size = 64;
    sc.frames_per_video = 100;
    sc.test_videos = 10;
    sc.seed = 1;
    const fs::path data_dir = work / "synth64";
    const DataRoots data = synth_roots(data_dir, synth_dataset(sc, data_dir));

    const TrainConfig sup_cfg = e2e_config(TrainMode::supervised_only);
    const TrainSummary sup = train_loop(sup_cfg, data, work / "supervised_only");
    Trainer sup_trainer(sup_cfg);
    sup_trainer.restore(load_checkpoint(sup.last_checkpoint, sup_cfg.hash()));
    const CorpusSplit split = split_corpus(load_corpus(data.frames, data.labels), data.test_ids);
    r.supervised_loss = mean_loss_over(sup_trainer, split.train.frames, sup_cfg.pipeline);
    std::cerr << "supervised_only: training mean 1-ccc " << r.supervised_loss << " after "
              << num(seconds_since(start), "%.0f") << " s\n";

    const TrainConfig gan_cfg = e2e_config(TrainMode::gan);
    r.gan_dir = work / "gan";
    const TrainSummary gan = train_loop(gan_cfg, data, r.gan_dir);
    r.gan_finite = gan.steps.size() == 2000;
    for (const auto& s : gan.steps) {
      for (double v : {s.loss_d, s.loss_sup, s.loss_unsup, s.loss_g, s.loss_g1, s.loss_g2}) {
        r.gan_finite = r.gan_finite && std::isfinite(v);
      }
    }
    Trainer gan_trainer(gan_cfg);
    gan_trainer.restore(load_checkpoint(gan.last_checkpoint, gan_cfg.hash()));
    const GridResult grid = gan_trainer.sample_and_save_grid(r.gan_dir / "samples");
    const auto [lo, hi] = std::minmax_element(grid.grid.pixels.begin(), grid.grid.pixels.end());
    r.pixel_span = static_cast<double>(*hi) - static_cast<double>(*lo);
    const Batch eval = load_frame_batch(select_eval_frames(split.test.frames, gan_cfg), gan_cfg.pipeline);
    r.rf_acc_real = gan_trainer.evaluate(eval).rf_acc_real;
    r.ran = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.seconds = seconds_since(start);
  return r;
}

Outcome end_to_end_criterion(const EndToEnd& r) {
  if (!r.ran) return {false, "run failed: " + r.error};
  const bool pass = r.supervised_loss <= kSupervisedTarget && r.gan_finite && r.pixel_span > kPixelSpan &&
                    r.rf_acc_real >= kRealAccuracy && r.seconds <= kEndToEndSeconds;
  return {pass, "supervised_only training 1-ccc " + num(r.supervised_loss, "%.4f") + ", gan losses " +
                    (r.gan_finite ? "finite" : "NOT finite") + ", grid span " + num(r.pixel_span, "%.0f") +
                    ", rf_acc_real " + num(r.rf_acc_real, "%.3f") + ", " + num(r.seconds / 60.0, "%.1f") +
                    " min"};
}

Outcome protocol_criterion(const EndToEnd& r) {
  if (!r.ran) return {false, "end-to-end run unavailable"};
  const auto evals = read_csv(r.gan_dir / "eval.csv");
  bool cadence = evals.size() == 2000 / 60;
  for (std::size_t i = 0; i < evals.size() && cadence; ++i) {
    cadence = std::stoll(evals[i][0]) == static_cast<long long>(60 * (i + 1)) && evals[i][5] == "1000";
  }
  const auto progress = read_csv(r.gan_dir / "progress.csv");
  bool ratio = progress.size() == 2000;
  for (const auto& row : progress) ratio = ratio && std::stod(row[10]) / std::stod(row[11]) == 0.5;
  bool grids = !evals.empty();
  for (const auto& row : evals) {
    const fs::path stem = r.gan_dir / "samples" / ("iter_" + row[0]);
    Image img;
    try {
      img = read_png(stem.string() + ".png");
    } catch (const Error&) {
      grids = false;
      break;
    }
    const std::string txt = slurp(stem.string() + ".txt");
    grids = grids && img.width == 512 && img.height == 512 &&
            std::count(txt.begin(), txt.end(), '\n') == 64;
  }
  return {cadence && ratio && grids,
          std::to_string(evals.size()) + " evals every 60 with 1000 samples " + (cadence ? "ok" : "FAILED") +
              ", lr_d/lr_g " + (ratio ? "0.5 throughout" : "VIOLATED") + ", 512x512 grids with 64-row sidecars " +
              (grids ? "ok" : "FAILED")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string work = "acceptance_work";
  std::set<int> only;
  app.add_option("--work", work, "Scratch directory (cleared first)");
  app.add_option("--only", only, "Run only these criteria (1-8)");
  CLI11_PARSE(app, argc, argv);

  const fs::path dir = work;
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto wanted = [&](int id) { return only.empty() || only.count(id) > 0; };

  EndToEnd e2e;
  if (wanted(6) || wanted(8)) e2e = run_end_to_end(dir);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"ccc-oracle", ccc_criterion},
      {"huber-piecewise", huber_criterion},
      {"gradient-checks", gradient_criterion},
      {"interpolation-pipeline", interpolation_criterion},
      {"loss-composition", [&] { return composition_criterion(dir); }},
      {"synthetic-end-to-end", [&] { return end_to_end_criterion(e2e); }},
      {"determinism-resume", [&] { return determinism_criterion(dir); }},
      {"protocol-conformance", [&] { return protocol_criterion(e2e); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!wanted(static_cast<int>(i + 1))) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << i + 1 << " " << criteria[i].first << ": " << o.detail
              << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
