#include "vagan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "vagan/error.hpp"

namespace vagan {

namespace fs = std::filesystem;

namespace {

enum Stream : std::uint64_t {
  kGeneratorInit = 1,
  kDiscriminatorInit,
  kNoise,
  kDropout,
  kSampler,
  kEvalSelect,
  kGrid,
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void require_finite(double v, const char* what, std::int64_t iter) {
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::numeric,
                std::string(what) + " is not finite at iteration " + std::to_string(iter));
  }
}

Tensor rows_of(const Tensor& t, std::size_t first, std::size_t count) {
  Shape shape = t.shape();
  const std::size_t per_row = t.size() / shape[0];
  shape[0] = count;
  const auto begin = t.values().begin() + static_cast<std::ptrdiff_t>(first * per_row);
  return Tensor(shape, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count * per_row)));
}

std::vector<double> column(const Tensor& t, std::size_t col) {
  const std::size_t cols = t.dim(1);
  std::vector<double> out(t.dim(0));
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = t[r * cols + col];
  return out;
}

constexpr std::size_t kInferenceChunk = 100;

}  // namespace

std::string train_mode_name(TrainMode mode) {
  return mode == TrainMode::gan ? "gan" : "supervised_only";
}

TrainMode parse_train_mode(const std::string& name) {
  if (name == "gan") return TrainMode::gan;
  if (name == "supervised_only") return TrainMode::supervised_only;
  throw Error(ErrorKind::config, "unknown training mode '" + name + "' (gan|supervised_only)");
}

ModelSpec model_preset(const std::string& name) {
  if (name == "paper") return ModelSpec::paper();
  if (name == "desk") return ModelSpec::desk();
  if (name == "tiny16") return ModelSpec::tiny(16);
  if (name == "tiny32") return ModelSpec::tiny(32);
  throw Error(ErrorKind::config, "unknown model preset '" + name + "' (paper|desk|tiny16|tiny32)");
}

void TrainConfig::set_learning_rates(std::optional<double> lr_g_value,
                                     std::optional<double> lr_d_value) {
  if (lr_g_value && lr_d_value && *lr_d_value != *lr_g_value / 2.0) {
    throw Error(ErrorKind::config, "lr_d must be half of lr_g");
  }
  if (lr_g_value) {
    lr_g = *lr_g_value;
  } else if (lr_d_value) {
    lr_g = *lr_d_value * 2.0;
  }
}

void TrainConfig::validate() const {
  if (!(lr_g > 0.0) || !std::isfinite(lr_g)) throw Error(ErrorKind::config, "lr_g must be positive");
  if (g_updates_per_iter < 1) throw Error(ErrorKind::config, "g_updates_per_iter must be at least 1");
  if (d_updates_per_iter != 1) throw Error(ErrorKind::config, "d_updates_per_iter must be 1");
  if (batch_size < 2) throw Error(ErrorKind::config, "batch_size must be at least 2");
  if (eval_every < 1) throw Error(ErrorKind::config, "eval_every must be at least 1");
  if (eval_batch < 2) throw Error(ErrorKind::config, "eval_batch must be at least 2");
  if (grid_rows == 0 || grid_cols == 0) throw Error(ErrorKind::config, "grid must be non-empty");
  if (grid_rows * grid_cols < 2) throw Error(ErrorKind::config, "grid needs at least two samples");
  if (max_iters < 0) throw Error(ErrorKind::config, "max_iters must be non-negative");
  if (clip_norm && !(*clip_norm > 0.0)) throw Error(ErrorKind::config, "clip_norm must be positive");
  if (keep_checkpoints < 1) throw Error(ErrorKind::config, "keep_checkpoints must be at least 1");
  loss.validate();
  pipeline.validate();
  const ModelSpec spec = model_spec();
  spec.validate();
  if (pipeline.image_size != spec.discriminator.input_size) {
    throw Error(ErrorKind::config, "image_size " + std::to_string(pipeline.image_size) +
                                       " does not match model input size " +
                                       std::to_string(spec.discriminator.input_size));
  }
}

std::vector<std::pair<std::string, std::string>> TrainConfig::to_key_values() const {
  return {
      {"mode", train_mode_name(mode)},
      {"model", model},
      {"lr_g", fmt(lr_g)},
      {"lr_d", fmt(lr_d())},
      {"g_updates_per_iter", std::to_string(g_updates_per_iter)},
      {"d_updates_per_iter", std::to_string(d_updates_per_iter)},
      {"batch_size", std::to_string(batch_size)},
      {"eval_every", std::to_string(eval_every)},
      {"eval_batch", std::to_string(eval_batch)},
      {"grid_rows", std::to_string(grid_rows)},
      {"grid_cols", std::to_string(grid_cols)},
      {"max_iters", std::to_string(max_iters)},
      {"seed", std::to_string(seed)},
      {"clip_norm", clip_norm ? fmt(*clip_norm) : "none"},
      {"huber_delta", fmt(loss.huber_delta)},
      {"real_label_target", fmt(loss.real_label_target)},
      {"fm_w0", fmt(loss.feature_match_weight.w0)},
      {"fm_w_floor", fmt(loss.feature_match_weight.w_floor)},
      {"fm_anneal_iters", std::to_string(loss.feature_match_weight.anneal_iters)},
      {"fps", std::to_string(pipeline.fps)},
      {"image_size", std::to_string(pipeline.image_size)},
      {"keep_checkpoints", std::to_string(keep_checkpoints)},
      {"prefetch_depth", std::to_string(prefetch_depth)},
  };
}

std::uint64_t TrainConfig::hash() const {
  std::string canonical;
  for (const auto& [key, value] : to_key_values()) {
    if (key == "max_iters" || key == "eval_every" || key == "keep_checkpoints" ||
        key == "prefetch_depth" || key == "fps") {
      continue;
    }
    canonical += key + "=" + value + "\n";
  }
  return fnv1a64(canonical);
}

Trainer::Trainer(TrainConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  spec_ = cfg_.model_spec();
  Rng g_init(derive_seed(cfg_.seed, kGeneratorInit));
  Rng d_init(derive_seed(cfg_.seed, kDiscriminatorInit));
  g_ = init_generator(spec_.generator, g_init);
  d_ = init_discriminator(spec_.discriminator, d_init);
  noise_rng_.seed(derive_seed(cfg_.seed, kNoise));
  dropout_rng_.seed(derive_seed(cfg_.seed, kDropout));
}

StepRecord Trainer::train_step(const Batch& batch) {
  const std::size_t b = batch.size();
  if (b < 2) throw Error(ErrorKind::dimension, "training batch needs at least two frames");
  const std::int64_t t = iteration_;
  StepRecord rec;
  rec.iter = t + 1;
  rec.lr_d = cfg_.lr_d();
  rec.lr_g = cfg_.lr_g;
  rec.targets = realness_targets(cfg_.loss);

  AdamConfig adam_d;
  adam_d.learning_rate = cfg_.lr_d();
  adam_d.clip_norm = cfg_.clip_norm;
  AdamConfig adam_g = adam_d;
  adam_g.learning_rate = cfg_.lr_g;

  const bool gan = cfg_.mode == TrainMode::gan;
  const auto& gs = spec_.generator;
  const auto& ds = spec_.discriminator;

  // Discriminator update.
  {
    d_.zero_grad();
    Graph graph;
    ForwardOptions real_opts;
    Var total;
    if (gan) {
      // Real and fake frames share one batch so BN statistics span both.
      ForwardOptions frozen;
      frozen.trainable = false;
      frozen.update_running = false;
      Var z = graph.constant(sample_noise(noise_rng_, b, gs.noise_dim));
      Var fake = generator_forward(z, g_, gs, frozen);
      Var joint = concat_batch(graph.constant(batch.images), graph.constant(fake.value()));
      Var out = discriminator_forward(joint, d_, ds, real_opts, dropout_rng_);
      Var out_real = slice_batch(out, 0, b);
      Var sup = supervised_loss(slice_columns(out_real, 0, 2), batch.labels);
      rec.loss_sup = sup.value().item();
      Var s_real = slice_columns(out_real, 2, 1);
      Var s_fake = slice_columns(slice_batch(out, b, b), 2, 1);
      Var unsup = d_unsupervised_loss(s_real, s_fake, rec.targets);
      rec.loss_unsup = unsup.value().item();
      rec.rf_acc_real = rf_accuracy(s_real.value().values(), true);
      rec.rf_acc_fake = rf_accuracy(s_fake.value().values(), false);
      total = add(sup, unsup);
    } else {
      Var out_real =
          discriminator_forward(graph.constant(batch.images), d_, ds, real_opts, dropout_rng_);
      total = supervised_loss(slice_columns(out_real, 0, 2), batch.labels);
      rec.loss_sup = total.value().item();
      rec.rf_acc_real = rf_accuracy(slice_columns(out_real, 2, 1).value().values(), true);
    }
    const ComposedLosses composed = compose_losses(rec.loss_sup, rec.loss_unsup, 0.0, 0.0, t, cfg_.loss);
    rec.loss_d = gan ? total.value().item() : composed.discriminator;
    require_finite(rec.loss_d, "discriminator loss", rec.iter);
    graph.backward(total);
    adam_step(d_, adam_d);
    d_.zero_grad();
  }

  rec.weight = cfg_.loss.feature_match_weight.weight(t);
  if (gan) {
    for (int k = 0; k < cfg_.g_updates_per_iter; ++k) {
      g_.zero_grad();
      Graph graph;
      Var z = graph.constant(sample_noise(noise_rng_, b, gs.noise_dim));
      Var fake = generator_forward(z, g_, gs, ForwardOptions{});
      ForwardOptions critic;
      critic.trainable = false;
      Var joint = concat_batch(graph.constant(batch.images), fake);
      Var out = discriminator_forward(joint, d_, ds, critic, dropout_rng_);
      Var g1 = g_adversarial_loss(slice_columns(slice_batch(out, b, b), 2, 1));
      Var g2 = feature_matching_loss(batch.images, fake, cfg_.loss.huber_delta);
      Var total = add(g1, scale(g2, rec.weight));
      rec.loss_g1 = g1.value().item();
      rec.loss_g2 = g2.value().item();
      rec.loss_g = total.value().item();
      require_finite(rec.loss_g, "generator loss", rec.iter);
      graph.backward(total);
      adam_step(g_, adam_g);
      g_.zero_grad();
      ++rec.generator_steps;
    }
  }
  ++iteration_;
  return rec;
}

Tensor Trainer::predict(const Tensor& images) const {
  if (images.rank() != 4) throw Error(ErrorKind::dimension, "predict: images must be [N,H,W,3]");
  ParameterSet d = d_;
  Rng unused(0);
  ForwardOptions opts;
  opts.mode = Mode::infer;
  opts.trainable = false;
  const std::size_t n = images.dim(0);
  Tensor out({n, 3});
  for (std::size_t first = 0; first < n; first += kInferenceChunk) {
    const std::size_t count = std::min(kInferenceChunk, n - first);
    Graph graph;
    Var y = discriminator_forward(graph.constant(rows_of(images, first, count)), d,
                                  spec_.discriminator, opts, unused);
    std::copy(y.value().values().begin(), y.value().values().end(), out.data() + first * 3);
  }
  return out;
}

EvalRecord Trainer::evaluate(const Batch& test_batch) const {
  const std::size_t n = test_batch.size();
  if (n < 2) throw Error(ErrorKind::dimension, "evaluation needs a test batch of at least two frames");
  const Tensor out = predict(test_batch.images);
  EvalRecord rec;
  rec.iter = iteration_;
  rec.samples = n;
  rec.ccc_valence = ccc(column(out, 0), column(test_batch.labels, 0)).ccc;
  rec.ccc_arousal = ccc(column(out, 1), column(test_batch.labels, 1)).ccc;
  rec.loss_valence = 1.0 - rec.ccc_valence;
  rec.loss_arousal = 1.0 - rec.ccc_arousal;
  rec.loss_mean = (rec.loss_valence + rec.loss_arousal) / 2.0;
  rec.rf_acc_real = rf_accuracy(column(out, 2), true);
  rec.timestamp = utc_timestamp();
  return rec;
}

GridResult Trainer::sample_and_save_grid(const fs::path& out_dir) const {
  const std::size_t count = cfg_.grid_rows * cfg_.grid_cols;
  const std::size_t size = spec_.generator.output_size();
  Rng rng(derive_seed(cfg_.seed, kGrid, static_cast<std::uint64_t>(iteration_)));
  ParameterSet g = g_;
  ForwardOptions opts;
  opts.mode = Mode::infer;
  opts.trainable = false;
  Tensor fakes;
  {
    Graph graph;
    fakes = generator_forward(graph.constant(sample_noise(rng, count, spec_.generator.noise_dim)), g,
                              spec_.generator, opts)
                .value();
  }
  GridResult result;
  const std::size_t per = size * size * 3;
  for (std::size_t i = 0; i < count; ++i) {
    result.tiles.push_back(unit_range_to_image(
        std::span<const double>(fakes.data() + i * per, per), size, size));
  }
  result.grid = tile_grid(result.tiles, cfg_.grid_rows, cfg_.grid_cols);
  const Tensor out = predict(fakes);
  result.predictions = Tensor({count, 2});
  for (std::size_t i = 0; i < count; ++i) {
    result.predictions[i * 2] = out[i * 3];
    result.predictions[i * 2 + 1] = out[i * 3 + 1];
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + out_dir.string() + ": " + ec.message());
  const std::string stem = "iter_" + std::to_string(iteration_);
  result.image_path = out_dir / (stem + ".png");
  result.predictions_path = out_dir / (stem + ".txt");
  write_png(result.image_path, result.grid);
  std::ofstream txt(result.predictions_path, std::ios::binary);
  if (!txt) throw Error(ErrorKind::io, "cannot write " + result.predictions_path.string());
  for (std::size_t i = 0; i < count; ++i) {
    char line[64];
    std::snprintf(line, sizeof line, "%.6f %.6f\n", result.predictions[i * 2],
                  result.predictions[i * 2 + 1]);
    txt << line;
  }
  if (!txt) throw Error(ErrorKind::io, "short write to " + result.predictions_path.string());
  return result;
}

CheckpointState Trainer::snapshot() const {
  CheckpointState s;
  s.iteration = iteration_;
  s.config_hash = cfg_.hash();
  s.generator = g_;
  s.discriminator = d_;
  s.rng_states["noise"] = save_rng(noise_rng_);
  s.rng_states["dropout"] = save_rng(dropout_rng_);
  return s;
}

void Trainer::restore(CheckpointState state) {
  if (state.config_hash != cfg_.hash()) {
    throw Error(ErrorKind::checkpoint, "checkpoint was written with a different configuration");
  }
  auto same_layout = [](const ParameterSet& a, const ParameterSet& b) {
    if (a.parameters().size() != b.parameters().size() || a.buffers().size() != b.buffers().size()) {
      return false;
    }
    for (const auto& [name, p] : a.parameters()) {
      if (!b.contains(name) || b.at(name).value.shape() != p.value.shape()) return false;
    }
    for (const auto& [name, t] : a.buffers()) {
      if (!b.buffers().contains(name) || b.buffer(name).shape() != t.shape()) return false;
    }
    return true;
  };
  if (!same_layout(state.generator, g_) || !same_layout(state.discriminator, d_)) {
    throw Error(ErrorKind::checkpoint, "checkpoint parameters do not match the model");
  }
  auto noise = state.rng_states.find("noise");
  auto drop = state.rng_states.find("dropout");
  if (noise == state.rng_states.end() || drop == state.rng_states.end()) {
    throw Error(ErrorKind::checkpoint, "checkpoint lacks random engine states");
  }
  Rng noise_rng, dropout_rng;
  load_rng(noise_rng, noise->second);
  load_rng(dropout_rng, drop->second);
  g_ = std::move(state.generator);
  d_ = std::move(state.discriminator);
  noise_rng_ = noise_rng;
  dropout_rng_ = dropout_rng;
  iteration_ = state.iteration;
}

std::string format_progress_row(const StepRecord& r) {
  std::string row = std::to_string(r.iter);
  for (double v : {r.loss_d, r.loss_sup, r.loss_unsup, r.loss_g, r.loss_g1, r.loss_g2, r.weight,
                   r.rf_acc_real, r.rf_acc_fake, r.lr_d, r.lr_g}) {
    row += "," + fmt(v);
  }
  char wall[32];
  std::snprintf(wall, sizeof wall, ",%.3f", r.wall_ms);
  return row + wall;
}

std::string format_eval_row(const EvalRecord& r) {
  std::string row = std::to_string(r.iter);
  for (double v : {r.loss_valence, r.loss_arousal, r.loss_mean, r.rf_acc_real}) row += "," + fmt(v);
  return row + "," + std::to_string(r.samples) + "," + r.timestamp;
}

std::vector<FrameRecord> select_eval_frames(const std::vector<FrameRecord>& test,
                                            const TrainConfig& cfg) {
  if (test.empty()) throw Error(ErrorKind::config, "test set is empty");
  const std::size_t n = std::min(cfg.eval_batch, test.size());
  if (n < 2) throw Error(ErrorKind::config, "test set needs at least two frames");
  std::vector<std::size_t> idx(test.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(cfg.seed, kEvalSelect));
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(
        uniform_int(rng, static_cast<std::int64_t>(i), static_cast<std::int64_t>(idx.size() - 1)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<FrameRecord> out;
  for (std::size_t i : idx) out.push_back(test[i]);
  return out;
}

namespace {

// Keeps the header and data rows whose leading iteration is <= last.
void truncate_log(const fs::path& path, const char* header, std::int64_t last) {
  std::vector<std::string> keep{header};
  if (std::ifstream in(path); in) {
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (std::stoll(line.substr(0, line.find(','))) <= last) keep.push_back(line);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  for (const auto& l : keep) out << l << '\n';
}

class CsvLog {
 public:
  explicit CsvLog(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::app) {
    if (!out_) throw Error(ErrorKind::io, "cannot append to " + path.string());
  }
  void append(const std::string& row) {
    out_ << row << '\n';
    out_.flush();
    if (!out_) throw Error(ErrorKind::io, "write failed on " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

}  // namespace

TrainSummary train_loop(const TrainConfig& cfg, const DataRoots& data, const fs::path& run_dir,
                        const StepObserver& observer) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create run directory " + run_dir.string());

  const Corpus corpus = load_corpus(data.frames, data.labels);
  const CorpusSplit split =
      split_corpus(corpus, data.test_ids.empty() ? default_holdout_ids() : data.test_ids);
  if (split.train.frames.empty()) throw Error(ErrorKind::config, "training set is empty");

  TrainSummary summary;
  summary.train_frames = split.train.frames.size();
  summary.test_frames = split.test.frames.size();
  if (cfg.eval_batch > split.test.frames.size()) {
    std::cerr << "warning: eval_batch " << cfg.eval_batch << " exceeds the test set; using "
              << split.test.frames.size() << " frames\n";
  }
  const std::vector<FrameRecord> eval_frames = select_eval_frames(split.test.frames, cfg);
  const Batch eval_batch = load_frame_batch(eval_frames, cfg.pipeline);
  summary.eval_samples = eval_batch.size();

  Trainer trainer(cfg);
  const fs::path progress_path = run_dir / "progress.csv";
  const fs::path eval_path = run_dir / "eval.csv";
  if (auto latest = latest_checkpoint(run_dir)) {
    trainer.restore(load_checkpoint(*latest, cfg.hash()));
    summary.resumed_from = trainer.iteration();
    summary.last_checkpoint = *latest;
  }
  truncate_log(progress_path, kProgressHeader, trainer.iteration());
  truncate_log(eval_path, kEvalHeader, trainer.iteration());
  CsvLog progress(progress_path);
  CsvLog evals(eval_path);

  auto checkpoint = [&] {
    const fs::path path = run_dir / checkpoint_file_name(trainer.iteration());
    save_checkpoint(path, trainer.snapshot());
    prune_checkpoints(run_dir, cfg.keep_checkpoints);
    summary.last_checkpoint = path;
  };

  if (trainer.iteration() < cfg.max_iters) {
    BatchSampler sampler(split.train.frames.size(), cfg.batch_size, derive_seed(cfg.seed, kSampler));
    PrefetchQueue queue(split.train.frames, sampler, cfg.pipeline,
                        static_cast<std::uint64_t>(trainer.iteration()), cfg.prefetch_depth);
    std::int64_t saved_at = trainer.iteration();
    while (trainer.iteration() < cfg.max_iters) {
      const Batch batch = queue.next();
      const auto start = std::chrono::steady_clock::now();
      StepRecord rec;
      try {
        rec = trainer.train_step(batch);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::numeric) throw;
        const std::string last = summary.last_checkpoint.empty()
                                     ? std::string("none")
                                     : summary.last_checkpoint.string();
        throw Error(ErrorKind::numeric,
                    std::string(e.what()) + "; last good checkpoint: " + last);
      }
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                        .count();
      progress.append(format_progress_row(rec));
      summary.steps.push_back(rec);
      if (observer) observer(rec);
      if (trainer.iteration() % cfg.eval_every == 0) {
        const EvalRecord er = trainer.evaluate(eval_batch);
        evals.append(format_eval_row(er));
        summary.evals.push_back(er);
        trainer.sample_and_save_grid(run_dir / "samples");
        checkpoint();
        saved_at = trainer.iteration();
      }
    }
    if (saved_at != trainer.iteration()) checkpoint();
  } else if (summary.last_checkpoint.empty()) {
    checkpoint();
  }
  summary.final_iteration = trainer.iteration();
  return summary;
}

}  // namespace vagan
