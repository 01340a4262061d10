#pragma once

// Adversarial + supervised training of the regression GAN with evaluation,
// sample grids, CSV logs and checkpoint/resume.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vagan/checkpoint.hpp"
#include "vagan/dataset.hpp"
#include "vagan/image_io.hpp"
#include "vagan/losses.hpp"
#include "vagan/models.hpp"

namespace vagan {

enum class TrainMode { gan, supervised_only };

std::string train_mode_name(TrainMode mode);
TrainMode parse_train_mode(const std::string& name);

// Named model presets: "paper", "desk", "tiny16", "tiny32".
ModelSpec model_preset(const std::string& name);

struct TrainConfig {
  TrainMode mode = TrainMode::gan;
  std::string model = "desk";
  // The discriminator always runs at half this rate.
  double lr_g = 0.0002;
  int g_updates_per_iter = 2;
  int d_updates_per_iter = 1;
  std::size_t batch_size = 64;
  std::int64_t eval_every = 60;
  std::size_t eval_batch = 1000;
  std::size_t grid_rows = 8;
  std::size_t grid_cols = 8;
  std::int64_t max_iters = 10000;
  std::uint64_t seed = 1;
  std::optional<double> clip_norm = 5.0;
  LossConfig loss;
  PipelineConfig pipeline;
  std::size_t keep_checkpoints = 2;
  std::size_t prefetch_depth = 2;

  double lr_d() const { return lr_g / 2.0; }
  // Applies user-supplied rates. Either one determines the other; giving
  // both with a ratio other than 1/2 is a config error.
  void set_learning_rates(std::optional<double> lr_g_value, std::optional<double> lr_d_value);

  void validate() const;
  ModelSpec model_spec() const { return model_preset(model); }
  // Resolved settings as ordered key/value pairs.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
  // Hash over every setting that changes the training trajectory; run
  // length, eval cadence and housekeeping are excluded so a run may be
  // extended on resume.
  std::uint64_t hash() const;
};

struct StepRecord {
  std::int64_t iter = 0;  // 1-based count of completed iterations
  double loss_d = 0.0;
  double loss_sup = 0.0;
  double loss_unsup = 0.0;
  double loss_g = 0.0;
  double loss_g1 = 0.0;
  double loss_g2 = 0.0;
  double weight = 0.0;
  double rf_acc_real = 0.0;
  double rf_acc_fake = 0.0;
  double lr_d = 0.0;
  double lr_g = 0.0;
  RealnessTargets targets;
  int generator_steps = 0;
  double wall_ms = 0.0;
};

struct EvalRecord {
  std::int64_t iter = 0;
  std::size_t samples = 0;
  double ccc_valence = 0.0;
  double ccc_arousal = 0.0;
  double loss_valence = 0.0;  // 1 - ccc
  double loss_arousal = 0.0;
  double loss_mean = 0.0;
  double rf_acc_real = 0.0;
  std::string timestamp;
};

struct GridResult {
  std::filesystem::path image_path;
  std::filesystem::path predictions_path;
  Image grid;
  std::vector<Image> tiles;
  Tensor predictions;  // [rows*cols x 2]
};

class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  // One iteration: a discriminator update, then g_updates_per_iter generator
  // updates on fresh noise (gan mode only). A non-finite loss or gradient
  // throws a numeric error before the failing update is applied.
  StepRecord train_step(const Batch& batch);

  // Inference-mode metrics on a fixed batch; never mutates any state.
  EvalRecord evaluate(const Batch& test_batch) const;

  // Predictions of the discriminator in inference mode, [N x 3].
  Tensor predict(const Tensor& images) const;

  // rows*cols generated samples tiled into iter_<N>.png with the
  // discriminator's (valence, arousal) for each in iter_<N>.txt. The noise
  // is derived from (seed, iteration) and does not disturb training.
  GridResult sample_and_save_grid(const std::filesystem::path& out_dir) const;

  CheckpointState snapshot() const;
  // Throws a checkpoint error on config-hash mismatch; state is untouched
  // on failure.
  void restore(CheckpointState state);

  const TrainConfig& config() const noexcept { return cfg_; }
  const ModelSpec& spec() const noexcept { return spec_; }
  std::int64_t iteration() const noexcept { return iteration_; }
  ParameterSet& generator() noexcept { return g_; }
  ParameterSet& discriminator() noexcept { return d_; }
  const ParameterSet& generator() const noexcept { return g_; }
  const ParameterSet& discriminator() const noexcept { return d_; }
  const Rng& noise_rng() const noexcept { return noise_rng_; }
  const Rng& dropout_rng() const noexcept { return dropout_rng_; }

 private:
  TrainConfig cfg_;
  ModelSpec spec_;
  ParameterSet g_;
  ParameterSet d_;
  Rng noise_rng_;
  Rng dropout_rng_;
  std::int64_t iteration_ = 0;
};

struct DataRoots {
  std::filesystem::path frames;
  std::filesystem::path labels;
  // Holdout video ids; empty uses default_holdout_ids().
  std::vector<std::string> test_ids;
};

using StepObserver = std::function<void(const StepRecord&)>;

struct TrainSummary {
  std::optional<std::int64_t> resumed_from;
  std::int64_t final_iteration = 0;
  std::vector<StepRecord> steps;  // this session only
  std::vector<EvalRecord> evals;
  std::filesystem::path last_checkpoint;
  std::size_t train_frames = 0;
  std::size_t test_frames = 0;
  std::size_t eval_samples = 0;
};

inline constexpr const char* kProgressHeader =
    "iter,L_D,L_sup,L_unsup,L_G,L_G1,L_G2,w,rf_acc_real,rf_acc_fake,lr_d,lr_g,wall_ms";
inline constexpr const char* kEvalHeader =
    "iter,one_minus_ccc_valence,one_minus_ccc_arousal,one_minus_ccc_mean,rf_acc_real,samples,"
    "timestamp";

std::string format_progress_row(const StepRecord& r);
std::string format_eval_row(const EvalRecord& r);

// The fixed evaluation subset: min(eval_batch, test size) frames sampled
// without replacement under the run seed, in corpus order.
std::vector<FrameRecord> select_eval_frames(const std::vector<FrameRecord>& test,
                                            const TrainConfig& cfg);

// Trains into run_dir, resuming from its newest checkpoint when present.
TrainSummary train_loop(const TrainConfig& cfg, const DataRoots& data,
                        const std::filesystem::path& run_dir, const StepObserver& observer = {});

}  // namespace vagan
