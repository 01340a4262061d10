#include "vagan/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>

#include "vagan/error.hpp"
#include "vagan/image_io.hpp"
#include "vagan/labels.hpp"
#include "vagan/random.hpp"

namespace vagan {

namespace fs = std::filesystem;

namespace {
constexpr std::uint64_t kSamplerStream = 0x5a3b1e;
}  // namespace

void PipelineConfig::validate() const {
  if (fps <= 0) throw Error(ErrorKind::config, "fps must be positive");
  if (image_size == 0) throw Error(ErrorKind::config, "image size must be positive");
}

Corpus load_corpus(const fs::path& frames_root, const fs::path& labels_root) {
  if (!fs::is_directory(frames_root)) {
    throw Error(ErrorKind::io, "missing frames directory " + frames_root.string());
  }
  if (!fs::is_directory(labels_root)) {
    throw Error(ErrorKind::io, "missing labels directory " + labels_root.string());
  }
  Corpus corpus;
  for (const auto& entry : fs::directory_iterator(labels_root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      corpus.video_ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(corpus.video_ids.begin(), corpus.video_ids.end());
  for (const std::string& id : corpus.video_ids) {
    const LabelTable table = load_label_table(labels_root, id);
    const fs::path dir = frames_root / id;
    for (const LabelRow& row : table.rows) {
      fs::path frame = dir / frame_file_name(row.frame_index);
      if (!fs::exists(frame)) continue;
      corpus.frames.push_back({std::move(frame), id, row.frame_index, row.valence, row.arousal});
    }
  }
  return corpus;
}

std::vector<std::string> default_holdout_ids() {
  return {"video7",    "video19",   "video25",   "video45_1", "video45_2",
          "video45_3", "video45_4", "video45_5", "video45_6", "video45_7",
          "video48",   "video62",   "video72",   "video73"};
}

VideoSplit split_dataset(const std::vector<std::string>& videos,
                         const std::vector<std::string>& holdout_ids) {
  std::set<std::string> holdout;
  for (const auto& id : holdout_ids) {
    if (!holdout.insert(id).second) {
      throw Error(ErrorKind::config, "duplicate holdout id " + id);
    }
  }
  const std::set<std::string> present(videos.begin(), videos.end());
  std::string missing;
  for (const auto& id : holdout_ids) {
    if (!present.contains(id)) missing += (missing.empty() ? "" : ", ") + id;
  }
  if (!missing.empty()) {
    throw Error(ErrorKind::config, "holdout ids absent from corpus: " + missing);
  }
  VideoSplit split;
  for (const auto& id : videos) (holdout.contains(id) ? split.test : split.train).push_back(id);
  return split;
}

CorpusSplit split_corpus(const Corpus& corpus, const std::vector<std::string>& holdout_ids) {
  const VideoSplit ids = split_dataset(corpus.video_ids, holdout_ids);
  const std::set<std::string> test(ids.test.begin(), ids.test.end());
  CorpusSplit out;
  out.train.video_ids = ids.train;
  out.test.video_ids = ids.test;
  for (const auto& frame : corpus.frames) {
    (test.contains(frame.video_id) ? out.test : out.train).frames.push_back(frame);
  }
  return out;
}

std::vector<std::string> read_id_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open id list " + path.string());
  std::vector<std::string> ids;
  for (std::string line; std::getline(in, line);) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    ids.push_back(line.substr(first, last - first + 1));
  }
  return ids;
}

void write_id_list(const fs::path& path, const std::vector<std::string>& ids) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write id list " + path.string());
  for (const auto& id : ids) out << id << '\n';
}

Batch load_frame_batch(std::span<const FrameRecord> frames, const PipelineConfig& cfg) {
  cfg.validate();
  const std::size_t s = cfg.image_size;
  const std::size_t per_image = s * s * 3;
  std::vector<std::optional<std::vector<double>>> decoded(frames.size());
  std::vector<std::string> failures(frames.size());
  const auto n = static_cast<std::int64_t>(frames.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      const Image img = read_png(frames[k].path);
      std::vector<double> px = resample_bilinear(img, s, s);
      for (double& v : px) v = v / 127.5 - 1.0;
      decoded[k] = std::move(px);
    } catch (const Error& e) {
      failures[k] = e.what();
    }
  }

  Batch batch;
  std::size_t kept = 0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (decoded[k]) {
      ++kept;
    } else {
      std::cerr << "warning: skipping frame " << frames[k].path.string() << ": " << failures[k]
                << '\n';
      ++batch.skipped;
    }
  }
  if (kept == 0) return batch;
  batch.images = Tensor({kept, s, s, 3});
  batch.labels = Tensor({kept, 2});
  std::size_t slot = 0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (!decoded[k]) continue;
    std::copy(decoded[k]->begin(), decoded[k]->end(), batch.images.data() + slot * per_image);
    batch.labels[slot * 2] = frames[k].valence;
    batch.labels[slot * 2 + 1] = frames[k].arousal;
    ++slot;
  }
  return batch;
}

BatchSampler::BatchSampler(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed)
    : dataset_size_(dataset_size), batch_size_(batch_size), seed_(seed) {
  if (batch_size == 0) throw Error(ErrorKind::config, "batch size must be positive");
  if (dataset_size < batch_size) {
    throw Error(ErrorKind::config, "dataset of " + std::to_string(dataset_size) +
                                       " frames is smaller than one batch of " +
                                       std::to_string(batch_size));
  }
  batches_per_epoch_ = dataset_size / batch_size;
}

std::vector<std::size_t> BatchSampler::indices(std::uint64_t batch_number) const {
  const std::uint64_t epoch = batch_number / batches_per_epoch_;
  const std::size_t position = static_cast<std::size_t>(batch_number % batches_per_epoch_);
  std::vector<std::size_t> perm(dataset_size_);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed_, kSamplerStream, epoch));
  for (std::size_t i = perm.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)));
    std::swap(perm[i - 1], perm[j]);
  }
  const auto first = perm.begin() + static_cast<std::ptrdiff_t>(position * batch_size_);
  return {first, first + static_cast<std::ptrdiff_t>(batch_size_)};
}

PrefetchQueue::PrefetchQueue(std::vector<FrameRecord> frames, BatchSampler sampler,
                             PipelineConfig cfg, std::uint64_t first_batch, std::size_t depth)
    : frames_(std::move(frames)),
      sampler_(sampler),
      cfg_(cfg),
      next_batch_(first_batch),
      depth_(std::max<std::size_t>(depth, 1)) {
  worker_ = std::thread([this] { produce(); });
}

PrefetchQueue::~PrefetchQueue() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

void PrefetchQueue::produce() {
  try {
    for (;;) {
      std::vector<FrameRecord> chosen;
      for (std::size_t idx : sampler_.indices(next_batch_)) chosen.push_back(frames_[idx]);
      ++next_batch_;
      Batch batch = load_frame_batch(chosen, cfg_);
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [this] { return stop_ || ready_.size() < depth_; });
      if (stop_) return;
      ready_.push_back(std::move(batch));
      cv_.notify_all();
    }
  } catch (...) {
    std::lock_guard lock(mutex_);
    error_ = std::current_exception();
    cv_.notify_all();
  }
}

Batch PrefetchQueue::next() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [this] { return !ready_.empty() || error_ != nullptr; });
  if (ready_.empty()) std::rethrow_exception(error_);
  Batch batch = std::move(ready_.front());
  ready_.pop_front();
  cv_.notify_all();
  return batch;
}

}  // namespace vagan
