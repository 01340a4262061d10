#pragma once

// Labeled frame corpora, train/test splits and the batch input pipeline.

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "vagan/tensor.hpp"

namespace vagan {

struct PipelineConfig {
  int fps = 30;
  std::size_t image_size = 64;
  // Smallest face crop seen in the source corpus; informational only.
  std::size_t min_source_size = 69;

  void validate() const;
};

struct FrameRecord {
  std::filesystem::path path;
  std::string video_id;
  std::int64_t frame_index = 0;
  double valence = 0.0;
  double arousal = 0.0;
};

struct Corpus {
  std::vector<std::string> video_ids;  // sorted
  std::vector<FrameRecord> frames;     // by video, then frame index
};

// Joins <labels_root>/<id>.txt with <frames_root>/<id>/<index>.png. Label rows
// whose frame file is missing are dropped (see audit_frames for reporting).
Corpus load_corpus(const std::filesystem::path& frames_root,
                   const std::filesystem::path& labels_root);

// The fourteen held-out test videos of the reference corpus.
std::vector<std::string> default_holdout_ids();

struct VideoSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

// Disjoint partition. Throws a config error listing every holdout id that is
// absent from `videos`, or on duplicate holdout ids.
VideoSplit split_dataset(const std::vector<std::string>& videos,
                         const std::vector<std::string>& holdout_ids);

struct CorpusSplit {
  Corpus train;
  Corpus test;
};
CorpusSplit split_corpus(const Corpus& corpus, const std::vector<std::string>& holdout_ids);

// One id per line; blank lines and '#' comments ignored.
std::vector<std::string> read_id_list(const std::filesystem::path& path);
void write_id_list(const std::filesystem::path& path, const std::vector<std::string>& ids);

struct Batch {
  Tensor images;  // [B, S, S, 3] in [-1, 1]
  Tensor labels;  // [B, 2] (valence, arousal)
  std::size_t skipped = 0;

  std::size_t size() const { return images.empty() ? 0 : images.dim(0); }
};

// Decodes, resizes and scales the given frames in order. Undecodable files
// are skipped with a warning on stderr and counted in Batch::skipped.
Batch load_frame_batch(std::span<const FrameRecord> frames, const PipelineConfig& cfg);

// Deterministic without-replacement batching: epoch e uses a permutation
// seeded from (seed, e); a trailing partial batch is dropped. Batch k is a
// pure function of (seed, k).
class BatchSampler {
 public:
  BatchSampler(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed);

  std::vector<std::size_t> indices(std::uint64_t batch_number) const;
  std::size_t batches_per_epoch() const noexcept { return batches_per_epoch_; }
  std::size_t batch_size() const noexcept { return batch_size_; }

 private:
  std::size_t dataset_size_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::size_t batches_per_epoch_;
};

// Bounded producer queue of decoded batches feeding one consumer. Output
// order is the sampler's order regardless of depth or timing.
class PrefetchQueue {
 public:
  PrefetchQueue(std::vector<FrameRecord> frames, BatchSampler sampler, PipelineConfig cfg,
                std::uint64_t first_batch, std::size_t depth = 2);
  ~PrefetchQueue();
  PrefetchQueue(const PrefetchQueue&) = delete;
  PrefetchQueue& operator=(const PrefetchQueue&) = delete;

  Batch next();

 private:
  void produce();

  std::vector<FrameRecord> frames_;
  BatchSampler sampler_;
  PipelineConfig cfg_;
  std::uint64_t next_batch_;
  std::size_t depth_;

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Batch> ready_;
  std::exception_ptr error_;
  bool stop_ = false;
  std::thread worker_;
};

}  // namespace vagan
