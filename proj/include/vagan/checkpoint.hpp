#pragma once

// Versioned binary checkpoints. Layout (all integers and doubles
// little-endian):
//   "VAGANCKP" | u32 version | u64 config hash | i64 iteration
//   | generator set | discriminator set | rng states | u64 FNV-1a of all prior bytes
// A set is u32 count of {name, shape, i64 step, value, m, v} followed by
// u32 count of {name, shape, values} buffers. Strings are u32 length + bytes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vagan/parameters.hpp"

namespace vagan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t fnv1a64(std::string_view bytes);

struct CheckpointState {
  std::int64_t iteration = 0;
  std::uint64_t config_hash = 0;
  ParameterSet generator;
  ParameterSet discriminator;
  std::map<std::string, std::string> rng_states;
};

std::string encode_checkpoint(const CheckpointState& state);
// Throws a checkpoint error on bad magic, version, checksum, truncation or
// (when expected_hash is given) config-hash mismatch.
CheckpointState decode_checkpoint(std::string_view bytes,
                                  std::optional<std::uint64_t> expected_hash = std::nullopt);

// Writes via a temporary file and rename, so a crash never leaves a torn file.
void save_checkpoint(const std::filesystem::path& path, const CheckpointState& state);
CheckpointState load_checkpoint(const std::filesystem::path& path,
                                std::optional<std::uint64_t> expected_hash = std::nullopt);

std::string checkpoint_file_name(std::int64_t iteration);
// Checkpoint files in a run directory, oldest first.
std::vector<std::filesystem::path> list_checkpoints(const std::filesystem::path& run_dir);
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& run_dir);
// Deletes all but the newest `keep` checkpoints.
void prune_checkpoints(const std::filesystem::path& run_dir, std::size_t keep);

}  // namespace vagan
