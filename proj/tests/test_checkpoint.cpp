#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "test_util.hpp"
#include "vagan/checkpoint.hpp"
#include "vagan/error.hpp"
#include "vagan/models.hpp"

namespace vagan {
namespace {

using testing::TempDir;

CheckpointState sample_state(std::uint64_t seed) {
  CheckpointState s;
  Rng rng(seed);
  s.iteration = 1234;
  s.config_hash = 0xfeedbeefcafe1234ull;
  s.generator = init_generator(GeneratorSpec::tiny(16), rng);
  s.discriminator = init_discriminator(DiscriminatorSpec::tiny(16), rng);
  for (auto* set : {&s.generator, &s.discriminator}) {
    for (auto& [name, p] : set->parameters()) {
      p.m = Tensor(p.value.shape());
      p.v = Tensor(p.value.shape());
      for (double& x : p.m.values()) x = uniform(rng, -1e-3, 1e-3);
      for (double& x : p.v.values()) x = uniform(rng, 0.0, 1e-6);
      p.step = 17;
    }
  }
  // Values that only survive a lossless encoding.
  s.generator.at("dense.b").value[0] = 0.1 + 1e-17;
  s.generator.at("dense.b").value[1] = std::numeric_limits<double>::denorm_min();
  s.generator.at("dense.b").value[2] = -0.0;
  rng.discard(5);
  s.rng_states["noise"] = save_rng(rng);
  s.rng_states["dropout"] = save_rng(Rng(9));
  return s;
}

void expect_checkpoint_error(const std::string& bytes, std::optional<std::uint64_t> hash = {}) {
  try {
    decode_checkpoint(bytes, hash);
    FAIL() << "expected a checkpoint error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::checkpoint) << e.what();
  }
}

TEST(Checkpoint, EncodeDecodeIsLossless) {
  const CheckpointState s = sample_state(1);
  const std::string bytes = encode_checkpoint(s);
  const CheckpointState d = decode_checkpoint(bytes, s.config_hash);
  EXPECT_EQ(d.iteration, s.iteration);
  EXPECT_EQ(d.config_hash, s.config_hash);
  EXPECT_EQ(d.generator, s.generator);
  EXPECT_EQ(d.discriminator, s.discriminator);
  EXPECT_EQ(d.rng_states, s.rng_states);
  EXPECT_TRUE(std::signbit(d.generator.at("dense.b").value[2]));
  EXPECT_EQ(encode_checkpoint(d), bytes);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  TempDir dir;
  const CheckpointState s = sample_state(2);
  save_checkpoint(dir / "a.bin", s);
  const CheckpointState loaded = load_checkpoint(dir / "a.bin");
  save_checkpoint(dir / "b.bin", loaded);
  EXPECT_EQ(testing::slurp(dir / "a.bin"), testing::slurp(dir / "b.bin"));
  Rng a;
  load_rng(a, loaded.rng_states.at("noise"));
  EXPECT_EQ(save_rng(a), s.rng_states.at("noise"));
}

TEST(Checkpoint, HeaderLayout) {
  const std::string bytes = encode_checkpoint(sample_state(3));
  EXPECT_EQ(bytes.substr(0, 8), "VAGANCKP");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 8, 4);
  EXPECT_EQ(version, kCheckpointVersion);
  std::uint64_t checksum = 0;
  std::memcpy(&checksum, bytes.data() + bytes.size() - 8, 8);
  EXPECT_EQ(checksum, fnv1a64(std::string_view(bytes).substr(0, bytes.size() - 8)));
}

TEST(Checkpoint, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(Checkpoint, CorruptionIsDetected) {
  const std::string good = encode_checkpoint(sample_state(4));

  std::string magic = good;
  magic[0] = 'X';
  expect_checkpoint_error(magic);

  std::string version = good;
  version[8] = static_cast<char>(kCheckpointVersion + 1);
  expect_checkpoint_error(version);

  for (std::size_t cut : {std::size_t{0}, std::size_t{7}, std::size_t{20}, good.size() / 2,
                          good.size() - 1}) {
    expect_checkpoint_error(good.substr(0, cut));
  }

  std::string flipped = good;
  flipped[good.size() / 2] ^= 0x01;
  expect_checkpoint_error(flipped);

  expect_checkpoint_error(good + "x");
  expect_checkpoint_error(good, 1234);
  EXPECT_NO_THROW(decode_checkpoint(good, sample_state(4).config_hash));
}

TEST(Checkpoint, MissingFileIsCheckpointError) {
  TempDir dir;
  EXPECT_THROW(load_checkpoint(dir / "absent.bin"), Error);
}

TEST(Checkpoint, FileNamesSortByIteration) {
  EXPECT_EQ(checkpoint_file_name(60), "ckpt_00000060.bin");
  EXPECT_LT(checkpoint_file_name(999), checkpoint_file_name(1000));
}

TEST(Checkpoint, ListLatestAndPrune) {
  TempDir dir;
  EXPECT_TRUE(list_checkpoints(dir.path()).empty());
  EXPECT_FALSE(latest_checkpoint(dir.path()).has_value());
  EXPECT_TRUE(list_checkpoints(dir / "missing").empty());
  const CheckpointState s = sample_state(5);
  for (int it : {120, 60, 1000, 180}) save_checkpoint(dir / checkpoint_file_name(it), s);
  testing::spit(dir / "notes.txt", "x");
  testing::spit(dir / "ckpt_junk.bin", "x");
  const auto all = list_checkpoints(dir.path());
  ASSERT_EQ(all.size(), 4u);
  EXPECT_EQ(all.front().filename(), checkpoint_file_name(60));
  EXPECT_EQ(latest_checkpoint(dir.path())->filename(), checkpoint_file_name(1000));
  prune_checkpoints(dir.path(), 2);
  const auto kept = list_checkpoints(dir.path());
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].filename(), checkpoint_file_name(180));
  EXPECT_EQ(kept[1].filename(), checkpoint_file_name(1000));
  EXPECT_TRUE(std::filesystem::exists(dir / "notes.txt"));
  // No temporary files are left behind.
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
  EXPECT_EQ(entries, 4u);
}

}  // namespace
}  // namespace vagan
