#include "vagan/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "vagan/error.hpp"

namespace vagan {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMagic = "VAGANCKP";
constexpr std::uint32_t kMaxRank = 8;

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(std::string_view s) { out_.append(s); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s);
  }
  void shape(const Shape& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    for (std::size_t d : s) u64(d);
  }
  void values(const Tensor& t) {
    for (double v : t.values()) f64(v);
  }
  std::string& bytes() { return out_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : in_(bytes) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string_view raw(std::size_t n) {
    need(n);
    std::string_view s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return std::string(raw(u32())); }
  Shape shape() {
    const std::uint32_t rank = u32();
    if (rank == 0 || rank > kMaxRank) throw Error(ErrorKind::checkpoint, "corrupt tensor rank");
    Shape s(rank);
    std::uint64_t total = 1;
    for (auto& d : s) {
      d = u64();
      if (d == 0) throw Error(ErrorKind::checkpoint, "corrupt tensor shape");
      total *= d;
      if (total > remaining() / 8) throw Error(ErrorKind::checkpoint, "truncated checkpoint");
    }
    return s;
  }
  Tensor tensor(const Shape& s) {
    Tensor t(s);
    need(t.size() * 8);
    for (double& v : t.values()) v = f64();
    return t;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw Error(ErrorKind::checkpoint, "truncated checkpoint");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

void write_set(Writer& w, const ParameterSet& set) {
  w.u32(static_cast<std::uint32_t>(set.parameters().size()));
  for (const auto& [name, p] : set.parameters()) {
    w.str(name);
    w.shape(p.value.shape());
    w.i64(p.step);
    w.values(p.value);
    w.values(p.m);
    w.values(p.v);
  }
  w.u32(static_cast<std::uint32_t>(set.buffers().size()));
  for (const auto& [name, b] : set.buffers()) {
    w.str(name);
    w.shape(b.shape());
    w.values(b);
  }
}

ParameterSet read_set(Reader& r) {
  ParameterSet set;
  for (std::uint32_t n = r.u32(), i = 0; i < n; ++i) {
    const std::string name = r.str();
    const Shape shape = r.shape();
    const std::int64_t step = r.i64();
    Parameter& p = set.add(name, r.tensor(shape));
    p.step = step;
    p.m = r.tensor(shape);
    p.v = r.tensor(shape);
  }
  for (std::uint32_t n = r.u32(), i = 0; i < n; ++i) {
    const std::string name = r.str();
    const Shape shape = r.shape();
    set.add_buffer(name, r.tensor(shape));
  }
  return set;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string encode_checkpoint(const CheckpointState& state) {
  Writer w;
  w.raw(kMagic);
  w.u32(kCheckpointVersion);
  w.u64(state.config_hash);
  w.i64(state.iteration);
  write_set(w, state.generator);
  write_set(w, state.discriminator);
  w.u32(static_cast<std::uint32_t>(state.rng_states.size()));
  for (const auto& [name, s] : state.rng_states) {
    w.str(name);
    w.str(s);
  }
  w.u64(fnv1a64(w.bytes()));
  return std::move(w.bytes());
}

CheckpointState decode_checkpoint(std::string_view bytes, std::optional<std::uint64_t> expected_hash) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw Error(ErrorKind::checkpoint, "not a checkpoint (bad magic bytes)");
  }
  Reader r(bytes);
  r.raw(kMagic.size());
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::checkpoint, "unsupported checkpoint version " + std::to_string(version) +
                                           " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < 8 + r.position()) throw Error(ErrorKind::checkpoint, "truncated checkpoint");
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  Reader trailer(bytes.substr(bytes.size() - 8));
  if (fnv1a64(body) != trailer.u64()) {
    throw Error(ErrorKind::checkpoint, "checksum mismatch (truncated or corrupt checkpoint)");
  }

  Reader in(body);
  in.raw(kMagic.size());
  in.u32();
  CheckpointState state;
  state.config_hash = in.u64();
  if (expected_hash && *expected_hash != state.config_hash) {
    throw Error(ErrorKind::checkpoint, "checkpoint was written with a different configuration");
  }
  state.iteration = in.i64();
  state.generator = read_set(in);
  state.discriminator = read_set(in);
  for (std::uint32_t n = in.u32(), i = 0; i < n; ++i) {
    std::string name = in.str();
    state.rng_states[std::move(name)] = in.str();
  }
  if (in.remaining() != 0) throw Error(ErrorKind::checkpoint, "trailing bytes in checkpoint");
  return state;
}

void save_checkpoint(const fs::path& path, const CheckpointState& state) {
  const std::string bytes = encode_checkpoint(state);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::io, "cannot move checkpoint into place: " + ec.message());
}

CheckpointState load_checkpoint(const fs::path& path, std::optional<std::uint64_t> expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open checkpoint " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return decode_checkpoint(bytes, expected_hash);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string checkpoint_file_name(std::int64_t iteration) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "ckpt_%08lld.bin", static_cast<long long>(iteration));
  return buf;
}

std::vector<fs::path> list_checkpoints(const fs::path& run_dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(run_dir)) return out;
  for (const auto& e : fs::directory_iterator(run_dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() == 17 && name.starts_with("ckpt_") &&
        name.ends_with(".bin")) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<fs::path> latest_checkpoint(const fs::path& run_dir) {
  auto all = list_checkpoints(run_dir);
  if (all.empty()) return std::nullopt;
  return all.back();
}

void prune_checkpoints(const fs::path& run_dir, std::size_t keep) {
  auto all = list_checkpoints(run_dir);
  if (all.size() <= keep) return;
  for (std::size_t i = 0; i + keep < all.size(); ++i) fs::remove(all[i]);
}

}  // namespace vagan
