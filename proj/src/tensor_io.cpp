#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "tcprobe/errors.hpp"
#include "tcprobe/trajlog.hpp"

namespace tcprobe {

static_assert(std::numeric_limits<float>::is_iec559, "float32 payloads assume IEEE-754");

namespace {

constexpr char kMagic[4] = {'T', 'C', 'P', 'R'};
constexpr std::uint32_t kMaxIdLength = 1u << 20;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw ValidationError(std::string("activation dump truncated while reading ") + what);
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError(std::string(what) + " does not fit in u32");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::optional<std::size_t> ActivationStore::layer_position(int layer_id) const {
  for (std::size_t k = 0; k < layer_ids.size(); ++k) {
    if (layer_ids[k] == layer_id) return k;
  }
  return std::nullopt;
}

std::span<const float> ActivationStore::vector(std::size_t boundary, std::size_t layer_pos) const {
  return {values.data() + (boundary * layer_ids.size() + layer_pos) * hidden_dim, hidden_dim};
}

std::span<float> ActivationStore::vector(std::size_t boundary, std::size_t layer_pos) {
  return {values.data() + (boundary * layer_ids.size() + layer_pos) * hidden_dim, hidden_dim};
}

void write_activations(std::ostream& out, const ActivationStore& store) {
  if (store.values.size() != store.n_boundaries * store.layer_ids.size() * store.hidden_dim) {
    throw ValidationError("activation store payload size does not match its dimensions");
  }
  out.write(kMagic, 4);
  put_u32(out, kActivationFormatVersion);
  put_u32(out, checked_u32(store.trajectory_id.size(), "trajectory_id length"));
  out.write(store.trajectory_id.data(), static_cast<std::streamsize>(store.trajectory_id.size()));
  put_u32(out, checked_u32(store.n_boundaries, "n_boundaries"));
  put_u32(out, checked_u32(store.layer_ids.size(), "n_layers"));
  put_u32(out, checked_u32(store.hidden_dim, "hidden_dim"));
  for (int id : store.layer_ids) put_u32(out, static_cast<std::uint32_t>(id));
  for (float f : store.values) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

void write_activations(const std::filesystem::path& path, const ActivationStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write activation dump " + path.string());
  write_activations(out, store);
  if (!out) throw std::runtime_error("failed writing activation dump " + path.string());
}

ActivationStore read_activations(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ValidationError("activation dump: bad magic (expected \"TCPR\")");
  }
  const std::uint32_t version = get_u32(in, "version");
  if (version != kActivationFormatVersion) {
    throw ValidationError("activation dump: unsupported format version " + std::to_string(version));
  }
  ActivationStore s;
  const std::uint32_t id_len = get_u32(in, "trajectory_id length");
  if (id_len > kMaxIdLength) throw ValidationError("activation dump: trajectory_id length too large");
  s.trajectory_id.resize(id_len);
  if (id_len > 0 && !in.read(s.trajectory_id.data(), id_len)) {
    throw ValidationError("activation dump truncated while reading trajectory_id");
  }
  s.n_boundaries = get_u32(in, "n_boundaries");
  const std::uint32_t n_layers = get_u32(in, "n_layers");
  s.hidden_dim = get_u32(in, "hidden_dim");
  if (s.hidden_dim == 0) throw ValidationError("activation dump: hidden_dim must be positive");
  s.layer_ids.reserve(n_layers);
  for (std::uint32_t k = 0; k < n_layers; ++k) {
    s.layer_ids.push_back(static_cast<int>(get_u32(in, "layer ids")));
    if (k > 0 && s.layer_ids[k] <= s.layer_ids[k - 1]) {
      throw ValidationError("activation dump: layer ids not strictly increasing");
    }
  }
  const std::size_t count = s.n_boundaries * n_layers * s.hidden_dim;
  s.values.resize(count);
  std::vector<unsigned char> raw(count * 4);
  if (count > 0 && !in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw ValidationError("activation dump truncated: header promises " + std::to_string(count) +
                          " float32 values (dims " + std::to_string(s.n_boundaries) + "x" +
                          std::to_string(n_layers) + "x" + std::to_string(s.hidden_dim) + ")");
  }
  for (std::size_t k = 0; k < count; ++k) {
    const unsigned char* b = raw.data() + 4 * k;
    const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                               (static_cast<std::uint32_t>(b[2]) << 16) |
                               (static_cast<std::uint32_t>(b[3]) << 24);
    const float f = std::bit_cast<float>(bits);
    if (!std::isfinite(f)) {
      throw ValidationError("activation dump: non-finite value at flat offset " + std::to_string(k));
    }
    s.values[k] = f;
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ValidationError("activation dump: trailing bytes after payload (dimension mismatch vs header)");
  }
  return s;
}

ActivationStore read_activations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open activation dump " + path.string());
  return read_activations(in);
}

ActivationStore load_activations(const std::filesystem::path& path, const Trajectory& expected) {
  ActivationStore s = read_activations(path);
  if (s.trajectory_id != expected.trajectory_id) {
    throw ValidationError("activation dump " + path.string() + " belongs to '" + s.trajectory_id +
                          "', expected '" + expected.trajectory_id + "'");
  }
  for (const auto& c : expected.calls) {
    if (static_cast<std::size_t>(c.boundary_index) >= s.n_boundaries) {
      throw ValidationError("activation dump " + path.string() + " has " + std::to_string(s.n_boundaries) +
                            " boundaries but call " + std::to_string(c.index) + " references boundary " +
                            std::to_string(c.boundary_index));
    }
  }
  return s;
}

std::filesystem::path activation_path(const std::filesystem::path& dir, std::string_view trajectory_id) {
  return dir / (std::string(trajectory_id) + ".tcpr");
}

}  // namespace tcprobe
