#include "stag/embedding_store.hpp"

#include "stag/fs.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <istream>
#include <ostream>

namespace stag {
namespace {

constexpr std::array<char, 8> kMagic = {'S', 'T', 'E', 'M', 'B', '0', '0', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff),
                         static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw Error("embedding store: truncated file");
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

}  // namespace

void write_embeddings(std::ostream& out, const EmbeddingMap& embeddings, int dim) {
  if (dim <= 0) throw Error("embedding store: dimension must be positive");
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, static_cast<std::uint32_t>(embeddings.size()));
  put_u32(out, static_cast<std::uint32_t>(dim));
  for (const auto& [key, vec] : embeddings) {
    if (vec.size() != dim)
      throw Error("embedding store: vector for " + key.video_id + "/" +
                  std::to_string(key.track_id) + " has dimension " +
                  std::to_string(vec.size()) + ", expected " + std::to_string(dim));
    put_u32(out, static_cast<std::uint32_t>(key.video_id.size()));
    out.write(key.video_id.data(), static_cast<std::streamsize>(key.video_id.size()));
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<std::int32_t>(key.track_id)));
  }
  for (const auto& [key, vec] : embeddings)
    for (int i = 0; i < dim; ++i) {
      if (!std::isfinite(vec[i])) throw Error("embedding store: non-finite value");
      put_u32(out, std::bit_cast<std::uint32_t>(vec[i]));
    }
  if (!out) throw Error("embedding store: write failed");
}

EmbeddingMap read_embeddings(std::istream& in, int expected_dim) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw Error("embedding store: bad magic");
  const std::uint32_t count = get_u32(in);
  const std::uint32_t dim = get_u32(in);
  if (static_cast<int>(dim) != expected_dim)
    throw Error("embedding store: dimension mismatch (file declares " + std::to_string(dim) +
                ", expected " + std::to_string(expected_dim) + ")");

  std::vector<TrackKey> keys;
  keys.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = get_u32(in);
    if (len > (1u << 20)) throw Error("embedding store: implausible key length");
    std::string video(len, '\0');
    if (!in.read(video.data(), len)) throw Error("embedding store: truncated file");
    const auto id = std::bit_cast<std::int32_t>(get_u32(in));
    keys.push_back(TrackKey{std::move(video), id});
  }

  EmbeddingMap out;
  for (const auto& key : keys) {
    EmbeddingVector vec(dim);
    for (std::uint32_t i = 0; i < dim; ++i) {
      vec[i] = std::bit_cast<float>(get_u32(in));
      if (!std::isfinite(vec[i])) throw Error("embedding store: non-finite value");
    }
    if (!out.emplace(key, std::move(vec)).second)
      throw Error("embedding store: duplicate key " + key.video_id + "/" +
                  std::to_string(key.track_id));
  }
  return out;
}

EmbeddingMap load_embeddings(const std::string& path, int expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_embeddings(in, expected_dim);
}

void save_embeddings(const std::string& path, const EmbeddingMap& embeddings, int dim) {
  std::ostringstream out;
  write_embeddings(out, embeddings, dim);
  write_file_atomic(path, out.str());
}

}  // namespace stag
