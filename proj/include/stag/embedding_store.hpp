#pragma once

// Binary embedding container, little-endian throughout:
//
//   magic   "STEMB001"           8 bytes
//   count   uint32
//   dim     uint32
//   keys    count x { uint32 video_id length, video_id bytes, int32 track_id }
//   body    count x dim float32, row-major, in key order

#include "stag/types.hpp"

#include <iosfwd>
#include <map>

namespace stag {

using EmbeddingMap = std::map<TrackKey, EmbeddingVector>;

/// Throws when `expected_dim` disagrees with the declared dimension or a value is not finite.
EmbeddingMap read_embeddings(std::istream& in, int expected_dim = kEmbeddingDim);
void write_embeddings(std::ostream& out, const EmbeddingMap& embeddings,
                      int dim = kEmbeddingDim);

EmbeddingMap load_embeddings(const std::string& path, int expected_dim = kEmbeddingDim);
void save_embeddings(const std::string& path, const EmbeddingMap& embeddings,
                     int dim = kEmbeddingDim);

}  // namespace stag
