#pragma once

#include "binary_io.hpp"
#include "wce/embeddings.hpp"

namespace wce::detail {

void write_embedding(io::BinaryWriter& w, const EmbeddingMatrix& e);
EmbeddingMatrix read_embedding(io::BinaryReader& r);

}  // namespace wce::detail
