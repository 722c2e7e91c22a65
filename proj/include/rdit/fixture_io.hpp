#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rdit/tensor.hpp"
#include "rdit/text_states.hpp"

namespace rdit {

// Tensor fixture format: a `shape: d0 d1 ...` header line followed by
// whitespace-separated decimal floats. Embedding fixtures carry an extra
// leading `source: longctx|shortctx` line. Values are printed with enough
// digits to round-trip float32 exactly.

void write_tensor(const std::string& path, const Tensor& t);
Tensor read_tensor(const std::string& path);

void write_embedding(const std::string& path, const RawEmbedding& emb);
RawEmbedding load_embedding_fixture(const std::string& path);

// Several named tensors in one file: repeated `tensor: <name>` sections.
void write_named_tensors(const std::string& path,
                         const std::vector<std::pair<std::string, const Tensor*>>& tensors);
std::map<std::string, Tensor> read_named_tensors(const std::string& path);

uint64_t fnv1a64_bytes(const void* ptr, size_t len);
std::string checksum_hex(const Tensor& t);

}  // namespace rdit
