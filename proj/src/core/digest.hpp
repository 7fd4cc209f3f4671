#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace affedit::core {

// SHA-256 hex digest (via OpenSSL libcrypto). Used for the response cache
// keys and config hashes.
std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& s);

// FNV-1a over raw bytes; cheap checksum for frozen-parameter contracts and
// the hashing tokenizer.
uint64_t fnv1a(const void* data, size_t len, uint64_t seed = 1469598103934665603ull);
uint64_t fnv1a(const std::string& s);

// Checksum of a tensor's raw values; used to assert parameters unchanged.
uint64_t tensor_checksum(const Tensor& t);

}  // namespace affedit::core
