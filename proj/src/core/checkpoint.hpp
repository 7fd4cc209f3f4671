#pragma once

#include <map>
#include <string>

#include "json.hpp"

#include "core/tensor.hpp"

namespace affedit::core {

// Named parameter tensors. std::map keeps iteration order deterministic,
// which the checkpoint format and checksum contracts rely on.
using ParamMap = std::map<std::string, Tensor>;

// Checkpoint file layout (little-endian):
//   magic "AFCK" | u32 version | u64 header_len | header JSON (UTF-8)
//   | raw float64 tensor data, in header tensor order
// The JSON header carries {"config": {...}, "tensors": [{name, shape}]}.
// The config object is caller-defined (dims, seed, category ordering, ...).
struct Checkpoint {
    nlohmann::json config;
    ParamMap tensors;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

uint64_t params_checksum(const ParamMap& params);

}  // namespace affedit::core
