#pragma once

#include <string>
#include <vector>

#include "core/autodiff.hpp"
#include "core/checkpoint.hpp"
#include "nn/layers.hpp"
#include "nn/text_encoder.hpp"

namespace affedit::mapper {

using ad::Tape;
using ad::Var;
using core::ParamMap;
using core::Tensor;

// Semantic text embedding (C^s, N^l) from the semantic encoder.
struct TextSemantics {
    Tensor embedding;
    void validate(int channels, int seq_len) const;
};

// Mapper output (C^s, N^l): the conditioning signal for the denoiser.
struct SemanticRepresentation {
    Tensor embedding;
};

struct MapperConfig {
    int depth = 4;
    int heads = 4;
    int c_s = 64;
    int c_t = 32;
    int n_l = 16;
    real eps_norm = 1e-5;

    void validate() const;
};

// Feature modulation: (1 + w1 f_k) * (f - mu)/sigma + w2 f_k, with mu and
// sigma per channel across tokens and sigma floored at eps_norm. w1 and w2
// are (C, C) matrices applied to the key-semantic vector f_k.
Var modulate(Tape& tape, Var f, Var f_k, Var w1, Var w2, real eps_norm);
Tensor modulate(const Tensor& f, const Tensor& f_k, const Tensor& w1, const Tensor& w2,
                real eps_norm);

// Request-to-semantics translator: a channel lift C^t -> C^s, then per
// block self-attention, cross-attention onto the text semantics, and an
// FFN, the stream rescaled by the key-semantic modulation after each
// sub-module.
class EmotionalMapper {
  public:
    EmotionalMapper(MapperConfig cfg, uint64_t seed);

    // Pooled (mean over tokens) linear projection of the text semantics.
    Tensor extract_key_semantics(const Tensor& semantics) const;
    Var extract_key_semantics_t(Tape& tape, Var semantics, nn::Bind& bind) const;

    // request (C^t, N^l), semantics (C^s, N^l) -> (C^s, N^l).
    SemanticRepresentation forward(const Tensor& request, const Tensor& semantics) const;
    Var forward_t(Tape& tape, Var request, Var semantics, nn::Bind& bind) const;

    const MapperConfig& config() const { return cfg_; }
    ParamMap& params() { return params_; }
    const ParamMap& params() const { return params_; }

  private:
    MapperConfig cfg_;
    ParamMap params_;
};

}  // namespace affedit::mapper
