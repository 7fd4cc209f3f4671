#pragma once

#include <vector>

#include "core/autodiff.hpp"
#include "core/checkpoint.hpp"
#include "nn/layers.hpp"

namespace affedit::nn {

struct TextEncoderConfig {
    int channels = 32;
    int seq_len = 16;
    int vocab = 512;
    int heads = 4;
    int ffn_mult = 2;
    real eps_norm = 1e-5;
};

// Small contextual token encoder: hashed embeddings plus learned positions,
// one masked self-attention block and an FFN. Padded positions (token id 0)
// are excluded from attention keys and from normalization statistics, so
// the content of the padding region cannot leak into real positions.
class TextEncoder {
  public:
    TextEncoder(TextEncoderConfig cfg, uint64_t seed);

    // ids must have length seq_len; n_real < 0 derives the real-token count
    // from the first pad id. Output is (channels, seq_len).
    Tensor encode(const std::vector<int>& ids, int n_real = -1) const;
    ad::Var encode_t(ad::Tape& tape, const std::vector<int>& ids, Bind& bind,
                     int n_real = -1) const;

    const TextEncoderConfig& config() const { return cfg_; }
    ParamMap& params() { return params_; }
    const ParamMap& params() const { return params_; }

    bool frozen() const { return frozen_; }
    void set_frozen(bool value) { frozen_ = value; }

  private:
    TextEncoderConfig cfg_;
    ParamMap params_;
    bool frozen_ = false;
};

}  // namespace affedit::nn
