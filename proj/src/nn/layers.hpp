#pragma once

#include <map>
#include <string>

#include "core/autodiff.hpp"
#include "core/checkpoint.hpp"
#include "core/rng.hpp"

namespace affedit::nn {

using ad::Tape;
using ad::Var;
using core::ParamMap;
using core::RngStream;
using core::Tensor;

// Parameter creation. Weights are Gaussian with stddev 1/sqrt(fan_in),
// biases zero.
void add_linear(ParamMap& params, const std::string& prefix, int in, int out,
                RngStream& rng, bool bias = true);
// Attention projections: wq maps the query stream (c_x channels), wk/wv map
// the key/value stream (c_kv channels); all project into c_x model width.
void add_attention(ParamMap& params, const std::string& prefix, int c_x, int c_kv,
                   RngStream& rng);
void add_ffn(ParamMap& params, const std::string& prefix, int c, int hidden,
             RngStream& rng);
void add_norm_affine(ParamMap& params, const std::string& prefix, int c);

// Binds master tensors onto a tape once each; trainable controls whether
// gradients are tracked for them. reg_prefix namespaces the registration
// so several networks can share one tape without name collisions.
class Bind {
  public:
    Bind(Tape& tape, const ParamMap& params, bool trainable, std::string reg_prefix = "")
        : tape_(tape), params_(params), trainable_(trainable),
          reg_prefix_(std::move(reg_prefix)) {}

    Var operator()(const std::string& name);

  private:
    Tape& tape_;
    const ParamMap& params_;
    bool trainable_;
    std::string reg_prefix_;
    std::map<std::string, Var> cache_;
};

// x is (in, tokens); returns (out, tokens).
Var linear(Tape& t, Bind& p, const std::string& prefix, Var x);
// v is (in); returns (out).
Var linear_vec(Tape& t, Bind& p, const std::string& prefix, Var v);

// Multi-head attention. Queries come from x (c_x, Nq); keys/values from kv
// (c_kv, Nk). Optional additive mask bias (Nq, Nk), typically 0 / -1e9, is
// applied to the attention logits before softmax.
Var attention(Tape& t, Bind& p, const std::string& prefix, Var x, Var kv, int heads,
              Var mask_bias = {});

Var ffn(Tape& t, Bind& p, const std::string& prefix, Var x);

// Per-channel normalization over the token axis: (x - mean) / max(std, eps).
Var channel_norm(Tape& t, Var x, real eps);
// channel_norm followed by learned per-channel gain and bias.
Var norm_affine(Tape& t, Bind& p, const std::string& prefix, Var x, real eps);

// Additive attention bias hiding padded key positions: 0 for key index
// < n_real, -1e9 beyond. Real tokens always occupy a prefix.
Tensor prefix_mask_bias(int query_len, int key_len, int n_real);
// Indicator vector of the real-token prefix: 1 for i < n_real else 0.
Tensor prefix_mask_vector(int n, int n_real);

// Per-channel normalization whose mean/std statistics are computed over the
// first n_real token columns only, so padded columns cannot leak into real
// ones. Output at padded positions is still normalized with those stats.
Var masked_channel_norm(Tape& t, Var x, int n_real, real eps);

// Sinusoidal embedding of a scalar step index, length dim (dim even).
Tensor sinusoidal_embedding(real position, int dim);

}  // namespace affedit::nn
