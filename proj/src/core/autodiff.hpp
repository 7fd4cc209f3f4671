#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace affedit::ad {

using core::Tensor;

class Tape;

// Handle into a tape. Cheap to copy; only meaningful with its tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense tensors. Forward calls record a node with a
// backward closure; backward() walks the nodes in reverse creation order.
// Frozen networks place their parameters as non-grad leaves, which still
// lets gradients flow through them to upstream inputs.
class Tape {
  public:
    Var leaf(Tensor value, bool requires_grad = false);
    // Trainable leaf bound to a master tensor owned by a network. After
    // backward(), the caller reads grad(node) to update the master.
    Var param(const std::string& name, const Tensor& master);

    const Tensor& value(Var v) const;
    const Tensor& grad(Var v) const;
    size_t node_count() const { return nodes_.size(); }

    // Elementwise; operands must share a shape.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);

    Var scale(Var a, real c);
    Var add_scalar(Var a, real c);

    // (m,k) x (k,n) -> (m,n)
    Var matmul(Var a, Var b);
    // (m,n) x (n) -> (m)
    Var matvec(Var a, Var v);
    Var transpose(Var a);
    Var reshape(Var a, std::vector<int> shape);

    Var relu(Var a);
    Var gelu(Var a);
    Var square(Var a);
    // sqrt(max(x,0)) with a guarded derivative at 0.
    Var sqrt_guarded(Var a);
    Var reciprocal(Var a);
    Var clamp_min(Var a, real floor);

    Var sum_all(Var a);   // -> scalar {1}
    Var mean_all(Var a);  // -> scalar {1}

    // Row-wise helpers for (rows, cols) matrices and (rows) vectors.
    Var rows_mean(Var a);                 // {m,n} -> {m}
    Var broadcast_rows(Var v, int cols);  // {m} -> {m,cols}
    Var mul_rowwise(Var a, Var v);        // {m,n} * {m}
    Var add_rowwise(Var a, Var v);        // {m,n} + {m}

    Var softmax_rows(Var a);

    Var concat_rows(Var a, Var b);
    Var slice_rows(Var a, int r0, int r1);

    // Gather columns of a (rows, vocab) table at the given indices,
    // producing (rows, ids.size()). Backward scatter-adds into the table;
    // this is the embedding lookup.
    Var gather_cols(Var table, const std::vector<int>& ids);

    // Spatial ops over (ch, h*w) matrices (columns enumerate an h x w grid).
    Var avgpool2x2(Var a, int h, int w);
    Var upsample2x2(Var a, int h, int w);

    // Scalar convenience: Frobenius norm of any tensor, as a {1} scalar.
    Var frobenius_norm(Var a);

    // Backward from a scalar root. May be called once per tape.
    void backward(Var root);

    struct ParamBinding {
        std::string name;
        Var node;
    };
    const std::vector<ParamBinding>& params() const { return params_; }

  private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::function<void(Tape&)> back;
    };

    Var make(Tensor value, bool requires_grad, std::function<void(Tape&)> back);
    Tensor& grad_ref(Var v) { return nodes_[static_cast<size_t>(v.id)].grad; }
    void accumulate(Var v, const real* g, size_t n);
    bool needs(Var v) const { return nodes_[static_cast<size_t>(v.id)].requires_grad; }
    void check(Var v) const;

    std::vector<Node> nodes_;
    std::vector<ParamBinding> params_;
    bool backward_done_ = false;
};

}  // namespace affedit::ad
