#include "core/autodiff.hpp"

#include <cmath>

#include "core/errors.hpp"
#include "core/kernels.hpp"

namespace affedit::ad {

namespace {
constexpr real kSqrtGuard = 1e-12;

void require(bool ok, const char* msg) {
    if (!ok) throw InvalidInput(std::string("autodiff: ") + msg);
}
}  // namespace

void Tape::check(Var v) const {
    require(v.id >= 0 && static_cast<size_t>(v.id) < nodes_.size(), "dangling var");
}

Var Tape::make(Tensor value, bool requires_grad, std::function<void(Tape&)> back) {
    Node node;
    node.grad = Tensor(value.shape());
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    node.back = std::move(back);
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value, bool requires_grad) {
    return make(std::move(value), requires_grad, nullptr);
}

Var Tape::param(const std::string& name, const Tensor& master) {
    Var v = make(master, true, nullptr);
    params_.push_back({name, v});
    return v;
}

const Tensor& Tape::value(Var v) const {
    check(v);
    return nodes_[static_cast<size_t>(v.id)].value;
}

const Tensor& Tape::grad(Var v) const {
    check(v);
    return nodes_[static_cast<size_t>(v.id)].grad;
}

void Tape::accumulate(Var v, const real* g, size_t n) {
    kernels::axpy(1.0, g, grad_ref(v).data(), n);
}

Var Tape::add(Var a, Var b) {
    check(a);
    check(b);
    require(value(a).same_shape(value(b)), "add shape mismatch");
    Tensor out(value(a).shape());
    kernels::add(value(a).data(), value(b).data(), out.data(), out.size());
    Var y = make(std::move(out), needs(a) || needs(b), nullptr);
    nodes_.back().back = [a, b, y](Tape& t) {
        const Tensor& gy = t.grad(y);
        if (t.needs(a)) t.accumulate(a, gy.data(), gy.size());
        if (t.needs(b)) t.accumulate(b, gy.data(), gy.size());
    };
    return y;
}

Var Tape::sub(Var a, Var b) {
    check(a);
    check(b);
    require(value(a).same_shape(value(b)), "sub shape mismatch");
    Tensor out(value(a).shape());
    kernels::sub(value(a).data(), value(b).data(), out.data(), out.size());
    Var y = make(std::move(out), needs(a) || needs(b), nullptr);
    nodes_.back().back = [a, b, y](Tape& t) {
        const Tensor& gy = t.grad(y);
        if (t.needs(a)) t.accumulate(a, gy.data(), gy.size());
        if (t.needs(b)) kernels::axpy(-1.0, gy.data(), t.grad_ref(b).data(), gy.size());
    };
    return y;
}

Var Tape::mul(Var a, Var b) {
    check(a);
    check(b);
    require(value(a).same_shape(value(b)), "mul shape mismatch");
    Tensor out(value(a).shape());
    kernels::mul(value(a).data(), value(b).data(), out.data(), out.size());
    Var y = make(std::move(out), needs(a) || needs(b), nullptr);
    nodes_.back().back = [a, b, y](Tape& t) {
        const Tensor& gy = t.grad(y);
        size_t n = gy.size();
        if (t.needs(a)) {
            Tensor tmp(gy.shape());
            kernels::mul(gy.data(), t.value(b).data(), tmp.data(), n);
            t.accumulate(a, tmp.data(), n);
        }
        if (t.needs(b)) {
            Tensor tmp(gy.shape());
            kernels::mul(gy.data(), t.value(a).data(), tmp.data(), n);
            t.accumulate(b, tmp.data(), n);
        }
    };
    return y;
}

Var Tape::scale(Var a, real c) {
    check(a);
    Tensor out(value(a).shape());
    kernels::scale(value(a).data(), c, out.data(), out.size());
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, c, y](Tape& t) {
        if (t.needs(a)) {
            const Tensor& gy = t.grad(y);
            kernels::axpy(c, gy.data(), t.grad_ref(a).data(), gy.size());
        }
    };
    return y;
}

Var Tape::add_scalar(Var a, real c) {
    check(a);
    Tensor out = value(a);
    for (size_t i = 0; i < out.size(); ++i) out[i] += c;
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, y](Tape& t) {
        if (t.needs(a)) {
            const Tensor& gy = t.grad(y);
            t.accumulate(a, gy.data(), gy.size());
        }
    };
    return y;
}

Var Tape::matmul(Var a, Var b) {
    check(a);
    check(b);
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require(av.rank() == 2 && bv.rank() == 2, "matmul expects rank-2 operands");
    require(av.dim(1) == bv.dim(0), "matmul inner dimension mismatch");
    int m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    Tensor out({m, n});
    kernels::matmul(av.data(), bv.data(), out.data(), m, k, n);
    Var y = make(std::move(out), needs(a) || needs(b), nullptr);
    nodes_.back().back = [a, b, y, m, k, n](Tape& t) {
        const Tensor& gy = t.grad(y);
        if (t.needs(a)) {
            Tensor ga({m, k});
            kernels::matmul_bt(gy.data(), t.value(b).data(), ga.data(), m, n, k);
            t.accumulate(a, ga.data(), ga.size());
        }
        if (t.needs(b)) {
            Tensor gb({k, n});
            kernels::matmul_at(t.value(a).data(), gy.data(), gb.data(), k, m, n);
            t.accumulate(b, gb.data(), gb.size());
        }
    };
    return y;
}

Var Tape::matvec(Var a, Var v) {
    check(a);
    check(v);
    const Tensor& av = value(a);
    const Tensor& vv = value(v);
    require(av.rank() == 2 && vv.rank() == 1, "matvec expects matrix and vector");
    require(av.dim(1) == vv.dim(0), "matvec dimension mismatch");
    int m = av.dim(0), n = av.dim(1);
    Tensor out({m});
    kernels::matmul(av.data(), vv.data(), out.data(), m, n, 1);
    Var y = make(std::move(out), needs(a) || needs(v), nullptr);
    nodes_.back().back = [a, v, y, m, n](Tape& t) {
        const Tensor& gy = t.grad(y);
        if (t.needs(a)) {
            Tensor ga({m, n});
            // outer product gy (m x 1) * v^T (1 x n)
            kernels::matmul(gy.data(), t.value(v).data(), ga.data(), m, 1, n);
            t.accumulate(a, ga.data(), ga.size());
        }
        if (t.needs(v)) {
            Tensor gv({n});
            kernels::matmul_at(t.value(a).data(), gy.data(), gv.data(), n, m, 1);
            t.accumulate(v, gv.data(), gv.size());
        }
    };
    return y;
}

Var Tape::transpose(Var a) {
    check(a);
    const Tensor& av = value(a);
    require(av.rank() == 2, "transpose expects rank-2");
    int m = av.dim(0), n = av.dim(1);
    Tensor out({n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.at(j, i) = av.at(i, j);
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, y, m, n](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gy = t.grad(y);
        Tensor ga({m, n});
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < m; ++i) ga.at(i, j) = gy.at(j, i);
        t.accumulate(a, ga.data(), ga.size());
    };
    return y;
}

Var Tape::reshape(Var a, std::vector<int> shape) {
    check(a);
    Tensor out = value(a).reshaped(shape);
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, y](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gy = t.grad(y);
        t.accumulate(a, gy.data(), gy.size());
    };
    return y;
}

Var Tape::relu(Var a) {
    check(a);
    Tensor out = value(a);
    for (size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0 ? out[i] : 0;
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, y](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gy = t.grad(y);
        const Tensor& x = t.value(a);
        Tensor& ga = t.grad_ref(a);
        for (size_t i = 0; i < gy.size(); ++i)
            if (x[i] > 0) ga[i] += gy[i];
    };
    return y;
}

Var Tape::gelu(Var a) {
    // tanh approximation; smooth everywhere, which keeps finite-difference
    // checks well behaved.
    check(a);
    const Tensor& x = value(a);
    Tensor out(x.shape());
    constexpr real kC = 0.7978845608028654;  // sqrt(2/pi)
    for (size_t i = 0; i < x.size(); ++i) {
        real v = x[i];
        out[i] = 0.5 * v * (1.0 + std::tanh(kC * (v + 0.044715 * v * v * v)));
    }
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, y](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gy = t.grad(y);
        const Tensor& x2 = t.value(a);
        Tensor& ga = t.grad_ref(a);
        constexpr real kC2 = 0.7978845608028654;
        for (size_t i = 0; i < gy.size(); ++i) {
            real v = x2[i];
            real u = kC2 * (v + 0.044715 * v * v * v);
            real th = std::tanh(u);
            real du = kC2 * (1.0 + 3.0 * 0.044715 * v * v);
            real d = 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * du;
            ga[i] += gy[i] * d;
        }
    };
    return y;
}

Var Tape::square(Var a) {
    check(a);
    const Tensor& x = value(a);
    Tensor out(x.shape());
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] * x[i];
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, y](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gy = t.grad(y);
        const Tensor& x2 = t.value(a);
        Tensor& ga = t.grad_ref(a);
        for (size_t i = 0; i < gy.size(); ++i) ga[i] += 2.0 * x2[i] * gy[i];
    };
    return y;
}

Var Tape::sqrt_guarded(Var a) {
    check(a);
    const Tensor& x = value(a);
    Tensor out(x.shape());
    for (size_t i = 0; i < x.size(); ++i) out[i] = std::sqrt(x[i] > 0 ? x[i] : 0);
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, y](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gy = t.grad(y);
        const Tensor& yv = t.value(y);
        Tensor& ga = t.grad_ref(a);
        for (size_t i = 0; i < gy.size(); ++i) {
            real denom = 2.0 * (yv[i] > kSqrtGuard ? yv[i] : kSqrtGuard);
            ga[i] += gy[i] / denom;
        }
    };
    return y;
}

Var Tape::reciprocal(Var a) {
    check(a);
    const Tensor& x = value(a);
    Tensor out(x.shape());
    for (size_t i = 0; i < x.size(); ++i) out[i] = 1.0 / x[i];
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, y](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gy = t.grad(y);
        const Tensor& yv = t.value(y);
        Tensor& ga = t.grad_ref(a);
        for (size_t i = 0; i < gy.size(); ++i) ga[i] -= gy[i] * yv[i] * yv[i];
    };
    return y;
}

Var Tape::clamp_min(Var a, real floor) {
    check(a);
    const Tensor& x = value(a);
    Tensor out(x.shape());
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] > floor ? x[i] : floor;
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, y, floor](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gy = t.grad(y);
        const Tensor& x2 = t.value(a);
        Tensor& ga = t.grad_ref(a);
        for (size_t i = 0; i < gy.size(); ++i)
            if (x2[i] > floor) ga[i] += gy[i];
    };
    return y;
}

Var Tape::sum_all(Var a) {
    check(a);
    Tensor out = Tensor::scalar(kernels::sum(value(a).data(), value(a).size()));
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, y](Tape& t) {
        if (!t.needs(a)) return;
        real g = t.grad(y)[0];
        Tensor& ga = t.grad_ref(a);
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    };
    return y;
}

Var Tape::mean_all(Var a) {
    Var s = sum_all(a);
    return scale(s, 1.0 / static_cast<real>(value(a).size()));
}

Var Tape::rows_mean(Var a) {
    check(a);
    const Tensor& x = value(a);
    require(x.rank() == 2, "rows_mean expects rank-2");
    int m = x.dim(0), n = x.dim(1);
    Tensor out({m});
    kernels::rows_sum(x.data(), out.data(), m, n);
    for (int i = 0; i < m; ++i) out[static_cast<size_t>(i)] /= n;
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, y, m, n](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gy = t.grad(y);
        Tensor& ga = t.grad_ref(a);
        for (int i = 0; i < m; ++i) {
            real g = gy[static_cast<size_t>(i)] / n;
            real* row = ga.data() + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) row[j] += g;
        }
    };
    return y;
}

Var Tape::broadcast_rows(Var v, int cols) {
    check(v);
    const Tensor& x = value(v);
    require(x.rank() == 1, "broadcast_rows expects rank-1");
    int m = x.dim(0);
    Tensor out({m, cols});
    for (int i = 0; i < m; ++i) {
        real val = x[static_cast<size_t>(i)];
        real* row = out.data() + static_cast<size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) row[j] = val;
    }
    Var y = make(std::move(out), needs(v), nullptr);
    nodes_.back().back = [v, y, m, cols](Tape& t) {
        if (!t.needs(v)) return;
        const Tensor& gy = t.grad(y);
        Tensor gv({m});
        kernels::rows_sum(gy.data(), gv.data(), m, cols);
        t.accumulate(v, gv.data(), gv.size());
    };
    return y;
}

Var Tape::mul_rowwise(Var a, Var v) {
    check(a);
    check(v);
    const Tensor& x = value(a);
    const Tensor& s = value(v);
    require(x.rank() == 2 && s.rank() == 1 && x.dim(0) == s.dim(0),
            "mul_rowwise shape mismatch");
    int m = x.dim(0), n = x.dim(1);
    Tensor out({m, n});
    for (int i = 0; i < m; ++i) {
        real sv = s[static_cast<size_t>(i)];
        const real* xr = x.data() + static_cast<size_t>(i) * n;
        real* yr = out.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) yr[j] = xr[j] * sv;
    }
    Var y = make(std::move(out), needs(a) || needs(v), nullptr);
    nodes_.back().back = [a, v, y, m, n](Tape& t) {
        const Tensor& gy = t.grad(y);
        if (t.needs(a)) {
            const Tensor& s2 = t.value(v);
            Tensor& ga = t.grad_ref(a);
            for (int i = 0; i < m; ++i) {
                real sv = s2[static_cast<size_t>(i)];
                const real* gr = gy.data() + static_cast<size_t>(i) * n;
                real* ar = ga.data() + static_cast<size_t>(i) * n;
                for (int j = 0; j < n; ++j) ar[j] += gr[j] * sv;
            }
        }
        if (t.needs(v)) {
            const Tensor& x2 = t.value(a);
            Tensor& gv = t.grad_ref(v);
            for (int i = 0; i < m; ++i) {
                const real* gr = gy.data() + static_cast<size_t>(i) * n;
                const real* xr = x2.data() + static_cast<size_t>(i) * n;
                real acc = 0;
                for (int j = 0; j < n; ++j) acc += gr[j] * xr[j];
                gv[static_cast<size_t>(i)] += acc;
            }
        }
    };
    return y;
}

Var Tape::add_rowwise(Var a, Var v) {
    check(a);
    check(v);
    const Tensor& x = value(a);
    const Tensor& s = value(v);
    require(x.rank() == 2 && s.rank() == 1 && x.dim(0) == s.dim(0),
            "add_rowwise shape mismatch");
    int m = x.dim(0), n = x.dim(1);
    Tensor out({m, n});
    for (int i = 0; i < m; ++i) {
        real sv = s[static_cast<size_t>(i)];
        const real* xr = x.data() + static_cast<size_t>(i) * n;
        real* yr = out.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) yr[j] = xr[j] + sv;
    }
    Var y = make(std::move(out), needs(a) || needs(v), nullptr);
    nodes_.back().back = [a, v, y, m, n](Tape& t) {
        const Tensor& gy = t.grad(y);
        if (t.needs(a)) t.accumulate(a, gy.data(), gy.size());
        if (t.needs(v)) {
            Tensor gv({m});
            kernels::rows_sum(gy.data(), gv.data(), m, n);
            t.accumulate(v, gv.data(), gv.size());
        }
    };
    return y;
}

Var Tape::softmax_rows(Var a) {
    check(a);
    const Tensor& x = value(a);
    require(x.rank() == 2, "softmax_rows expects rank-2");
    int m = x.dim(0), n = x.dim(1);
    Tensor out({m, n});
    kernels::softmax_rows(x.data(), out.data(), m, n);
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, y, m, n](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gy = t.grad(y);
        const Tensor& yv = t.value(y);
        Tensor& ga = t.grad_ref(a);
        for (int i = 0; i < m; ++i) {
            const real* gr = gy.data() + static_cast<size_t>(i) * n;
            const real* yr = yv.data() + static_cast<size_t>(i) * n;
            real dotv = 0;
            for (int j = 0; j < n; ++j) dotv += gr[j] * yr[j];
            real* ar = ga.data() + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) ar[j] += (gr[j] - dotv) * yr[j];
        }
    };
    return y;
}

Var Tape::concat_rows(Var a, Var b) {
    check(a);
    check(b);
    const Tensor& x = value(a);
    const Tensor& z = value(b);
    require(x.rank() == 2 && z.rank() == 2 && x.dim(1) == z.dim(1),
            "concat_rows column mismatch");
    int ma = x.dim(0), mb = z.dim(0), n = x.dim(1);
    Tensor out({ma + mb, n});
    std::copy(x.data(), x.data() + x.size(), out.data());
    std::copy(z.data(), z.data() + z.size(), out.data() + x.size());
    Var y = make(std::move(out), needs(a) || needs(b), nullptr);
    nodes_.back().back = [a, b, y, ma, mb, n](Tape& t) {
        const Tensor& gy = t.grad(y);
        size_t na = static_cast<size_t>(ma) * n;
        if (t.needs(a)) t.accumulate(a, gy.data(), na);
        if (t.needs(b)) t.accumulate(b, gy.data() + na, static_cast<size_t>(mb) * n);
    };
    return y;
}

Var Tape::slice_rows(Var a, int r0, int r1) {
    check(a);
    const Tensor& x = value(a);
    require(x.rank() == 2 && 0 <= r0 && r0 < r1 && r1 <= x.dim(0), "slice_rows range");
    int n = x.dim(1);
    Tensor out({r1 - r0, n});
    std::copy(x.data() + static_cast<size_t>(r0) * n, x.data() + static_cast<size_t>(r1) * n,
              out.data());
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, y, r0, n](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gy = t.grad(y);
        kernels::axpy(1.0, gy.data(), t.grad_ref(a).data() + static_cast<size_t>(r0) * n,
                      gy.size());
    };
    return y;
}

Var Tape::gather_cols(Var table, const std::vector<int>& ids) {
    check(table);
    const Tensor& tb = value(table);
    require(tb.rank() == 2, "gather_cols expects rank-2 table");
    int rows = tb.dim(0), vocab = tb.dim(1);
    int n = static_cast<int>(ids.size());
    for (int id : ids) require(0 <= id && id < vocab, "gather_cols index out of range");
    Tensor out({rows, n});
    for (int r = 0; r < rows; ++r) {
        for (int j = 0; j < n; ++j) out.at(r, j) = tb.at(r, ids[static_cast<size_t>(j)]);
    }
    Var y = make(std::move(out), needs(table), nullptr);
    nodes_.back().back = [table, y, ids, rows, n](Tape& t) {
        if (!t.needs(table)) return;
        const Tensor& gy = t.grad(y);
        Tensor& gt = t.grad_ref(table);
        for (int r = 0; r < rows; ++r) {
            for (int j = 0; j < n; ++j) {
                gt.at(r, ids[static_cast<size_t>(j)]) += gy.at(r, j);
            }
        }
    };
    return y;
}

Var Tape::avgpool2x2(Var a, int h, int w) {
    check(a);
    const Tensor& x = value(a);
    require(x.rank() == 2 && x.dim(1) == h * w && h % 2 == 0 && w % 2 == 0,
            "avgpool2x2 grid mismatch");
    int ch = x.dim(0);
    Tensor out({ch, (h / 2) * (w / 2)});
    kernels::avgpool2x2(x.data(), out.data(), ch, h, w);
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, y, ch, h, w](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gy = t.grad(y);
        Tensor ga({ch, h * w});
        kernels::upsample2x2(gy.data(), ga.data(), ch, h / 2, w / 2);
        kernels::scale(ga.data(), 0.25, ga.data(), ga.size());
        t.accumulate(a, ga.data(), ga.size());
    };
    return y;
}

Var Tape::upsample2x2(Var a, int h, int w) {
    check(a);
    const Tensor& x = value(a);
    require(x.rank() == 2 && x.dim(1) == h * w, "upsample2x2 grid mismatch");
    int ch = x.dim(0);
    Tensor out({ch, (h * 2) * (w * 2)});
    kernels::upsample2x2(x.data(), out.data(), ch, h, w);
    Var y = make(std::move(out), needs(a), nullptr);
    nodes_.back().back = [a, y, ch, h, w](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gy = t.grad(y);
        Tensor ga({ch, h * w});
        kernels::avgpool2x2(gy.data(), ga.data(), ch, h * 2, w * 2);
        kernels::scale(ga.data(), 4.0, ga.data(), ga.size());
        t.accumulate(a, ga.data(), ga.size());
    };
    return y;
}

Var Tape::frobenius_norm(Var a) {
    return sqrt_guarded(sum_all(square(a)));
}

void Tape::backward(Var root) {
    check(root);
    require(!backward_done_, "backward called twice on one tape");
    require(value(root).size() == 1, "backward root must be scalar");
    backward_done_ = true;
    grad_ref(root)[0] = 1.0;
    for (size_t i = nodes_.size(); i-- > 0;) {
        Node& node = nodes_[i];
        if (node.back && node.requires_grad) node.back(*this);
    }
}

}  // namespace affedit::ad
