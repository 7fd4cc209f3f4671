#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace affedit {

// All numerics run in double precision. The gradient checks in the test
// suite compare against central finite differences at 1e-3..1e-4 relative
// tolerance, which single precision cannot reliably meet.
using real = double;

namespace core {

// Dense row-major tensor. Rank 1 for vectors, rank 2 for (channels x tokens)
// feature matrices, rank 3 for (channels x height x width) latents.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<real> data);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, real value);
    static Tensor scalar(real value) { return Tensor({1}, {value}); }

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(shape_.size()); }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    real* data() { return data_.data(); }
    const real* data() const { return data_.data(); }
    std::vector<real>& vec() { return data_; }
    const std::vector<real>& vec() const { return data_; }

    real& operator[](size_t i) { return data_[i]; }
    real operator[](size_t i) const { return data_[i]; }

    // Rank-2 accessors, (row, col) into row-major storage.
    real& at(int r, int c) { return data_[static_cast<size_t>(r) * shape_[1] + c]; }
    real at(int r, int c) const { return data_[static_cast<size_t>(r) * shape_[1] + c]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    Tensor reshaped(std::vector<int> new_shape) const;

    bool all_finite() const;
    void fill(real value);

    std::string shape_str() const;

  private:
    std::vector<int> shape_;
    std::vector<real> data_;
};

size_t shape_numel(const std::vector<int>& shape);

}  // namespace core
}  // namespace affedit
