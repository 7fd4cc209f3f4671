#include "core/tensor.hpp"

#include <cmath>
#include <sstream>

#include "core/errors.hpp"

namespace affedit::core {

size_t shape_numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw InvalidInput("negative tensor dimension");
        n *= static_cast<size_t>(d);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(shape_numel(shape_), real(0)) {}

Tensor::Tensor(std::vector<int> shape, std::vector<real> data) : shape_(std::move(shape)) {
    if (shape_numel(shape_) != data.size()) {
        throw InvalidInput("tensor data size does not match shape " + shape_str());
    }
    data_ = std::move(data);
}

Tensor Tensor::full(std::vector<int> shape, real value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

Tensor Tensor::reshaped(std::vector<int> new_shape) const {
    if (shape_numel(new_shape) != data_.size()) {
        throw InvalidInput("reshape changes element count");
    }
    return Tensor(std::move(new_shape), data_);
}

bool Tensor::all_finite() const {
    for (real v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(real value) {
    for (real& v : data_) v = value;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ",";
        os << shape_[i];
    }
    os << ")";
    return os.str();
}

}  // namespace affedit::core
