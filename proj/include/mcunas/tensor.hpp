/*
 * Copyright 2026 The mcunas Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef MCUNAS_TENSOR_HPP
#define MCUNAS_TENSOR_HPP

#include <Eigen/Core>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <vector>

#include "common.hpp"

namespace mcunas {

using Shape = std::vector<int>;

inline int64_t shape_size(const Shape& s)
{
    int64_t n = 1;
    for (int d : s) {
        if (d <= 0)
            throw ShapeError("non-positive extent in shape");
        n *= d;
    }
    return n;
}

inline std::string shape_str(const Shape& s)
{
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i)
        os << (i ? "x" : "") << s[i];
    os << ']';
    return os.str();
}

/// Dense row-major tensor. Shape is fixed at construction; Scalar is float for
/// training and double for the finite-difference test mode.
template <typename Scalar>
class Tensor {
public:
    using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

    Tensor() = default;
    explicit Tensor(Shape shape)
        : shape_(std::move(shape)), data_(Array::Zero(shape_size(shape_)))
    {
    }
    Tensor(Shape shape, Scalar fill)
        : shape_(std::move(shape)), data_(Array::Constant(shape_size(shape_), fill))
    {
    }
    Tensor(Shape shape, std::initializer_list<Scalar> vals) : Tensor(std::move(shape))
    {
        if (static_cast<int64_t>(vals.size()) != size())
            throw ShapeError("initializer size does not match shape " + shape_str(shape_));
        int64_t i = 0;
        for (Scalar v : vals)
            data_[i++] = v;
    }

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int extent(int axis) const { return shape_[static_cast<size_t>(axis)]; }
    int64_t size() const { return data_.size(); }
    bool empty() const { return data_.size() == 0; }

    Scalar& at(int64_t flat) { return data_[flat]; }
    Scalar at(int64_t flat) const { return data_[flat]; }

    Scalar& operator()(int i) { return data_[i]; }
    Scalar operator()(int i) const { return data_[i]; }
    Scalar& operator()(int i, int j) { return data_[static_cast<int64_t>(i) * shape_[1] + j]; }
    Scalar operator()(int i, int j) const { return data_[static_cast<int64_t>(i) * shape_[1] + j]; }
    Scalar& operator()(int i, int j, int k)
    {
        return data_[(static_cast<int64_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    Scalar operator()(int i, int j, int k) const
    {
        return data_[(static_cast<int64_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    Scalar& operator()(int i, int j, int k, int l)
    {
        return data_[((static_cast<int64_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }
    Scalar operator()(int i, int j, int k, int l) const
    {
        return data_[((static_cast<int64_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }

    Array& array() { return data_; }
    const Array& array() const { return data_; }
    Scalar* data() { return data_.data(); }
    const Scalar* data() const { return data_.data(); }

    int64_t nonzeros() const { return (data_ != Scalar(0)).count(); }

    template <typename Other>
    Tensor<Other> cast() const
    {
        Tensor<Other> out(shape_);
        out.array() = data_.template cast<Other>();
        return out;
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor constant(Shape shape, Scalar v) { return Tensor(std::move(shape), v); }

private:
    Shape shape_;
    Array data_;
};

template <typename Scalar>
bool same_shape(const Tensor<Scalar>& a, const Tensor<Scalar>& b)
{
    return a.shape() == b.shape();
}

} // namespace mcunas

#endif
