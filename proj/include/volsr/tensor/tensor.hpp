#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace volsr::nn {

using Shape = std::vector<std::size_t>;

/// Number of elements; 1 for rank 0.
std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major array. 5-D activations are laid out [N, D, H, W, C].
template <typename T>
class Tensor {
public:
    using value_type = T;

    /// Rank-0 zero.
    Tensor() : data_(1, T{0}) {}
    explicit Tensor(Shape shape, T fill = T{0});
    Tensor(Shape shape, std::vector<T> data);

    static Tensor scalar(T v) { return Tensor(Shape{}, std::vector<T>{v}); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }
    T* raw() { return data_.data(); }
    const T* raw() const { return data_.data(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    /// Value of a rank-0 (or single-element) tensor.
    T item() const;

    /// Same data, new shape of equal element count.
    Tensor reshaped(Shape shape) const&;
    Tensor reshaped(Shape shape) &&;

    void fill(T v);
    bool all_finite() const;

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return Tensor<U>(shape_, std::move(out));
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

} // namespace volsr::nn
