#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "otprop/linalg.hpp"

namespace otprop {

/// A map R^n -> R^m applied atom by atom. Affine maps remember their
/// matrix and offset so that costs composed with them stay serializable
/// and translation-invariant.
class PointMap {
 public:
  using Fn = std::function<Vector(const Vector&)>;

  PointMap(int in_dim, int out_dim, Fn fn, std::string name = "map")
      : in_dim_(in_dim), out_dim_(out_dim), fn_(std::make_shared<Fn>(std::move(fn))),
        name_(std::move(name)) {
    detail::require(in_dim_ > 0 && out_dim_ > 0, "PointMap: dimensions must be positive");
  }

  static PointMap affine(const Matrix& a, const Vector& b, std::string name = "affine") {
    detail::require_dim(a.rows(), b.size(), "PointMap::affine: offset size");
    PointMap m(static_cast<int>(a.cols()), static_cast<int>(a.rows()),
               [a, b](const Vector& x) -> Vector { return a * x + b; }, std::move(name));
    m.matrix_ = a;
    m.offset_ = b;
    return m;
  }

  static PointMap linear(const Matrix& a, std::string name = "linear") {
    return affine(a, Vector::Zero(a.rows()), std::move(name));
  }

  static PointMap identity(int n) { return linear(Matrix::Identity(n, n), "identity"); }

  static PointMap translation(const Vector& b) {
    const auto n = static_cast<int>(b.size());
    return affine(Matrix::Identity(n, n), b, "translation");
  }

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  const std::string& name() const { return name_; }

  bool is_affine() const { return matrix_.has_value(); }
  /// Linear part of an affine map (empty for general maps).
  const std::optional<Matrix>& matrix() const { return matrix_; }
  const std::optional<Vector>& offset() const { return offset_; }

  Vector operator()(const Vector& x) const {
    detail::require_dim(x.size(), in_dim_, "PointMap '" + name_ + "': input dimension");
    Vector y = (*fn_)(x);
    detail::require_dim(y.size(), out_dim_, "PointMap '" + name_ + "': output dimension");
    return y;
  }

  /// The composition `next ∘ *this`.
  PointMap then(const PointMap& next) const {
    detail::require_dim(next.in_dim(), out_dim_, "PointMap::then: inner/outer dimension");
    if (is_affine() && next.is_affine()) {
      return affine(*next.matrix_ * *matrix_, *next.matrix_ * *offset_ + *next.offset_,
                    next.name_ + "(" + name_ + ")");
    }
    auto inner = fn_;
    auto outer = next.fn_;
    return PointMap(in_dim_, next.out_dim(),
                    [inner, outer](const Vector& x) -> Vector { return (*outer)((*inner)(x)); },
                    next.name_ + "(" + name_ + ")");
  }

  /// Two maps are the same object when they share the callable.
  bool same_as(const PointMap& other) const {
    if (is_affine() && other.is_affine()) {
      return linalg::same_values(*matrix_, *other.matrix_) &&
             linalg::same_values(*offset_, *other.offset_);
    }
    return fn_ == other.fn_;
  }

 private:
  int in_dim_;
  int out_dim_;
  std::shared_ptr<const Fn> fn_;
  std::string name_;
  std::optional<Matrix> matrix_;
  std::optional<Vector> offset_;
};

}  // namespace otprop
