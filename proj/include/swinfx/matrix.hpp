// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "swinfx/error.hpp"
#include "swinfx/fxp.hpp"

namespace swinfx {

// Dense row-major matrix. MatFx is the device path, MatReal the oracle path.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DomainError("Matrix: data length " + std::to_string(data_.size()) + " != " + std::to_string(rows_) +
                        " x " + std::to_string(cols_));
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  // Columns [first, first + count).
  Matrix col_slice(std::size_t first, std::size_t count) const {
    if (first + count > cols_) throw DomainError("Matrix::col_slice out of range");
    Matrix s(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < count; ++c) s(r, c) = (*this)(r, first + c);
    return s;
  }

  void set_col_slice(std::size_t first, const Matrix& src) {
    if (src.rows_ != rows_ || first + src.cols_ > cols_) throw DomainError("Matrix::set_col_slice out of range");
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < src.cols_; ++c) (*this)(r, first + c) = src(r, c);
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using MatFx = Matrix<Fx16>;
using MatReal = Matrix<double>;

MatReal to_real(const MatFx& m);
MatFx from_real(const MatReal& m);
std::vector<double> to_real(std::span<const Fx16> v);
std::vector<Fx16> from_real(std::span<const double> v);

}  // namespace swinfx
