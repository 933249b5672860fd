#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace atsclab {

// Dense row-major double matrix. Vectors are 1xN or Nx1 as convenient.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
  double* row(int i) { return a.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return a.data() + static_cast<size_t>(i) * cols; }

  size_t size() const { return a.size(); }
  void zero() { std::fill(a.begin(), a.end(), 0.0); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

inline void require_shape(const Mat& m, int r, int c, const char* what) {
  if (m.rows != r || m.cols != c)
    throw ShapeMismatch(std::string(what) + ": got " + std::to_string(m.rows) + "x" +
                        std::to_string(m.cols) + ", want " + std::to_string(r) + "x" +
                        std::to_string(c));
}

// C = A * B
void matmul_nn(const Mat& A, const Mat& B, Mat& C);
// C = A * B^T
void matmul_nt(const Mat& A, const Mat& B, Mat& C);
// C += A^T * B
void matmul_tn_acc(const Mat& A, const Mat& B, Mat& C);
// C += A * B
void matmul_nn_acc(const Mat& A, const Mat& B, Mat& C);

// y = x * W^T + b for row-major x (n,in), W (out,in), b (1,out)
void linear(const Mat& x, const Mat& W, const Mat& b, Mat& y);
// backward of linear: dx += dy * W, dW += dy^T * x, db += colsum(dy)
void linear_backward(const Mat& x, const Mat& W, const Mat& dy, Mat& dx, Mat& dW, Mat& db);

bool all_finite(const Mat& m);

}  // namespace atsclab
