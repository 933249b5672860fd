#include "mat.hpp"

#include <cmath>

namespace atsclab {

void matmul_nn(const Mat& A, const Mat& B, Mat& C) {
  if (A.cols != B.rows) throw ShapeMismatch("matmul_nn inner dims");
  C = Mat(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    const double* arow = A.row(i);
    double* crow = C.row(i);
    for (int k = 0; k < A.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = B.row(k);
      for (int j = 0; j < B.cols; ++j) crow[j] += aik * brow[j];
    }
  }
}

void matmul_nt(const Mat& A, const Mat& B, Mat& C) {
  if (A.cols != B.cols) throw ShapeMismatch("matmul_nt inner dims");
  C = Mat(A.rows, B.rows);
  for (int i = 0; i < A.rows; ++i) {
    const double* arow = A.row(i);
    double* crow = C.row(i);
    for (int j = 0; j < B.rows; ++j) {
      const double* brow = B.row(j);
      double s = 0.0;
      for (int k = 0; k < A.cols; ++k) s += arow[k] * brow[k];
      crow[j] = s;
    }
  }
}

void matmul_tn_acc(const Mat& A, const Mat& B, Mat& C) {
  if (A.rows != B.rows) throw ShapeMismatch("matmul_tn_acc inner dims");
  if (C.rows != A.cols || C.cols != B.cols) throw ShapeMismatch("matmul_tn_acc output");
  for (int k = 0; k < A.rows; ++k) {
    const double* arow = A.row(k);
    const double* brow = B.row(k);
    for (int i = 0; i < A.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = C.row(i);
      for (int j = 0; j < B.cols; ++j) crow[j] += aki * brow[j];
    }
  }
}

void matmul_nn_acc(const Mat& A, const Mat& B, Mat& C) {
  if (A.cols != B.rows) throw ShapeMismatch("matmul_nn_acc inner dims");
  if (C.rows != A.rows || C.cols != B.cols) throw ShapeMismatch("matmul_nn_acc output");
  for (int i = 0; i < A.rows; ++i) {
    const double* arow = A.row(i);
    double* crow = C.row(i);
    for (int k = 0; k < A.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = B.row(k);
      for (int j = 0; j < B.cols; ++j) crow[j] += aik * brow[j];
    }
  }
}

void linear(const Mat& x, const Mat& W, const Mat& b, Mat& y) {
  if (x.cols != W.cols) throw ShapeMismatch("linear input dim");
  if (b.rows != 1 || b.cols != W.rows) throw ShapeMismatch("linear bias dim");
  matmul_nt(x, W, y);
  for (int i = 0; i < y.rows; ++i) {
    double* yrow = y.row(i);
    const double* brow = b.row(0);
    for (int j = 0; j < y.cols; ++j) yrow[j] += brow[j];
  }
}

void linear_backward(const Mat& x, const Mat& W, const Mat& dy, Mat& dx, Mat& dW, Mat& db) {
  matmul_nn_acc(dy, W, dx);
  matmul_tn_acc(dy, x, dW);
  for (int i = 0; i < dy.rows; ++i) {
    const double* row = dy.row(i);
    double* brow = db.row(0);
    for (int j = 0; j < dy.cols; ++j) brow[j] += row[j];
  }
}

bool all_finite(const Mat& m) {
  for (const double v : m.a)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace atsclab
