#pragma once

#include <span>
#include <vector>

namespace flowlab {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

// Dense row-major matrix; dimensions stay small (N <= ~10) throughout.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  static Mat identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

  Mat transposed() const;
  // (M + M^T)/2; square only.
  Mat symmetric_part() const;
  double trace() const;

  Vec apply(std::span<const double> x) const;
  Mat operator*(const Mat& other) const;
  Mat& operator+=(const Mat& other);
  Mat& operator*=(double s);

  const std::vector<double>& data() const { return data_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Frobenius norm; realizes the Hilbert-Schmidt norm of a finite matrix.
double hs_norm(const Mat& m);

// Matrix exponential by scaling-and-squaring with a Taylor core.
Mat expm(const Mat& a);

// Determinant via LU with partial pivoting (consumes a copy).
double determinant(Mat m);

// Eigen-decomposition of a symmetric tridiagonal matrix (implicit QL with
// Wilkinson shifts). diag/offdiag describe the matrix (offdiag has n-1
// entries); on return diag holds eigenvalues and first_components the first
// row of the orthonormal eigenvector matrix, both sorted by eigenvalue.
// This is the Golub-Welsch workhorse behind every Gauss rule here.
void symmetric_tridiagonal_eigen(std::vector<double>& diag,
                                 std::vector<double>& offdiag,
                                 std::vector<double>& first_components);

}  // namespace flowlab
