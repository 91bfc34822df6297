#include "specprop/linalg/matrix.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace specprop::linalg {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix data length does not match rows*cols");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::column(const Vector& v) { return Matrix(v.size(), 1, v.values()); }

Matrix Matrix::row(const Vector& v) { return Matrix(1, v.size(), v.values()); }

Vector Matrix::col(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::set_col(std::size_t c, const Vector& v) {
  if (v.size() != rows_) throw DimensionError("set_col: length mismatch");
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

std::string shape_string(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

Vector matvec(const Matrix& a, const Vector& v) {
  if (a.cols() != v.size()) {
    throw DimensionError("matvec: matrix is " + shape_string(a) + " but vector has length " +
                         std::to_string(v.size()));
  }
  Vector out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) out[r] = dot(a.row_span(r), v.span());
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b, bool transpose_a, bool transpose_b) {
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t k = transpose_a ? a.rows() : a.cols();
  const std::size_t kb = transpose_b ? b.cols() : b.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  if (k != kb) {
    throw DimensionError("matmul: inner dimensions differ (" + shape_string(a) +
                         (transpose_a ? "^T" : "") + " * " + shape_string(b) +
                         (transpose_b ? "^T" : "") + ")");
  }
  Matrix c(m, n);
  double* out = c.data();
  const double* pa = a.data();
  const double* pb = b.data();
  if (!transpose_a && !transpose_b) {
    for (std::size_t i = 0; i < m; ++i) {
      double* ci = out + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = pa[i * k + p];
        if (aip == 0.0) continue;
        const double* bp = pb + p * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
      }
    }
  } else if (transpose_a && !transpose_b) {
    // a is k x m
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = pb + p * n;
      for (std::size_t i = 0; i < m; ++i) {
        const double api = pa[p * m + i];
        if (api == 0.0) continue;
        double* ci = out + i * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
      }
    }
  } else if (!transpose_a && transpose_b) {
    // b is n x k
    for (std::size_t i = 0; i < m; ++i) {
      const double* ai = pa + i * k;
      for (std::size_t j = 0; j < n; ++j) {
        const double* bj = pb + j * k;
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
        out[i * n + j] = s;
      }
    }
  } else {
    // a is k x m, b is n x k
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += pa[p * m + i] * pb[j * k + p];
        out[i * n + j] = s;
      }
    }
  }
  return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

double frobenius_norm(const Matrix& a) { return norm2(a.span()); }

namespace {

template <typename T, typename F>
T zip(const T& a, const T& b, F f) {
  if (a.size() != b.size()) throw DimensionError("elementwise: size mismatch");
  T out = a;
  auto ob = out.span();
  auto bb = b.span();
  for (std::size_t i = 0; i < ob.size(); ++i) ob[i] = f(ob[i], bb[i]);
  return out;
}

}  // namespace

Vector operator+(const Vector& a, const Vector& b) {
  return zip(a, b, [](double x, double y) { return x + y; });
}
Vector operator-(const Vector& a, const Vector& b) {
  return zip(a, b, [](double x, double y) { return x - y; });
}
Vector operator*(double s, const Vector& a) {
  Vector out = a;
  for (double& x : out) x *= s;
  return out;
}
Matrix operator+(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw DimensionError("matrix +: shape mismatch");
  return zip(a, b, [](double x, double y) { return x + y; });
}
Matrix operator-(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw DimensionError("matrix -: shape mismatch");
  return zip(a, b, [](double x, double y) { return x - y; });
}
Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (double& x : out.span()) x *= s;
  return out;
}

double relative_asymmetry(const Matrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - a(j, i)));
  return worst / std::max(1.0, max_abs(a.span()));
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace specprop::linalg
