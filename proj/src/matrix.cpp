#include "pucci/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace pucci {

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Matrix Matrix::mul(const Matrix& other) const {
    if (cols_ != other.rows_) throw std::invalid_argument("Matrix::mul: shape mismatch");
    Matrix r(rows_, other.cols_);
    for (int i = 0; i < rows_; ++i)
        for (int k = 0; k < cols_; ++k) {
            double v = at(i, k);
            if (v == 0.0) continue;
            for (int j = 0; j < other.cols_; ++j) r.at(i, j) += v * other.at(k, j);
        }
    return r;
}

Matrix Matrix::transpose() const {
    Matrix r(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) r.at(j, i) = at(i, j);
    return r;
}

std::vector<double> Matrix::column(int j) const {
    std::vector<double> c(rows_);
    for (int i = 0; i < rows_; ++i) c[i] = at(i, j);
    return c;
}

double Matrix::frob_norm() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
}

double Matrix::max_abs_diff(const Matrix& other) const {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw std::invalid_argument("Matrix::max_abs_diff: shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a_.size(); ++i) m = std::max(m, std::fabs(a_[i] - other.a_[i]));
    return m;
}

SymMatrix SymMatrix::diag(const std::vector<double>& d) {
    SymMatrix s(int(d.size()));
    for (int i = 0; i < s.n_; ++i) s.set(i, i, d[i]);
    return s;
}

SymMatrix SymMatrix::identity(int n, double scale) {
    SymMatrix s(n);
    for (int i = 0; i < n; ++i) s.set(i, i, scale);
    return s;
}

SymMatrix SymMatrix::from_dense(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("SymMatrix::from_dense: not square");
    SymMatrix s(m.rows());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j <= i; ++j) s.set(i, j, 0.5 * (m.at(i, j) + m.at(j, i)));
    return s;
}

Matrix SymMatrix::dense() const {
    Matrix m(n_, n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) m.at(i, j) = at(i, j);
    return m;
}

double SymMatrix::frob_norm() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) s += at(i, j) * at(i, j);
    return std::sqrt(s);
}

double SymMatrix::trace() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += at(i, i);
    return s;
}

double SymMatrix::max_abs_diff(const SymMatrix& other) const {
    if (n_ != other.n_) throw std::invalid_argument("SymMatrix::max_abs_diff: dim mismatch");
    double m = 0.0;
    for (size_t i = 0; i < p_.size(); ++i) m = std::max(m, std::fabs(p_[i] - other.p_[i]));
    return m;
}

}  // namespace pucci
