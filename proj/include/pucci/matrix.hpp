#pragma once

#include <cstddef>
#include <vector>

namespace pucci {

// Dense row-major matrix for the small sizes this project needs (N <= 16).
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), a_(size_t(rows) * cols, 0.0) {}

    static Matrix identity(int n);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& at(int i, int j) { return a_[size_t(i) * cols_ + j]; }
    double at(int i, int j) const { return a_[size_t(i) * cols_ + j]; }

    Matrix mul(const Matrix& other) const;
    Matrix transpose() const;
    std::vector<double> column(int j) const;
    double frob_norm() const;

    // max |a_ij - b_ij|; matrices must have equal shape
    double max_abs_diff(const Matrix& other) const;

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

// Symmetric matrix with a single packed store per (i,j) pair, so symmetry is
// structural rather than a runtime invariant.  Lower triangle, row-major.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(int n) : n_(n), p_(size_t(n) * (n + 1) / 2, 0.0) {}

    static SymMatrix diag(const std::vector<double>& d);
    static SymMatrix identity(int n, double scale = 1.0);
    // symmetrizes (averages the off-diagonal pair) while converting
    static SymMatrix from_dense(const Matrix& m);

    int dim() const { return n_; }

    double at(int i, int j) const { return p_[idx(i, j)]; }
    void set(int i, int j, double v) { p_[idx(i, j)] = v; }
    void add(int i, int j, double v) { p_[idx(i, j)] += v; }

    Matrix dense() const;
    double frob_norm() const;
    double trace() const;
    double max_abs_diff(const SymMatrix& other) const;

private:
    static size_t idx(int i, int j) {
        if (i < j) { int t = i; i = j; j = t; }
        return size_t(i) * (i + 1) / 2 + j;
    }
    int n_ = 0;
    std::vector<double> p_;
};

}  // namespace pucci
