#include "pucci/symmat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pucci {

namespace {

double off_diag_norm(const Matrix& a) {
    double s = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            if (i != j) s += a.at(i, j) * a.at(i, j);
    return std::sqrt(s);
}

}  // namespace

EigenDecomposition eigen(const SymMatrix& S) {
    const int n = S.dim();
    Matrix a = S.dense();
    Matrix q = Matrix::identity(n);
    const double scale = 1.0 + S.frob_norm();
    const double tol = 1e-12 * scale;

    int sweep = 0;
    for (; sweep < 100; ++sweep) {
        if (off_diag_norm(a) <= tol) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int r = p + 1; r < n; ++r) {
                double apr = a.at(p, r);
                if (std::fabs(apr) <= 1e-300) continue;
                // Givens rotation zeroing a_pr
                double theta = (a.at(r, r) - a.at(p, p)) / (2.0 * apr);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                double tau = s / (1.0 + c);

                double app = a.at(p, p), arr = a.at(r, r);
                a.at(p, p) = app - t * apr;
                a.at(r, r) = arr + t * apr;
                a.at(p, r) = 0.0;
                a.at(r, p) = 0.0;
                for (int k = 0; k < n; ++k) {
                    if (k != p && k != r) {
                        double akp = a.at(k, p), akr = a.at(k, r);
                        a.at(k, p) = akp - s * (akr + tau * akp);
                        a.at(k, r) = akr + s * (akp - tau * akr);
                        a.at(p, k) = a.at(k, p);
                        a.at(r, k) = a.at(k, r);
                    }
                    double qkp = q.at(k, p), qkr = q.at(k, r);
                    q.at(k, p) = qkp - s * (qkr + tau * qkp);
                    q.at(k, r) = qkr + s * (qkp - tau * qkr);
                }
            }
        }
    }
    double off = off_diag_norm(a);
    if (off > tol)
        throw EigenFailure("eigen: Jacobi did not converge in 100 sweeps (off-diagonal " +
                           std::to_string(off) + ", dim " + std::to_string(n) + ")");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return a.at(i, i) < a.at(j, j); });

    EigenDecomposition d;
    d.eigenvalues.resize(n);
    d.eigenvectors = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
        d.eigenvalues[j] = a.at(order[j], order[j]);
        for (int i = 0; i < n; ++i) d.eigenvectors.at(i, j) = q.at(i, order[j]);
    }
    return d;
}

double frobenius(const SymMatrix& A, const SymMatrix& B) {
    if (A.dim() != B.dim()) throw std::invalid_argument("frobenius: dim mismatch");
    double s = 0.0;
    for (int i = 0; i < A.dim(); ++i)
        for (int j = 0; j < A.dim(); ++j) s += A.at(i, j) * B.at(i, j);
    return s;
}

static void check_ellipticity(double lam, double Lam) {
    if (!(lam > 0.0) || !(lam <= Lam))
        throw std::invalid_argument("ellipticity bounds require 0 < lam <= Lam (got lam=" +
                                    std::to_string(lam) + ", Lam=" + std::to_string(Lam) + ")");
}

double pucci_plus(const SymMatrix& S, double lam, double Lam) {
    check_ellipticity(lam, Lam);
    double v = 0.0;
    for (double e : eigen(S).eigenvalues) v += (e >= 0.0 ? Lam : lam) * e;
    return v;
}

SymMatrix optimal_diffusion(const SymMatrix& S, double lam, double Lam) {
    check_ellipticity(lam, Lam);
    EigenDecomposition d = eigen(S);
    const int n = S.dim();
    Matrix w(n, n);
    for (int i = 0; i < n; ++i) w.at(i, i) = (d.eigenvalues[i] >= 0.0 ? Lam : lam);
    Matrix a = d.eigenvectors.mul(w).mul(d.eigenvectors.transpose());
    return SymMatrix::from_dense(a);
}

Control sqrt_factor(const SymMatrix& A) {
    EigenDecomposition d = eigen(A);
    const int n = A.dim();
    double lo = d.eigenvalues.empty() ? 0.0 : d.eigenvalues.front();
    if (lo < -1e-8)
        throw std::invalid_argument("sqrt_factor: matrix is not PSD (min eigenvalue " +
                                    std::to_string(lo) + ")");
    Matrix r(n, n);
    for (int i = 0; i < n; ++i) r.at(i, i) = std::sqrt(std::max(d.eigenvalues[i], 0.0));
    Matrix sigma = d.eigenvectors.mul(r).mul(d.eigenvectors.transpose());
    // symmetrize exactly so sigma == sigma^T bit-for-bit
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) {
            double v = 0.5 * (sigma.at(i, j) + sigma.at(j, i));
            sigma.at(i, j) = v;
            sigma.at(j, i) = v;
        }
    Control c;
    c.diffusion = SymMatrix::from_dense(sigma.mul(sigma.transpose()));
    c.sigma = std::move(sigma);
    return c;
}

bool control_spectrum_ok(const Control& c, double lam, double Lam, double tol) {
    for (double e : eigen(c.diffusion).eigenvalues)
        if (e < lam - tol || e > Lam + tol) return false;
    return true;
}

ControlSet enumerate_controls(int dim, double lam, double Lam, int angles, int levels) {
    check_ellipticity(lam, Lam);
    if (dim < 1) throw std::invalid_argument("enumerate_controls: dim must be >= 1");
    if (angles < 1) throw std::invalid_argument("enumerate_controls: angles must be >= 1");
    if (levels < 2) throw std::invalid_argument("enumerate_controls: levels must be >= 2");

    std::vector<double> level_grid(levels);
    for (int j = 0; j < levels; ++j)
        level_grid[j] = lam + (Lam - lam) * double(j) / double(levels - 1);

    ControlSet set;
    set.dim = dim;
    set.lam = lam;
    set.Lam = Lam;
    set.angles = angles;
    set.levels = levels;

    auto push_unique = [&](Control&& c) {
        for (const Control& have : set.controls)
            if (have.sigma.max_abs_diff(c.sigma) <= 1e-12) return;
        set.controls.push_back(std::move(c));
    };

    push_unique(sqrt_factor(SymMatrix::identity(dim, lam)));
    push_unique(sqrt_factor(SymMatrix::identity(dim, Lam)));

    if (dim == 2) {
        for (int k = 0; k < angles; ++k) {
            double theta = 3.14159265358979323846 * double(k) / double(angles);
            double c = std::cos(theta), s = std::sin(theta);
            for (double e1 : level_grid)
                for (double e2 : level_grid) {
                    SymMatrix a(2);
                    a.set(0, 0, c * c * e1 + s * s * e2);
                    a.set(1, 1, s * s * e1 + c * c * e2);
                    a.set(1, 0, c * s * (e1 - e2));
                    push_unique(sqrt_factor(a));
                }
        }
    } else {
        // rotations are only enumerated in dimension 2; other dims use the
        // axis-aligned diagonal family
        std::vector<int> pick(dim, 0);
        for (;;) {
            std::vector<double> d(dim);
            for (int i = 0; i < dim; ++i) d[i] = level_grid[pick[i]];
            push_unique(sqrt_factor(SymMatrix::diag(d)));
            int axis = dim - 1;
            while (axis >= 0 && ++pick[axis] == levels) pick[axis--] = 0;
            if (axis < 0) break;
        }
    }
    return set;
}

}  // namespace pucci
