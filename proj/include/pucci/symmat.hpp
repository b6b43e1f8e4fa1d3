#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pucci/matrix.hpp"

namespace pucci {

struct EigenDecomposition {
    std::vector<double> eigenvalues;  // ascending
    Matrix eigenvectors;              // columns, orthonormal, matching order
};

// Thrown when the cyclic Jacobi sweep limit is exceeded; carries diagnostics.
struct EigenFailure : std::runtime_error {
    explicit EigenFailure(const std::string& msg) : std::runtime_error(msg) {}
};

// Cyclic Jacobi rotations; off-diagonal tolerance 1e-12 (relative to the
// input scale), at most 100 sweeps.
EigenDecomposition eigen(const SymMatrix& S);

// Frobenius inner product <A,B> = sum_ij A_ij B_ij = tr(A B^T).
double frobenius(const SymMatrix& A, const SymMatrix& B);

// Lam * sum(positive eigenvalues) + lam * sum(negative eigenvalues).
// Requires 0 < lam <= Lam.
double pucci_plus(const SymMatrix& S, double lam, double Lam);

// The maximizer A* = Q diag(w) Q^T with w_i = Lam where e_i >= 0, else lam.
SymMatrix optimal_diffusion(const SymMatrix& S, double lam, double Lam);

// A diffusion coefficient paired with its covariance sigma sigma^T.
struct Control {
    Matrix sigma;
    SymMatrix diffusion;
};

// Principal symmetric PSD square root.  Eigenvalues in [-1e-10, 0) are
// clamped to zero; below -1e-8 is an error.
Control sqrt_factor(const SymMatrix& A);

// All eigenvalues of sigma sigma^T within [lam - tol, Lam + tol].
bool control_spectrum_ok(const Control& c, double lam, double Lam, double tol = 1e-9);

struct ControlSet {
    std::vector<Control> controls;
    int dim = 0;
    double lam = 0.0, Lam = 0.0;
    int angles = 0, levels = 0;

    size_t size() const { return controls.size(); }
    const Control& operator[](size_t i) const { return controls[i]; }
};

// Rotation/level discretization of the admissible diffusions.  Always
// contains sqrt(lam)*I and sqrt(Lam)*I (at indices 0 and, when distinct, 1);
// duplicates are removed.  dim == 2 enumerates rotations Q_theta over
// theta = k*pi/angles; other dims enumerate axis-aligned diagonals only.
ControlSet enumerate_controls(int dim, double lam, double Lam, int angles, int levels);

}  // namespace pucci
