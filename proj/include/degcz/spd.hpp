#pragma once

#include "degcz/core.hpp"

namespace degcz {

// Relative symmetry tolerance used everywhere a matrix is checked for symmetry.
inline constexpr double kSymmetryTolerance = 1e-12;

struct SymmetricEigen {
    Vector values;   // ascending
    Matrix vectors;  // columns
};

// 2x2 uses a closed-form Jacobi rotation, larger sizes go through Eigen.
SymmetricEigen symmetric_eigen(const Matrix& h);

bool is_symmetric(const Matrix& h, double tol = kSymmetryTolerance);
double asymmetry(const Matrix& h);

class SpdMatrix {
public:
    // Symmetrizes (with a warning above tolerance); throws NotPositiveDefinite.
    explicit SpdMatrix(const Matrix& m);

    static SpdMatrix identity(int n);
    // Trusted construction from a spectral decomposition; values must be positive.
    static SpdMatrix from_spectrum(const Vector& values, const Matrix& vectors);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const { return m_; }
    const Vector& eigenvalues() const { return eig_.values; }
    const Matrix& eigenvectors() const { return eig_.vectors; }

    double norm() const { return eig_.values(eig_.values.size() - 1); }
    double min_eigenvalue() const { return eig_.values(0); }

    SpdMatrix inverse() const;
    SpdMatrix power(double s) const;
    SpdMatrix scaled(double t) const;
    Matrix log() const;

    template <class F>
    Matrix spectral_apply(F f) const {
        Vector mapped = eig_.values.unaryExpr(f);
        return eig_.vectors * mapped.asDiagonal() * eig_.vectors.transpose();
    }

private:
    SpdMatrix() = default;
    Matrix m_;
    SymmetricEigen eig_;
};

SpdMatrix spd_exp(const Matrix& h);
Matrix spd_log(const SpdMatrix& m);
Matrix spd_log(const Matrix& m);
double condition_number(const SpdMatrix& m);

// max |eigenvalue| of a symmetric matrix
double spectral_norm_sym(const Matrix& h);

// Loewner order margin: smallest eigenvalue of (b - a).
double loewner_margin(const Matrix& a, const Matrix& b);

}  // namespace degcz
