#include "degcz/spd.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace degcz {

namespace {

SymmetricEigen jacobi2(double a, double b, double d) {
    SymmetricEigen out;
    out.values.resize(2);
    out.vectors.resize(2, 2);
    double scale = std::abs(a) + std::abs(d);
    if (b == 0.0 || std::abs(b) <= 1e-300 * scale) {
        if (a <= d) {
            out.values << a, d;
            out.vectors << 1, 0, 0, 1;
        } else {
            out.values << d, a;
            out.vectors << 0, 1, 1, 0;
        }
        return out;
    }
    double zeta = (d - a) / (2.0 * b);
    double t;
    if (std::abs(zeta) > 1e150) {
        t = 0.5 / zeta;
    } else {
        t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
    }
    double c = 1.0 / std::sqrt(1.0 + t * t);
    double s = t * c;
    double l1 = a - t * b;
    double l2 = d + t * b;
    // rotation columns: (c, -s) for l1 and (s, c) for l2
    if (l1 <= l2) {
        out.values << l1, l2;
        out.vectors << c, s, -s, c;
    } else {
        out.values << l2, l1;
        out.vectors << s, c, c, -s;
    }
    return out;
}

}  // namespace

double asymmetry(const Matrix& h) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < h.cols(); ++j) {
            double diff = std::abs(h(i, j) - h(j, i));
            double rel = diff / (1.0 + std::max(std::abs(h(i, j)), std::abs(h(j, i))));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

bool is_symmetric(const Matrix& h, double tol) {
    return h.rows() == h.cols() && asymmetry(h) <= tol;
}

SymmetricEigen symmetric_eigen(const Matrix& h) {
    if (h.rows() != h.cols() || h.rows() == 0) {
        throw InvalidInput("symmetric_eigen: matrix must be square and non-empty");
    }
    if (h.rows() == 1) {
        SymmetricEigen out;
        out.values = Vector::Constant(1, h(0, 0));
        out.vectors = Matrix::Identity(1, 1);
        return out;
    }
    if (h.rows() == 2) {
        return jacobi2(h(0, 0), 0.5 * (h(0, 1) + h(1, 0)), h(1, 1));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (h + h.transpose()));
    if (solver.info() != Eigen::Success) {
        throw InternalError("symmetric_eigen: eigensolver failed");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

SpdMatrix::SpdMatrix(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw InvalidInput("SpdMatrix: matrix must be square and non-empty");
    }
    if (!m.allFinite()) {
        throw NotPositiveDefinite("SpdMatrix: non-finite entries");
    }
    double asym = asymmetry(m);
    if (asym > kSymmetryTolerance) {
        std::ostringstream msg;
        msg << "SpdMatrix: symmetrizing input with relative asymmetry " << asym;
        warn(msg.str());
    }
    m_ = 0.5 * (m + m.transpose());
    eig_ = symmetric_eigen(m_);
    if (!(eig_.values(0) > 0.0)) {
        std::ostringstream msg;
        msg << "SpdMatrix: smallest eigenvalue " << eig_.values(0) << " is not positive";
        throw NotPositiveDefinite(msg.str());
    }
}

SpdMatrix SpdMatrix::identity(int n) {
    return from_spectrum(Vector::Ones(n), Matrix::Identity(n, n));
}

SpdMatrix SpdMatrix::from_spectrum(const Vector& values, const Matrix& vectors) {
    if (!(values.minCoeff() > 0.0) || !values.allFinite()) {
        throw NotPositiveDefinite("SpdMatrix: spectrum must be positive and finite");
    }
    SpdMatrix out;
    // keep the ascending convention
    std::vector<int> order(values.size());
    for (int i = 0; i < values.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int x, int y) { return values(x) < values(y); });
    out.eig_.values.resize(values.size());
    out.eig_.vectors.resize(vectors.rows(), vectors.cols());
    for (int i = 0; i < values.size(); ++i) {
        out.eig_.values(i) = values(order[i]);
        out.eig_.vectors.col(i) = vectors.col(order[i]);
    }
    out.m_ = out.eig_.vectors * out.eig_.values.asDiagonal() * out.eig_.vectors.transpose();
    out.m_ = (0.5 * (out.m_ + out.m_.transpose())).eval();
    return out;
}

SpdMatrix SpdMatrix::inverse() const {
    return from_spectrum(eig_.values.cwiseInverse(), eig_.vectors);
}

SpdMatrix SpdMatrix::power(double s) const {
    return from_spectrum(eig_.values.array().pow(s).matrix(), eig_.vectors);
}

SpdMatrix SpdMatrix::scaled(double t) const {
    if (!(t > 0.0)) throw InvalidInput("SpdMatrix::scaled: factor must be positive");
    return from_spectrum(eig_.values * t, eig_.vectors);
}

Matrix SpdMatrix::log() const {
    return spectral_apply([](double v) { return std::log(v); });
}

SpdMatrix spd_exp(const Matrix& h) {
    if (h.rows() != h.cols()) throw InvalidInput("spd_exp: matrix must be square");
    if (!is_symmetric(h)) throw InvalidInput("spd_exp: matrix is not symmetric");
    SymmetricEigen eig = symmetric_eigen(h);
    return SpdMatrix::from_spectrum(eig.values.array().exp().matrix(), eig.vectors);
}

Matrix spd_log(const SpdMatrix& m) { return m.log(); }

Matrix spd_log(const Matrix& m) { return SpdMatrix(m).log(); }

double condition_number(const SpdMatrix& m) { return m.norm() / m.min_eigenvalue(); }

double spectral_norm_sym(const Matrix& h) {
    SymmetricEigen eig = symmetric_eigen(h);
    return std::max(std::abs(eig.values(0)), std::abs(eig.values(eig.values.size() - 1)));
}

double loewner_margin(const Matrix& a, const Matrix& b) {
    return symmetric_eigen(b - a).values(0);
}

}  // namespace degcz
