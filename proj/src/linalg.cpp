#include "mats/linalg.hpp"

#include "mats/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mats::linalg {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kPsdTol = 1e-10;
constexpr double kContrastTol = 1e-10;

}  // namespace

double max_abs(const Matrix& m) noexcept {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

SymMatrix::SymMatrix(Matrix m) {
    if (m.rows() != m.cols()) {
        std::ostringstream os;
        os << "symmetric matrix must be square, got " << m.rows() << "x" << m.cols();
        throw DimensionError(os.str());
    }
    const double scale = std::max(1.0, max_abs(m));
    const double asym = m.size() == 0 ? 0.0 : (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTol * scale) {
        std::ostringstream os;
        os << "matrix is not symmetric: max |m(i,j) - m(j,i)| = " << asym;
        throw SymmetryError(os.str());
    }
    m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::symmetrized(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw DimensionError("symmetric matrix must be square");
    }
    return SymMatrix(0.5 * (m + m.transpose()), Trusted{});
}

SpectralDecomp eigen_sym(const SymMatrix& m) {
    const Index n = m.dim();
    if (n == 0) {
        return {};
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix(), Eigen::ComputeEigenvectors);
    // Eigen returns ascending order; flip to descending.
    SpectralDecomp out;
    out.eigenvalues = solver.eigenvalues().reverse();
    out.eigenvectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

double default_rank_tol(Index dim) noexcept {
    return static_cast<double>(std::max<Index>(dim, 1)) * std::numeric_limits<double>::epsilon();
}

namespace {

double cutoff_for(const Vector& eig, Index dim, std::optional<double> rank_tol) {
    const double tol = rank_tol.value_or(default_rank_tol(dim));
    if (tol < 0.0) {
        throw ContractError("rank tolerance must be non-negative");
    }
    const double top = eig.size() == 0 ? 0.0 : eig.cwiseAbs().maxCoeff();
    return tol * top;
}

}  // namespace

Index rank_sym(const SymMatrix& m, std::optional<double> rank_tol) {
    const SpectralDecomp sd = eigen_sym(m);
    const double cut = cutoff_for(sd.eigenvalues, m.dim(), rank_tol);
    Index r = 0;
    for (Index i = 0; i < sd.eigenvalues.size(); ++i) {
        if (std::abs(sd.eigenvalues(i)) > cut) {
            ++r;
        }
    }
    return r;
}

SymMatrix pinv_sym(const SymMatrix& m, std::optional<double> rank_tol) {
    const Index n = m.dim();
    const SpectralDecomp sd = eigen_sym(m);
    const double cut = cutoff_for(sd.eigenvalues, n, rank_tol);

    Vector inv = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
        const double lambda = sd.eigenvalues(i);
        if (std::abs(lambda) > cut) {
            inv(i) = 1.0 / lambda;
        }
    }
    const Matrix& q = sd.eigenvectors;
    return SymMatrix::symmetrized(q * inv.asDiagonal() * q.transpose());
}

SymMatrix projection_from_contrast(const Matrix& h) {
    if (h.rows() == 0 || h.cols() == 0) {
        throw DimensionError("contrast matrix must be non-empty");
    }
    const double scale = std::max(1.0, max_abs(h));
    const Vector row_sums = h.rowwise().sum();
    const double worst = row_sums.cwiseAbs().maxCoeff();
    if (worst > kContrastTol * scale * static_cast<double>(h.cols())) {
        std::ostringstream os;
        os << "hypothesis matrix is not a contrast: max |row sum| = " << worst;
        throw ContractError(os.str());
    }
    const SymMatrix hht = SymMatrix::symmetrized(h * h.transpose());
    const SymMatrix hht_pinv = pinv_sym(hht);
    return SymMatrix::symmetrized(h.transpose() * hht_pinv.matrix() * h);
}

SymMatrix psd_sqrt(const SymMatrix& v) {
    const Index n = v.dim();
    if (n == 0) {
        return v;
    }
    const SpectralDecomp sd = eigen_sym(v);
    const double top = sd.eigenvalues.cwiseAbs().maxCoeff();
    Vector root(n);
    for (Index i = 0; i < n; ++i) {
        const double lambda = sd.eigenvalues(i);
        if (lambda < -kPsdTol * top) {
            std::ostringstream os;
            os << "matrix is not positive semi-definite: eigenvalue " << lambda;
            throw NotPsdError(os.str());
        }
        root(i) = lambda > 0.0 ? std::sqrt(lambda) : 0.0;
    }
    const Matrix& q = sd.eigenvectors;
    return SymMatrix::symmetrized(q * root.asDiagonal() * q.transpose());
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Matrix direct_sum(std::span<const Matrix> blocks) {
    Index rows = 0;
    Index cols = 0;
    for (const Matrix& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    Matrix out = Matrix::Zero(rows, cols);
    Index r = 0;
    Index c = 0;
    for (const Matrix& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

Matrix identity(Index d) { return Matrix::Identity(d, d); }

Matrix ones(Index d) { return Matrix::Ones(d, d); }

Matrix centering(Index d) {
    return Matrix::Identity(d, d) - Matrix::Ones(d, d) / static_cast<double>(d);
}

}  // namespace mats::linalg
