#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>

namespace mats::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense symmetric matrix.
///
/// Construction checks |m(i,j) - m(j,i)| <= 1e-10 * max(1, max|m|) and then
/// stores the exactly symmetric part (M + M^T) / 2, so downstream kernels can
/// rely on bitwise symmetry.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(Matrix m);

    /// Wraps a matrix that is symmetric by construction (e.g. A * D * A^T).
    /// Only the symmetrisation is applied, no tolerance check.
    static SymMatrix symmetrized(const Matrix& m);

    [[nodiscard]] const Matrix& matrix() const noexcept { return m_; }
    [[nodiscard]] Index dim() const noexcept { return m_.rows(); }
    [[nodiscard]] double operator()(Index i, Index j) const { return m_(i, j); }

private:
    struct Trusted {};
    SymMatrix(Matrix m, Trusted) : m_(std::move(m)) {}

    Matrix m_;
};

struct SpectralDecomp {
    Vector eigenvalues;   // descending
    Matrix eigenvectors;  // orthonormal columns, paired with eigenvalues
};

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
[[nodiscard]] SpectralDecomp eigen_sym(const SymMatrix& m);

/// Relative cutoff used when none is given: dim * machine epsilon.
[[nodiscard]] double default_rank_tol(Index dim) noexcept;

/// Eigenvalues with |lambda| <= rank_tol * max|lambda| count as zero.
[[nodiscard]] Index rank_sym(const SymMatrix& m, std::optional<double> rank_tol = std::nullopt);

/// Moore-Penrose pseudoinverse of a symmetric matrix via its spectrum.
/// `rank_tol` is relative to the largest |eigenvalue|.
[[nodiscard]] SymMatrix pinv_sym(const SymMatrix& m, std::optional<double> rank_tol = std::nullopt);

/// T = H^T (H H^T)^+ H, the orthogonal projection whose kernel matches that
/// of the contrast matrix H. Throws ContractError unless H * 1 = 0.
[[nodiscard]] SymMatrix projection_from_contrast(const Matrix& h);

/// PSD square root R with R * R = V. Eigenvalues down to -1e-10 * max|eig|
/// are clamped to zero; anything more negative throws NotPsdError.
[[nodiscard]] SymMatrix psd_sqrt(const SymMatrix& v);

[[nodiscard]] Matrix kron(const Matrix& a, const Matrix& b);
[[nodiscard]] Matrix direct_sum(std::span<const Matrix> blocks);
[[nodiscard]] Matrix identity(Index d);
[[nodiscard]] Matrix ones(Index d);       // J_d
[[nodiscard]] Matrix centering(Index d);  // P_d = I_d - J_d / d

[[nodiscard]] double max_abs(const Matrix& m) noexcept;

}  // namespace mats::linalg
