#ifndef VBC_GMRF_HPP
#define VBC_GMRF_HPP

#include <iosfwd>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "vbc/model.hpp"

namespace vbc {

// Symmetric sparse matrix, stored as its upper triangle (row <= col).
// Intrinsic GMRF priors are kept singular; the deficiency is recorded
// instead of patched with jitter.
class SparseSymmetric {
public:
    SparseSymmetric() = default;
    explicit SparseSymmetric(int dim) : dim_(dim) {}

    int dim() const { return dim_; }
    int rank_deficiency() const { return rank_deficiency_; }
    void set_rank_deficiency(int d) { rank_deficiency_ = d; }

    // Accumulates into the (min, max) entry; value must be finite.
    void add(int row, int col, double value);

    const std::map<std::pair<int, int>, double>& entries() const { return entries_; }

    Eigen::SparseMatrix<double> to_eigen() const;  // full symmetric matrix
    static SparseSymmetric from_eigen(const Eigen::SparseMatrix<double>& m);

    SparseSymmetric plus_diagonal(double shift) const;
    double quadratic_form(const Eigen::VectorXd& x) const;  // x' Q x
    Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;

    // Coordinate text dump, one "row col value" line per entry, 1-based.
    void dump_coordinate(std::ostream& os) const;

private:
    int dim_ = 0;
    int rank_deficiency_ = 0;
    std::map<std::pair<int, int>, double> entries_;
};

// Sparse Cholesky factorization (LDL' with a fill-reducing ordering).
// The ordering is analyzed once per sparsity pattern; refactor() reuses it
// across Newton iterations. Solves apply one step of iterative refinement.
class CholeskyHandle {
public:
    // Throws NotPositiveDefiniteError with the failing pivot's original index.
    static CholeskyHandle factorize(const Eigen::SparseMatrix<double>& Q);

    // New values, same pattern.
    void refactorize(const Eigen::SparseMatrix<double>& Q);

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;
    double log_determinant() const;
    int dim() const { return static_cast<int>(matrix_.rows()); }
    const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }

    // Maps z ~ N(0, I) to a draw from N(0, Q^{-1}).
    Eigen::VectorXd unwhiten(const Eigen::VectorXd& z) const;
    // Allocation-free variant for samplers; scratch and out must have dim() size.
    void unwhiten(const Eigen::VectorXd& z, Eigen::VectorXd& scratch,
                  Eigen::VectorXd& out) const;

    // Entries of Q^{-1} on the pattern of the factor, by the Takahashi
    // recursion; diag(i) is the i-th marginal variance.
    class SelectedInverse {
    public:
        double diag(int i) const;
        double at(int row, int col) const;  // 0 if outside the factor pattern

    private:
        friend class CholeskyHandle;
        Eigen::SparseMatrix<double> z_;            // lower, factor order
        Eigen::VectorXi perm_;                     // original -> factor order
    };
    const SelectedInverse& selected_inverse() const;

private:
    CholeskyHandle() = default;
    void compute(const Eigen::SparseMatrix<double>& Q, bool analyze);
    void check_positive_definite() const;

    std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> solver_;
    Eigen::SparseMatrix<double> matrix_;
    Eigen::VectorXd sqrt_d_;
    mutable std::shared_ptr<SelectedInverse> selected_;
};

SparseSymmetric assemble_prior_precision(const ModelSpec& model, const LatentLayout& layout);
CholeskyHandle factorize(const SparseSymmetric& Q);

// Columns of Q^{-1} at the indices J: column k solves Q M_k = e_{J_k}.
Eigen::MatrixXd selected_inverse_columns(const CholeskyHandle& handle,
                                         const std::vector<int>& J);

// Marginal variances Q^{ii}. Per-column solves up to dim 5000, the
// Takahashi recursion above; force_takahashi pins the second path for tests.
Eigen::VectorXd marginal_variances(const CholeskyHandle& handle,
                                   const std::vector<int>& indices,
                                   bool force_takahashi = false);
Eigen::VectorXd marginal_variances(const CholeskyHandle& handle,
                                   bool force_takahashi = false);  // all indices

// Row-wise quadratic forms (A Q^{-1} A')_ii. Same two paths as
// marginal_variances; the Takahashi path relies on every index pair that
// shares a row of A also appearing in Q (true when Q contains A'diag(c)A).
Eigen::VectorXd predictor_variances(const CholeskyHandle& handle,
                                    const Eigen::SparseMatrix<double>& A,
                                    bool force_takahashi = false);

}  // namespace vbc

#endif
