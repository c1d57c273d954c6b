#include "vbc/gmrf.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "vbc/errors.hpp"

namespace vbc {

void SparseSymmetric::add(int row, int col, double value) {
    if (row < 0 || col < 0 || row >= dim_ || col >= dim_) {
        throw NumericalError("SparseSymmetric::add: index out of range");
    }
    if (!std::isfinite(value)) {
        throw NumericalError("SparseSymmetric::add: nonfinite value at (" +
                             std::to_string(row) + ", " + std::to_string(col) + ")");
    }
    if (row > col) std::swap(row, col);
    entries_[{row, col}] += value;
}

Eigen::SparseMatrix<double> SparseSymmetric::to_eigen() const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * entries_.size());
    for (const auto& [rc, v] : entries_) {
        trip.emplace_back(rc.first, rc.second, v);
        if (rc.first != rc.second) trip.emplace_back(rc.second, rc.first, v);
    }
    Eigen::SparseMatrix<double> m(dim_, dim_);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

SparseSymmetric SparseSymmetric::from_eigen(const Eigen::SparseMatrix<double>& m) {
    if (m.rows() != m.cols()) throw NumericalError("from_eigen: matrix not square");
    SparseSymmetric s(static_cast<int>(m.rows()));
    for (int k = 0; k < m.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
            if (it.row() <= it.col() && it.value() != 0.0) {
                s.add(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
            }
        }
    }
    return s;
}

SparseSymmetric SparseSymmetric::plus_diagonal(double shift) const {
    SparseSymmetric out = *this;
    for (int i = 0; i < dim_; ++i) out.add(i, i, shift);
    return out;
}

double SparseSymmetric::quadratic_form(const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (const auto& [rc, v] : entries_) {
        if (rc.first == rc.second) {
            s += v * x[rc.first] * x[rc.first];
        } else {
            s += 2.0 * v * x[rc.first] * x[rc.second];
        }
    }
    return s;
}

Eigen::VectorXd SparseSymmetric::multiply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
    for (const auto& [rc, v] : entries_) {
        out[rc.first] += v * x[rc.second];
        if (rc.first != rc.second) out[rc.second] += v * x[rc.first];
    }
    return out;
}

void SparseSymmetric::dump_coordinate(std::ostream& os) const {
    os.precision(17);
    for (const auto& [rc, v] : entries_) {
        os << rc.first + 1 << ' ' << rc.second + 1 << ' ' << v << '\n';
    }
}

// ---------------------------------------------------------------------------

CholeskyHandle CholeskyHandle::factorize(const Eigen::SparseMatrix<double>& Q) {
    CholeskyHandle h;
    h.solver_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
    h.compute(Q, /*analyze=*/true);
    return h;
}

void CholeskyHandle::refactorize(const Eigen::SparseMatrix<double>& Q) {
    compute(Q, /*analyze=*/false);
}

void CholeskyHandle::compute(const Eigen::SparseMatrix<double>& Q, bool analyze) {
    matrix_ = Q;
    matrix_.makeCompressed();
    selected_.reset();
    if (analyze) {
        solver_->analyzePattern(matrix_);
    }
    solver_->factorize(matrix_);
    check_positive_definite();
    sqrt_d_ = solver_->vectorD().array().sqrt();
}

void CholeskyHandle::check_positive_definite() const {
    const Eigen::VectorXd& d = solver_->vectorD();
    for (int k = 0; k < d.size(); ++k) {
        if (!(d[k] > 0.0) || !std::isfinite(d[k])) {
            // k is a position in factor order; report the original index.
            const auto& perm = solver_->permutationP().indices();
            int original = k;
            for (int i = 0; i < perm.size(); ++i) {
                if (perm[i] == k) {
                    original = i;
                    break;
                }
            }
            throw NotPositiveDefiniteError(
                "matrix is not positive definite (pivot " + std::to_string(original) + ")",
                original);
        }
    }
    if (solver_->info() != Eigen::Success) {
        throw NumericalError("sparse factorization failed");
    }
}

Eigen::VectorXd CholeskyHandle::solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = solver_->solve(b);
    x += solver_->solve(b - matrix_ * x);  // one refinement step
    return x;
}

Eigen::MatrixXd CholeskyHandle::solve(const Eigen::MatrixXd& B) const {
    Eigen::MatrixXd X = solver_->solve(B);
    X += solver_->solve(B - matrix_ * X);
    return X;
}

double CholeskyHandle::log_determinant() const {
    return solver_->vectorD().array().log().sum();
}

Eigen::VectorXd CholeskyHandle::unwhiten(const Eigen::VectorXd& z) const {
    Eigen::VectorXd scratch(z.size()), out(z.size());
    unwhiten(z, scratch, out);
    return out;
}

void CholeskyHandle::unwhiten(const Eigen::VectorXd& z, Eigen::VectorXd& scratch,
                              Eigen::VectorXd& out) const {
    // Q = P' L D L' P, so x = P' L^{-T} D^{-1/2} z has covariance Q^{-1}.
    scratch = z.cwiseQuotient(sqrt_d_);
    solver_->matrixU().solveInPlace(scratch);
    const auto& perm = solver_->permutationP().indices();
    for (int i = 0; i < out.size(); ++i) out[i] = scratch[perm[i]];
}

double CholeskyHandle::SelectedInverse::diag(int i) const {
    return at(i, i);
}

double CholeskyHandle::SelectedInverse::at(int row, int col) const {
    int r = perm_[row];
    int c = perm_[col];
    if (r < c) std::swap(r, c);
    for (Eigen::SparseMatrix<double>::InnerIterator it(z_, c); it; ++it) {
        if (it.row() == r) return it.value();
        if (it.row() > r) break;
    }
    return 0.0;
}

namespace {

// Entry (row, col) of a compressed column matrix, assuming sorted inner
// indices; returns nullptr when absent.
const double* csc_find(const Eigen::SparseMatrix<double>& m, int row, int col) {
    const int* outer = m.outerIndexPtr();
    const int* inner = m.innerIndexPtr();
    const double* vals = m.valuePtr();
    const int* lo = inner + outer[col];
    const int* hi = inner + outer[col + 1];
    const int* it = std::lower_bound(lo, hi, row);
    if (it != hi && *it == row) return vals + (it - inner);
    return nullptr;
}

}  // namespace

const CholeskyHandle::SelectedInverse& CholeskyHandle::selected_inverse() const {
    if (selected_) return *selected_;

    // Work with L_llt = L sqrt(D), so that P Q P' = L_llt L_llt'.
    Eigen::SparseMatrix<double> L = solver_->matrixL();
    L.makeCompressed();
    const int n = static_cast<int>(L.rows());
    bool has_diag = true;
    for (int j = 0; j < n && has_diag; ++j) {
        has_diag = L.outerIndexPtr()[j] < L.outerIndexPtr()[j + 1] &&
                   L.innerIndexPtr()[L.outerIndexPtr()[j]] == j;
    }
    if (!has_diag) {
        Eigen::SparseMatrix<double> I(n, n);
        I.setIdentity();
        L = (L + I).eval();
        L.makeCompressed();
    }
    const Eigen::VectorXd sqrtD = solver_->vectorD().array().sqrt();
    for (int j = 0; j < n; ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(L, j); it; ++it) {
            it.valueRef() *= sqrtD[j];
        }
    }

    // Takahashi recursion on the pattern of L, columns processed backwards:
    //   Z_ij = -(1/L_jj) sum_{k>j} L_kj Z_(i,k)      (i > j)
    //   Z_jj = 1/L_jj^2 - (1/L_jj) sum_{k>j} L_kj Z_kj
    Eigen::SparseMatrix<double> Z = L;  // same pattern, values overwritten
    const int* outer = Z.outerIndexPtr();
    const int* inner = Z.innerIndexPtr();
    double* zval = Z.valuePtr();
    const double* lval = L.valuePtr();

    for (int j = n - 1; j >= 0; --j) {
        const int begin = outer[j];
        const int end = outer[j + 1];
        if (begin == end || inner[begin] != j) {
            throw NumericalError("selected inverse: factor misses a diagonal entry");
        }
        const double ljj = lval[begin];
        // Off-diagonal entries first; they only read columns > j.
        for (int p = end - 1; p > begin; --p) {
            const int i = inner[p];
            double s = 0.0;
            for (int q = begin + 1; q < end; ++q) {
                const int k = inner[q];
                const double* z = csc_find(Z, std::max(i, k), std::min(i, k));
                if (z) s += lval[q] * *z;
            }
            zval[p] = -s / ljj;
        }
        // Diagonal.
        double s = 0.0;
        for (int q = begin + 1; q < end; ++q) {
            s += lval[q] * zval[q];
        }
        zval[begin] = 1.0 / (ljj * ljj) - s / ljj;
    }

    auto sel = std::make_shared<SelectedInverse>();
    sel->z_ = std::move(Z);
    sel->perm_ = solver_->permutationP().indices();
    selected_ = std::move(sel);
    return *selected_;
}

// ---------------------------------------------------------------------------

namespace {

// tau * D'D for the difference operator of the block kind.
void add_difference_block(SparseSymmetric& Q, const LatentLayout::Block& blk, double tau) {
    const int s = blk.size;
    std::vector<Eigen::Triplet<double>> trip;
    int rows = 0;
    switch (blk.kind) {
        case EffectKind::RW1:
            rows = s - 1;
            for (int r = 0; r < rows; ++r) {
                trip.emplace_back(r, r, -1.0);
                trip.emplace_back(r, r + 1, 1.0);
            }
            break;
        case EffectKind::RW2:
            rows = s - 2;
            for (int r = 0; r < rows; ++r) {
                trip.emplace_back(r, r, 1.0);
                trip.emplace_back(r, r + 1, -2.0);
                trip.emplace_back(r, r + 2, 1.0);
            }
            break;
        case EffectKind::CyclicRW2:
            rows = s;
            for (int r = 0; r < rows; ++r) {
                trip.emplace_back(r, (r + s - 1) % s, 1.0);
                trip.emplace_back(r, r, -2.0);
                trip.emplace_back(r, (r + 1) % s, 1.0);
            }
            break;
        default:
            return;
    }
    Eigen::SparseMatrix<double> D(rows, s);
    D.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseMatrix<double> DtD = Eigen::SparseMatrix<double>(D.transpose()) * D;
    for (int k = 0; k < DtD.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(DtD, k); it; ++it) {
            if (it.row() <= it.col() && it.value() != 0.0) {
                Q.add(blk.offset + static_cast<int>(it.row()),
                      blk.offset + static_cast<int>(it.col()), tau * it.value());
            }
        }
    }
}

}  // namespace

SparseSymmetric assemble_prior_precision(const ModelSpec& model, const LatentLayout& layout) {
    SparseSymmetric Q(layout.m_star);
    int deficiency = 0;
    for (std::size_t b = 0; b < model.effects.size(); ++b) {
        const EffectSpec& e = model.effects[b];
        const LatentLayout::Block& blk = layout.blocks[b];
        if (!(e.prior_precision > 0.0)) {
            throw NumericalError("effect '" + e.name + "': nonpositive prior precision");
        }
        switch (e.kind) {
            case EffectKind::FixedEffect:
            case EffectKind::IID:
                for (int i = 0; i < blk.size; ++i) {
                    Q.add(blk.offset + i, blk.offset + i, e.prior_precision);
                }
                break;
            case EffectKind::RW1:
                add_difference_block(Q, blk, e.prior_precision);
                deficiency += 1;
                break;
            case EffectKind::RW2:
                add_difference_block(Q, blk, e.prior_precision);
                deficiency += 2;
                break;
            case EffectKind::CyclicRW2:
                add_difference_block(Q, blk, e.prior_precision);
                deficiency += 1;
                break;
        }
    }
    Q.set_rank_deficiency(deficiency);
    return Q;
}

CholeskyHandle factorize(const SparseSymmetric& Q) {
    return CholeskyHandle::factorize(Q.to_eigen());
}

Eigen::MatrixXd selected_inverse_columns(const CholeskyHandle& handle,
                                         const std::vector<int>& J) {
    const int n = handle.dim();
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(J.size()));
    for (std::size_t k = 0; k < J.size(); ++k) {
        if (J[k] < 0 || J[k] >= n) {
            throw NumericalError("selected_inverse_columns: index " + std::to_string(J[k]) +
                                 " out of range");
        }
        rhs(J[k], static_cast<Eigen::Index>(k)) = 1.0;
    }
    return handle.solve(rhs);
}

Eigen::VectorXd marginal_variances(const CholeskyHandle& handle,
                                   const std::vector<int>& indices,
                                   bool force_takahashi) {
    const int n = handle.dim();
    Eigen::VectorXd out(static_cast<Eigen::Index>(indices.size()));
    for (int i : indices) {
        if (i < 0 || i >= n) {
            throw NumericalError("marginal_variances: index " + std::to_string(i) +
                                 " out of range");
        }
    }
    if (!force_takahashi && n <= 5000) {
        const Eigen::MatrixXd cols = selected_inverse_columns(handle, indices);
        for (std::size_t k = 0; k < indices.size(); ++k) {
            out[static_cast<Eigen::Index>(k)] = cols(indices[k], static_cast<Eigen::Index>(k));
        }
    } else {
        const auto& sel = handle.selected_inverse();
        for (std::size_t k = 0; k < indices.size(); ++k) {
            out[static_cast<Eigen::Index>(k)] = sel.diag(indices[k]);
        }
    }
    return out;
}

Eigen::VectorXd marginal_variances(const CholeskyHandle& handle, bool force_takahashi) {
    std::vector<int> all(handle.dim());
    for (int i = 0; i < handle.dim(); ++i) all[i] = i;
    return marginal_variances(handle, all, force_takahashi);
}

Eigen::VectorXd predictor_variances(const CholeskyHandle& handle,
                                    const Eigen::SparseMatrix<double>& A,
                                    bool force_takahashi) {
    const Eigen::Index n = A.rows();
    const Eigen::Index m = A.cols();
    if (m != handle.dim()) {
        throw NumericalError("predictor_variances: dimension mismatch");
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> Arow(A);
    Eigen::VectorXd out(n);

    if (force_takahashi || m > 5000) {
        const auto& sel = handle.selected_inverse();
        for (Eigen::Index i = 0; i < n; ++i) {
            double v = 0.0;
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Arow, i); it;
                 ++it) {
                for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator jt(Arow, i);
                     jt; ++jt) {
                    v += it.value() * jt.value() *
                         sel.at(static_cast<int>(it.col()), static_cast<int>(jt.col()));
                }
            }
            out[i] = v;
        }
        return out;
    }

    const Eigen::Index chunk = 512;
    for (Eigen::Index i0 = 0; i0 < n; i0 += chunk) {
        const Eigen::Index width = std::min(chunk, n - i0);
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, width);
        for (Eigen::Index i = i0; i < i0 + width; ++i) {
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Arow, i); it;
                 ++it) {
                rhs(it.col(), i - i0) = it.value();
            }
        }
        const Eigen::MatrixXd sol = handle.solve(rhs);
        for (Eigen::Index i = i0; i < i0 + width; ++i) {
            double v = 0.0;
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Arow, i); it;
                 ++it) {
                v += it.value() * sol(it.col(), i - i0);
            }
            out[i] = v;
        }
    }
    return out;
}

}  // namespace vbc
