#pragma once

#include "msrom/error.hpp"
#include "msrom/types.hpp"

#include <string>

namespace msrom {

struct ReducedState {
    Vector coeffs;
    int step = 0;
    double time = 0.0;
};

/// Galerkin projection of the interior stiffness and mass onto span(V).
class ReducedOperator {
public:
    ReducedOperator() = default;

    ReducedOperator(SparseMatrix basis, const SparseMatrix& a, const SparseMatrix& m) : basis_(std::move(basis)) {
        if (basis_.rows() != a.rows() || a.rows() != m.rows()) throw ConfigError("rom", "basis and operator sizes differ");
        const SparseMatrix av = a * basis_;
        const SparseMatrix mv = m * basis_;
        stiffness_ = Matrix(basis_.transpose() * av);
        mass_ = Matrix(basis_.transpose() * mv);
        symmetrize();
        check_mass();
    }

    const SparseMatrix& basis() const { return basis_; }
    const Matrix& stiffness() const { return stiffness_; }
    const Matrix& mass() const { return mass_; }
    int rank() const { return static_cast<int>(basis_.cols()); }

    /// Appends columns W, computing only the new blocks.
    void append(const SparseMatrix& w, const SparseMatrix& a, const SparseMatrix& m) {
        if (w.cols() == 0) return;
        const Index r = basis_.cols(), k = w.cols();
        const SparseMatrix aw = a * w;
        const SparseMatrix mw = m * w;
        Matrix s(r + k, r + k), b(r + k, r + k);
        s.topLeftCorner(r, r) = stiffness_;
        b.topLeftCorner(r, r) = mass_;
        if (r > 0) {
            s.topRightCorner(r, k) = Matrix(basis_.transpose() * aw);
            b.topRightCorner(r, k) = Matrix(basis_.transpose() * mw);
            s.bottomLeftCorner(k, r) = s.topRightCorner(r, k).transpose();
            b.bottomLeftCorner(k, r) = b.topRightCorner(r, k).transpose();
        }
        s.bottomRightCorner(k, k) = Matrix(w.transpose() * aw);
        b.bottomRightCorner(k, k) = Matrix(w.transpose() * mw);
        stiffness_ = std::move(s);
        mass_ = std::move(b);
        symmetrize();

        SparseMatrix grown(basis_.rows(), r + k);
        grown.reserve(basis_.nonZeros() + w.nonZeros());
        for (Index j = 0; j < r; ++j) {
            grown.startVec(j);
            for (SparseMatrix::InnerIterator it(basis_, j); it; ++it) grown.insertBack(it.row(), j) = it.value();
        }
        for (Index j = 0; j < k; ++j) {
            grown.startVec(r + j);
            for (SparseMatrix::InnerIterator it(w, j); it; ++it) grown.insertBack(it.row(), r + j) = it.value();
        }
        grown.finalize();
        basis_ = std::move(grown);
        check_mass();
    }

    /// Keeps the first r columns.
    void truncate(int r) {
        if (r >= rank()) return;
        basis_ = SparseMatrix(basis_.leftCols(r));
        stiffness_ = stiffness_.topLeftCorner(r, r).eval();
        mass_ = mass_.topLeftCorner(r, r).eval();
    }

private:
    void symmetrize() {
        stiffness_ = 0.5 * (stiffness_ + stiffness_.transpose()).eval();
        mass_ = 0.5 * (mass_ + mass_.transpose()).eval();
    }

    void check_mass() const {
        if (mass_.rows() == 0) return;
        Eigen::LLT<Matrix> llt(mass_);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("rom", "reduced mass matrix is not positive definite; basis columns are dependent");
        }
    }

    SparseMatrix basis_;
    Matrix stiffness_;
    Matrix mass_;
};

inline ReducedOperator project(const SparseMatrix& basis, const SparseMatrix& a, const SparseMatrix& m) {
    return ReducedOperator(basis, a, m);
}

inline Vector reconstruct(const SparseMatrix& basis, const Vector& coeffs) {
    if (coeffs.size() != basis.cols()) {
        throw ConfigError("rom", "coefficient vector of length " + std::to_string(coeffs.size()) +
                                     " for a basis of rank " + std::to_string(basis.cols()));
    }
    return basis * coeffs;
}

inline Vector reconstruct(const SparseMatrix& basis, const ReducedState& s) { return reconstruct(basis, s.coeffs); }

/// M-orthogonal projection of w onto span(V).
inline ReducedState reduced_l2_projection(const ReducedOperator& op, const SparseMatrix& m, const Vector& w) {
    if (w.size() != m.rows()) throw ConfigError("rom", "field vector size mismatch");
    Eigen::LLT<Matrix> llt(op.mass());
    if (llt.info() != Eigen::Success) throw NumericalError("rom", "reduced mass matrix is not positive definite");
    const Vector rhs = op.basis().transpose() * (m * w);
    return {llt.solve(rhs), 0, 0.0};
}

} // namespace msrom
