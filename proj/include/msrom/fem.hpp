#pragma once

#include "msrom/error.hpp"
#include "msrom/field.hpp"
#include "msrom/grid.hpp"
#include "msrom/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace msrom {

/// Q1 element matrices on an hx-by-hy rectangle, unit coefficient.
/// Local node order matches FineMesh::cells.
struct ElementMatrices {
    Eigen::Matrix4d stiffness;
    Eigen::Matrix4d mass;
};

inline ElementMatrices q1_element(double hx, double hy) {
    static constexpr std::array<double, 4> xi_node{0.0, 1.0, 1.0, 0.0};
    static constexpr std::array<double, 4> eta_node{0.0, 0.0, 1.0, 1.0};
    const double g = 0.5 / std::sqrt(3.0);
    const std::array<double, 2> gauss{0.5 - g, 0.5 + g};
    const double w = 0.25 * hx * hy;

    ElementMatrices e;
    e.stiffness.setZero();
    e.mass.setZero();
    for (double xi : gauss) {
        for (double eta : gauss) {
            Eigen::Vector4d n, dx, dy;
            for (int a = 0; a < 4; ++a) {
                const double sx = xi_node[a] > 0.5 ? xi : 1.0 - xi;
                const double sy = eta_node[a] > 0.5 ? eta : 1.0 - eta;
                const double dsx = xi_node[a] > 0.5 ? 1.0 : -1.0;
                const double dsy = eta_node[a] > 0.5 ? 1.0 : -1.0;
                n[a] = sx * sy;
                dx[a] = dsx * sy / hx;
                dy[a] = sx * dsy / hy;
            }
            e.stiffness += w * (dx * dx.transpose() + dy * dy.transpose());
            e.mass += w * (n * n.transpose());
        }
    }
    return e;
}

/// Assembles sum_c (stiff_coef[c] K_e + mass_coef[c] M_e) over the cells of
/// `box` in its local node numbering. Either coefficient span may be empty,
/// which drops that term. Coefficients are indexed by global fine cell id.
inline SparseMatrix assemble_box(const FineMesh& fine, const CellBox& box, std::span<const double> stiff_coef,
                                 std::span<const double> mass_coef) {
    const ElementMatrices e = q1_element(fine.hx, fine.hy);
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(box.width()) * box.height() * 16);
    for (int j = box.y0; j < box.y1; ++j) {
        for (int i = box.x0; i < box.x1; ++i) {
            const int c = fine.cell(i, j);
            const std::array<int, 4> ln{box.local_node(i, j), box.local_node(i + 1, j), box.local_node(i + 1, j + 1),
                                        box.local_node(i, j + 1)};
            const double ks = stiff_coef.empty() ? 0.0 : stiff_coef[c];
            const double ms = mass_coef.empty() ? 0.0 : mass_coef[c];
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    trips.emplace_back(ln[a], ln[b], ks * e.stiffness(a, b) + ms * e.mass(a, b));
        }
    }
    SparseMatrix m(box.node_count(), box.node_count());
    m.setFromTriplets(trips.begin(), trips.end());
    m.prune(0.0);
    return m;
}

inline CellBox whole_domain(const FineMesh& fine) { return CellBox{0, fine.nx, 0, fine.ny}; }

/// Full (unconstrained) stiffness matrix over all fine nodes.
inline SparseMatrix assemble_stiffness(const FineMesh& fine, const PermeabilityField& kappa) {
    if (!kappa.matches(fine)) {
        throw ConfigError("fem", "permeability field is " + std::to_string(kappa.nx()) + "x" +
                                     std::to_string(kappa.ny()) + " but mesh is " + std::to_string(fine.nx) + "x" +
                                     std::to_string(fine.ny));
    }
    return assemble_box(fine, whole_domain(fine), kappa.values(), {});
}

/// Full (unconstrained) mass matrix over all fine nodes.
inline SparseMatrix assemble_mass(const FineMesh& fine) {
    const std::vector<double> ones(static_cast<std::size_t>(fine.cell_count()), 1.0);
    return assemble_box(fine, whole_domain(fine), {}, ones);
}

/// Restriction of a full-node matrix to the rows/columns in `keep`.
inline SparseMatrix extract_block(const SparseMatrix& a, std::span<const int> rows, std::span<const int> cols) {
    std::vector<int> col_pos(a.cols(), -1);
    for (std::size_t k = 0; k < cols.size(); ++k) col_pos[cols[k]] = static_cast<int>(k);
    std::vector<int> row_pos(a.rows(), -1);
    for (std::size_t k = 0; k < rows.size(); ++k) row_pos[rows[k]] = static_cast<int>(k);
    std::vector<Triplet> trips;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        for (SparseMatrix::InnerIterator it(a, cols[k]); it; ++it) {
            const int r = row_pos[it.row()];
            if (r >= 0) trips.emplace_back(r, static_cast<int>(k), it.value());
        }
    }
    SparseMatrix out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

/// Linear system with homogeneous Dirichlet nodes eliminated.
struct ConstrainedSystem {
    SparseMatrix matrix;
    Vector rhs;
    std::vector<int> free_nodes;  // reduced index -> original index

    Vector extend(const Vector& reduced, Index full_size) const {
        Vector u = Vector::Zero(full_size);
        for (std::size_t k = 0; k < free_nodes.size(); ++k) u[free_nodes[k]] = reduced[static_cast<Index>(k)];
        return u;
    }
};

inline ConstrainedSystem apply_dirichlet(const SparseMatrix& a, const Vector& rhs, std::span<const int> boundary_nodes) {
    std::vector<std::uint8_t> fixed(a.rows(), 0);
    for (int b : boundary_nodes) {
        if (b < 0 || b >= a.rows()) throw ConfigError("fem", "boundary node id out of range");
        fixed[b] = 1;
    }
    ConstrainedSystem s;
    for (int n = 0; n < a.rows(); ++n)
        if (!fixed[n]) s.free_nodes.push_back(n);
    s.matrix = extract_block(a, s.free_nodes, s.free_nodes);
    s.rhs.resize(static_cast<Index>(s.free_nodes.size()));
    for (std::size_t k = 0; k < s.free_nodes.size(); ++k) s.rhs[static_cast<Index>(k)] = rhs[s.free_nodes[k]];
    return s;
}

/// Interior-unknown block of a full-node matrix (Dirichlet elimination).
inline SparseMatrix restrict_to_interior(const FineMesh& fine, const SparseMatrix& full) {
    return extract_block(full, fine.node_of_dof, fine.node_of_dof);
}

inline Vector extend_to_nodes(const FineMesh& fine, const Vector& dofs) {
    Vector u = Vector::Zero(fine.node_count());
    for (int d = 0; d < fine.dof_count(); ++d) u[fine.node_of_dof[d]] = dofs[d];
    return u;
}

inline Vector restrict_to_dofs(const FineMesh& fine, const Vector& nodes) {
    Vector u(fine.dof_count());
    for (int d = 0; d < fine.dof_count(); ++d) u[d] = nodes[fine.node_of_dof[d]];
    return u;
}

/// Nodal interpolant at the interior unknowns; boundary values are dropped.
inline Vector interpolate(const FineMesh& fine, const std::function<double(double, double)>& g) {
    Vector u(fine.dof_count());
    for (int d = 0; d < fine.dof_count(); ++d) {
        const int n = fine.node_of_dof[d];
        u[d] = g(fine.x(n), fine.y(n));
    }
    return u;
}

/// Sparse SPD solver. Factorizes once; each solve gets one step of iterative
/// refinement and is checked by its normwise backward error
/// ||Ax - b|| / (||A|| ||x|| + ||b||) <= 1e-10 (infinity norms).
class SpdSolver {
public:
    SpdSolver() = default;
    explicit SpdSolver(const SparseMatrix& a) { factorize(a); }

    void factorize(const SparseMatrix& a) {
        a_ = a;
        llt_.compute(a_);
        if (llt_.info() != Eigen::Success) {
            throw NumericalError("fem", "sparse Cholesky failed: matrix of size " + std::to_string(a.rows()) +
                                            " is not positive definite");
        }
        norm_ = 0.0;
        for (Index j = 0; j < a_.outerSize(); ++j) {
            double col = 0.0;
            for (SparseMatrix::InnerIterator it(a_, j); it; ++it) col += std::abs(it.value());
            norm_ = std::max(norm_, col);  // symmetric, so the 1-norm equals the infinity norm
        }
    }

    Vector solve(const Vector& b) const {
        if (b.size() != a_.rows()) throw ConfigError("fem", "right-hand side size mismatch");
        if (b.size() == 0 || b.lpNorm<Eigen::Infinity>() == 0.0) return Vector::Zero(b.size());
        Vector x = llt_.solve(b);
        Vector r = b - a_ * x;
        x += llt_.solve(r);
        r = b - a_ * x;
        const double scale = norm_ * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
        const double err = r.lpNorm<Eigen::Infinity>() / scale;
        if (!(err <= 1e-10)) {
            std::ostringstream m;
            m << "sparse solve backward error " << err << " above 1e-10";
            throw NumericalError("fem", m.str());
        }
        return x;
    }

    Index size() const { return a_.rows(); }

private:
    SparseMatrix a_;
    Eigen::SimplicialLLT<SparseMatrix> llt_;
    double norm_ = 0.0;
};

inline Vector solve_spd(const SparseMatrix& a, const Vector& b) { return SpdSolver(a).solve(b); }

struct GeneralizedEigen {
    Vector values;   // ascending
    Matrix vectors;  // B-orthonormal columns
};

/// Dense symmetric-definite pencil A v = lambda B v.
inline GeneralizedEigen eig_sym_generalized(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
        throw ConfigError("fem", "eigenproblem matrices must be square and equally sized");
    }
    Eigen::LLT<Matrix> check(b);
    if (check.info() != Eigen::Success) {
        throw NumericalError("fem", "right-hand matrix of the eigenproblem is not positive definite");
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, b, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) throw NumericalError("fem", "generalized eigensolver did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

/// Matrices defining the three norms on interior unknowns.
struct NormOperators {
    SparseMatrix unit_stiffness;   // kappa = 1
    SparseMatrix kappa_stiffness;
    SparseMatrix mass;

    static NormOperators build(const FineMesh& fine, const PermeabilityField& kappa) {
        return {restrict_to_interior(fine, assemble_stiffness(fine, PermeabilityField::constant(fine.nx, fine.ny))),
                restrict_to_interior(fine, assemble_stiffness(fine, kappa)),
                restrict_to_interior(fine, assemble_mass(fine))};
    }
};

struct Norms {
    double energy = 0.0;        // ||grad u||_{L2}
    double l2 = 0.0;
    double kappa_energy = 0.0;  // ||sqrt(kappa) grad u||_{L2}
};

inline double quadratic_form(const SparseMatrix& a, const Vector& u) { return std::sqrt(std::max(0.0, u.dot(a * u))); }

inline Norms norms(const NormOperators& ops, const Vector& u) {
    if (u.size() != ops.mass.rows()) throw ConfigError("fem", "vector size does not match mesh");
    return {quadratic_form(ops.unit_stiffness, u), quadratic_form(ops.mass, u), quadratic_form(ops.kappa_stiffness, u)};
}

} // namespace msrom
