#pragma once

#include "msrom/error.hpp"
#include "msrom/fem.hpp"
#include "msrom/field.hpp"
#include "msrom/grid.hpp"
#include "msrom/types.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace msrom {

/// Snapshot functions of one neighborhood: kappa-harmonic extensions of the
/// Kronecker data on each boundary fine node. Column j lives on the local
/// nodes of D_i and equals delta_j on the boundary of D_i.
inline Matrix build_snapshots(const FineMesh& fine, const PermeabilityField& kappa, const LocalIndexing& li) {
    const SparseMatrix a = assemble_box(fine, li.box, kappa.values(), {});
    const SparseMatrix a_ii = extract_block(a, li.interior, li.interior);
    const SparseMatrix a_ib = extract_block(a, li.interior, li.boundary);

    Eigen::SimplicialLLT<SparseMatrix> llt(a_ii);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("msbasis", "interior block of a neighborhood stiffness matrix is singular");
    }
    const Matrix rhs = -Matrix(a_ib);
    const Matrix inner = llt.solve(rhs);

    Matrix psi = Matrix::Zero(li.node_count(), li.L());
    for (int j = 0; j < li.L(); ++j) psi(li.boundary[j], j) = 1.0;
    for (std::size_t k = 0; k < li.interior.size(); ++k) psi.row(li.interior[k]) = inner.row(static_cast<Index>(k));
    return psi;
}

/// Multiscale partition of unity. chi[i] holds the values of chi_i on the
/// local nodes of neighborhood D_i (zero on its boundary).
struct PartitionOfUnity {
    std::vector<Vector> chi;
};

/// Bilinear coarse hat of coarse node (I, J) evaluated at (x, y).
inline double coarse_hat(const CoarseMesh& c, int I, int J, double x, double y) {
    const double sx = std::max(0.0, 1.0 - std::abs(x * c.NX - I));
    const double sy = std::max(0.0, 1.0 - std::abs(y * c.NY - J));
    return sx * sy;
}

inline PartitionOfUnity build_partition_of_unity(const FineMesh& fine, const CoarseMesh& coarse,
                                                 const PermeabilityField& kappa, const NeighborhoodIndexing& nbhd) {
    PartitionOfUnity pou;
    pou.chi.reserve(nbhd.size());
    for (const auto& li : nbhd) pou.chi.push_back(Vector::Zero(li.node_count()));

    // Index of the neighborhood centred at coarse node (I, J), or -1.
    auto neighborhood_of = [&](int I, int J) -> int {
        if (I < 1 || J < 1 || I >= coarse.NX || J >= coarse.NY) return -1;
        return (J - 1) * (coarse.NX - 1) + (I - 1);
    };

    for (int e = 0; e < coarse.element_count(); ++e) {
        const CellBox& box = coarse.elements[e];
        const LocalIndexing el = index_box(fine, box);
        const SparseMatrix a = assemble_box(fine, box, kappa.values(), {});
        const SparseMatrix a_ii = extract_block(a, el.interior, el.interior);
        const SparseMatrix a_ib = extract_block(a, el.interior, el.boundary);
        Eigen::SimplicialLLT<SparseMatrix> llt(a_ii);
        if (llt.info() != Eigen::Success) throw NumericalError("msbasis", "coarse element stiffness is singular");

        const int I0 = box.x0 / coarse.cells_per_x;
        const int J0 = box.y0 / coarse.cells_per_y;
        for (int corner = 0; corner < 4; ++corner) {
            const int I = I0 + (corner & 1);
            const int J = J0 + (corner >> 1);
            const int owner = neighborhood_of(I, J);
            if (owner < 0) continue;

            Vector g(el.L());
            for (int k = 0; k < el.L(); ++k) {
                const int n = el.nodes[el.boundary[k]];
                g[k] = coarse_hat(coarse, I, J, fine.x(n), fine.y(n));
            }
            const Vector inner = el.interior.empty() ? Vector() : Vector(llt.solve(-(a_ib * g)));

            const LocalIndexing& dst = nbhd[owner];
            Vector& chi = pou.chi[owner];
            auto put = [&](int global_node, double value) {
                const int gi = fine.node_i(global_node), gj = fine.node_j(global_node);
                chi[dst.box.local_node(gi, gj)] = value;
            };
            for (int k = 0; k < el.L(); ++k) put(el.nodes[el.boundary[k]], g[k]);
            for (std::size_t k = 0; k < el.interior.size(); ++k) put(el.nodes[el.interior[k]], inner[static_cast<Index>(k)]);
        }
    }
    return pou;
}

/// kappa_hat per fine cell: kappa * H^2 * cell average of sum_i |grad chi_i|^2.
/// The Q1 gradient energy on a cell is exact through the element stiffness.
inline std::vector<double> kappa_hat(const FineMesh& fine, const CoarseMesh& coarse, const PermeabilityField& kappa,
                                     const NeighborhoodIndexing& nbhd, const PartitionOfUnity& pou) {
    const Eigen::Matrix4d ke = q1_element(fine.hx, fine.hy).stiffness;
    const double area = fine.hx * fine.hy;
    std::vector<double> grad2(static_cast<std::size_t>(fine.cell_count()), 0.0);
    for (std::size_t i = 0; i < nbhd.size(); ++i) {
        const CellBox& box = nbhd[i].box;
        const Vector& chi = pou.chi[i];
        for (int cj = box.y0; cj < box.y1; ++cj) {
            for (int ci = box.x0; ci < box.x1; ++ci) {
                const Eigen::Vector4d v{chi[box.local_node(ci, cj)], chi[box.local_node(ci + 1, cj)],
                                        chi[box.local_node(ci + 1, cj + 1)], chi[box.local_node(ci, cj + 1)]};
                grad2[fine.cell(ci, cj)] += v.dot(ke * v) / area;
            }
        }
    }
    const double h2 = coarse.H * coarse.H;
    for (int c = 0; c < fine.cell_count(); ++c) grad2[c] *= kappa[c] * h2;
    return grad2;
}

struct LocalSpectrum {
    Vector eigenvalues;  // ascending, the first l of them
    Matrix modes;        // snapshot-expanded eigenfunctions on local nodes of D_i
};

/// Smallest `l` eigenpairs of  int kappa grad phi . grad v = lambda int kappa_hat phi v
/// posed on the snapshot space of one neighborhood.
inline LocalSpectrum spectral_select(const FineMesh& fine, const PermeabilityField& kappa,
                                     const std::vector<double>& khat, const LocalIndexing& li, const Matrix& snapshots,
                                     int l) {
    if (l < 1 || l > snapshots.cols()) {
        throw ConfigError("msbasis", "requested " + std::to_string(l) + " eigenfunctions from a snapshot space of size " +
                                         std::to_string(snapshots.cols()));
    }
    const SparseMatrix a = assemble_box(fine, li.box, kappa.values(), {});
    const SparseMatrix m = assemble_box(fine, li.box, {}, khat);
    Matrix s = snapshots.transpose() * (a * snapshots);
    Matrix b = snapshots.transpose() * (m * snapshots);
    s = 0.5 * (s + s.transpose()).eval();
    b = 0.5 * (b + b.transpose()).eval();
    GeneralizedEigen eig;
    try {
        eig = eig_sym_generalized(s, b);
    } catch (const NumericalError&) {
        throw NumericalError("msbasis", "kappa_hat mass matrix is not positive definite; partition of unity is broken");
    }
    return {eig.values.head(l), snapshots * eig.vectors.leftCols(l)};
}

struct BasisTag {
    int neighborhood = 0;
    int rank = 0;  // position within the neighborhood; online columns use -1
};

/// Global offline space V_off on interior unknowns.
struct OfflineSpace {
    int nx = 0, ny = 0, NX = 0, NY = 0;
    std::vector<int> per_neighborhood;  // l_i actually kept
    std::vector<Vector> eigenvalues;    // per neighborhood, ascending
    SparseMatrix basis;                 // dof_count x r
    std::vector<BasisTag> tags;

    int rank() const { return static_cast<int>(basis.cols()); }
};

namespace detail {

// Modified Gram-Schmidt in the inner product of `a`, twice for stability.
// Columns whose remaining norm falls below `drop_tol` times their original
// norm are removed.
inline Matrix orthonormalize(const SparseMatrix& a, const Matrix& cols, std::vector<int>& kept, double drop_tol = 1e-10) {
    Matrix q(cols.rows(), cols.cols());
    Matrix aq(cols.rows(), cols.cols());
    int r = 0;
    kept.clear();
    for (Index j = 0; j < cols.cols(); ++j) {
        Vector v = cols.col(j);
        const double n0 = std::sqrt(std::max(0.0, v.dot(a * v)));
        if (n0 == 0.0) continue;
        for (int pass = 0; pass < 2; ++pass)
            for (int k = 0; k < r; ++k) v -= aq.col(k).dot(v) * q.col(k);
        const Vector av = a * v;
        const double n1 = std::sqrt(std::max(0.0, v.dot(av)));
        if (n1 <= drop_tol * n0) continue;
        q.col(r) = v / n1;
        aq.col(r) = av / n1;
        kept.push_back(static_cast<int>(j));
        ++r;
    }
    return q.leftCols(r);
}

} // namespace detail

/// Multiplies eigenmodes by chi_i, orthonormalizes per neighborhood in the
/// kappa-energy inner product and assembles the global sparse basis.
inline OfflineSpace assemble_offline(const FineMesh& fine, const CoarseMesh& coarse, const PermeabilityField& kappa,
                                     const NeighborhoodIndexing& nbhd, const PartitionOfUnity& pou,
                                     const std::vector<LocalSpectrum>& spectra) {
    OfflineSpace off;
    off.nx = fine.nx;
    off.ny = fine.ny;
    off.NX = coarse.NX;
    off.NY = coarse.NY;
    std::vector<Triplet> trips;
    int col = 0;
    for (std::size_t i = 0; i < nbhd.size(); ++i) {
        const LocalIndexing& li = nbhd[i];
        const LocalSpectrum& sp = spectra[i];
        Matrix local(static_cast<Index>(li.interior.size()), sp.modes.cols());
        for (std::size_t k = 0; k < li.interior.size(); ++k) {
            const int ln = li.interior[k];
            local.row(static_cast<Index>(k)) = pou.chi[i][ln] * sp.modes.row(ln);
        }
        const SparseMatrix a = assemble_box(fine, li.box, kappa.values(), {});
        const SparseMatrix a_ii = extract_block(a, li.interior, li.interior);
        std::vector<int> kept;
        const Matrix q = detail::orthonormalize(a_ii, local, kept);
        if (static_cast<Index>(kept.size()) < local.cols()) {
            std::cerr << "msbasis: neighborhood " << i << " lost " << local.cols() - static_cast<Index>(kept.size())
                      << " basis vector(s) to rank deficiency\n";
        }
        Vector ev(static_cast<Index>(kept.size()));
        for (std::size_t k = 0; k < kept.size(); ++k) ev[static_cast<Index>(k)] = sp.eigenvalues[kept[k]];
        off.eigenvalues.push_back(ev);
        off.per_neighborhood.push_back(static_cast<int>(kept.size()));
        for (Index j = 0; j < q.cols(); ++j) {
            for (std::size_t k = 0; k < li.interior_dofs.size(); ++k) {
                const double v = q(static_cast<Index>(k), j);
                if (v != 0.0) trips.emplace_back(li.interior_dofs[k], col, v);
            }
            off.tags.push_back({static_cast<int>(i), static_cast<int>(j)});
            ++col;
        }
    }
    off.basis.resize(fine.dof_count(), col);
    off.basis.setFromTriplets(trips.begin(), trips.end());
    return off;
}

/// Everything the offline stage produces, kept for the online stage.
struct OfflineStage {
    NeighborhoodIndexing neighborhoods;
    PartitionOfUnity pou;
    std::vector<double> kappa_hat;
    std::vector<Matrix> snapshots;
    std::vector<LocalSpectrum> spectra;
    OfflineSpace space;
};

/// Runs snapshots, partition of unity, spectral selection and assembly with
/// l eigenfunctions in every neighborhood.
inline OfflineStage build_offline(const FineMesh& fine, const CoarseMesh& coarse, const PermeabilityField& kappa, int l) {
    OfflineStage st;
    st.neighborhoods = neighborhood_indexing(fine, coarse);
    st.pou = build_partition_of_unity(fine, coarse, kappa, st.neighborhoods);
    st.kappa_hat = kappa_hat(fine, coarse, kappa, st.neighborhoods, st.pou);
    for (const auto& li : st.neighborhoods) {
        st.snapshots.push_back(build_snapshots(fine, kappa, li));
        st.spectra.push_back(spectral_select(fine, kappa, st.kappa_hat, li, st.snapshots.back(), l));
    }
    st.space = assemble_offline(fine, coarse, kappa, st.neighborhoods, st.pou, st.spectra);
    return st;
}

inline void save_offline(const OfflineSpace& off, std::ostream& os) {
    os << "msrom-offline 1\n";
    os << off.nx << ' ' << off.ny << ' ' << off.NX << ' ' << off.NY << '\n';
    os << off.per_neighborhood.size() << '\n';
    os << std::setprecision(17);
    for (std::size_t i = 0; i < off.per_neighborhood.size(); ++i) {
        os << off.per_neighborhood[i];
        for (Index k = 0; k < off.eigenvalues[i].size(); ++k) os << ' ' << off.eigenvalues[i][k];
        os << '\n';
    }
    os << off.basis.rows() << ' ' << off.basis.cols() << '\n';
    for (int j = 0; j < off.basis.cols(); ++j) {
        os << off.tags[j].neighborhood << ' ' << off.tags[j].rank << ' '
           << off.basis.col(j).nonZeros();
        for (SparseMatrix::InnerIterator it(off.basis, j); it; ++it) os << ' ' << it.row() << ' ' << it.value();
        os << '\n';
    }
}

inline OfflineSpace load_offline(std::istream& is) {
    auto fail = [](const std::string& what) -> ConfigError { return ConfigError("msbasis", "offline file: " + what); };
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "msrom-offline" || version != 1) throw fail("bad magic header");
    OfflineSpace off;
    std::size_t n = 0;
    if (!(is >> off.nx >> off.ny >> off.NX >> off.NY >> n)) throw fail("bad dimensions");
    for (std::size_t i = 0; i < n; ++i) {
        int l = 0;
        if (!(is >> l) || l < 0) throw fail("bad neighborhood record " + std::to_string(i));
        Vector ev(l);
        for (int k = 0; k < l; ++k)
            if (!(is >> ev[k])) throw fail("bad eigenvalue in neighborhood " + std::to_string(i));
        off.per_neighborhood.push_back(l);
        off.eigenvalues.push_back(ev);
    }
    Index rows = 0, cols = 0;
    if (!(is >> rows >> cols)) throw fail("bad basis dimensions");
    std::vector<Triplet> trips;
    for (Index j = 0; j < cols; ++j) {
        BasisTag t;
        Index nnz = 0;
        if (!(is >> t.neighborhood >> t.rank >> nnz)) throw fail("bad column header " + std::to_string(j));
        for (Index k = 0; k < nnz; ++k) {
            int r = 0;
            double v = 0.0;
            if (!(is >> r >> v) || r < 0 || r >= rows) throw fail("bad entry in column " + std::to_string(j));
            trips.emplace_back(r, static_cast<int>(j), v);
        }
        off.tags.push_back(t);
    }
    off.basis.resize(rows, cols);
    off.basis.setFromTriplets(trips.begin(), trips.end());
    return off;
}

inline void save_offline(const OfflineSpace& off, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("msbasis", "cannot open " + path);
    save_offline(off, os);
}

inline OfflineSpace load_offline(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("msbasis", "cannot open " + path);
    return load_offline(is);
}

} // namespace msrom
