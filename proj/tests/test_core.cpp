#include "msrom/fem.hpp"
#include "msrom/field.hpp"
#include "msrom/grid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

using namespace msrom;

namespace {

int boundary_count(const FineMesh& m) {
    int n = 0;
    for (auto b : m.on_boundary) n += b;
    return n;
}

Matrix dense(const SparseMatrix& a) { return Matrix(a); }

// Exact Q1 integrals on an hx-by-hy rectangle from the 1D factors
// int N_a N_b = h/3 (same node) or h/6, int N_a' N_b' = +-1/h.
Eigen::Matrix4d exact_stiffness(double hx, double hy) {
    const int xs[4] = {0, 1, 1, 0}, ys[4] = {0, 0, 1, 1};
    Eigen::Matrix4d k;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const double sx = (xs[a] == xs[b] ? 1.0 : -1.0) / hx;
            const double sy = (ys[a] == ys[b] ? 1.0 : -1.0) / hy;
            const double mx = hx * (xs[a] == xs[b] ? 1.0 / 3 : 1.0 / 6);
            const double my = hy * (ys[a] == ys[b] ? 1.0 / 3 : 1.0 / 6);
            k(a, b) = sx * my + sy * mx;
        }
    return k;
}

Eigen::Matrix4d exact_mass(double hx, double hy) {
    const int xs[4] = {0, 1, 1, 0}, ys[4] = {0, 0, 1, 1};
    Eigen::Matrix4d m;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            m(a, b) = hx * (xs[a] == xs[b] ? 1.0 / 3 : 1.0 / 6) * hy * (ys[a] == ys[b] ? 1.0 / 3 : 1.0 / 6);
    return m;
}

} // namespace

// ---------------------------------------------------------------- grid

TEST(Grid, SmallestMeshCounts) {
    const FineMesh m = build_fine_mesh(2, 2);
    EXPECT_EQ(m.node_count(), 9);
    EXPECT_EQ(m.cell_count(), 4);
    EXPECT_EQ(boundary_count(m), 8);
    EXPECT_EQ(m.dof_count(), 1);
}

TEST(Grid, RectangularAndLargeCounts) {
    const FineMesh r = build_fine_mesh(4, 2);
    EXPECT_EQ(r.node_count(), 15);
    EXPECT_EQ(r.cell_count(), 8);
    const FineMesh big = build_fine_mesh(256, 256);
    EXPECT_EQ(big.node_count(), 66049);
    EXPECT_DOUBLE_EQ(big.hx, 1.0 / 256);
}

TEST(Grid, RejectsTooFewCells) {
    EXPECT_THROW(build_fine_mesh(1, 4), ConfigError);
    EXPECT_THROW(build_fine_mesh(4, 0), ConfigError);
}

TEST(Grid, BoundaryFlagsLieOnUnitSquareBoundary) {
    const FineMesh m = build_fine_mesh(6, 4);
    for (int n = 0; n < m.node_count(); ++n) {
        const bool edge = m.x(n) == 0.0 || m.y(n) == 0.0 || std::abs(m.x(n) - 1.0) < 1e-15 ||
                          std::abs(m.y(n) - 1.0) < 1e-15;
        EXPECT_EQ(static_cast<bool>(m.on_boundary[n]), edge) << "node " << n;
        EXPECT_EQ(m.dof_of_node[n] < 0, edge);
    }
    for (int d = 0; d < m.dof_count(); ++d) EXPECT_EQ(m.dof_of_node[m.node_of_dof[d]], d);
}

TEST(Grid, LexicographicNumberingXFastest) {
    const FineMesh m = build_fine_mesh(3, 2);
    EXPECT_EQ(m.node(1, 0), 1);
    EXPECT_EQ(m.node(0, 1), 4);
    EXPECT_EQ(m.cells[m.cell(1, 1)], (std::array<int, 4>{5, 6, 10, 9}));
    // Interior dof index = (j-1)(nx-1) + (i-1).
    const FineMesh g = build_fine_mesh(4, 4);
    EXPECT_EQ(g.dof_of_node[g.node(2, 3)], (3 - 1) * 3 + (2 - 1));
}

TEST(Grid, CoarseNeighborhoodCounts) {
    const FineMesh f256 = build_fine_mesh(256, 256);
    EXPECT_EQ(build_coarse_mesh(f256, 16, 16).interior_count(), 225);

    const FineMesh f4 = build_fine_mesh(4, 4);
    const CoarseMesh c4 = build_coarse_mesh(f4, 2, 2);
    ASSERT_EQ(c4.interior_count(), 1);
    EXPECT_EQ(c4.neighborhoods[0].x0, 0);
    EXPECT_EQ(c4.neighborhoods[0].x1, 4);
    EXPECT_EQ(c4.neighborhoods[0].y0, 0);
    EXPECT_EQ(c4.neighborhoods[0].y1, 4);

    const FineMesh f64 = build_fine_mesh(64, 64);
    const CoarseMesh c64 = build_coarse_mesh(f64, 8, 8);
    EXPECT_EQ(c64.interior_count(), 49);
    for (const auto& d : c64.neighborhoods) EXPECT_EQ(d.width() * d.height(), 256);
}

TEST(Grid, CoarseDivisibilityEnforced) {
    const FineMesh f = build_fine_mesh(10, 10);
    EXPECT_THROW(build_coarse_mesh(f, 3, 5), ConfigError);
    EXPECT_THROW(build_coarse_mesh(f, 0, 5), ConfigError);
}

TEST(Grid, EveryFineCellInExactlyOneCoarseElement) {
    const FineMesh f = build_fine_mesh(12, 8);
    const CoarseMesh c = build_coarse_mesh(f, 3, 2);
    std::vector<int> hits(f.cell_count(), 0);
    for (std::size_t e = 0; e < c.element_cells.size(); ++e)
        for (int cell : c.element_cells[e]) {
            ++hits[cell];
            EXPECT_EQ(c.element_of_cell(cell % f.nx, cell / f.nx), static_cast<int>(e));
        }
    for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Grid, NeighborhoodIsUnionOfFourElements) {
    const FineMesh f = build_fine_mesh(16, 16);
    const CoarseMesh c = build_coarse_mesh(f, 4, 4);
    for (std::size_t i = 0; i < c.neighborhoods.size(); ++i) {
        const auto [I, J] = c.interior_nodes[i];
        std::set<int> from_elements;
        for (int e = 0; e < c.element_count(); ++e) {
            const int EI = e % c.NX, EJ = e / c.NX;
            if ((EI == I || EI == I - 1) && (EJ == J || EJ == J - 1))
                from_elements.insert(c.element_cells[e].begin(), c.element_cells[e].end());
        }
        const LocalIndexing li = index_box(f, c.neighborhoods[i]);
        EXPECT_EQ(std::set<int>(li.cells.begin(), li.cells.end()), from_elements);
    }
}

TEST(Grid, NeighborhoodBoundarySizes) {
    const FineMesh f4 = build_fine_mesh(4, 4);
    const auto n4 = neighborhood_indexing(f4, build_coarse_mesh(f4, 2, 2));
    EXPECT_EQ(n4[0].L(), 16);
    for (int b : n4[0].boundary) EXPECT_TRUE(f4.on_boundary[n4[0].nodes[b]]);

    const FineMesh f64 = build_fine_mesh(64, 64);
    const auto n64 = neighborhood_indexing(f64, build_coarse_mesh(f64, 8, 8));
    for (const auto& li : n64) {
        EXPECT_EQ(li.L(), 4 * 16);
        EXPECT_EQ(static_cast<int>(li.interior.size()), li.node_count() - li.L());
    }
}

TEST(Grid, LocalIndexingPartitionAndMapsConsistent) {
    const FineMesh f = build_fine_mesh(12, 12);
    const auto nb = neighborhood_indexing(f, build_coarse_mesh(f, 3, 3));
    for (const auto& li : nb) {
        std::set<int> inner(li.interior.begin(), li.interior.end());
        std::set<int> bound(li.boundary.begin(), li.boundary.end());
        for (int b : bound) EXPECT_EQ(inner.count(b), 0u);
        EXPECT_EQ(static_cast<int>(inner.size() + bound.size()), li.node_count());
        EXPECT_GT(li.L(), 0);
        std::set<int> globals(li.nodes.begin(), li.nodes.end());
        EXPECT_EQ(static_cast<int>(globals.size()), li.node_count());
        for (int local = 0; local < li.node_count(); ++local) {
            const int g = li.nodes[local];
            EXPECT_EQ(li.box.local_node(f.node_i(g), f.node_j(g)), local);
        }
        for (std::size_t k = 0; k < li.interior.size(); ++k)
            EXPECT_EQ(f.node_of_dof[li.interior_dofs[k]], li.nodes[li.interior[k]]);
    }
}

// ---------------------------------------------------------------- field

TEST(Field, TextRoundTripIsExact) {
    const FineMesh m = build_fine_mesh(8, 6);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(1e-3, 1e5);
    std::vector<double> v(48);
    for (double& x : v) x = u(rng);
    const PermeabilityField k(8, 6, v);
    std::stringstream ss;
    save_field(k, ss);
    EXPECT_EQ(load_field(ss), k);
    EXPECT_TRUE(k.matches(m));
}

TEST(Field, LoadErrorsNameTheLine) {
    auto fails_with = [](const std::string& text, const std::string& needle) {
        std::istringstream is(text);
        try {
            load_field(is);
        } catch (const ConfigError& e) {
            return std::string(e.what()).find(needle) != std::string::npos;
        }
        return false;
    };
    EXPECT_TRUE(fails_with("2 x\n1 1\n1 1\n", "line 1"));
    EXPECT_TRUE(fails_with("2 2\n1 1\n1 abc\n", "line 3"));
    EXPECT_TRUE(fails_with("2 2\n1 1\n1 -4\n", "non-positive"));
    EXPECT_TRUE(fails_with("2 2\n1 1\n1\n", "expected 4"));
    EXPECT_TRUE(fails_with("2 2\n1 1\n1 1 1\n", "more than 4"));
    EXPECT_TRUE(fails_with("", "missing header"));
}

TEST(Field, ConstructorValidates) {
    EXPECT_THROW(PermeabilityField(2, 2, {1.0, 1.0, 1.0}), ConfigError);
    EXPECT_THROW(PermeabilityField(2, 2, {1.0, 1.0, 0.0, 1.0}), ConfigError);
}

TEST(Field, GeneratorIsDeterministicAndTwoValued) {
    const FineMesh m = build_fine_mesh(64, 64);
    const PermeabilityField a = generate_channelized(m, 1e4, 7);
    EXPECT_EQ(a, generate_channelized(m, 1e4, 7));
    EXPECT_NE(a, generate_channelized(m, 1e4, 8));
    EXPECT_DOUBLE_EQ(a.contrast(), 1e4);
    for (double v : a.values()) EXPECT_TRUE(v == 1.0 || v == 1e4);
}

TEST(Field, GeneratorContrastEdgeCases) {
    const FineMesh m = build_fine_mesh(16, 16);
    const PermeabilityField one = generate_channelized(m, 1.0, 5);
    for (double v : one.values()) EXPECT_EQ(v, 1.0);
    EXPECT_THROW(generate_channelized(m, 0.5, 5), ConfigError);
}

TEST(Field, GeneratorLayoutIsResolutionIndependent) {
    const FineMesh m64 = build_fine_mesh(64, 64), m128 = build_fine_mesh(128, 128);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const PermeabilityField a = generate_channelized(m64, 1e4, seed);
        const PermeabilityField b = generate_channelized(m128, 1e4, seed);
        for (int j = 0; j < 128; ++j)
            for (int i = 0; i < 128; ++i) ASSERT_EQ(b.at(i, j), a.at(i / 2, j / 2)) << seed;
    }
}

TEST(Field, GeneratorKeepsFeaturesOffCoarseNodes) {
    // On the 1/64 lattice a cell touches a node of the 1/16 grid exactly when
    // both of its indices are 0 or 3 mod 4.
    const FineMesh m = build_fine_mesh(64, 64);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const PermeabilityField k = generate_channelized(m, 1e4, seed);
        int high = 0;
        for (int j = 0; j < 64; ++j)
            for (int i = 0; i < 64; ++i) {
                if (k.at(i, j) == 1.0) continue;
                ++high;
                const bool ci = i % 4 == 0 || i % 4 == 3, cj = j % 4 == 0 || j % 4 == 3;
                EXPECT_FALSE(ci && cj) << "seed " << seed << " cell " << i << "," << j;
            }
        EXPECT_GT(high, 64) << "seed " << seed;
    }
}

TEST(Field, GeneratorHasFullWidthChannel) {
    const FineMesh m = build_fine_mesh(64, 64);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const PermeabilityField k = generate_channelized(m, 1e4, seed);
        // Flood fill of high cells from the left column reaches the right column.
        std::vector<int> seen(64 * 64, 0), stack;
        for (int j = 0; j < 64; ++j)
            if (k.at(0, j) > 1.0) stack.push_back(j * 64), seen[j * 64] = 1;
        bool crossed = false;
        while (!stack.empty()) {
            const int c = stack.back();
            stack.pop_back();
            const int i = c % 64, j = c / 64;
            if (i == 63) crossed = true;
            const int nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
            for (const auto& q : nb) {
                if (q[0] < 0 || q[0] > 63 || q[1] < 0 || q[1] > 63) continue;
                const int id = q[1] * 64 + q[0];
                if (!seen[id] && k.at(q[0], q[1]) > 1.0) seen[id] = 1, stack.push_back(id);
            }
        }
        EXPECT_TRUE(crossed) << "seed " << seed;
    }
}

// ---------------------------------------------------------------- fem

TEST(Fem, UnitSquareElementMatrices) {
    const ElementMatrices e = q1_element(1.0, 1.0);
    for (int a = 0; a < 4; ++a) {
        EXPECT_NEAR(e.stiffness(a, a), 2.0 / 3.0, 1e-15);
        EXPECT_NEAR(e.stiffness.row(a).sum(), 0.0, 1e-15);
    }
    Eigen::Matrix4d m;
    m << 4, 2, 1, 2, 2, 4, 2, 1, 1, 2, 4, 2, 2, 1, 2, 4;
    EXPECT_LT((e.mass - m / 36.0).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Fem, ElementMatricesMatchExactIntegralsOnRandomRectangles) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.01, 2.0);
    for (int t = 0; t < 20; ++t) {
        const double hx = u(rng), hy = u(rng);
        const ElementMatrices e = q1_element(hx, hy);
        EXPECT_LT((e.stiffness - exact_stiffness(hx, hy)).cwiseAbs().maxCoeff(),
                  1e-12 * exact_stiffness(hx, hy).cwiseAbs().maxCoeff());
        EXPECT_LT((e.mass - exact_mass(hx, hy)).cwiseAbs().maxCoeff(), 1e-12 * exact_mass(hx, hy).maxCoeff());
    }
}

TEST(Fem, StiffnessKernelSymmetryAndScaling) {
    const FineMesh m = build_fine_mesh(8, 6);
    const PermeabilityField k = generate_channelized(build_fine_mesh(8, 6), 1.0, 1);
    const SparseMatrix a = assemble_stiffness(m, k);
    EXPECT_LT((a * Vector::Ones(a.cols())).cwiseAbs().maxCoeff(), 1e-13);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(1.0, 100.0);
    std::vector<double> v(48);
    for (double& x : v) x = u(rng);
    const PermeabilityField kr(8, 6, v);
    const Matrix ar = dense(assemble_stiffness(m, kr));
    EXPECT_LE((ar - ar.transpose()).cwiseAbs().maxCoeff(), 1e-12 * ar.cwiseAbs().maxCoeff());
    const Matrix a3 = dense(assemble_stiffness(m, kr.scaled(3.0)));
    EXPECT_LT((a3 - 3.0 * ar).cwiseAbs().maxCoeff(), 1e-12 * a3.cwiseAbs().maxCoeff());
    const Eigen::SelfAdjointEigenSolver<Matrix> es(ar);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
}

TEST(Fem, StiffnessRejectsMismatchedField) {
    EXPECT_THROW(assemble_stiffness(build_fine_mesh(4, 4), PermeabilityField::constant(4, 5)), ConfigError);
}

TEST(Fem, MassIntegratesOneAndIsNonnegative) {
    for (auto [nx, ny] : {std::pair{2, 2}, std::pair{5, 3}, std::pair{16, 16}}) {
        const SparseMatrix mm = assemble_mass(build_fine_mesh(nx, ny));
        const Vector one = Vector::Ones(mm.cols());
        EXPECT_NEAR(one.dot(mm * one), 1.0, 1e-14);
        EXPECT_GE(dense(mm).minCoeff(), 0.0);
        const Eigen::SelfAdjointEigenSolver<Matrix> es(dense(mm));
        EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    }
}

TEST(Fem, DirichletElimination) {
    const FineMesh m = build_fine_mesh(4, 4);
    const SparseMatrix a = assemble_stiffness(m, PermeabilityField::constant(4, 4));
    std::vector<int> boundary;
    for (int n = 0; n < m.node_count(); ++n)
        if (m.on_boundary[n]) boundary.push_back(n);

    const ConstrainedSystem s = apply_dirichlet(a, Vector::Ones(a.rows()), boundary);
    EXPECT_EQ(s.free_nodes, m.node_of_dof);
    EXPECT_LT((dense(s.matrix) - dense(restrict_to_interior(m, a))).cwiseAbs().maxCoeff(), 1e-15);
    const Vector x = s.extend(solve_spd(s.matrix, s.rhs), a.rows());
    for (int b : boundary) EXPECT_EQ(x[b], 0.0);

    EXPECT_EQ(solve_spd(s.matrix, Vector::Zero(s.rhs.size())), Vector::Zero(s.rhs.size()));

    std::vector<int> all(m.node_count());
    std::iota(all.begin(), all.end(), 0);
    const ConstrainedSystem none = apply_dirichlet(a, Vector::Ones(a.rows()), all);
    EXPECT_EQ(none.matrix.rows(), 0);
    EXPECT_EQ(none.extend(Vector(), a.rows()), Vector::Zero(a.rows()));
    EXPECT_THROW(apply_dirichlet(a, Vector::Ones(a.rows()), std::vector<int>{99}), ConfigError);
}

TEST(Fem, ManufacturedPoissonConvergesAtSecondOrder) {
    auto exact = [](double x, double y) { return std::sin(M_PI * x) * std::sin(M_PI * y); };
    std::vector<double> err;
    for (int n : {16, 32, 64}) {
        const FineMesh m = build_fine_mesh(n, n);
        const NormOperators ops = NormOperators::build(m, PermeabilityField::constant(n, n));
        const Vector f = interpolate(m, [&](double x, double y) { return 2 * M_PI * M_PI * exact(x, y); });
        const Vector b = ops.mass * f;
        const Vector u = solve_spd(ops.kappa_stiffness, b);
        EXPECT_LE((ops.kappa_stiffness * u - b).norm(), 1e-10 * b.norm());
        err.push_back(norms(ops, u - interpolate(m, exact)).l2);
    }
    for (int k = 0; k + 1 < 3; ++k) {
        const double order = std::log2(err[k] / err[k + 1]);
        EXPECT_GE(order, 1.8);
        EXPECT_LE(order, 2.2);
    }
}

TEST(Fem, SpdSolverOracles) {
    SparseMatrix id(5, 5);
    id.setIdentity();
    const Vector b = Vector::LinSpaced(5, 1.0, 5.0);
    EXPECT_LT((solve_spd(id, b) - b).norm(), 1e-15);
    EXPECT_LT((solve_spd(SparseMatrix(2.0 * id), b) - b / 2).norm(), 1e-15);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    Matrix r(50, 50);
    for (Index i = 0; i < r.size(); ++i) r.data()[i] = g(rng);
    const Matrix spd = r * r.transpose() + 50.0 * Matrix::Identity(50, 50);
    Vector rhs(50);
    for (Index i = 0; i < 50; ++i) rhs[i] = g(rng);
    const Vector oracle = spd.llt().solve(rhs);
    const Vector x = solve_spd(spd.sparseView(), rhs);
    EXPECT_LT((x - oracle).norm(), 1e-8 * oracle.norm());
    EXPECT_LE((spd * x - rhs).norm(), 1e-10 * rhs.norm());

    SparseMatrix indefinite(2, 2);
    indefinite.insert(0, 0) = 1.0;
    indefinite.insert(1, 1) = -1.0;
    EXPECT_THROW(SpdSolver{indefinite}, NumericalError);
}

TEST(Fem, GeneralizedEigenTrivialPencils) {
    const GeneralizedEigen e = eig_sym_generalized(Matrix::Identity(4, 4), Matrix::Identity(4, 4));
    for (Index k = 0; k < 4; ++k) EXPECT_NEAR(e.values[k], 1.0, 1e-14);
    const Matrix d = Vector(Eigen::Vector3d(3, 1, 2)).asDiagonal();
    const GeneralizedEigen f = eig_sym_generalized(d, Matrix::Identity(3, 3));
    EXPECT_NEAR(f.values[0], 1.0, 1e-14);
    EXPECT_NEAR(f.values[1], 2.0, 1e-14);
    EXPECT_NEAR(f.values[2], 3.0, 1e-14);
}

TEST(Fem, GeneralizedEigenMatchesCholeskyReduction) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    Matrix x(20, 20), y(20, 20);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng), y.data()[i] = g(rng);
    const Matrix a = x + x.transpose();
    const Matrix b = y * y.transpose() + 20.0 * Matrix::Identity(20, 20);
    const GeneralizedEigen e = eig_sym_generalized(a, b);

    const Matrix l = b.llt().matrixL();
    const Matrix li = l.inverse();
    const Eigen::SelfAdjointEigenSolver<Matrix> std_es(li * a * li.transpose());
    EXPECT_LT((e.values - std_es.eigenvalues()).cwiseAbs().maxCoeff(), 1e-8);
    for (Index k = 1; k < 20; ++k) EXPECT_LE(e.values[k - 1], e.values[k]);
    for (Index j = 0; j < 20; ++j) {
        const Vector v = e.vectors.col(j);
        EXPECT_LE((a * v - e.values[j] * b * v).norm(), 1e-8 * (a.norm() + std::abs(e.values[j]) * b.norm()));
    }
    const Matrix gram = e.vectors.transpose() * b * e.vectors;
    EXPECT_LT((gram - Matrix::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Fem, GeneralizedEigenRejectsIndefiniteB) {
    Matrix b = Matrix::Identity(3, 3);
    b(2, 2) = -1.0;
    EXPECT_THROW(eig_sym_generalized(Matrix::Identity(3, 3), b), NumericalError);
    EXPECT_THROW(eig_sym_generalized(Matrix::Identity(3, 3), Matrix::Identity(2, 2)), ConfigError);
}

TEST(Fem, Norms) {
    const FineMesh m = build_fine_mesh(64, 64);
    const NormOperators ops = NormOperators::build(m, PermeabilityField::constant(64, 64));
    const Norms z = norms(ops, Vector::Zero(m.dof_count()));
    EXPECT_EQ(z.energy, 0.0);
    EXPECT_EQ(z.l2, 0.0);
    EXPECT_EQ(z.kappa_energy, 0.0);

    // x(1-x) is not zero on y = 0, 1, so use the unconstrained mass matrix.
    const SparseMatrix full_mass = assemble_mass(m);
    Vector u(m.node_count());
    for (int n = 0; n < m.node_count(); ++n) u[n] = m.x(n) * (1.0 - m.x(n));
    EXPECT_NEAR(quadratic_form(full_mass, u), 1.0 / std::sqrt(30.0), 1e-3 / std::sqrt(30.0));

    const Vector v = interpolate(m, [](double x, double y) { return x * y * (1 - x) * (1 - y); });
    const Norms n1 = norms(ops, v);
    EXPECT_DOUBLE_EQ(n1.energy, n1.kappa_energy);

    const NormOperators hc = NormOperators::build(m, generate_channelized(m, 1e4, 1));
    const Norms n2 = norms(hc, v);
    EXPECT_DOUBLE_EQ(n2.energy, n1.energy);
    EXPECT_GT(n2.kappa_energy, n2.energy);
    EXPECT_THROW(norms(ops, Vector::Zero(3)), ConfigError);
}
