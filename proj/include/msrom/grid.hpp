#pragma once

#include "msrom/error.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace msrom {

/// Structured quadrilateral mesh of the unit square.
///
/// Nodes and cells are numbered lexicographically with x fastest. Cell
/// corners are stored counter-clockwise starting at the lower-left node.
/// Homogeneous Dirichlet data is imposed by elimination, so the mesh also
/// carries the map between fine nodes and the interior unknowns.
struct FineMesh {
    int nx = 0;
    int ny = 0;
    double hx = 0.0;
    double hy = 0.0;
    std::vector<std::array<int, 4>> cells;
    std::vector<std::uint8_t> on_boundary;
    std::vector<int> dof_of_node;  // -1 on the boundary
    std::vector<int> node_of_dof;

    int node_count() const { return (nx + 1) * (ny + 1); }
    int cell_count() const { return nx * ny; }
    int dof_count() const { return static_cast<int>(node_of_dof.size()); }

    int node(int i, int j) const { return j * (nx + 1) + i; }
    int cell(int i, int j) const { return j * nx + i; }
    int node_i(int n) const { return n % (nx + 1); }
    int node_j(int n) const { return n / (nx + 1); }
    double x(int n) const { return node_i(n) * hx; }
    double y(int n) const { return node_j(n) * hy; }
};

inline FineMesh build_fine_mesh(int nx, int ny) {
    if (nx < 2 || ny < 2) {
        throw ConfigError("grid", "fine mesh needs at least 2 cells per axis, got " +
                                      std::to_string(nx) + "x" + std::to_string(ny));
    }
    FineMesh m;
    m.nx = nx;
    m.ny = ny;
    m.hx = 1.0 / nx;
    m.hy = 1.0 / ny;
    m.cells.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            m.cells.push_back({m.node(i, j), m.node(i + 1, j), m.node(i + 1, j + 1), m.node(i, j + 1)});
        }
    }
    const int nn = m.node_count();
    m.on_boundary.assign(nn, 0);
    m.dof_of_node.assign(nn, -1);
    m.node_of_dof.reserve(static_cast<std::size_t>(nx - 1) * (ny - 1));
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            const int n = m.node(i, j);
            if (i == 0 || j == 0 || i == nx || j == ny) {
                m.on_boundary[n] = 1;
            } else {
                m.dof_of_node[n] = static_cast<int>(m.node_of_dof.size());
                m.node_of_dof.push_back(n);
            }
        }
    }
    return m;
}

/// Axis-aligned block of fine cells [x0, x1) x [y0, y1), with its own
/// lexicographic node numbering.
struct CellBox {
    int x0 = 0, x1 = 0, y0 = 0, y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    int node_count() const { return (width() + 1) * (height() + 1); }
    int local_node(int i, int j) const { return (j - y0) * (width() + 1) + (i - x0); }
    bool contains_cell(int i, int j) const { return i >= x0 && i < x1 && j >= y0 && j < y1; }
    bool on_edge(int i, int j) const { return i == x0 || i == x1 || j == y0 || j == y1; }

    bool interiors_overlap(const CellBox& o) const {
        return std::max(x0, o.x0) < std::min(x1, o.x1) && std::max(y0, o.y0) < std::min(y1, o.y1);
    }
};

/// Coarse partition whose elements are unions of fine cells.
struct CoarseMesh {
    int NX = 0;
    int NY = 0;
    int cells_per_x = 0;  // nx / NX
    int cells_per_y = 0;
    double H = 0.0;       // max(1/NX, 1/NY)
    std::vector<CellBox> elements;                 // K_j, lexicographic
    std::vector<std::vector<int>> element_cells;   // I_j
    std::vector<std::array<int, 2>> interior_nodes;  // coarse (I, J) of x_i
    std::vector<CellBox> neighborhoods;            // D_i

    int interior_count() const { return static_cast<int>(interior_nodes.size()); }
    int element_count() const { return static_cast<int>(elements.size()); }

    bool overlap(int a, int b) const { return neighborhoods[a].interiors_overlap(neighborhoods[b]); }

    /// Coarse element containing fine cell (i, j).
    int element_of_cell(int i, int j) const { return (j / cells_per_y) * NX + (i / cells_per_x); }
};

inline CoarseMesh build_coarse_mesh(const FineMesh& fine, int NX, int NY) {
    if (NX < 1 || NY < 1) {
        throw ConfigError("grid", "coarse cell counts must be positive");
    }
    if (fine.nx % NX != 0 || fine.ny % NY != 0) {
        throw ConfigError("grid", "coarse grid " + std::to_string(NX) + "x" + std::to_string(NY) +
                                      " does not divide fine grid " + std::to_string(fine.nx) + "x" +
                                      std::to_string(fine.ny));
    }
    CoarseMesh c;
    c.NX = NX;
    c.NY = NY;
    c.cells_per_x = fine.nx / NX;
    c.cells_per_y = fine.ny / NY;
    c.H = std::max(1.0 / NX, 1.0 / NY);

    for (int J = 0; J < NY; ++J) {
        for (int I = 0; I < NX; ++I) {
            CellBox box{I * c.cells_per_x, (I + 1) * c.cells_per_x, J * c.cells_per_y, (J + 1) * c.cells_per_y};
            std::vector<int> ids;
            ids.reserve(static_cast<std::size_t>(box.width()) * box.height());
            for (int j = box.y0; j < box.y1; ++j)
                for (int i = box.x0; i < box.x1; ++i) ids.push_back(fine.cell(i, j));
            c.elements.push_back(box);
            c.element_cells.push_back(std::move(ids));
        }
    }
    for (int J = 1; J < NY; ++J) {
        for (int I = 1; I < NX; ++I) {
            c.interior_nodes.push_back({I, J});
            c.neighborhoods.push_back(
                CellBox{(I - 1) * c.cells_per_x, (I + 1) * c.cells_per_x, (J - 1) * c.cells_per_y, (J + 1) * c.cells_per_y});
        }
    }
    return c;
}

/// Node bookkeeping for one coarse neighborhood D_i.
struct LocalIndexing {
    CellBox box;
    std::vector<int> nodes;          // local node -> global fine node
    std::vector<int> interior;       // local ids strictly inside D_i
    std::vector<int> boundary;       // local ids on the boundary of D_i, J_h(D_i)
    std::vector<int> interior_dofs;  // global unknown index of each interior node
    std::vector<int> cells;          // global fine cell ids

    int L() const { return static_cast<int>(boundary.size()); }
    int node_count() const { return static_cast<int>(nodes.size()); }
};

inline LocalIndexing index_box(const FineMesh& fine, const CellBox& box) {
    LocalIndexing li;
    li.box = box;
    li.nodes.reserve(box.node_count());
    for (int j = box.y0; j <= box.y1; ++j) {
        for (int i = box.x0; i <= box.x1; ++i) {
            const int local = static_cast<int>(li.nodes.size());
            const int global = fine.node(i, j);
            li.nodes.push_back(global);
            if (box.on_edge(i, j)) {
                li.boundary.push_back(local);
            } else {
                li.interior.push_back(local);
                li.interior_dofs.push_back(fine.dof_of_node[global]);
            }
        }
    }
    for (int j = box.y0; j < box.y1; ++j)
        for (int i = box.x0; i < box.x1; ++i) li.cells.push_back(fine.cell(i, j));
    return li;
}

using NeighborhoodIndexing = std::vector<LocalIndexing>;

inline NeighborhoodIndexing neighborhood_indexing(const FineMesh& fine, const CoarseMesh& coarse) {
    NeighborhoodIndexing out;
    out.reserve(coarse.neighborhoods.size());
    for (const auto& box : coarse.neighborhoods) out.push_back(index_box(fine, box));
    return out;
}

} // namespace msrom
