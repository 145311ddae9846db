#pragma once

#include "msrom/error.hpp"
#include "msrom/fem.hpp"
#include "msrom/grid.hpp"
#include "msrom/nonlinearity.hpp"
#include "msrom/rom.hpp"
#include "msrom/stepper.hpp"
#include "msrom/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

namespace msrom {

enum class EnrichmentMode { none, uniform, adaptive1, adaptive2 };

inline std::string to_string(EnrichmentMode m) {
    switch (m) {
    case EnrichmentMode::uniform: return "uniform";
    case EnrichmentMode::adaptive1: return "adaptive1";
    case EnrichmentMode::adaptive2: return "adaptive2";
    default: return "none";
    }
}

inline EnrichmentMode enrichment_mode_from_string(const std::string& s) {
    if (s == "none") return EnrichmentMode::none;
    if (s == "uniform") return EnrichmentMode::uniform;
    if (s == "adaptive1") return EnrichmentMode::adaptive1;
    if (s == "adaptive2") return EnrichmentMode::adaptive2;
    throw ConfigError("online", "unknown enrichment mode '" + s + "'");
}

struct EnrichmentPolicy {
    EnrichmentMode mode = EnrichmentMode::none;
    double tol = 1e-3;       // on the global residual aggregate
    int max_levels = 1;      // enrichment levels per time step
    double theta = 0.7;      // squared-residual fraction covered by adaptive picks
    int max_dof = 0;         // cap on the reduced dimension, 0 = none

    bool enabled() const { return mode != EnrichmentMode::none; }
    /// Online columns survive into the next time step.
    bool keeps_online() const { return mode == EnrichmentMode::adaptive2; }

    void validate() const {
        if (!(tol >= 0.0)) throw ConfigError("online", "tolerance must be non-negative");
        if (max_levels < 0) throw ConfigError("online", "max_levels must be non-negative");
        if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("online", "theta must lie in (0, 1]");
        if (max_dof < 0) throw ConfigError("online", "max_dof must be non-negative");
    }
};

struct ResidualReport {
    int step = 0;
    int level = 0;
    std::vector<double> norms;  // dual norm of R_i per neighborhood
    double aggregate = 0.0;     // sqrt of the sum of squares
};

/// Local residuals and their Riesz representatives on coarse neighborhoods.
///
/// The local test space of D_i is every fine Q1 function vanishing on the
/// boundary of D_i. Because such functions are supported inside D_i, the
/// local residual is the restriction of the global fine residual vector.
class OnlineEnricher {
public:
    OnlineEnricher(const NeighborhoodIndexing& nbhd, const SparseMatrix& a, const SparseMatrix& m)
        : nbhd_(&nbhd), a_(&a), m_(&m), local_(nbhd.size()) {}

    /// Global residual r = M b - (A + M/dt) u_cur with b = u_prev/dt + S(u_cur)
    /// for implicit Euler and b = w(u_prev)/dt for ETD. `force` (may be empty)
    /// is the nodal forcing at the new time.
    Vector global_residual(const Vector& u_prev, const Vector& u_cur, const Nonlinearity& f, Scheme scheme, double dt,
                           const Vector& force = {}) const {
        Vector b = scheme == Scheme::etd ? Vector(etd_factor(f, u_prev, dt) / dt)
                                         : Vector(u_prev / dt + apply_source(f, u_cur));
        if (force.size()) b += force;
        return *m_ * (b - u_cur / dt) - *a_ * u_cur;
    }

    Vector restrict_to(int i, const Vector& global) const {
        const auto& dofs = (*nbhd_)[i].interior_dofs;
        Vector r(static_cast<Index>(dofs.size()));
        for (std::size_t k = 0; k < dofs.size(); ++k) r[static_cast<Index>(k)] = global[dofs[k]];
        return r;
    }

    /// r_k = R_i(gamma_k) for the interior fine basis functions of D_i.
    Vector local_residual(int i, const Vector& u_prev, const Vector& u_cur, const Nonlinearity& f, Scheme scheme,
                          double dt) const {
        return restrict_to(i, global_residual(u_prev, u_cur, f, scheme, dt));
    }

    struct OnlineFunction {
        Vector local;      // on interior dofs of D_i
        double norm = 0.0;  // ||phi||_{V_i} = ||R_i||_{V_i*}
    };

    /// Solves A_{D_i} phi = r on the interior of D_i.
    OnlineFunction online_basis(int i, const Vector& residual) const {
        const SpdSolver& s = solver(i);
        if (residual.size() != s.size()) throw ConfigError("online", "residual has the wrong length");
        OnlineFunction out;
        if (residual.squaredNorm() == 0.0) {
            out.local = Vector::Zero(residual.size());
            return out;
        }
        out.local = s.solve(residual);
        out.norm = std::sqrt(std::max(0.0, residual.dot(out.local)));
        return out;
    }

    ResidualReport report(const Vector& global_res) const {
        ResidualReport rep;
        rep.norms.resize(nbhd_->size());
        double sq = 0.0;
        for (std::size_t i = 0; i < nbhd_->size(); ++i) {
            rep.norms[i] = online_basis(static_cast<int>(i), restrict_to(static_cast<int>(i), global_res)).norm;
            sq += rep.norms[i] * rep.norms[i];
        }
        rep.aggregate = std::sqrt(sq);
        return rep;
    }

    /// Neighborhoods to enrich at this level. `room` limits the count.
    std::vector<int> select(const EnrichmentPolicy& policy, const ResidualReport& rep, int room) const {
        std::vector<int> picked;
        const int n = static_cast<int>(rep.norms.size());
        if (room <= 0) return picked;
        if (policy.mode == EnrichmentMode::uniform) {
            for (int i = 0; i < n && static_cast<int>(picked.size()) < room; ++i)
                if (rep.norms[i] > 0.0) picked.push_back(i);
            return picked;
        }
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rep.norms[a] > rep.norms[b]; });
        const double total = rep.aggregate * rep.aggregate;
        double covered = 0.0;
        for (int i : order) {
            if (covered >= policy.theta * total || static_cast<int>(picked.size()) >= room) break;
            if (rep.norms[i] == 0.0) break;
            const bool clash = std::any_of(picked.begin(), picked.end(), [&](int j) {
                return (*nbhd_)[i].box.interiors_overlap((*nbhd_)[j].box);
            });
            if (clash) continue;
            picked.push_back(i);
            covered += rep.norms[i] * rep.norms[i];
        }
        return picked;
    }

    /// Scatters a local function of D_i into interior-dof coordinates.
    Vector scatter(int i, const Vector& local, Index n) const {
        Vector g = Vector::Zero(n);
        const auto& dofs = (*nbhd_)[i].interior_dofs;
        for (std::size_t k = 0; k < dofs.size(); ++k) g[dofs[k]] = local[static_cast<Index>(k)];
        return g;
    }

    const NeighborhoodIndexing& neighborhoods() const { return *nbhd_; }

private:
    const SpdSolver& solver(int i) const {
        if (!local_[i]) {
            const auto& dofs = (*nbhd_)[i].interior_dofs;
            local_[i] = std::make_unique<SpdSolver>(extract_block(*a_, dofs, dofs));
        }
        return *local_[i];
    }

    const NeighborhoodIndexing* nbhd_;
    const SparseMatrix* a_;
    const SparseMatrix* m_;
    mutable std::vector<std::unique_ptr<SpdSolver>> local_;
};

/// Candidate columns W (kappa-energy normalized, interior dofs) filtered so
/// that [V, W] keeps full rank: a pivot-dropping Cholesky of the Schur
/// complement of the energy Gram matrix. Returns the kept column positions.
inline std::vector<int> independent_columns(const ReducedOperator& op, const SparseMatrix& a, const SparseMatrix& w,
                                            double drop_tol = 1e-10) {
    const Index k = w.cols();
    const SparseMatrix aw = a * w;
    Matrix s = Matrix(w.transpose() * aw);
    if (op.rank() > 0) {
        const Matrix cross = Matrix(op.basis().transpose() * aw);
        Eigen::LLT<Matrix> g(op.stiffness());
        if (g.info() != Eigen::Success) throw NumericalError("online", "reduced stiffness is not positive definite");
        s -= cross.transpose() * g.solve(cross);
    }
    std::vector<int> kept;
    Matrix l = Matrix::Zero(k, k);
    for (Index j = 0; j < k; ++j) {
        double d = s(j, j);
        for (std::size_t p = 0; p < kept.size(); ++p) {
            const Index q = static_cast<Index>(p);
            const double ljq = l(j, q);
            d -= ljq * ljq;
        }
        const double ref = std::max(Matrix(w.col(j).transpose() * aw.col(j))(0, 0), std::numeric_limits<double>::min());
        if (!(d > drop_tol * ref)) continue;
        const Index q = static_cast<Index>(kept.size());
        const double piv = std::sqrt(d);
        l(j, q) = piv;
        for (Index r = j + 1; r < k; ++r) {
            double v = s(r, j);
            for (Index p = 0; p < q; ++p) v -= l(r, p) * l(j, p);
            l(r, q) = v / piv;
        }
        kept.push_back(static_cast<int>(j));
    }
    return kept;
}

} // namespace msrom
