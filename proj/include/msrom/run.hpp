#pragma once

#include "msrom/deim.hpp"
#include "msrom/error.hpp"
#include "msrom/fem.hpp"
#include "msrom/grid.hpp"
#include "msrom/msbasis.hpp"
#include "msrom/online.hpp"
#include "msrom/rom.hpp"
#include "msrom/stepper.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <vector>

namespace msrom {

/// Fine-grid data shared by the reference and the reduced runs.
struct Problem {
    FineMesh mesh;
    PermeabilityField kappa;
    NormOperators ops;  // interior unit stiffness, kappa stiffness, mass
    Vector initial;     // g_h on interior dofs

    static Problem build(FineMesh mesh, PermeabilityField kappa, const std::function<double(double, double)>& g) {
        Problem p{std::move(mesh), std::move(kappa), {}, {}};
        p.ops = NormOperators::build(p.mesh, p.kappa);
        p.initial = interpolate(p.mesh, g);
        return p;
    }

    const SparseMatrix& stiffness() const { return ops.kappa_stiffness; }
    const SparseMatrix& mass() const { return ops.mass; }
};

struct StepRecord {
    int step = 0;
    double time = 0.0;
    double e_a = std::numeric_limits<double>::quiet_NaN();
    double e_2 = std::numeric_limits<double>::quiet_NaN();
    int dof = 0;
    int iterations = 0;
    int levels = 0;
    double residual = std::numeric_limits<double>::quiet_NaN();  // aggregate at the last level checked
};

struct EnrichmentEvent {
    int step = 0;
    int level = 0;
    int neighborhood = 0;
    double residual_norm = 0.0;
    bool added = false;
    int dof_after = 0;
};

struct SavedFields {
    Vector reduced;
    Vector reference;  // empty without a reference run
};

struct Trajectory {
    std::vector<StepRecord> steps;
    std::vector<EnrichmentEvent> enrichment;
    std::map<int, SavedFields> fields;  // keyed by step
    Vector final_reduced;
    Vector final_reference;
    long clamped_exponents = 0;
};

/// Observer of each completed step: step, time, reduced fine vector, the
/// nodewise reaction vector of the reduced run, and the reference state and
/// its reaction vector (both empty without reference).
using StepObserver = std::function<void(int, double, const Vector&, const Vector&, const Vector&, const Vector&)>;

struct RunOptions {
    StepperConfig stepper;
    EnrichmentPolicy policy;
    Nonlinearity nonlinearity = Nonlinearity::zero();
    Forcing forcing;
    bool reference = true;
    DeimModel* deim = nullptr;
    double deim_start_time = 0.0;  // DEIM is used for steps with t > deim_start_time
    std::vector<int> save_steps;
    StepObserver observer;
};

/// Relative errors in the unweighted energy norm and in L2.
inline std::pair<double, double> relative_errors(const NormOperators& ops, const Vector& ref, const Vector& approx) {
    const Vector d = ref - approx;
    const Norms nd = norms(ops, d);
    const Norms nr = norms(ops, ref);
    auto ratio = [](double a, double b) { return b > 0.0 ? a / b : (a == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()); };
    return {ratio(nd.energy, nr.energy), ratio(nd.l2, nr.l2)};
}

/// Reduced time integration over an initial basis with optional online
/// enrichment and DEIM, tracked against the fine reference trajectory.
inline Trajectory run(const Problem& prob, const SparseMatrix& initial_basis, const NeighborhoodIndexing& nbhd,
                      const RunOptions& opt) {
    opt.stepper.validate();
    opt.policy.validate();
    const SparseMatrix& a = prob.stiffness();
    const SparseMatrix& m = prob.mass();
    const double dt = opt.stepper.dt;
    const int n_steps = opt.stepper.step_count();
    const Index n = prob.mesh.dof_count();

    ReducedOperator op(initial_basis, a, m);
    const int base_rank = op.rank();
    ReducedStepper stepper(prob.mesh, m, opt.nonlinearity, opt.stepper, opt.forcing);
    stepper.bind(op);
    OnlineEnricher enricher(nbhd, a, m);

    std::optional<FineStepper> fine;
    if (opt.reference) fine.emplace(prob.mesh, a, m, opt.nonlinearity, opt.stepper, opt.forcing);

    Trajectory traj;
    Vector u = reconstruct(op.basis(), reduced_l2_projection(op, m, prob.initial).coeffs);
    Vector uf = prob.initial;

    auto save_if_requested = [&](int step) {
        for (int s : opt.save_steps)
            if (s == step) traj.fields[step] = {u, opt.reference ? uf : Vector()};
    };

    StepRecord r0;
    r0.dof = op.rank();
    if (opt.reference) std::tie(r0.e_a, r0.e_2) = relative_errors(prob.ops, uf, u);
    traj.steps.push_back(r0);
    save_if_requested(0);

    bool deim_on = false;
    for (int step = 1; step <= n_steps; ++step) {
        const double t = step * dt;
        if (!opt.policy.keeps_online() && op.rank() > base_rank) {
            op.truncate(base_rank);
            stepper.bind(op);
        }
        const bool want_deim = opt.deim != nullptr && t > opt.deim_start_time + 1e-12 * dt;
        if (want_deim != deim_on) {
            stepper.set_deim(want_deim ? opt.deim : nullptr);
            deim_on = want_deim;
        }

        const Vector u_prev = u;
        Vector c = stepper.step(u_prev, t);
        int iterations = stepper.last().iterations;
        u = reconstruct(op.basis(), c);

        StepRecord rec;
        rec.step = step;
        rec.time = t;
        if (opt.policy.enabled()) {
            const Vector force = opt.forcing ? interpolate(prob.mesh, [&](double x, double y) { return opt.forcing(x, y, t); })
                                             : Vector();
            for (int level = 0;; ++level) {
                const Vector res =
                    enricher.global_residual(u_prev, u, opt.nonlinearity, opt.stepper.scheme, dt, force);
                const ResidualReport rep = enricher.report(res);
                rec.residual = rep.aggregate;
                const bool stop = rep.aggregate < opt.policy.tol || level >= opt.policy.max_levels;
                std::vector<int> picked;
                if (!stop) {
                    const int room = opt.policy.max_dof > 0 ? opt.policy.max_dof - op.rank()
                                                            : std::numeric_limits<int>::max();
                    picked = enricher.select(opt.policy, rep, room);
                }

                std::vector<int> added;
                if (!picked.empty()) {
                    std::vector<Triplet> trips;
                    for (std::size_t k = 0; k < picked.size(); ++k) {
                        const int i = picked[k];
                        const auto phi = enricher.online_basis(i, enricher.restrict_to(i, res));
                        const auto& dofs = nbhd[i].interior_dofs;
                        for (std::size_t q = 0; q < dofs.size(); ++q) {
                            const double v = phi.local[static_cast<Index>(q)] / phi.norm;
                            if (v != 0.0) trips.emplace_back(dofs[q], static_cast<int>(k), v);
                        }
                    }
                    SparseMatrix w(n, static_cast<Index>(picked.size()));
                    w.setFromTriplets(trips.begin(), trips.end());
                    const std::vector<int> keep = independent_columns(op, a, w);
                    if (!keep.empty()) {
                        SparseMatrix wk(n, static_cast<Index>(keep.size()));
                        std::vector<Triplet> kt;
                        for (std::size_t q = 0; q < keep.size(); ++q)
                            for (SparseMatrix::InnerIterator it(w, keep[q]); it; ++it)
                                kt.emplace_back(static_cast<int>(it.row()), static_cast<int>(q), it.value());
                        wk.setFromTriplets(kt.begin(), kt.end());
                        op.append(wk, a, m);
                        stepper.bind(op);
                        for (int q : keep) added.push_back(picked[q]);
                    }
                }

                for (std::size_t i = 0; i < rep.norms.size(); ++i) {
                    const bool was_added = std::find(added.begin(), added.end(), static_cast<int>(i)) != added.end();
                    traj.enrichment.push_back({step, level, static_cast<int>(i), rep.norms[i], was_added, op.rank()});
                }
                if (added.empty()) break;

                Vector guess = Vector::Zero(op.rank());
                guess.head(c.size()) = c;
                c = stepper.step(u_prev, t, &guess);
                iterations += stepper.last().iterations;
                u = reconstruct(op.basis(), c);
                rec.levels = level + 1;
            }
        }

        const Vector uf_prev = uf;
        if (fine) uf = fine->step(uf, t);

        rec.dof = op.rank();
        rec.iterations = iterations;
        if (opt.reference) std::tie(rec.e_a, rec.e_2) = relative_errors(prob.ops, uf, u);
        traj.steps.push_back(rec);
        save_if_requested(step);

        if (opt.observer) {
            const Vector nl = opt.stepper.scheme == Scheme::etd ? etd_factor(opt.nonlinearity, u_prev, dt)
                                                                : apply_source(opt.nonlinearity, u);
            Vector nlf;
            if (fine) {
                nlf = opt.stepper.scheme == Scheme::etd ? etd_factor(opt.nonlinearity, uf_prev, dt)
                                                        : apply_source(opt.nonlinearity, uf);
            }
            opt.observer(step, t, u, nl, fine ? uf : Vector(), nlf);
        }
    }
    traj.final_reduced = u;
    traj.final_reference = opt.reference ? uf : Vector();
    traj.clamped_exponents = stepper.clamped_exponents() + (fine ? fine->clamped_exponents() : 0);
    return traj;
}

} // namespace msrom
