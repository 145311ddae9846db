#pragma once

#include "msrom/deim.hpp"
#include "msrom/error.hpp"
#include "msrom/fem.hpp"
#include "msrom/nonlinearity.hpp"
#include "msrom/rom.hpp"
#include "msrom/types.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace msrom {

enum class Scheme { implicit_euler, etd };
enum class NonlinearSolver { picard, newton };

inline std::string to_string(Scheme s) { return s == Scheme::etd ? "etd" : "implicit_euler"; }
inline std::string to_string(NonlinearSolver s) { return s == NonlinearSolver::newton ? "newton" : "picard"; }

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "implicit_euler") return Scheme::implicit_euler;
    if (s == "etd") return Scheme::etd;
    throw ConfigError("stepper", "unknown scheme '" + s + "'");
}

inline NonlinearSolver nonlinear_solver_from_string(const std::string& s) {
    if (s == "picard") return NonlinearSolver::picard;
    if (s == "newton") return NonlinearSolver::newton;
    throw ConfigError("stepper", "unknown nonlinear solver '" + s + "'");
}

struct StepperConfig {
    Scheme scheme = Scheme::implicit_euler;
    NonlinearSolver solver = NonlinearSolver::picard;
    double dt = 1e-3;
    double t_final = 0.1;
    double picard_tol = 1e-8;
    int picard_max = 50;

    int step_count() const { return static_cast<int>(std::lround(t_final / dt)); }

    void validate() const {
        if (!(dt > 0.0)) throw ConfigError("stepper", "dt must be positive");
        if (!(t_final >= 0.0)) throw ConfigError("stepper", "final time must be non-negative");
        if (t_final > 0.0 && dt > t_final * (1.0 + 1e-12)) throw ConfigError("stepper", "dt exceeds the final time");
        if (picard_max < 1) throw ConfigError("stepper", "picard_max must be at least 1");
        if (!(picard_tol > 0.0)) throw ConfigError("stepper", "picard_tol must be positive");
    }
};

/// Space-time forcing F(x, y, t) added to the reaction term; nodal quadrature.
using Forcing = std::function<double(double, double, double)>;

/// Clamp applied to exponents of the ETD factor.
inline constexpr double etd_exponent_limit = 500.0;

/// Nodewise ETD factor w = exp(dt * S(u)/u) * u. Exponents beyond
/// +-etd_exponent_limit are clamped and counted.
inline Vector etd_factor(const Nonlinearity& f, const Vector& u, double dt, long* clamped = nullptr) {
    Vector w(u.size());
    for (Index k = 0; k < u.size(); ++k) {
        double e = dt * f.rate(u[k]);
        if (std::abs(e) > etd_exponent_limit) {
            e = std::clamp(e, -etd_exponent_limit, etd_exponent_limit);
            if (clamped) ++*clamped;
        }
        w[k] = std::exp(e) * u[k];
    }
    return w;
}

inline Vector apply_source(const Nonlinearity& f, const Vector& u) { return u.unaryExpr(f.source); }

/// Outcome of one nonlinear step.
struct StepInfo {
    int iterations = 0;
    bool converged = true;
    std::vector<double> trace;  // relative M-norm updates
};

namespace detail {

inline std::string format_trace(const std::vector<double>& t) {
    std::ostringstream os;
    os << '[';
    for (std::size_t k = 0; k < t.size(); ++k) os << (k ? ", " : "") << t[k];
    os << ']';
    return os.str();
}

inline void check_iteration(const std::string& module, StepInfo& info, double update) {
    info.trace.push_back(update);
    if (!std::isfinite(update)) {
        throw NumericalError(module, "nonlinear iteration diverged; update trace " + format_trace(info.trace));
    }
}

inline void warn_unconverged(const std::string& module, const StepInfo& info) {
    std::cerr << module << ": nonlinear iteration stopped at " << info.iterations
              << " iterations without reaching tolerance; update trace " << format_trace(info.trace) << '\n';
}

} // namespace detail

/// Fine-grid time stepper on interior unknowns.
///
/// Implicit Euler solves (M/dt + A) u = M (u_prev/dt + S(u) + F) with Picard
/// or Newton iteration; ETD solves (M + dt A) u = M (w(u_prev) + dt F).
class FineStepper {
public:
    FineStepper(const FineMesh& mesh, SparseMatrix a, SparseMatrix m, Nonlinearity f, StepperConfig cfg,
                Forcing forcing = {})
        : mesh_(&mesh), a_(std::move(a)), m_(std::move(m)), f_(std::move(f)), cfg_(cfg), forcing_(std::move(forcing)) {
        cfg_.validate();
        const SparseMatrix k = cfg_.scheme == Scheme::etd ? SparseMatrix(m_ + cfg_.dt * a_)
                                                          : SparseMatrix(m_ / cfg_.dt + a_);
        system_ = k;
        solver_.factorize(system_);
    }

    const StepperConfig& config() const { return cfg_; }
    const SparseMatrix& stiffness() const { return a_; }
    const SparseMatrix& mass() const { return m_; }
    const Nonlinearity& nonlinearity() const { return f_; }
    long clamped_exponents() const { return clamped_; }
    const StepInfo& last() const { return last_; }

    /// Nodewise reaction vector that multiplies M on the right-hand side:
    /// S(u) for implicit Euler, w(u_prev) for ETD.
    Vector nonlinear_term(const Vector& u) const {
        return cfg_.scheme == Scheme::etd ? etd_factor(f_, u, cfg_.dt) : apply_source(f_, u);
    }

    Vector step(const Vector& u_prev, double t_new) {
        last_ = StepInfo{};
        const Vector force = forcing_vector(t_new);
        if (cfg_.scheme == Scheme::etd) {
            Vector rhs = etd_factor(f_, u_prev, cfg_.dt, &clamped_);
            if (force.size()) rhs += cfg_.dt * force;
            last_.iterations = 1;
            return solver_.solve(m_ * rhs);
        }
        Vector base = u_prev / cfg_.dt;
        if (force.size()) base += force;
        return cfg_.solver == NonlinearSolver::newton ? newton(u_prev, base) : picard(u_prev, base);
    }

private:
    Vector forcing_vector(double t) const {
        if (!forcing_) return {};
        return interpolate(*mesh_, [&](double x, double y) { return forcing_(x, y, t); });
    }

    double m_norm(const Vector& v) const { return std::sqrt(std::max(0.0, v.dot(m_ * v))); }

    double relative_update(const Vector& du, const Vector& u) const {
        const double nu = m_norm(u);
        const double nd = m_norm(du);
        return nu > 0.0 ? nd / nu : nd;
    }

    Vector picard(const Vector& u_prev, const Vector& base) {
        Vector u = u_prev;
        for (int k = 0; k < cfg_.picard_max; ++k) {
            const Vector next = solver_.solve(m_ * (base + apply_source(f_, u)));
            const double upd = relative_update(next - u, next);
            u = next;
            last_.iterations = k + 1;
            detail::check_iteration("stepper", last_, upd);
            if (upd < cfg_.picard_tol) return u;
        }
        last_.converged = false;
        detail::warn_unconverged("stepper", last_);
        return u;
    }

    Vector newton(const Vector& u_prev, const Vector& base) {
        Vector u = u_prev;
        for (int k = 0; k < cfg_.picard_max; ++k) {
            const Vector g = system_ * u - m_ * (base + apply_source(f_, u));
            const Vector ds = u.unaryExpr(f_.derivative);
            const SparseMatrix jac = system_ - SparseMatrix(m_ * ds.asDiagonal());
            Eigen::SparseLU<SparseMatrix> lu(jac);
            if (lu.info() != Eigen::Success) throw NumericalError("stepper", "singular Newton Jacobian");
            const Vector du = lu.solve(g);
            u -= du;
            const double upd = relative_update(du, u);
            last_.iterations = k + 1;
            detail::check_iteration("stepper", last_, upd);
            if (upd < cfg_.picard_tol) return u;
        }
        last_.converged = false;
        detail::warn_unconverged("stepper", last_);
        return u;
    }

    const FineMesh* mesh_;
    SparseMatrix a_;
    SparseMatrix m_;
    SparseMatrix system_;
    Nonlinearity f_;
    StepperConfig cfg_;
    Forcing forcing_;
    SpdSolver solver_;
    StepInfo last_;
    long clamped_ = 0;
};

/// One implicit Euler step on the fine grid.
inline Vector step_implicit_euler_fine(const FineMesh& mesh, const Vector& u_prev, const SparseMatrix& a,
                                       const SparseMatrix& m, const Nonlinearity& f, double dt,
                                       StepperConfig cfg = {}, StepInfo* info = nullptr) {
    cfg.scheme = Scheme::implicit_euler;
    cfg.dt = dt;
    cfg.t_final = std::max(cfg.t_final, dt);
    FineStepper s(mesh, a, m, f, cfg);
    Vector u = s.step(u_prev, dt);
    if (info) *info = s.last();
    return u;
}

/// One ETD step on the fine grid.
inline Vector step_etd(const FineMesh& mesh, const Vector& u_prev, const SparseMatrix& a, const SparseMatrix& m,
                       const Nonlinearity& f, double dt) {
    StepperConfig cfg;
    cfg.scheme = Scheme::etd;
    cfg.dt = dt;
    cfg.t_final = dt;
    FineStepper s(mesh, a, m, f, cfg);
    return s.step(u_prev, dt);
}

/// Reduced-space time stepper over a (possibly growing) Galerkin basis.
///
/// The previous state is passed as a fine vector so the basis may change
/// between steps. With a DEIM model the reaction is evaluated only at the
/// interpolation indices.
class ReducedStepper {
public:
    ReducedStepper(const FineMesh& mesh, const SparseMatrix& m, Nonlinearity f, StepperConfig cfg,
                   Forcing forcing = {})
        : mesh_(&mesh), m_(&m), f_(std::move(f)), cfg_(cfg), forcing_(std::move(forcing)) {
        cfg_.validate();
    }

    /// Points the stepper at a new reduced operator and refactors.
    void bind(const ReducedOperator& op) {
        op_ = &op;
        const Matrix k = cfg_.scheme == Scheme::etd ? Matrix(op.mass() + cfg_.dt * op.stiffness())
                                                    : Matrix(op.mass() / cfg_.dt + op.stiffness());
        system_ = k;
        llt_.compute(system_);
        if (llt_.info() != Eigen::Success) throw NumericalError("stepper", "reduced system is not positive definite");
        if (deim_) deim_->register_test_basis(op.basis(), *m_);
    }

    void set_deim(DeimModel* model) {
        deim_ = model;
        if (deim_ && op_) deim_->register_test_basis(op_->basis(), *m_);
    }
    const DeimModel* deim() const { return deim_; }

    const StepperConfig& config() const { return cfg_; }
    const StepInfo& last() const { return last_; }
    long clamped_exponents() const { return clamped_; }

    /// Reduced M-projection data of the previous fine state.
    Vector project_previous(const Vector& u_prev) const { return op_->basis().transpose() * (*m_ * u_prev); }

    /// Advances from fine state u_prev. `guess` seeds the nonlinear iteration.
    Vector step(const Vector& u_prev, double t_new, const Vector* guess = nullptr) {
        last_ = StepInfo{};
        const SparseMatrix& v = op_->basis();
        Vector force;
        if (forcing_) {
            force = v.transpose() *
                    (*m_ * interpolate(*mesh_, [&](double x, double y) { return forcing_(x, y, t_new); }));
        }
        if (cfg_.scheme == Scheme::etd) {
            Vector rhs;
            if (deim_) {
                rhs = deim_->apply_projected(etd_factor(f_, deim_->sample(u_prev), cfg_.dt, &clamped_));
            } else {
                rhs = v.transpose() * (*m_ * etd_factor(f_, u_prev, cfg_.dt, &clamped_));
            }
            if (force.size()) rhs += cfg_.dt * force;
            last_.iterations = 1;
            return llt_.solve(rhs);
        }

        Vector base = project_previous(u_prev) / cfg_.dt;
        if (force.size()) base += force;
        Vector c = guess && guess->size() == v.cols() ? *guess : reduced_l2(u_prev);
        return cfg_.solver == NonlinearSolver::newton ? newton(base, c) : picard(base, c);
    }

    /// Reduced reaction term N(c) = V^T M S(V c), or its DEIM surrogate.
    Vector reaction(const Vector& c) const {
        if (deim_) return deim_->apply_projected(apply_source(f_, deim_->basis_rows() * c));
        return op_->basis().transpose() * (*m_ * apply_source(f_, op_->basis() * c));
    }

private:
    Vector reduced_l2(const Vector& u) const {
        Eigen::LLT<Matrix> llt(op_->mass());
        return llt.solve(project_previous(u));
    }

    double m_norm(const Vector& c) const { return std::sqrt(std::max(0.0, c.dot(op_->mass() * c))); }

    double relative_update(const Vector& dc, const Vector& c) const {
        const double nc = m_norm(c);
        const double nd = m_norm(dc);
        return nc > 0.0 ? nd / nc : nd;
    }

    Vector picard(const Vector& base, Vector c) {
        for (int k = 0; k < cfg_.picard_max; ++k) {
            const Vector next = llt_.solve(base + reaction(c));
            const double upd = relative_update(next - c, next);
            c = next;
            last_.iterations = k + 1;
            detail::check_iteration("stepper", last_, upd);
            if (upd < cfg_.picard_tol) return c;
        }
        last_.converged = false;
        detail::warn_unconverged("stepper", last_);
        return c;
    }

    Matrix reaction_jacobian(const Vector& c) const {
        if (deim_) {
            const Vector ds = (deim_->basis_rows() * c).unaryExpr(f_.derivative);
            return deim_->projector() * ds.asDiagonal() * deim_->basis_rows();
        }
        const SparseMatrix& v = op_->basis();
        const Vector ds = (v * c).unaryExpr(f_.derivative);
        const SparseMatrix mv = *m_ * (ds.asDiagonal() * v);
        return Matrix(v.transpose() * mv);
    }

    Vector newton(const Vector& base, Vector c) {
        for (int k = 0; k < cfg_.picard_max; ++k) {
            const Vector g = system_ * c - base - reaction(c);
            const Matrix jac = system_ - reaction_jacobian(c);
            const Vector dc = jac.partialPivLu().solve(g);
            c -= dc;
            const double upd = relative_update(dc, c);
            last_.iterations = k + 1;
            detail::check_iteration("stepper", last_, upd);
            if (upd < cfg_.picard_tol) return c;
        }
        last_.converged = false;
        detail::warn_unconverged("stepper", last_);
        return c;
    }

    const FineMesh* mesh_;
    const SparseMatrix* m_;
    Nonlinearity f_;
    StepperConfig cfg_;
    Forcing forcing_;
    const ReducedOperator* op_ = nullptr;
    DeimModel* deim_ = nullptr;
    Matrix system_;
    Eigen::LLT<Matrix> llt_;
    StepInfo last_;
    long clamped_ = 0;
};

} // namespace msrom
