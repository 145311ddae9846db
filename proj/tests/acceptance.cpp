// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include "msrom/msrom.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

using namespace msrom;
using namespace msrom::harness;
namespace fs = std::filesystem;

namespace {

constexpr const char* as_written = "S(u) = +(u^3 - u)/eps^2 (as written)";

int failures = 0;

void verdict(int id, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string num(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool in(double v, double lo, double hi) { return v >= lo && v <= hi; }

// ---------------------------------------------------------------- 1

struct MmsResult {
    double l2 = 0.0;
    Vector u;
};

// u_t - Lap u = F with u = sin(pi x) sin(pi y) e^{-t}, kappa = 1, implicit Euler.
MmsResult mms_solve(int n, double dt, double t_final) {
    const FineMesh mesh = build_fine_mesh(n, n);
    const NormOperators ops = NormOperators::build(mesh, PermeabilityField::constant(n, n));
    auto exact = [](double x, double y, double t) { return std::sin(M_PI * x) * std::sin(M_PI * y) * std::exp(-t); };
    StepperConfig cfg;
    cfg.dt = dt;
    cfg.t_final = t_final;
    FineStepper st(mesh, ops.unit_stiffness, ops.mass, Nonlinearity::zero(), cfg,
                   [&](double x, double y, double t) { return (2 * M_PI * M_PI - 1) * exact(x, y, t); });
    Vector u = interpolate(mesh, [&](double x, double y) { return exact(x, y, 0.0); });
    const int steps = cfg.step_count();
    for (int k = 1; k <= steps; ++k) u = st.step(u, k * dt);
    const Vector e = u - interpolate(mesh, [&](double x, double y) { return exact(x, y, steps * dt); });
    return {quadratic_form(ops.mass, e), u};
}

void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    // Spatial: dt = h^2 so the O(dt) term scales like h^2.
    std::vector<double> es;
    for (int n : {16, 32, 64}) es.push_back(mms_solve(n, 1.0 / (n * n), 1.0 / 16).l2);
    const double ps1 = std::log2(es[0] / es[1]), ps2 = std::log2(es[1] / es[2]);

    // Temporal: fixed h = 1/32, errors against a dt = 0.1/1280 solution on the same mesh.
    const FineMesh mesh = build_fine_mesh(32, 32);
    const NormOperators ops = NormOperators::build(mesh, PermeabilityField::constant(32, 32));
    const Vector ref = mms_solve(32, 0.1 / 1280, 0.1).u;
    std::vector<double> et;
    for (int k : {10, 20, 40}) et.push_back(quadratic_form(ops.mass, mms_solve(32, 0.1 / k, 0.1).u - ref));
    const double pt1 = std::log2(et[0] / et[1]), pt2 = std::log2(et[1] / et[2]);
    const double secs = seconds_since(t0);

    const bool ok = in(ps1, 1.8, 2.2) && in(ps2, 1.8, 2.2) && in(pt1, 0.8, 1.2) && in(pt2, 0.8, 1.2) && secs < 60;
    verdict(1, ok,
            "MMS, no reaction term; spatial L2 orders " + num(ps1) + ", " + num(ps2) + " in [1.8, 2.2]; temporal orders " +
                num(pt1) + ", " + num(pt2) + " in [0.8, 1.2]; " + num(secs, 3) + " s < 60 s");
}

// ---------------------------------------------------------------- 2-5, 7

double final_ea(const ExperimentResult& r) { return r.trajectory.steps.back().e_a; }

ExperimentResult quiet(const ExperimentConfig& c) { return run_experiment(c, {false, false}); }

void criterion2() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> ea;
    for (int l = 1; l <= 4; ++l) {
        ExperimentConfig c = preset("desk");
        c.basis_per_neighborhood = l;
        ea.push_back(final_ea(quiet(c)));
    }
    const double secs = seconds_since(t0);
    const bool decreasing = ea[0] > ea[1] && ea[1] > ea[2] && ea[2] > ea[3];
    const bool drop = ea[1] <= 0.7 * ea[0];
    const bool regime = in(ea[1], 0.01, 0.20);
    verdict(2, decreasing && drop && regime && secs < 300,
            std::string("desk, ") + as_written + "; e_a(0.1) for l=1..4: " + num(ea[0]) + ", " + num(ea[1]) + ", " +
                num(ea[2]) + ", " + num(ea[3]) + (decreasing ? " strictly decreasing" : " NOT strictly decreasing") +
                "; l=2 vs l=1 ratio " + num(ea[1] / ea[0]) + " <= 0.7; regime l=2 e_a " + num(ea[1]) +
                " in [0.01, 0.20]" + (regime ? "" : " (outside)") + "; " + num(secs, 3) + " s < 300 s");
}

void criterion3() {
    ExperimentConfig base = preset("desk");
    const double off = final_ea(quiet(base));
    ExperimentConfig on = base;
    on.online.mode = EnrichmentMode::adaptive1;
    on.online.tol = 0.0;
    on.online.max_levels = 1;
    const double one = final_ea(quiet(on));
    const double factor = off / one;

    // Uniform DOF arithmetic with 15 x 15 interior coarse nodes: 225 * (l + levels).
    ExperimentConfig u = base;
    u.mesh = {64, 64, 16, 16};
    u.time.t_final = 0.003;
    u.output.metric_times.clear();
    u.online.mode = EnrichmentMode::uniform;
    u.online.tol = 0.0;
    bool exact = true;
    std::string seq;
    for (int levels = 1; levels <= 2; ++levels) {
        u.online.max_levels = levels;
        const Setup s = build_setup(u);
        RunOptions opt = make_run_options(u, s);
        opt.reference = false;
        const Trajectory t = run(s.problem, s.offline.space.basis, s.offline.neighborhoods, opt);
        exact = exact && t.steps[0].dof == 450;
        for (std::size_t k = 1; k < t.steps.size(); ++k) {
            exact = exact && t.steps[k].dof == 225 * (2 + levels);
            seq += (seq.empty() ? "" : ",") + std::to_string(t.steps[k].dof);
        }
    }
    verdict(3, factor >= 1.5 && exact,
            std::string("desk, ") + as_written + "; one adaptive level e_a " + num(off) + " -> " + num(one) +
                ", factor " + num(factor) + " >= 1.5; uniform DOF 450 -> [" + seq + "] = 225*(2+k)" +
                (exact ? "" : " MISMATCH"));
}

void criterion4() {
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed : {1, 2, 3}) {
        ExperimentConfig uni = preset("desk");
        uni.field.seed = seed;
        uni.online.mode = EnrichmentMode::uniform;
        uni.online.tol = 0.0;
        uni.online.max_levels = 1;
        const ExperimentResult ru = quiet(uni);

        ExperimentConfig ad = uni;
        ad.online.mode = EnrichmentMode::adaptive1;
        ad.online.max_levels = 20;
        ad.online.max_dof = ru.trajectory.steps.back().dof;
        const ExperimentResult ra = quiet(ad);

        const int du = ru.trajectory.steps.back().dof, da = ra.trajectory.steps.back().dof;
        const bool matched = std::abs(da - du) <= 0.05 * du;
        const bool better = final_ea(ra) <= final_ea(ru);
        ok = ok && matched && better;
        detail += "; seed " + std::to_string(seed) + ": adaptive " + num(final_ea(ra)) + " @" + std::to_string(da) +
                  " vs uniform " + num(final_ea(ru)) + " @" + std::to_string(du);
    }
    verdict(4, ok, std::string("desk, ") + as_written + ", e_a(0.1), DOF within 5%" + detail);
}

void criterion5() {
    ExperimentConfig m2 = preset("desk");
    m2.online.mode = EnrichmentMode::adaptive2;
    m2.online.tol = 1e-3;
    const ExperimentResult r2 = quiet(m2);
    ExperimentConfig m1 = m2;
    m1.online.mode = EnrichmentMode::adaptive1;
    const ExperimentResult r1 = quiet(m1);

    const auto& st = r2.trajectory.steps;
    bool nondecreasing = true;
    for (std::size_t k = 1; k < st.size(); ++k) nondecreasing = nondecreasing && st[k].dof >= st[k - 1].dof;
    std::size_t settle = st.size() - 1;
    while (settle > 0 && st[settle - 1].dof == st.back().dof) --settle;
    // Constant over at least the last 10 steps.
    const bool plateau = st.size() - 1 - settle >= 10;
    const double e2 = final_ea(r2), e1 = final_ea(r1);
    const bool close = e2 <= 2 * e1;
    verdict(5, nondecreasing && plateau && close,
            std::string("desk, ") + as_written + ", tol 1e-3; method-2 DOF " + std::to_string(st.front().dof) + " -> " +
                std::to_string(st.back().dof) + (nondecreasing ? " non-decreasing" : " DECREASES") +
                ", constant from step " + std::to_string(settle) + " of " + std::to_string(st.size() - 1) +
                " (need >= 10 steps); e_a method 2 " + num(e2) + " <= 2 x method 1 " + num(e1));
}

void criterion7(const fs::path& out) {
    ExperimentConfig same = preset("desk");
    same.name = "deim-same";
    same.deim.enabled = true;
    same.deim.compare_baseline = true;
    same.deim.energy = 1.0 - 1e-14;
    same.output.directory = (out / "same_equation").string();
    const ExperimentResult rs = run_experiment(same);
    const double e2 = rs.trajectory.steps.back().e_2, e2b = rs.baseline->steps.back().e_2;
    const double rel = std::abs(e2 - e2b) / e2b;
    bool ok = rel < 0.10 && fs::exists(out / "same_equation" / "deim_compare.csv");
    std::string detail = std::string("desk, ") + as_written + "; same-equation m=" + std::to_string(rs.deim->size()) +
                         " e_2 " + num(e2) + " vs " + num(e2b) + " (rel change " + num(rel) + " < 0.10)";

    const std::vector<std::pair<SnapshotSource, std::string>> sources{
        {SnapshotSource::different_epsilon, "different_epsilon"},
        {SnapshotSource::different_ic, "different_ic"},
        {SnapshotSource::different_field, "different_field"},
        {SnapshotSource::earlier_time_window, "earlier_time_window"}};
    for (const auto& [src, name] : sources) {
        ExperimentConfig c = same;
        c.name = "deim-" + name;
        c.deim.source = src;
        c.output.directory = (out / name).string();
        const ExperimentResult r = run_experiment(c);
        bool finite = true;
        for (const auto& s : r.trajectory.steps) finite = finite && std::isfinite(s.e_a) && std::isfinite(s.e_2);
        const bool csv = fs::exists(out / name / "deim_compare.csv") && fs::exists(out / name / "errors.csv");
        ok = ok && finite && csv;
        detail += "; " + name + " e_2 " + num(r.trajectory.steps.back().e_2) + (finite ? "" : " NON-FINITE") +
                  (csv ? "" : " MISSING CSV");
    }
    verdict(7, ok, detail);
}

// ---------------------------------------------------------------- 6

Matrix random_orthonormal(Index n, Index m, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix a(n, m);
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
    Eigen::HouseholderQR<Matrix> qr(a);
    return qr.householderQ() * Matrix::Identity(n, m);
}

std::vector<int> step_literal_indices(const Matrix& phi) {
    auto argmax = [](const Vector& v) {
        Index best = 0;
        for (Index k = 1; k < v.size(); ++k)
            if (std::abs(v[k]) > std::abs(v[best])) best = k;
        return static_cast<int>(best);
    };
    std::vector<int> p{argmax(phi.col(0))};
    for (Index i = 1; i < phi.cols(); ++i) {
        Matrix pm = Matrix::Zero(phi.rows(), i);
        for (Index k = 0; k < i; ++k) pm(p[k], k) = 1.0;
        const Vector c = (pm.transpose() * phi.leftCols(i)).fullPivLu().solve(pm.transpose() * phi.col(i));
        p.push_back(argmax(phi.col(i) - phi.leftCols(i) * c));
    }
    return p;
}

void criterion6() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    double worst_interp = 0.0, worst_span = 0.0;
    int oracle_matches = 0, bound_holds = 0;
    for (int t = 0; t < 25; ++t) {
        const Matrix phi = random_orthonormal(40, 6, rng);
        const DeimModel d = deim_indices({phi, Vector::Ones(6)});
        if (d.indices() == step_literal_indices(phi)) ++oracle_matches;
        Vector f(40), c(6);
        for (Index k = 0; k < 40; ++k) f[k] = g(rng);
        for (Index k = 0; k < 6; ++k) c[k] = g(rng);
        const Vector ft = d.apply(d.sample(f));
        worst_interp = std::max(worst_interp, (d.sample(ft) - d.sample(f)).cwiseAbs().maxCoeff());
        const Vector s = phi * c;
        worst_span = std::max(worst_span, (d.apply(d.sample(s)) - s).norm() / s.norm());
    }
    for (int t = 0; t < 100; ++t) {
        const Matrix phi = random_orthonormal(30, 5, rng);
        const DeimModel d = deim_indices({phi, Vector::Ones(5)});
        Vector f(30);
        for (Index k = 0; k < 30; ++k) f[k] = g(rng);
        const double lhs = (f - d.apply(d.sample(f))).norm();
        const double inv = Eigen::JacobiSVD<Matrix>(d.interpolation_inverse()).singularValues()[0];
        if (lhs <= inv * (f - phi * (phi.transpose() * f)).norm() * (1 + 1e-10)) ++bound_holds;
    }
    const double secs = seconds_since(t0);
    verdict(6, worst_interp <= 1e-12 && worst_span <= 1e-10 && oracle_matches == 25 && bound_holds == 100 && secs < 60,
            "no PDE; max |P^T(f~ - f)| " + num(worst_interp) + " <= 1e-12; span residual " + num(worst_span) +
                " <= 1e-10; oracle matches " + std::to_string(oracle_matches) + "/25; error bound " +
                std::to_string(bound_holds) + "/100; " + num(secs, 3) + " s < 60 s");
}

// ---------------------------------------------------------------- 8

void criterion8() {
    // f = 0: ETD and implicit Euler share (M + dt A) u = M u_prev.
    const FineMesh mesh = build_fine_mesh(32, 32);
    PermeabilityField kappa = generate_channelized(mesh, 1e4, 1);
    const NormOperators ops = NormOperators::build(mesh, kappa);
    const Vector u0 = interpolate(mesh, initial_condition("saddle"));
    const Vector ie = step_implicit_euler_fine(mesh, u0, ops.kappa_stiffness, ops.mass, Nonlinearity::zero(), 1e-3);
    const Vector etd = step_etd(mesh, u0, ops.kappa_stiffness, ops.mass, Nonlinearity::zero(), 1e-3);
    const double d_ie = (ie - etd).cwiseAbs().maxCoeff();

    // Scalar ODE u' = S(u) with A = 0, one interior node.
    const double eps = 0.1, t_end = 0.02, u_start = 0.5;
    const Nonlinearity ac = Nonlinearity::allen_cahn(eps, SourceSign::as_written);
    auto rhs = [&](double u) { return ac.source(u); };
    double oracle = u_start;
    const int fine_steps = 200000;
    const double h = t_end / fine_steps;
    for (int k = 0; k < fine_steps; ++k) {
        const double k1 = rhs(oracle), k2 = rhs(oracle + 0.5 * h * k1), k3 = rhs(oracle + 0.5 * h * k2),
                     k4 = rhs(oracle + h * k3);
        oracle += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    const FineMesh one = build_fine_mesh(2, 2);
    const SparseMatrix zero(1, 1);
    const SparseMatrix m1 = restrict_to_interior(one, assemble_mass(one));
    std::vector<double> err;
    for (int n : {20, 40, 80}) {
        Vector u = Vector::Constant(1, u_start);
        for (int k = 0; k < n; ++k) u = step_etd(one, u, zero, m1, ac, t_end / n);
        err.push_back(std::abs(u[0] - oracle));
    }
    const double p1 = std::log2(err[0] / err[1]), p2 = std::log2(err[1] / err[2]);

    double fixed = 0.0;
    for (double w : {-1.0, 1.0}) {
        Vector u = Vector::Constant(1, w);
        for (int k = 0; k < 50; ++k) u = step_etd(one, u, zero, m1, ac, 1e-3);
        fixed = std::max(fixed, std::abs(u[0] - w));
    }
    verdict(8, d_ie <= 1e-10 && in(p1, 0.8, 1.2) && in(p2, 0.8, 1.2) && fixed <= 1e-15,
            std::string(as_written) + ", eps 0.1; f=0 ETD vs IE " + num(d_ie) + " <= 1e-10; scalar ODE orders " +
                num(p1) + ", " + num(p2) + " in [0.8, 1.2]; |u - (+-1)| after 50 steps " + num(fixed) + " <= 1e-15");
}

// ---------------------------------------------------------------- 9

void criterion9() {
    FineMesh mesh = build_fine_mesh(16, 16);
    const CoarseMesh coarse = build_coarse_mesh(mesh, 4, 4);
    const NeighborhoodIndexing nbhd = neighborhood_indexing(mesh, coarse);
    PermeabilityField kappa = generate_channelized(mesh, 1e4, 1);
    const Index n = mesh.dof_count();
    SparseMatrix identity(n, n);
    identity.setIdentity();
    const Problem prob = Problem::build(std::move(mesh), std::move(kappa), initial_condition("saddle"));
    double worst = 0.0;
    for (Scheme scheme : {Scheme::implicit_euler, Scheme::etd}) {
        RunOptions opt;
        opt.stepper.scheme = scheme;
        opt.nonlinearity = Nonlinearity::allen_cahn(0.1, SourceSign::as_written);
        opt.observer = [&](int, double, const Vector& u, const Vector&, const Vector& uf, const Vector&) {
            worst = std::max(worst, (u - uf).cwiseAbs().maxCoeff());
        };
        run(prob, identity, nbhd, opt);
    }
    verdict(9, worst <= 1e-8,
            std::string("16x16, ") + as_written + ", eps 0.1, IE and ETD, 100 steps; max |u_reduced - u_fine| " +
                num(worst) + " <= 1e-8");
}

} // namespace

int main(int argc, char** argv) {
    const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "msrom_acceptance";
    fs::remove_all(out);
    try {
        criterion1();
        criterion2();
        criterion3();
        criterion4();
        criterion5();
        criterion6();
        criterion7(out);
        criterion8();
        criterion9();
    } catch (const std::exception& e) {
        std::printf("FAIL aborted: %s\n", e.what());
        return 1;
    }
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
