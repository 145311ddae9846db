// Offline GMsFEM space on a small high-contrast field, then the same
// Allen-Cahn problem with and without online enrichment.

#include "msrom/msrom.hpp"

#include <cstdio>

int main() {
    using namespace msrom;

    const FineMesh fine = build_fine_mesh(64, 64);
    const CoarseMesh coarse = build_coarse_mesh(fine, 8, 8);
    PermeabilityField kappa = generate_channelized(fine, 1e4, 1);
    const OfflineStage offline = build_offline(fine, coarse, kappa, 2);
    std::printf("fine dofs %d, coarse neighborhoods %d, offline rank %d\n", fine.dof_count(),
                coarse.interior_count(), offline.space.rank());

    const Problem prob = Problem::build(fine, std::move(kappa), [](double x, double y) {
        return 4.0 * (0.5 - x) * (0.5 - y);
    });

    RunOptions opt;
    opt.stepper.dt = 1e-3;
    opt.stepper.t_final = 0.05;
    opt.nonlinearity = Nonlinearity::allen_cahn(0.1, SourceSign::as_written);

    const Trajectory plain = run(prob, offline.space.basis, offline.neighborhoods, opt);

    opt.policy.mode = EnrichmentMode::adaptive2;
    opt.policy.tol = 1e-3;
    opt.policy.max_levels = 2;
    const Trajectory online = run(prob, offline.space.basis, offline.neighborhoods, opt);

    std::printf("%6s %8s | %10s %5s | %10s %5s\n", "n", "t", "e_a", "dof", "e_a", "dof");
    std::printf("%6s %8s | %16s | %16s\n", "", "", "offline only", "adaptive method 2");
    for (std::size_t k = 0; k < plain.steps.size(); k += 10) {
        const StepRecord& a = plain.steps[k];
        const StepRecord& b = online.steps[k];
        std::printf("%6d %8.3f | %10.4e %5d | %10.4e %5d\n", a.step, a.time, a.e_a, a.dof, b.e_a, b.dof);
    }
    return 0;
}
