// Records the synthetic-site pilot run that the acceptance thresholds are
// read against. Output is committed as pilot_run.txt.

#include <chrono>
#include <cstdio>

#include "experiments.hpp"
#include "mwd/report.hpp"

using namespace mwd;
using namespace mwd::experiments;

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    std::printf("# pilot run, tool version %s\n", std::string(tool_version()).c_str());

    {
        const Site s = build(SiteSpec{});
        std::printf("\n[default site seed 1, rf 300 trees, random 5-fold]\n");
        for (const char* code : {"Fe", "SiO2", "Al2O3", "P", "S"}) {
            std::printf("r %-6s %.4f\n", code, assay_r(s, code, CvMode::random_kfold, 300, 1));
        }
        const auto p = presence(s, 300, 1);
        for (const auto& x : p) {
            std::printf("presence %-4s %.4f (%zu/%zu)\n", x.code.c_str(), double(x.correct) / double(x.total), x.correct,
                        x.total);
        }
        std::printf("presence pooled %.4f\n", pooled_accuracy(p));
    }

    std::printf("\n[compact site, rf 100 trees, Fe: random r, spatial r]\n");
    for (double bias : {0.5, 0.0}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const Site s = build(compact_spec(seed, bias));
            const double rr = assay_r(s, "Fe", CvMode::random_kfold, 100, seed);
            const double rs = assay_r(s, "Fe", CvMode::leave_one_blast_out, 100, seed);
            std::printf("bias %.1f seed %2llu random %.4f spatial %.4f gap %.4f\n", bias, (unsigned long long)seed, rr, rs,
                        rr - rs);
        }
    }

    std::printf("\n[compact site, rf 100 trees, Al2O3: MWD-only r, MWD+Fe r]\n");
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Site s = build(compact_spec(seed, SiteSpec{}.blast_bias));
        const double plain = assay_r(s, "Al2O3", CvMode::random_kfold, 100, seed);
        const double aug = assay_r(s, "Al2O3", CvMode::random_kfold, 100, seed, std::string("Fe"));
        std::printf("seed %2llu mwd %.4f mwd+Fe %.4f\n", (unsigned long long)seed, plain, aug);
    }

    std::printf("\n[default site, 100 trees, mvrf r vs rf r for Fe SiO2 Al2O3]\n");
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SiteSpec spec;
        spec.seed = seed;
        const Site s = build(spec);
        const auto [mv, uv] = mv_vs_uv(s, 100, seed);
        std::printf("seed %2llu", (unsigned long long)seed);
        for (std::size_t i = 0; i < mv.size(); ++i) std::printf("  %s %.4f/%.4f", multivariate_assays()[i].c_str(), mv[i], uv[i]);
        std::printf("\n");
    }

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("\nelapsed %.1f s\n", secs);
}
