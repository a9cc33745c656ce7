// Timing comparison of the serial and OpenMP quasimatrix assembly paths.
#include <chrono>
#include <iostream>

#include "fimsketch/schrodinger.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace fimsketch;

namespace {

double time_assembly(const SchrodingerProblem& problem, const SourceSpec& s,
                     bool parallel, int reps) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const Quasimatrix qm = problem.full_quasimatrix(s, parallel);
        const auto t1 = std::chrono::steady_clock::now();
        volatile double sink = qm.rows.sum();
        (void)sink;
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    const int reps = argc > 1 ? std::atoi(argv[1]) : 3;
#ifdef _OPENMP
    std::cout << "threads: " << omp_get_max_threads() << "\n";
#else
    std::cout << "threads: 1 (no OpenMP)\n";
#endif
    std::cout << "nx,serial_s,parallel_s,speedup\n";
    for (const int nx : {20, 30, 40, 60}) {
        SchrodingerProblem problem(Grid(nx), Potential::preset("systemC"));
        const SourceSpec s = SourceSpec::constant(1e4);
        const double ts = time_assembly(problem, s, false, reps);
        const double tp = time_assembly(problem, s, true, reps);
        std::cout << nx << "," << ts << "," << tp << "," << ts / tp << "\n";
    }
    return 0;
}
