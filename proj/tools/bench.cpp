// Benchmark of the OpenMP kernels against their serial references:
// oracle candidate enumeration and the training batch gradient.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vrpd/gen.hpp"
#include "vrpd/init.hpp"
#include "vrpd/selectors.hpp"
#include "vrpd/train.hpp"

using namespace vrpd;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        double t0 = now_seconds();
        fn();
        best = std::min(best, now_seconds() - t0);
    }
    return best;
}

TrainingExample random_example(uint64_t seed, int n_cities) {
    RngStream rng(seed, 0xE0);
    TrainingExample ex;
    ex.depot_x = rng.next_double();
    ex.depot_y = rng.next_double();
    ex.capacity = 50;
    for (int i = 0; i < n_cities; ++i) {
        ex.cities.push_back({rng.next_double(), rng.next_double(),
                             static_cast<double>(rng.next_int(1, 9))});
    }
    ex.target = 1.0 + 3.0 * rng.next_double();
    return ex;
}

}  // namespace

int main(int argc, char** argv) {
    int threads = 0;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    if (argc > 1) threads = std::stoi(argv[1]);
    if (threads < 2) threads = 2;
    std::printf("parallel lanes: %d\n\n", threads);

    {
        Instance inst = gen_uniform(400, 11);
        Solution init = initialize(inst, 50, 10, 11);
        auto centroids = route_centroids(inst, init);
        auto candidates = construct_subproblems(inst, init, 5, centroids);
        std::vector<char> todo(candidates.size(), 1);
        SubsolverConfig cfg;
        SubsolverBudget budget;
        budget.max_steps = 20000;

        std::vector<std::optional<CachedSubsolution>> slots(candidates.size());
        std::vector<std::string> errors(candidates.size());
        double t_serial = time_best_of(3, [&] {
            std::fill(slots.begin(), slots.end(), std::nullopt);
            enumerate_candidates_serial(inst, init, candidates, todo, cfg, budget, 11, slots, errors);
        });
        double t_parallel = time_best_of(3, [&] {
            std::fill(slots.begin(), slots.end(), std::nullopt);
            enumerate_candidates_parallel(inst, init, candidates, todo, cfg, budget, 11, slots,
                                          errors, threads);
        });
        std::printf("oracle enumeration (N=400, R=%zu, k=5, 20k-step subsolves)\n",
                    candidates.size());
        std::printf("  serial   %8.3f ms\n", t_serial * 1e3);
        std::printf("  parallel %8.3f ms   speedup %.2fx\n\n", t_parallel * 1e3,
                    t_serial / t_parallel);
    }

    {
        ArchConfig arch;
        RegressionModel model = make_model(ModelKind::SetAttention, arch, 3);
        model.target = {2.0, 1.5};
        std::vector<TrainingExample> batch;
        for (int i = 0; i < 256; ++i) batch.push_back(random_example(static_cast<uint64_t>(i), 50));
        GradBuffer grads(model);

        double t_serial = time_best_of(3, [&] { batch_gradient_serial(model, batch, grads); });
        double t_parallel =
            time_best_of(3, [&] { batch_gradient_parallel(model, batch, grads, threads); });
        std::printf("set-attention batch gradient (batch=256, m=50, d=%d, %d layers)\n",
                    arch.d_model, arch.n_layers);
        std::printf("  serial   %8.3f ms\n", t_serial * 1e3);
        std::printf("  parallel %8.3f ms   speedup %.2fx\n", t_parallel * 1e3,
                    t_serial / t_parallel);
    }
    return 0;
}
