// Benchmark: OpenMP field sweep against the serial reference path, with a
// bitwise equality check between the two result buffers.

#include <chrono>
#include <cstring>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mismpc/closedloop.hpp"
#include "mismpc/scenario.hpp"

using namespace mismpc;

namespace {

std::vector<Vec> axis_states(const Scenario& sc, int points) {
  std::vector<Vec> xs;
  for (int i = 0; i < points; ++i) {
    Vec x(static_cast<size_t>(sc.plant.n), 0.0);
    x[0] = sc.x_grid.lo + (sc.x_grid.hi - sc.x_grid.lo) * i / (points - 1);
    xs.push_back(x);
  }
  return xs;
}

std::vector<Vec> axis_thetas(const Scenario& sc, int points) {
  std::vector<Vec> ts;
  for (int i = 0; i < points; ++i) {
    Vec t(static_cast<size_t>(sc.plant.n_theta), 0.0);
    t[sc.plant.n_theta == 3 ? 1 : 0] =
        sc.theta_grid.lo + (sc.theta_grid.hi - sc.theta_grid.lo) * i / (points - 1);
    ts.push_back(t);
  }
  return ts;
}

bool buffers_equal(const CostDifferenceField& a, const CostDifferenceField& b) {
  if (a.dv.size() != b.dv.size() || a.value_at_x.size() != b.value_at_x.size() ||
      a.feasible != b.feasible)
    return false;
  // memcmp: identical bytes, not just equal values (distinguishes -0, NaN payloads).
  return std::memcmp(a.dv.data(), b.dv.data(), a.dv.size() * sizeof(double)) == 0 &&
         std::memcmp(a.value_at_x.data(), b.value_at_x.data(),
                     a.value_at_x.size() * sizeof(double)) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::string name = argc > 1 ? argv[1] : "integrator";
  const int xp = argc > 2 ? std::atoi(argv[2]) : 61;
  const int tp = argc > 3 ? std::atoi(argv[3]) : 31;
  const int reps = argc > 4 ? std::atoi(argv[4]) : 3;

  const Scenario sc = make_scenario(name);
  const std::vector<Vec> xs = axis_states(sc, xp);
  const std::vector<Vec> ts = axis_thetas(sc, tp);
  std::unique_ptr<Policy> policy = sc.make_policy();

#ifdef _OPENMP
  std::cout << "threads: " << omp_get_max_threads() << "\n";
#else
  std::cout << "threads: 1 (compiled without OpenMP)\n";
#endif
  std::cout << "scenario " << name << ", grid " << xp << "x" << tp << ", " << reps
            << " reps per path\n";

  using clock = std::chrono::steady_clock;
  double best_serial = 1e300, best_parallel = 1e300;
  CostDifferenceField ref, par;
  for (int rep = 0; rep < reps; ++rep) {
    auto t0 = clock::now();
    ref = cost_difference_field(*policy, sc.plant, xs, ts, false);
    auto t1 = clock::now();
    par = cost_difference_field(*policy, sc.plant, xs, ts, true);
    auto t2 = clock::now();
    best_serial = std::min(best_serial, std::chrono::duration<double>(t1 - t0).count());
    best_parallel = std::min(best_parallel, std::chrono::duration<double>(t2 - t1).count());
  }

  const bool same = buffers_equal(ref, par);
  std::cout.setf(std::ios::fixed);
  std::cout.precision(3);
  std::cout << "serial:   " << best_serial << " s\n";
  std::cout << "parallel: " << best_parallel << " s\n";
  std::cout.precision(2);
  std::cout << "speedup:  " << best_serial / std::max(best_parallel, 1e-12) << "x\n";
  std::cout << "bitwise equal: " << (same ? "yes" : "NO") << "\n";
  return same ? 0 : 1;
}
