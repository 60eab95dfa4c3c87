#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ecsk/avoid.hpp"
#include "ecsk/reach.hpp"
#include "ecsk/setops.hpp"
#include "oracles.hpp"

using namespace ecsk;
using std::numbers::pi;

namespace {

const DubinsCar kInternal(0, 4, -1, 1);

GridSpec dubins_grid() { return GridSpec({Axis{-10, 10, 41, false}, Axis{-10, 10, 41, false}, Axis{-pi, pi, 24, true}}); }

std::shared_ptr<const UnsafeTube> dubins_unsafe(double tf) {
  const auto ext = std::make_shared<DubinsCar>(0, 3, -0.75, 0.75);
  const GridSpec g = dubins_grid();
  SolverConfig cfg;
  cfg.snapshot_dt = 0.25;
  auto reach = std::make_shared<const ReachSolution>(
      frs_from_point(ext, std::vector<double>{0, 0, 0}, default_initial_radius(g), 0, tf, g, cfg));
  return std::make_shared<const UnsafeTube>(build_unsafe_tube(reach, 1.0, g));
}

const AvoidSolution& dubins_avoid() {
  static const AvoidSolution sol = [] {
    SolverConfig cfg;
    cfg.snapshot_dt = 0.25;
    return solve_avoid(dubins_unsafe(2.0), kInternal, cfg);
  }();
  return sol;
}

// Time-invariant unsafe tube built from one planar field.
std::shared_ptr<const UnsafeTube> static_unsafe(const GridSpec& g, auto fn, int snapshots, double dt) {
  std::vector<double> v(g.node_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(coord_of(g, g.unravel(i)));
  std::vector<ScalarField> snaps;
  for (int k = 0; k < snapshots; ++k) snaps.emplace_back(g, v, k * dt);
  auto tube = std::make_shared<UnsafeTube>();
  tube->d_tilde = TimeSampledField(std::move(snaps));
  return tube;
}

}  // namespace

TEST_CASE("terminal condition and obstacle cap") {
  const AvoidSolution& sol = dubins_avoid();
  const TimeSampledField& d = sol.unsafe->d_tilde;
  REQUIRE(sol.tube.size() == d.size());
  CHECK(sol.t0 == 0.0);
  CHECK(sol.tf == 2.0);
  const auto a = sol.tube.back().values();
  const auto b = d.back().values();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
  double excess = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    CHECK(sol.tube.times()[k] == d.times()[k]);
    for (std::size_t i = 0; i < a.size(); ++i) excess = std::max(excess, sol.tube[k][i] - d[k][i]);
  }
  CHECK(excess <= 1e-12);
}

TEST_CASE("states in collision now are outside the kernel") {
  const AvoidSolution& sol = dubins_avoid();
  const ScalarField k0 = kernel_slice(sol, 0.0);
  const ScalarField& d0 = sol.unsafe->d_tilde.front();
  for (std::size_t i = 0; i < k0.values().size(); ++i) {
    if (d0[i] < 0.0) CHECK(k0[i] < 0.0);
  }
}

TEST_CASE("kernel is larger than the complement of the swept unsafe set") {
  // Some states inside the unsafe set of a later time are still safe now,
  // because the controlled system can leave before the set arrives.
  const AvoidSolution& sol = dubins_avoid();
  const TimeSampledField& d = sol.unsafe->d_tilde;
  const ScalarField k0 = kernel_slice(sol, 0.0);
  int count = 0;
  for (std::size_t i = 0; i < k0.values().size(); ++i) {
    double swept = d[0][i];
    for (std::size_t k = 1; k < d.size(); ++k) swept = std::min(swept, d[k][i]);
    if (swept < 0.0 && k0[i] > 0.0) ++count;
  }
  MESSAGE(count << " nodes are safe now yet inside a later unsafe set");
  CHECK(count > 0);
}

TEST_CASE("kernel_slice") {
  const AvoidSolution& sol = dubins_avoid();
  const ScalarField last = kernel_slice(sol, sol.tf);
  const auto a = last.values();
  const auto b = sol.unsafe->d_tilde.back().values();
  CHECK(std::equal(a.begin(), a.end(), b.begin()));
  CHECK_THROWS(kernel_slice(sol, -0.1));
  CHECK_THROWS(kernel_slice(sol, sol.tf + 0.1));
  // Far from the observed system the value is the distance to the unsafe set.
  const ScalarField k0 = kernel_slice(sol, 0.0);
  const GridSpec& g = k0.spec();
  const double reach_radius = 3 * sol.tf + 1.0 + default_initial_radius(g);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const auto x = coord_of(g, g.unravel(i));
    const double r = std::hypot(x[0], x[1]);
    if (r > reach_radius + 1.0) {
      CHECK(k0[i] > 0.0);
      CHECK(k0[i] <= r - 1.0 + g.cell_diagonal());
    }
  }
}

TEST_CASE("nothing to avoid keeps every state safe") {
  const GridSpec g = dubins_grid();
  SolverConfig cfg;
  cfg.snapshot_dt = 0.5;
  const auto far = static_unsafe(g, [](const auto& x) { return 30.0 + 0.01 * x[0]; }, 5, 0.5);
  const AvoidSolution sol = solve_avoid(far, kInternal, cfg);
  for (double v : sol.tube.front().values()) CHECK(v > 0.0);
}

TEST_CASE("a fixed obstacle gives a value that does not grow with the horizon") {
  const GridSpec g({Axis{-3, 3, 61, false}});
  const auto sys = Integrator({-1}, {1});
  SolverConfig cfg;
  cfg.snapshot_dt = 0.1;
  const auto tube = static_unsafe(g, [](const auto& x) { return std::abs(x[0]) - 0.5; }, 11, 0.1);
  const AvoidSolution sol = solve_avoid(tube, sys, cfg);
  for (std::size_t k = 1; k < sol.tube.size(); ++k) {
    for (std::size_t i = 0; i < g.node_count(); ++i) CHECK(sol.tube[k - 1][i] <= sol.tube[k][i] + 5e-3);
  }
  // The running min already includes the present, and moving away never
  // lowers it, so the value is the obstacle itself away from the edges.
  for (int i = 5; i < 56; ++i) CHECK(sol.tube.front()[static_cast<std::size_t>(i)] == doctest::Approx(tube->d_tilde.front()[static_cast<std::size_t>(i)]));
}

TEST_CASE("convergence_gap") {
  const GridSpec g = dubins_grid();
  SolverConfig cfg;
  cfg.snapshot_dt = 0.5;
  SUBCASE("a steady obstacle nobody can reach has zero gap") {
    const auto tube = static_unsafe(g, [](const auto& x) { return 40.0 + 0.0 * x[0]; }, 4, 0.5);
    const AvoidSolution sol = solve_avoid(tube, kInternal, cfg);
    CHECK(convergence_gap(sol) == 0.0);
  }
  SUBCASE("a single snapshot is rejected") {
    const auto tube = static_unsafe(g, [](const auto& x) { return x[0]; }, 1, 0.5);
    const AvoidSolution sol = solve_avoid(tube, kInternal, cfg);
    CHECK_THROWS(convergence_gap(sol));
  }
  SUBCASE("comparing two horizons") {
    cfg.snapshot_dt = 0.25;
    const AvoidSolution shorter = solve_avoid(dubins_unsafe(1.5), kInternal, cfg);
    const AvoidSolution& longer = dubins_avoid();
    const double gap = convergence_gap(shorter, longer);
    double manual = 0.0;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      manual = std::max(manual, std::abs(shorter.tube.front()[i] - longer.tube.front()[i]));
    }
    CHECK(gap == manual);
    CHECK_THROWS(convergence_gap(longer, shorter));
  }
}

TEST_CASE("solve_avoid preconditions") {
  SolverConfig cfg;
  CHECK_THROWS(solve_avoid(nullptr, kInternal, cfg));
  const GridSpec g({Axis{-1, 1, 11, false}});
  const auto tube = static_unsafe(g, [](const auto& x) { return x[0]; }, 3, 0.1);
  CHECK_THROWS(solve_avoid(tube, kInternal, cfg));
}
