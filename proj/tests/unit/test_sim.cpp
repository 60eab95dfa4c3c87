#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "ecsk/avoid.hpp"
#include "ecsk/reach.hpp"
#include "ecsk/setops.hpp"
#include "ecsk/sim.hpp"

using namespace ecsk;
using std::numbers::pi;

namespace {

const SafetyKernel& dubins_kernel() {
  static const SafetyKernel kernel = [] {
    const auto internal = std::make_shared<DubinsCar>(0, 4, -1, 1);
    const auto external = std::make_shared<DubinsCar>(0, 3, -0.75, 0.75);
    const GridSpec g({Axis{-14, 14, 41, false}, Axis{-14, 14, 41, false}, Axis{-pi, pi, 24, true}});
    SolverConfig cfg;
    cfg.snapshot_dt = 0.25;
    const double r0 = default_initial_radius(g);
    auto reach = std::make_shared<const ReachSolution>(
        frs_from_point(external, std::vector<double>{0, 0, 0}, r0, 0, 2, g, cfg));
    auto unsafe = std::make_shared<const UnsafeTube>(build_unsafe_tube(reach, 1.0, g));
    auto avoid = std::make_shared<const AvoidSolution>(solve_avoid(unsafe, *internal, cfg));
    KernelParams params;
    params.r0 = r0;
    return SafetyKernel(avoid, internal, external, params);
  }();
  return kernel;
}

const std::vector<double> kOrigin{0, 0, 0};

}  // namespace

TEST_CASE("observation schedule") {
  const ObservationSchedule s({{0.0, 1.0}, {2.0, 3.0}});
  CHECK_FALSE(s.lost(0.0));
  CHECK(s.lost(1e-9));
  CHECK(s.lost(1.0));
  CHECK_FALSE(s.lost(1.5));
  CHECK_FALSE(s.lost(2.0));
  CHECK(s.lost(3.0));
  CHECK_FALSE(s.lost(3.0001));
  CHECK_FALSE(ObservationSchedule::never_lost().lost(0.3));
  CHECK(ObservationSchedule::full_loss(0, 5).lost(5.0));
  CHECK_THROWS(ObservationSchedule({{1.0, 1.0}}));
  CHECK_THROWS(ObservationSchedule({{0.0, 2.0}, {1.0, 3.0}}));
  CHECK_THROWS(ObservationSchedule({{2.0, 3.0}, {0.0, 1.0}}));
}

TEST_CASE("full loss from inside the kernel stays collision free") {
  const SafetyKernel& k = dubins_kernel();
  const std::vector<double> x_int{4.0, 1.0, 0.3};
  REQUIRE(k.value(x_int, kOrigin, 0.0) >= 0.5);
  const SimTrace tr = run_episode(k, x_int, kOrigin, ObservationSchedule::full_loss(0, 2), adversarial_policy(50, 3),
                                  hold_policy(), 2.0, 0.02, 9);
  CHECK_FALSE(tr.aborted);
  CHECK(tr.min_d >= 0.0);
  CHECK(tr.times.size() == 101);
  CHECK(tr.times.back() == 2.0);
  for (std::size_t i = 1; i < tr.observed.size(); ++i) CHECK_FALSE(tr.observed[i]);
  CHECK(tr.observed[0]);
}

TEST_CASE("trace bookkeeping") {
  const SafetyKernel& k = dubins_kernel();
  const SimTrace tr = run_episode(k, std::vector<double>{-5.0, 2.0, 1.0}, kOrigin, ObservationSchedule::full_loss(0, 2),
                                  adversarial_policy(20, 1), hold_policy(), 2.0, 0.03, 4);
  const std::size_t n = tr.times.size();
  CHECK(tr.x_int.size() == n);
  CHECK(tr.x_ext.size() == n);
  CHECK(tr.controls_int.size() == n);
  CHECK(tr.controls_ext.size() == n);
  CHECK(tr.mode.size() == n);
  CHECK(tr.observed.size() == n);
  CHECK(tr.d.size() == n);
  // 2 / 0.03 is not whole: the last step is shortened to land on the horizon.
  CHECK(tr.times.back() == 2.0);
  double recomputed = 1e300;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = collision_margin(k, tr.x_int[i], tr.x_ext[i]);
    CHECK(d == tr.d[i]);
    recomputed = std::min(recomputed, d);
    CHECK(k.internal().control_box().contains(tr.controls_int[i]));
    CHECK(k.external().control_box().contains(tr.controls_ext[i]));
  }
  CHECK(recomputed == tr.min_d);
}

TEST_CASE("seeded episodes are bit-identical") {
  const SafetyKernel& k = dubins_kernel();
  auto run = [&](std::uint64_t seed) {
    return run_episode(k, std::vector<double>{3.0, -4.0, 2.0}, kOrigin, ObservationSchedule::full_loss(0, 2),
                       adversarial_policy(50, 7), hold_policy(), 2.0, 0.02, seed);
  };
  const SimTrace a = run(11);
  const SimTrace b = run(11);
  const SimTrace c = run(12);
  CHECK(a.x_ext == b.x_ext);
  CHECK(a.x_int == b.x_int);
  CHECK(a.controls_ext == b.controls_ext);
  CHECK(a.d == b.d);
  CHECK(a.x_ext != c.x_ext);
}

TEST_CASE("while lost the controller ignores the true external state") {
  // The internal trajectory depends only on the anchor and elapsed time, so
  // swapping the external behaviour must not change a single internal bit.
  const SafetyKernel& k = dubins_kernel();
  const std::vector<double> x_int{2.5, 2.5, -2.0};
  const auto lost = ObservationSchedule::full_loss(0, 2);
  const SimTrace chase = run_episode(k, x_int, kOrigin, lost, adversarial_policy(50, 1), hold_policy(), 2.0, 0.02, 5);
  const SimTrace still = run_episode(k, x_int, kOrigin, lost, stationary_policy(), hold_policy(), 2.0, 0.02, 5);
  REQUIRE(chase.x_ext != still.x_ext);
  CHECK(chase.x_int == still.x_int);
  CHECK(chase.controls_int == still.controls_int);
  CHECK(chase.mode == still.mode);
}

TEST_CASE("observed steps re-anchor on the true external state") {
  const SafetyKernel& k = dubins_kernel();
  const NominalPolicy nominal = hold_policy();
  const ObservationSchedule sched({{0.5, 1.0}});
  const SimTrace tr = run_episode(k, std::vector<double>{3.0, 0.5, 2.5}, kOrigin, sched, adversarial_policy(50, 2),
                                  nominal, 2.0, 0.02, 6);
  REQUIRE_FALSE(tr.aborted);
  CHECK(tr.min_d >= 0.0);
  int observed = 0;
  int nominal_steps = 0;
  std::vector<double> anchor = tr.x_ext[0];
  double anchor_t = 0.0;
  for (std::size_t i = 0; i + 1 < tr.times.size(); ++i) {
    if (tr.observed[i]) {
      anchor = tr.x_ext[i];
      anchor_t = tr.times[i];
      ++observed;
    }
    const auto u0 = nominal_control(nominal, k.internal(), tr.x_int[i]);
    const FilterDecision expect = k.filter_step(tr.x_int[i], anchor, tr.times[i] - anchor_t, u0);
    CHECK(tr.controls_int[i] == expect.control);
    CHECK(tr.mode[i] == expect.mode);
    if (tr.mode[i] == FilterMode::Nominal) ++nominal_steps;
  }
  // 100 decision steps, 25 of them in (0.5, 1.0].
  CHECK(observed == 75);
  CHECK(nominal_steps > 0);
}

TEST_CASE("a stationary obstacle outside collision is never hit") {
  const SafetyKernel& k = dubins_kernel();
  const SimTrace tr = run_episode(k, std::vector<double>{-1.5, 1.2, 0.0}, kOrigin, ObservationSchedule::never_lost(),
                                  stationary_policy(), hold_policy(), 2.0, 0.02, 1);
  CHECK(tr.min_d > 0.0);
  for (const auto& x : tr.x_ext) CHECK(x == kOrigin);
}

TEST_CASE("greedy pursuer closes in on a resting target") {
  const SafetyKernel& k = dubins_kernel();
  // The target starts deep inside the kernel, so the filter keeps the
  // resting nominal control and only the pursuer moves.
  const SimTrace tr = run_episode(k, std::vector<double>{13.0, 0.0, 0.0}, kOrigin, ObservationSchedule::never_lost(),
                                  adversarial_policy(50, 8), hold_policy(), 1.0, 0.02, 2);
  for (std::size_t i = 1; i < tr.times.size(); ++i) {
    CHECK(tr.x_int[i] == tr.x_int[0]);
    CHECK(tr.d[i] <= tr.d[i - 1]);
  }
  CHECK(tr.d.back() < tr.d.front());
}

TEST_CASE("episode preconditions and aborts") {
  const SafetyKernel& k = dubins_kernel();
  const auto lost = ObservationSchedule::full_loss(0, 2);
  CHECK_THROWS(run_episode(k, std::vector<double>{3, 0, 0}, kOrigin, lost, stationary_policy(), hold_policy(), 2.0, 0.06, 1));
  CHECK_THROWS(run_episode(k, std::vector<double>{NAN, 0, 0}, kOrigin, lost, stationary_policy(), hold_policy(), 2.0, 0.02, 1));
  CHECK_THROWS(adversarial_policy(0, 1));

  SUBCASE("losing sight longer than the horizon aborts") {
    const SimTrace tr = run_episode(k, std::vector<double>{6, 6, 0}, kOrigin, ObservationSchedule::full_loss(0, 3),
                                    stationary_policy(), hold_policy(), 3.0, 0.02, 1);
    CHECK(tr.aborted);
    CHECK(tr.times.back() > 2.0);
  }
  SUBCASE("far outside the envelope the nominal control is used") {
    const SimTrace tr = run_episode(k, std::vector<double>{40, 0, 0}, kOrigin, lost, stationary_policy(),
                                    waypoint_policy({50, 0}), 2.0, 0.02, 1);
    CHECK_FALSE(tr.aborted);
    CHECK(tr.x_int.back()[0] > 40.0);
  }
}

TEST_CASE("batch verification") {
  const SafetyKernel& k = dubins_kernel();
  CHECK_THROWS(batch_verify(k, 5, -1.0, 1));
  CHECK_THROWS(batch_verify(k, 5, 0.0, 1));
  const BatchReport empty = batch_verify(k, 0, 0.5, 1);
  CHECK(empty.trials == 0);
  CHECK(empty.collisions == 0);
  CHECK(empty.passed());

  BatchOptions opts;
  opts.keep_traces = true;
  const BatchReport rep = batch_verify(k, 20, 0.5, 17, opts);
  CHECK(rep.trials == 20);
  CHECK(rep.collisions == 0);
  CHECK(rep.aborted == 0);
  CHECK(rep.worst_min_d >= 0.0);
  CHECK(rep.traces.size() == 20);
  for (const auto& run : rep.runs) CHECK(run.start_value >= 0.5);
  const BatchReport again = batch_verify(k, 20, 0.5, 17, opts);
  CHECK(again.worst_min_d == rep.worst_min_d);
}

TEST_CASE("trace CSV layout") {
  const SafetyKernel& k = dubins_kernel();
  const SimTrace tr = run_episode(k, std::vector<double>{5, 5, 0}, kOrigin, ObservationSchedule::full_loss(0, 2),
                                  stationary_policy(), hold_policy(), 0.1, 0.05, 1);
  std::ostringstream out;
  write_trace_csv(tr, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,x1,x2,x3,x4,x5,x6,u1,u2,u3,u4,mode,observed,d");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}
