#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>

#include "ecsk/reach.hpp"
#include "ecsk/setops.hpp"
#include "oracles.hpp"

using namespace ecsk;
using std::numbers::pi;

namespace {

GridSpec plane(double half, int n) { return GridSpec({Axis{-half, half, n, false}, Axis{-half, half, n, false}}); }

ScalarField from_fn(const GridSpec& g, auto fn) {
  std::vector<double> v(g.node_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(coord_of(g, g.unravel(i)));
  return ScalarField(g, std::move(v));
}

std::vector<std::uint8_t> sub_zero(const ScalarField& f) {
  std::vector<std::uint8_t> m(f.values().size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = f[i] <= 0.0 ? 1 : 0;
  return m;
}

// 4-connected components of a 2D mask.
int components(const GridSpec& g, const std::vector<std::uint8_t>& mask) {
  std::vector<int> label(mask.size(), 0);
  int count = 0;
  for (std::size_t s = 0; s < mask.size(); ++s) {
    if (!mask[s] || label[s]) continue;
    ++count;
    std::queue<std::size_t> q;
    q.push(s);
    label[s] = count;
    while (!q.empty()) {
      const auto idx = g.unravel(q.front());
      q.pop();
      for (int d = 0; d < 2; ++d) {
        for (int step : {-1, 1}) {
          auto n = idx;
          n[static_cast<std::size_t>(d)] += step;
          if (n[static_cast<std::size_t>(d)] < 0 || n[static_cast<std::size_t>(d)] >= g.count(static_cast<std::size_t>(d))) continue;
          const std::size_t f = g.flat_index(n);
          if (mask[f] && !label[f]) {
            label[f] = count;
            q.push(f);
          }
        }
      }
    }
  }
  return count;
}

const ReachSolution& dubins_reach() {
  static const ReachSolution sol = [] {
    const auto car = std::make_shared<DubinsCar>(0, 3, -0.75, 0.75);
    const GridSpec g({Axis{-10, 10, 41, false}, Axis{-10, 10, 41, false}, Axis{-pi, pi, 24, true}});
    SolverConfig cfg;
    cfg.snapshot_dt = 0.25;
    return frs_from_point(car, std::vector<double>{0, 0, 0}, default_initial_radius(g), 0, 2, g, cfg);
  }();
  return sol;
}

const UnsafeTube& dubins_unsafe() {
  static const UnsafeTube tube = [] {
    auto reach = std::make_shared<const ReachSolution>(dubins_reach());
    return build_unsafe_tube(reach, 1.0, reach->tube.spec());
  }();
  return tube;
}

}  // namespace

TEST_CASE("project_min") {
  const GridSpec g = plane(2, 21);
  const std::array<int, 1> keep_x{0};
  SUBCASE("a field independent of the dropped axis projects to any slice") {
    const ScalarField f = from_fn(g, [](const auto& x) { return x[0] * x[0] - 1.0; });
    const ScalarField p = project_min(f, keep_x);
    REQUIRE(p.spec().dims() == 1);
    for (int i = 0; i < 21; ++i) CHECK(p[static_cast<std::size_t>(i)] == f.at(std::array<int, 2>{i, 7}));
  }
  SUBCASE("|y| projects to zero along x") {
    const ScalarField p = project_min(from_fn(g, [](const auto& x) { return std::abs(x[1]); }), keep_x);
    for (double v : p.values()) CHECK(v == doctest::Approx(0.0).scale(1.0));
  }
  SUBCASE("bad keep lists are rejected") {
    const ScalarField f(g, std::vector<double>(g.node_count(), 0.0));
    CHECK_THROWS(project_min(f, std::span<const int>{}));
    CHECK_THROWS(project_min(f, std::array<int, 1>{2}));
    CHECK_THROWS(project_min(f, std::array<int, 2>{0, 0}));
  }
  SUBCASE("Dubins reach projects to the min over heading slices") {
    const ScalarField s = dubins_reach().tube.back();
    const GridSpec& sg = s.spec();
    const ScalarField p = project_min(s, std::array<int, 2>{0, 1});
    for (int i = 0; i < sg.count(0); ++i) {
      for (int j = 0; j < sg.count(1); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < sg.count(2); ++k) best = std::min(best, s.at(std::array<int, 3>{i, j, k}));
        CHECK(p.at(std::array<int, 2>{i, j}) == best);
      }
    }
  }
  SUBCASE("kept axes follow the requested order") {
    const ScalarField f = from_fn(GridSpec({Axis{0, 1, 3, false}, Axis{0, 4, 5, false}}),
                                  [](const auto& x) { return x[0] + 10 * x[1]; });
    const ScalarField p = project_min(f, std::array<int, 2>{1, 0});
    CHECK(p.spec().count(0) == 5);
    CHECK(p.at(std::array<int, 2>{2, 1}) == doctest::Approx(20.5));
  }
}

TEST_CASE("inflate") {
  const GridSpec g = plane(4, 81);
  const double h = g.max_spacing();
  SUBCASE("radius zero keeps the zero set within one cell") {
    const ScalarField f = from_fn(g, [](const auto& x) { return std::hypot(x[0] - 0.3, x[1]) - 1.7; });
    const ScalarField out = inflate(f, 0.0);
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      if ((f[i] <= 0.0) != (out[i] <= 0.0)) CHECK(std::abs(f[i]) <= g.cell_diagonal());
    }
  }
  SUBCASE("a single node grows into a disk of the given radius") {
    const double r = 2.0;
    const ScalarField f = from_fn(g, [](const auto& x) { return std::hypot(x[0], x[1]) < 1e-9 ? -1.0 : 1.0; });
    const ScalarField out = inflate(f, r);
    double area = 0.0;
    for (double v : out.values()) area += v <= 0.0 ? h * h : 0.0;
    CHECK(std::abs(area - pi * r * r) <= 2 * pi * r * h);
  }
  SUBCASE("result is the signed distance of the grown mask") {
    const ScalarField f = from_fn(g, [](const auto& x) { return std::max(std::abs(x[0] + 1.0), std::abs(x[1])) - 0.6; });
    const ScalarField out = inflate(f, 0.9);
    const auto brute = oracle::brute_signed_distance(g, sub_zero(out));
    for (std::size_t i = 0; i < g.node_count(); ++i) CHECK(out[i] == doctest::Approx(brute[i]).epsilon(1e-12));
  }
  SUBCASE("two nodes closer than twice the radius merge into one set") {
    const double d = 3.0;
    const ScalarField f = from_fn(g, [&](const auto& x) {
      const bool hit = std::abs(x[1]) < 1e-9 && (std::abs(x[0] + d / 2) < 1e-9 || std::abs(x[0] - d / 2) < 1e-9);
      return hit ? -1.0 : 1.0;
    });
    CHECK(components(g, sub_zero(inflate(f, 0.6 * d))) == 1);
    CHECK(components(g, sub_zero(inflate(f, 0.4 * d))) == 2);
  }
  SUBCASE("larger radius never increases the field") {
    const ScalarField f = from_fn(g, [](const auto& x) { return std::hypot(x[0], x[1] - 1.0) - 0.5; });
    const ScalarField a = inflate(f, 0.5);
    const ScalarField b = inflate(f, 1.25);
    for (std::size_t i = 0; i < g.node_count(); ++i) CHECK(b[i] <= a[i]);
  }
  SUBCASE("an empty set gives the positive sentinel") {
    const ScalarField out = inflate(ScalarField(g, std::vector<double>(g.node_count(), 1.0)), 1.0);
    for (double v : out.values()) CHECK(v == distance_sentinel(g));
    CHECK_THROWS(inflate(out, -1.0));
  }
}

TEST_CASE("extrude") {
  const GridSpec g = plane(3, 31);
  const Axis heading{-pi, pi, 16, true};
  const ScalarField f = from_fn(g, [](const auto& x) { return std::hypot(x[0] - 0.5, x[1]) - 1.2; });
  const ScalarField e = extrude(f, heading);
  REQUIRE(e.spec().dims() == 3);
  CHECK(e.spec().axis(2) == heading);
  for (int i = 0; i < 31; ++i) {
    for (int j = 0; j < 31; ++j) {
      for (int k = 0; k < 16; ++k) CHECK(e.at(std::array<int, 3>{i, j, k}) == f.at(std::array<int, 2>{i, j}));
    }
  }
  const ScalarField back = project_min(e, std::array<int, 2>{0, 1});
  for (std::size_t i = 0; i < g.node_count(); ++i) CHECK(back[i] == f[i]);

  // Node-count volume of the extruded set is 2*pi times the planar area.
  const double cell = g.spacing(0) * g.spacing(1);
  double area = 0.0;
  double volume = 0.0;
  for (double v : f.values()) area += v <= 0.0 ? cell : 0.0;
  for (double v : e.values()) volume += v <= 0.0 ? cell * heading.spacing() : 0.0;
  CHECK(volume == doctest::Approx(2 * pi * area).epsilon(1e-12));
}

TEST_CASE("unsafe tube from a Dubins reach set") {
  const ReachSolution& reach = dubins_reach();
  const UnsafeTube& tube = dubins_unsafe();
  const GridSpec& g = tube.d_tilde.spec();
  const GridSpec planar = g.subgrid(std::array<int, 2>{0, 1});
  REQUIRE(g == reach.tube.spec());
  REQUIRE(tube.d_tilde.size() == reach.tube.size());
  const int nh = g.count(2);

  SUBCASE("heading invariance is exact") {
    double worst = 0.0;
    for (const auto& s : tube.d_tilde.snapshots()) {
      for (std::size_t base = 0; base < g.node_count(); base += static_cast<std::size_t>(nh)) {
        for (int k = 1; k < nh; ++k) worst = std::max(worst, std::abs(s[base + static_cast<std::size_t>(k)] - s[base]));
      }
    }
    CHECK(worst <= 1e-12);
  }
  SUBCASE("the first snapshot is the disk of radius collision_radius + r0") {
    const ScalarField& s = tube.d_tilde.front();
    const double radius = tube.collision_radius + reach.r0;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      const auto x = coord_of(g, g.unravel(i));
      CHECK(std::abs(s[i] - (std::hypot(x[0], x[1]) - radius)) <= 2 * planar.cell_diagonal());
    }
  }
  SUBCASE("positions beyond the speed bound are safe") {
    for (std::size_t k = 0; k < tube.d_tilde.size(); ++k) {
      const double t = tube.d_tilde.times()[k];
      const ScalarField& s = tube.d_tilde[k];
      for (std::size_t i = 0; i < g.node_count(); ++i) {
        const auto x = coord_of(g, g.unravel(i));
        if (std::hypot(x[0], x[1]) > 3 * t + reach.r0 + tube.collision_radius) CHECK(s[i] > 0.0);
      }
    }
  }
  SUBCASE("the unsafe set grows in time") {
    const double h = g.max_spacing();
    for (std::size_t k = 1; k < tube.d_tilde.size(); ++k) {
      const auto a = tube.d_tilde[k - 1].values();
      const auto b = tube.d_tilde[k].values();
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] <= a[i] + h);
    }
  }
  SUBCASE("signed distance magnitude matches the distance to the zero set") {
    const ScalarField& s = tube.d_tilde.back();
    const ScalarField slice = project_min(s, std::array<int, 2>{0, 1});
    const auto brute = oracle::brute_signed_distance(planar, sub_zero(slice));
    for (std::size_t i = 0; i < planar.node_count(); ++i) CHECK(std::abs(slice[i]) <= std::abs(brute[i]) + planar.cell_diagonal());
  }
  SUBCASE("mismatched internal grids are rejected") {
    auto src = std::make_shared<const ReachSolution>(reach);
    CHECK_THROWS(build_unsafe_tube(src, 1.0, plane(5, 41)));
    CHECK_THROWS(build_unsafe_tube(src, 1.0, GridSpec({g.axis(0), g.axis(1), Axis{-pi, pi, 24, false}})));
    CHECK_THROWS(build_unsafe_tube(src, -1.0, g));
    CHECK_NOTHROW(build_unsafe_tube(src, 1.0, planar));
  }
}

TEST_CASE("pessimistic safety oracle") {
  const auto sys = std::make_shared<Integrator>(std::vector<double>{-1, -1}, std::vector<double>{1, 1});
  const GridSpec g = plane(2, 21);
  // Only the node at (0.4, -0.2) is reachable.
  std::vector<double> v(g.node_count(), 1.0);
  v[g.flat_index(std::array<int, 2>{12, 9})] = -0.1;
  ReachSolution one;
  one.tube = TimeSampledField({ScalarField(g, v, 0.0), ScalarField(g, v, 1.0)});
  one.system = sys;
  const double cr = 0.5;
  CHECK(pessimistic_safety_oracle(one, std::vector<double>{0.4, -0.2}, 0.5, cr) == doctest::Approx(-cr * cr));
  CHECK(pessimistic_safety_oracle(one, std::vector<double>{0.4 + 0.3, -0.2 + 0.4}, 0.5, cr) == doctest::Approx(0.0).scale(1.0));
  ReachSolution none = one;
  none.tube = TimeSampledField({ScalarField(g, std::vector<double>(g.node_count(), 1.0), 0.0)});
  CHECK(pessimistic_safety_oracle(none, std::vector<double>{0, 0}, 0.0, cr) == distance_sentinel(g));
}

TEST_CASE("pessimistic oracle and unsafe tube agree in sign away from the boundary") {
  const ReachSolution& reach = dubins_reach();
  const UnsafeTube& tube = dubins_unsafe();
  const GridSpec& g = tube.d_tilde.spec();
  const double band = g.subgrid(std::array<int, 2>{0, 1}).cell_diagonal();
  auto rng = oracle::rng(5);
  std::uniform_real_distribution<double> pos(-10, 10), head(-pi, pi), time(0, 2);
  int checked = 0;
  int agree = 0;
  while (checked < 300) {
    const std::vector<double> x{pos(rng), pos(rng), head(rng)};
    const double t = time(rng);
    const double d_tilde = tube.d_tilde.value(x, t);
    if (std::abs(d_tilde) <= band) continue;
    ++checked;
    const double d_hat = pessimistic_safety_oracle(reach, x, t, tube.collision_radius);
    if ((d_hat > 0.0) == (d_tilde > 0.0)) ++agree;
  }
  CHECK(agree == checked);
}
