#include "ecsk/avoid.hpp"

#include <algorithm>
#include <cmath>

namespace ecsk {

AvoidSolution solve_avoid(std::shared_ptr<const UnsafeTube> unsafe, const DynamicalSystem& system,
                          const SolverConfig& cfg) {
  if (!unsafe) throw std::invalid_argument("solve_avoid: missing unsafe tube");
  const TimeSampledField& d = unsafe->d_tilde;
  AvoidSolution sol;
  sol.tube = integrate_avoid(d.back(), d, system, cfg);
  sol.t0 = d.t0();
  sol.tf = d.tf();
  sol.unsafe = std::move(unsafe);
  return sol;
}

ScalarField kernel_slice(const AvoidSolution& sol, double t) { return sol.tube.at_time(t); }

namespace {

double linf(std::span<const double> a, std::span<const double> b) {
  double gap = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
  return gap;
}

}  // namespace

double convergence_gap(const AvoidSolution& sol) {
  if (sol.tube.size() < 2) throw std::invalid_argument("convergence_gap: needs at least two snapshots");
  return linf(sol.tube[0].values(), sol.tube[1].values());
}

double convergence_gap(const AvoidSolution& shorter, const AvoidSolution& longer) {
  if (!(shorter.tube.spec() == longer.tube.spec())) throw std::invalid_argument("convergence_gap: grids differ");
  if (shorter.t0 != longer.t0) throw std::invalid_argument("convergence_gap: solutions start at different times");
  if (!(longer.tf > shorter.tf)) throw std::invalid_argument("convergence_gap: second solution needs the longer horizon");
  return linf(shorter.tube.front().values(), longer.tube.front().values());
}

}  // namespace ecsk
