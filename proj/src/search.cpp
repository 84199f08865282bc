#include "flexsense/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flexsense {

namespace {

// Refinements converging this close together have found the same minimum.
constexpr double kMergeRadius = 1e-6;

template <typename Better>
std::vector<std::size_t> local_extrema(std::span<const double> values, int count, Better better) {
  std::vector<std::size_t> idx;
  if (values.size() < 3 || count <= 0) return idx;
  for (std::size_t i = 1; i + 1 < values.size(); ++i) {
    if (better(values[i], values[i - 1]) && better(values[i], values[i + 1])) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return better(values[a], values[b]); });
  if (idx.size() > static_cast<std::size_t>(count)) idx.resize(static_cast<std::size_t>(count));
  return idx;
}

DoaEstimate finish(std::vector<double> angles, std::vector<int> iterations, int n_sources,
                   std::string tag) {
  std::vector<std::size_t> order(angles.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return angles[a] < angles[b]; });

  DoaEstimate est;
  est.method = std::move(tag);
  for (std::size_t i : order) {
    if (!est.angles.empty() && angles[i] - est.angles.back() < kMergeRadius) continue;
    est.angles.push_back(angles[i]);
    if (!iterations.empty()) est.iterations.push_back(iterations[i]);
  }
  est.detected = static_cast<int>(est.angles.size());
  est.misses = n_sources - est.detected;
  return est;
}

}  // namespace

std::vector<double> make_grid(double min_deg, double max_deg, double step_deg) {
  std::vector<double> grid;
  if (!(step_deg > 0.0) || max_deg < min_deg) return grid;
  const auto n = static_cast<std::size_t>(std::floor((max_deg - min_deg) / step_deg + 1e-9)) + 1;
  grid.reserve(n);
  for (std::size_t i = 0; i < n; ++i) grid.push_back(deg_to_rad(min_deg + static_cast<double>(i) * step_deg));
  return grid;
}

std::vector<std::size_t> local_minima(std::span<const double> values, int count) {
  return local_extrema(values, count, std::less<double>{});
}

std::vector<std::size_t> local_maxima(std::span<const double> values, int count) {
  return local_extrema(values, count, std::greater<double>{});
}

std::vector<double> coarse_scan(const CostFunction& cost, const std::vector<double>& grid, int count) {
  std::vector<double> values(grid.size());
  std::transform(grid.begin(), grid.end(), values.begin(), cost);
  std::vector<double> out;
  for (std::size_t i : local_minima(values, count)) out.push_back(grid[i]);
  return out;
}

NewtonResult newton_refine(double theta0, const Objective& objective, const NewtonOptions& options) {
  NewtonResult res{theta0, 0};
  for (int z = 0; z < options.max_iter; ++z) {
    const ObjectiveValue v = objective(res.theta);
    if (!(v.hessian > 0.0)) break;
    const double step = std::clamp(v.gradient / v.hessian, -options.trust_radius, options.trust_radius);
    const double next = res.theta - step;
    if (!(std::abs(next) < kPi / 2.0)) break;
    res.theta = next;
    ++res.iterations;
    if (std::abs(step) < options.tolerance) break;
  }
  return res;
}

NewtonOptions newton_options(const SearchConfig& config) {
  NewtonOptions opt;
  opt.max_iter = config.max_iter;
  opt.tolerance = config.tolerance;
  opt.trust_radius = config.trust_radius > 0.0 ? config.trust_radius : deg_to_rad(config.coarse_step_deg);
  return opt;
}

DoaEstimate search_doas(const Objective& objective, int n_sources, SearchMethod method,
                        const SearchConfig& config, const std::string& tag) {
  const CostFunction cost = [&](double theta) { return objective(theta).value; };

  if (method == SearchMethod::Grid) {
    const auto grid = make_grid(config.min_deg, config.max_deg, config.dense_step_deg);
    std::vector<double> spectrum(grid.size());
    std::transform(grid.begin(), grid.end(), spectrum.begin(), [&](double th) { return 1.0 / cost(th); });
    std::vector<double> angles;
    for (std::size_t i : local_maxima(spectrum, n_sources)) angles.push_back(grid[i]);
    return finish(std::move(angles), {}, n_sources, tag);
  }

  const auto coarse = make_grid(config.min_deg, config.max_deg, config.coarse_step_deg);
  const auto init = coarse_scan(cost, coarse, n_sources);
  const NewtonOptions opt = newton_options(config);
  std::vector<double> angles;
  std::vector<int> iterations;
  for (double theta0 : init) {
    const NewtonResult r = newton_refine(theta0, objective, opt);
    angles.push_back(r.theta);
    iterations.push_back(r.iterations);
  }
  return finish(std::move(angles), std::move(iterations), n_sources, tag);
}

}  // namespace flexsense
