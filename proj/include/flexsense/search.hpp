#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flexsense/types.hpp"

namespace flexsense {

/// Cost value with its first and second derivative in theta.
struct ObjectiveValue {
  double value = 0.0;
  double gradient = 0.0;
  double hessian = 0.0;
};

using Objective = std::function<ObjectiveValue(double)>;
using CostFunction = std::function<double(double)>;

enum class SearchMethod { Grid, Newton };

/// Search grids and Newton controls. Angles in degrees, as configured.
struct SearchConfig {
  double min_deg = -90.0;
  double max_deg = 90.0;
  double dense_step_deg = 0.1;
  double coarse_step_deg = 0.5;
  int max_iter = 200;
  double tolerance = 1e-10;    // radians
  double trust_radius = 0.0;   // radians; <= 0 means one coarse grid step
};

struct NewtonOptions {
  int max_iter = 200;
  double tolerance = 1e-10;
  double trust_radius = deg_to_rad(0.5);
};

struct NewtonResult {
  double theta = 0.0;
  int iterations = 0;  // accepted steps
};

/// Estimated DOAs, ascending, possibly fewer than requested.
struct DoaEstimate {
  std::vector<double> angles;    // radians, strictly increasing
  int detected = 0;
  int misses = 0;
  std::vector<int> iterations;   // per detected source; empty for grid search
  std::string method;
};

/// Grid {min, min + step, ...} up to max inclusive, in radians.
std::vector<double> make_grid(double min_deg, double max_deg, double step_deg);

/// Interior points strictly below both neighbours, deepest first, at most
/// `count` of them. Ties go to the lower index.
std::vector<std::size_t> local_minima(std::span<const double> values, int count);

/// Interior points strictly above both neighbours, highest first.
std::vector<std::size_t> local_maxima(std::span<const double> values, int count);

/// Evaluates the cost on the grid and returns the angles of its `count`
/// deepest discrete local minima.
std::vector<double> coarse_scan(const CostFunction& cost, const std::vector<double>& grid, int count);

/// Damped Newton descent: theta <- theta - g/h with |step| <= trust_radius.
/// Stops when |step| < tolerance, after max_iter steps, when h <= 0, or when
/// the next iterate would leave (-pi/2, pi/2).
NewtonResult newton_refine(double theta0, const Objective& objective, const NewtonOptions& options);

/// Grid path: K largest local maxima of 1/J on the dense grid.
/// Newton path: coarse scan of J then one independent refinement per minimum.
DoaEstimate search_doas(const Objective& objective, int n_sources, SearchMethod method,
                        const SearchConfig& config, const std::string& tag);

NewtonOptions newton_options(const SearchConfig& config);

}  // namespace flexsense
