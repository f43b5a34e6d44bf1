#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace pdpc {

/// f(p) = slope * (p - 0.5) + 0.5, slope in [-1, 0).
struct LinearCurve {
  double slope = -1.0;
};

/// f(p) = 1 - lambda for p < 0.5, lambda for p >= 0.5; lambda in [0, 0.5).
struct ZShapeCurve {
  double lambda = 0.0;
};

/// f(p) = 1 / (1 + exp(a * (p - 0.5))), a > 0.
struct SShapeCurve {
  double a = 10.0;
};

struct PreferencePoint {
  double p = 0;  // pretraining progress
  double b = 0;  // preferred low-PD proportion
  bool operator==(const PreferencePoint&) const = default;
};

/// Shape-preserving piecewise cubic Hermite interpolant. On segment i,
///   S_i(p) = a_i (p - p_i)^3 + b_i (p - p_i)^2 + c_i (p - p_i) + d_i.
/// Outside the knot range the curve holds its end values.
struct PchipCurve {
  std::vector<PreferencePoint> knots;
  std::vector<double> slopes;  // derivative at each knot
  struct Segment {
    double a, b, c, d;
  };
  std::vector<Segment> segments;  // knots.size() - 1 entries

  double eval_unclamped(double p) const;
};

using PreferenceCurve = std::variant<LinearCurve, ZShapeCurve, SShapeCurve, PchipCurve>;

/// Throws ValidationError when parameters fall outside their family's range.
void validate(const PreferenceCurve& curve);

/// f(p) clamped to [0, 1]. Throws ValidationError for p outside [0, 1].
double eval(const PreferenceCurve& curve, double p);

/// Discontinuities and knots strictly inside (0, 1); quadrature splits there.
std::vector<double> breakpoints(const PreferenceCurve& curve);

struct PchipOptions {
  /// Replace b values by their non-increasing isotonic fit (pool adjacent
  /// violators) before interpolating.
  bool enforce_non_increasing = false;
};

/// Knots are sorted by p. Needs >= 2 points with distinct p, all coordinates
/// in [0, 1].
PchipCurve fit_pchip(std::vector<PreferencePoint> points, const PchipOptions& options = {});

/// Least-squares non-increasing fit of ys (equal weights).
std::vector<double> isotonic_non_increasing(const std::vector<double>& ys);

/// Composite Simpson over [0, 1] with `intervals` subintervals (rounded up to
/// even), split at breakpoints so jump discontinuities are integrated exactly
/// per piece.
double integral(const PreferenceCurve& curve, std::size_t intervals = 1000);

/// max over j=1..grid of |f(0.5 + d) - (1 - f(0.5 - d))| with d = 0.5 j / grid.
double check_symmetry(const PreferenceCurve& curve, std::size_t grid = 1000);

/// max |f(p) - g(p)| over `points` uniform grid points on [0, 1].
double max_deviation(const PreferenceCurve& f, const PreferenceCurve& g, std::size_t points = 1001);

std::string describe(const PreferenceCurve& curve);

/// {"type": "linear", "slope": k} | {"type": "zshape", "lambda": l} |
/// {"type": "sshape", "a": a} | {"type": "pchip", "knots": [[p, b], ...]}
nlohmann::json curve_to_json(const PreferenceCurve& curve);
PreferenceCurve curve_from_json(const nlohmann::json& j);

}  // namespace pdpc
