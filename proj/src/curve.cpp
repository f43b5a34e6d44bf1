#include "pdpc/curve.hpp"

#include <algorithm>
#include <cmath>

#include "pdpc/error.hpp"
#include "pdpc/io.hpp"

namespace pdpc {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

// One-sided three-point endpoint derivative, limited to keep the end segment
// shape preserving (the PCHIM end condition).
double edge_slope(double h0, double h1, double d0, double d1) {
  double m = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (sign(m) != sign(d0)) {
    m = 0;
  } else if (sign(d0) != sign(d1) && std::abs(m) > 3 * std::abs(d0)) {
    m = 3 * d0;
  }
  return m;
}

}  // namespace

double PchipCurve::eval_unclamped(double p) const {
  if (p <= knots.front().p) return knots.front().b;
  if (p >= knots.back().p) return knots.back().b;
  const auto it = std::upper_bound(knots.begin(), knots.end(), p,
                                   [](double v, const PreferencePoint& k) { return v < k.p; });
  const auto i = static_cast<std::size_t>(it - knots.begin()) - 1;
  const double t = p - knots[i].p;
  const auto& s = segments[i];
  return ((s.a * t + s.b) * t + s.c) * t + s.d;
}

void validate(const PreferenceCurve& curve) {
  std::visit(Overloaded{
                 [](const LinearCurve& c) {
                   if (!(c.slope >= -1.0 && c.slope < 0.0))
                     throw ValidationError("linear slope must lie in [-1, 0), got " + format_double(c.slope));
                 },
                 [](const ZShapeCurve& c) {
                   if (!(c.lambda >= 0.0 && c.lambda < 0.5))
                     throw ValidationError("z-shape lambda must lie in [0, 0.5), got " + format_double(c.lambda));
                 },
                 [](const SShapeCurve& c) {
                   if (!(c.a > 0.0) || !std::isfinite(c.a))
                     throw ValidationError("s-shape steepness a must be positive, got " + format_double(c.a));
                 },
                 [](const PchipCurve& c) {
                   if (c.knots.size() < 2 || c.segments.size() + 1 != c.knots.size())
                     throw ValidationError("pchip curve needs >= 2 knots");
                 },
             },
             curve);
}

double eval(const PreferenceCurve& curve, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("progress p must lie in [0, 1], got " + format_double(p));
  const double v = std::visit(Overloaded{
                                  [p](const LinearCurve& c) { return c.slope * (p - 0.5) + 0.5; },
                                  [p](const ZShapeCurve& c) { return p < 0.5 ? 1.0 - c.lambda : c.lambda; },
                                  [p](const SShapeCurve& c) { return 1.0 / (1.0 + std::exp(c.a * (p - 0.5))); },
                                  [p](const PchipCurve& c) { return c.eval_unclamped(p); },
                              },
                              curve);
  return std::clamp(v, 0.0, 1.0);
}

std::vector<double> breakpoints(const PreferenceCurve& curve) {
  if (std::holds_alternative<ZShapeCurve>(curve)) return {0.5};
  if (const auto* c = std::get_if<PchipCurve>(&curve)) {
    std::vector<double> out;
    for (const auto& k : c->knots) {
      if (k.p > 0.0 && k.p < 1.0) out.push_back(k.p);
    }
    return out;
  }
  return {};
}

std::vector<double> isotonic_non_increasing(const std::vector<double>& ys) {
  // Pool adjacent violators on blocks of (mean, weight).
  struct Block {
    double mean;
    std::size_t weight;
  };
  std::vector<Block> blocks;
  for (double y : ys) {
    blocks.push_back({y, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean < blocks.back().mean) {
      const Block top = blocks.back();
      blocks.pop_back();
      auto& prev = blocks.back();
      const auto w = prev.weight + top.weight;
      prev.mean = (prev.mean * static_cast<double>(prev.weight) + top.mean * static_cast<double>(top.weight)) /
                  static_cast<double>(w);
      prev.weight = w;
    }
  }
  std::vector<double> out;
  out.reserve(ys.size());
  for (const auto& b : blocks) out.insert(out.end(), b.weight, b.mean);
  return out;
}

PchipCurve fit_pchip(std::vector<PreferencePoint> points, const PchipOptions& options) {
  if (points.size() < 2) throw ValidationError("pchip fit needs at least 2 points");
  for (const auto& pt : points) {
    if (!(pt.p >= 0 && pt.p <= 1) || !(pt.b >= 0 && pt.b <= 1))
      throw ValidationError("preference point (" + format_double(pt.p) + ", " + format_double(pt.b) +
                            ") lies outside [0,1]x[0,1]");
  }
  std::sort(points.begin(), points.end(), [](const auto& x, const auto& y) { return x.p < y.p; });
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].p == points[i - 1].p)
      throw ValidationError("duplicate progress value " + format_double(points[i].p) + " in preference points");
  }
  if (options.enforce_non_increasing) {
    std::vector<double> ys;
    for (const auto& pt : points) ys.push_back(pt.b);
    ys = isotonic_non_increasing(ys);
    for (std::size_t i = 0; i < points.size(); ++i) points[i].b = ys[i];
  }

  const std::size_t n = points.size();
  std::vector<double> h(n - 1);
  std::vector<double> delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = points[i + 1].p - points[i].p;
    delta[i] = (points[i + 1].b - points[i].b) / h[i];
  }

  PchipCurve c;
  c.knots = std::move(points);
  c.slopes.assign(n, 0.0);
  if (n == 2) {
    c.slopes[0] = c.slopes[1] = delta[0];
  } else {
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (sign(delta[k - 1]) * sign(delta[k]) <= 0) continue;  // local extremum or flat: slope 0
      // Weighted harmonic mean of the neighbouring secants.
      const double w1 = 2 * h[k] + h[k - 1];
      const double w2 = h[k] + 2 * h[k - 1];
      c.slopes[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
    c.slopes[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
    c.slopes[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  c.segments.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double m0 = c.slopes[i];
    const double m1 = c.slopes[i + 1];
    auto& s = c.segments[i];
    s.d = c.knots[i].b;
    s.c = m0;
    s.b = (3 * delta[i] - 2 * m0 - m1) / h[i];
    s.a = (m0 + m1 - 2 * delta[i]) / (h[i] * h[i]);
  }
  return c;
}

double integral(const PreferenceCurve& curve, std::size_t intervals) {
  if (intervals < 2) throw ValidationError("integral needs at least 2 grid intervals");
  std::vector<double> edges{0.0};
  for (double b : breakpoints(curve)) edges.push_back(b);
  edges.push_back(1.0);

  double total = 0;
  for (std::size_t piece = 0; piece + 1 < edges.size(); ++piece) {
    const double lo = edges[piece];
    const double hi = edges[piece + 1];
    const double len = hi - lo;
    auto m = static_cast<std::size_t>(std::ceil(static_cast<double>(intervals) * len));
    m = std::max<std::size_t>(2, m + (m % 2));
    const double step = len / static_cast<double>(m);
    // One-sided limits at interior piece edges.
    const double f_lo = eval(curve, piece == 0 ? lo : std::nextafter(lo, hi));
    const double f_hi = eval(curve, piece + 2 == edges.size() ? hi : std::nextafter(hi, lo));
    double sum = f_lo + f_hi;
    for (std::size_t i = 1; i < m; ++i) {
      const double x = lo + step * static_cast<double>(i);
      sum += (i % 2 ? 4.0 : 2.0) * eval(curve, x);
    }
    total += sum * step / 3.0;
  }
  return total;
}

double check_symmetry(const PreferenceCurve& curve, std::size_t grid) {
  if (grid < 1) throw ValidationError("symmetry grid must have >= 1 point");
  double worst = 0;
  for (std::size_t j = 1; j <= grid; ++j) {
    const double d = 0.5 * static_cast<double>(j) / static_cast<double>(grid);
    worst = std::max(worst, std::abs(eval(curve, 0.5 + d) - (1.0 - eval(curve, 0.5 - d))));
  }
  return worst;
}

double max_deviation(const PreferenceCurve& f, const PreferenceCurve& g, std::size_t points) {
  if (points < 2) throw ValidationError("deviation grid needs >= 2 points");
  double worst = 0;
  for (std::size_t i = 0; i < points; ++i) {
    const double p = static_cast<double>(i) / static_cast<double>(points - 1);
    worst = std::max(worst, std::abs(eval(f, p) - eval(g, p)));
  }
  return worst;
}

std::string describe(const PreferenceCurve& curve) {
  return std::visit(Overloaded{
                        [](const LinearCurve& c) { return "linear(slope=" + format_double(c.slope) + ")"; },
                        [](const ZShapeCurve& c) { return "zshape(lambda=" + format_double(c.lambda) + ")"; },
                        [](const SShapeCurve& c) { return "sshape(a=" + format_double(c.a) + ")"; },
                        [](const PchipCurve& c) { return "pchip(" + std::to_string(c.knots.size()) + " knots)"; },
                    },
                    curve);
}

nlohmann::json curve_to_json(const PreferenceCurve& curve) {
  using nlohmann::json;
  return std::visit(Overloaded{
                        [](const LinearCurve& c) { return json{{"type", "linear"}, {"slope", c.slope}}; },
                        [](const ZShapeCurve& c) { return json{{"type", "zshape"}, {"lambda", c.lambda}}; },
                        [](const SShapeCurve& c) { return json{{"type", "sshape"}, {"a", c.a}}; },
                        [](const PchipCurve& c) {
                          json knots = json::array();
                          for (const auto& k : c.knots) knots.push_back(json::array({k.p, k.b}));
                          return json{{"type", "pchip"}, {"knots", knots}};
                        },
                    },
                    curve);
}

PreferenceCurve curve_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw ValidationError("curve spec must be an object with a string \"type\"");
  const auto type = j["type"].get<std::string>();
  auto num = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ValidationError(std::string("curve parameter \"") + key + "\" must be a number");
    return j[key].get<double>();
  };
  PreferenceCurve curve;
  if (type == "linear") {
    curve = LinearCurve{num("slope", -1.0)};
  } else if (type == "zshape") {
    curve = ZShapeCurve{num("lambda", 0.0)};
  } else if (type == "sshape") {
    curve = SShapeCurve{num("a", 10.0)};
  } else if (type == "pchip") {
    if (!j.contains("knots") || !j["knots"].is_array()) throw ValidationError("pchip curve needs a \"knots\" array");
    std::vector<PreferencePoint> pts;
    for (const auto& k : j["knots"]) {
      if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number())
        throw ValidationError("pchip knots must be [p, b] number pairs");
      pts.push_back({k[0].get<double>(), k[1].get<double>()});
    }
    PchipOptions opts;
    if (j.contains("enforce_non_increasing")) opts.enforce_non_increasing = j["enforce_non_increasing"].get<bool>();
    curve = fit_pchip(std::move(pts), opts);
  } else {
    throw ValidationError("unknown curve type \"" + type + "\" (linear|zshape|sshape|pchip)");
  }
  validate(curve);
  return curve;
}

}  // namespace pdpc
