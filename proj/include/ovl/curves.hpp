#pragma once

#include <string>
#include <vector>

#include "ovl/errors.hpp"
#include "ovl/limits.hpp"

namespace ovl::curves {

struct CurvePoint {
  std::string regime;
  std::string function;
  double param = 0.0;
  cplx arg{};
  cplx value{};
};

struct CurveSpec {
  std::string figure = "F"; // F, L, E, bulk, weak
  double xmin = -4.0;
  double xmax = 4.0;
  int steps = 400;
  std::vector<double> params; // rho for L, b for E; defaults {0.5, 2, 3} and {0.5, 1, 3}
  double ymin = -2.0;         // surfaces only
  double ymax = 2.0;
  int grid = 50;
  cplx chi{};
  double rho = 10.0;

  void validate() const {
    if (figure != "F" && figure != "L" && figure != "E" && figure != "bulk" && figure != "weak")
      throw validation_error("curves: unknown figure '" + figure + "'");
    if (!(xmin < xmax)) throw validation_error("curves: need xmin < xmax");
    if (steps < 1) throw validation_error("curves: steps must be >= 1");
    if (grid < 2) throw validation_error("curves: grid must be >= 2");
    if (!(ymin < ymax)) throw validation_error("curves: need ymin < ymax");
  }

  std::vector<double> resolved_params() const {
    if (!params.empty()) return params;
    if (figure == "L") return {0.5, 2.0, 3.0};
    if (figure == "E") return {0.5, 1.0, 3.0};
    if (figure == "weak") return {rho};
    return {0.0};
  }
};

inline double node(double lo, double hi, int i, int steps) { return lo + (hi - lo) * i / steps; }

/// F on a line, L_rho and E_b(x|x) per parameter, or the diagonal bulk/weak kernel on a grid x+iy.
inline std::vector<CurvePoint> make_curves(const CurveSpec& s) {
  s.validate();
  std::vector<CurvePoint> out;
  if (s.figure == "bulk" || s.figure == "weak") {
    const cplx chi = s.chi;
    for (double p : s.resolved_params())
      for (int i = 0; i < s.grid; ++i)
        for (int j = 0; j < s.grid; ++j) {
          const cplx z{node(s.xmin, s.xmax, i, s.grid - 1), node(s.ymin, s.ymax, j, s.grid - 1)};
          const cplx v = s.figure == "bulk" ? limits::bulk_kernel(z, std::conj(z), z, chi, std::conj(chi))
                                            : limits::weak_kernel(z, std::conj(z), z, chi, std::conj(chi), p);
          out.push_back({s.figure, "K11", p, z, v});
        }
    return out;
  }
  for (double p : s.resolved_params())
    for (int i = 0; i <= s.steps; ++i) {
      const double x = node(s.xmin, s.xmax, i, s.steps);
      if (s.figure == "F") out.push_back({"edge", "F", p, x, limits::edge_F_script(x)});
      if (s.figure == "L") out.push_back({"weak", "L", p, x, limits::weak_L_script(x, p)});
      if (s.figure == "E") out.push_back({"singular", "E", p, x, limits::singular_E_script(x, x, p)});
    }
  return out;
}

} // namespace ovl::curves
