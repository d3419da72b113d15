#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "ovl/stabilized.hpp"

namespace ovl {

// Value at `at` of a function holomorphic on the closed disk |s - center| <= radius,
// from samples on the boundary circle (trapezoid rule for the Cauchy integral).
// Converges like (|at - center| / radius)^nodes.
template <class Fn>
StabilizedValue cauchy_interpolate(Fn&& g, cplx center, double radius, cplx at, int nodes = 32) {
  std::vector<StabilizedValue> samples;
  std::vector<cplx> weights;
  samples.reserve(nodes);
  weights.reserve(nodes);
  double top = -std::numeric_limits<double>::infinity();
  const cplx s0 = at - center;
  for (int j = 0; j < nodes; ++j) {
    const cplx s = std::polar(radius, 2.0 * std::numbers::pi * (j + 0.5) / nodes);
    samples.push_back(g(center + s));
    weights.push_back(s / (s - s0) / static_cast<double>(nodes));
    if (!samples.back().is_zero()) top = std::max(top, samples.back().log_scale());
  }
  if (!std::isfinite(top)) return {};
  cplx acc{};
  for (int j = 0; j < nodes; ++j) {
    if (samples[j].is_zero()) continue;
    acc += weights[j] * samples[j].mantissa() * std::exp(samples[j].log_scale() - top);
  }
  return {acc, top};
}

template <class Fn>
cplx cauchy_interpolate_plain(Fn&& g, cplx center, double radius, cplx at, int nodes = 32) {
  return cauchy_interpolate([&](cplx s) { return StabilizedValue(g(s)); }, center, radius, at, nodes).value();
}

} // namespace ovl
