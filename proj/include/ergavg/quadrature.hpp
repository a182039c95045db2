#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "ergavg/errors.hpp"

namespace ergavg::quad {

/// Gauss–Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// 64-point rule, built once.
const GaussRule& gauss_legendre_64();

template <class T>
struct Estimate {
  T value{};
  double error = 0.0;  // |I_{2n} - I_n| of the last doubling step
  std::size_t cells = 0;
  bool converged = false;
};

template <class F>
auto gauss_on_cell(const GaussRule& rule, F& f, double a, double b) {
  using T = decltype(f(a));
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  T sum{};
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) sum += rule.weights[k] * f(mid + half * rule.nodes[k]);
  return sum * half;
}

template <class F>
auto gauss_composite_fixed(F& f, double a, double b, std::size_t cells) {
  const GaussRule& rule = gauss_legendre_64();
  using T = decltype(f(a));
  T sum{};
  const double h = (b - a) / static_cast<double>(cells);
  for (std::size_t c = 0; c < cells; ++c) sum += gauss_on_cell(rule, f, a + h * c, c + 1 == cells ? b : a + h * (c + 1));
  return sum;
}

/// Composite 64-node Gauss–Legendre on [a, b], doubling the number of cells
/// until successive estimates differ by less than `tol`.
template <class F>
auto gauss_doubling(F&& f, double a, double b, std::size_t initial_cells, double tol,
                    std::size_t max_cells = std::size_t{1} << 16) {
  using T = decltype(f(a));
  Estimate<T> out;
  if (!(b > a)) {
    out.converged = true;
    return out;
  }
  std::size_t cells = initial_cells == 0 ? 1 : initial_cells;
  T previous = gauss_composite_fixed(f, a, b, cells);
  for (;;) {
    cells *= 2;
    T current = gauss_composite_fixed(f, a, b, cells);
    out.value = current;
    out.error = std::abs(current - previous);
    out.cells = cells;
    if (out.error < tol) {
      out.converged = true;
      return out;
    }
    if (cells >= max_cells) return out;
    previous = current;
  }
}

/// Sums gauss_doubling over consecutive pieces [breaks[k], breaks[k+1]]; the
/// tolerance is shared equally. `cells_per_unit` seeds the initial cell count
/// (oscillation hint), so a piece of length len starts at ceil(len * cells_per_unit).
template <class F>
auto gauss_over_pieces(F&& f, std::span<const double> breaks, double cells_per_unit, double tol,
                       std::size_t max_cells = std::size_t{1} << 16) {
  using T = decltype(f(0.0));
  Estimate<T> total;
  total.converged = true;
  if (breaks.size() < 2) return total;
  const double piece_tol = tol / static_cast<double>(breaks.size() - 1);
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double len = breaks[k + 1] - breaks[k];
    const auto init = static_cast<std::size_t>(std::ceil(std::max(1.0, len * cells_per_unit)));
    auto piece = gauss_doubling(f, breaks[k], breaks[k + 1], init, piece_tol, std::max(max_cells, 2 * init));
    total.value += piece.value;
    total.error += piece.error;
    total.cells += piece.cells;
    total.converged = total.converged && piece.converged;
  }
  return total;
}

/// Simpson's rule on one interval: exact for cubics.
template <class F>
double simpson(F& f, double a, double b) {
  return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
}

}  // namespace ergavg::quad
