#include "ergavg/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

namespace ergavg::quad {

const GaussRule& gauss_legendre_64() {
  static const GaussRule rule = [] {
    using Half = boost::math::quadrature::gauss<double, 64>;
    // boost stores the non-negative half of the symmetric rule
    const auto& x = Half::abscissa();
    const auto& w = Half::weights();
    GaussRule r;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (x[k] == 0.0) {
        r.nodes.push_back(0.0);
        r.weights.push_back(w[k]);
        continue;
      }
      r.nodes.push_back(-x[k]);
      r.weights.push_back(w[k]);
      r.nodes.push_back(x[k]);
      r.weights.push_back(w[k]);
    }
    return r;
  }();
  return rule;
}

}  // namespace ergavg::quad
