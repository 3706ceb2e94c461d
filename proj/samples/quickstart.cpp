// Decode volatility regimes of a simulated return series with a two-sided
// band, then compare against the planted states.

#include <iostream>

#include "volseg/decoding_error.hpp"
#include "volseg/encoding.hpp"
#include "volseg/model_selection.hpp"
#include "volseg/simulation.hpp"

int main() {
  using namespace volseg;
  SimSpec spec;
  spec.kind = SimKind::gaussian_hmm;
  spec.n = 2000;
  spec.p12 = 0.005;
  spec.variance = {1.0, 3.0};
  spec.seed = 11;
  const SimResult sim = generate(spec);

  const auto band = quantiles(sim.values, std::vector<double>{0.1, 0.9});
  const ExcursionProcess x = encode_excursion(sim.values, band[0], band[1]);

  LossConfig cfg;  // AIC, two states
  cfg.seed = 11;
  const DecodeResult res = optimize_theta(x, cfg);

  std::cout << "thresholds:";
  for (int t : res.best_params.thresholds) std::cout << ' ' << t;
  std::cout << "  T*=" << res.best_params.t_star << "  loss=" << res.best_loss << '\n';
  for (int s = 1; s <= res.best_assignment.num_states; ++s)
    std::cout << "state " << s << " emission " << res.best_assignment.emissions[static_cast<std::size_t>(s - 1)]
              << '\n';
  std::cout << "decoding error " << decoding_error_rate(sim.truth, res.best_assignment.labels) << '\n';
}
