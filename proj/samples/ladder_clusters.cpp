// Encode a return series at a ladder of thresholds, decode each row and
// cluster the per-time emission vectors into volatility states.

#include <iostream>

#include "volseg/aggregation.hpp"
#include "volseg/simulation.hpp"

int main() {
  using namespace volseg;
  SimSpec spec;
  spec.kind = SimKind::regime_t;
  spec.n = 4000;
  spec.seed = 3;
  const SimResult sim = generate(spec);

  const ThresholdLadder ladder = ladder_from_quantiles(sim.values, default_ladder_levels());
  LossConfig cfg;
  cfg.seed = 3;
  const EmissionMatrix em = encode_decode(sim.values, ladder, cfg, default_threads());
  const ClusterResult cr = cluster_states(em, std::nullopt);

  std::cout << "clusters: " << cr.k << "\n";
  for (std::size_t c = 0; c < cr.cdf.size(); ++c) {
    std::cout << "cluster " << c + 1 << " CDF:";
    for (double f : cr.cdf[c]) std::cout << ' ' << f;
    std::cout << '\n';
  }
}
