#pragma once

// Energy traded between the gas and power operators on the conversion links.
// P2G: electricity sold by the ADN to the GDN's electrolyzers (kW).
// G2P: gas sold by the GDN to the ADN's fuel cells (m3/h of blend).

#include <vector>

#include "hcng/netmodel.hpp"

namespace hcng {

struct TradeDecision {
  std::vector<Series> p2g_kw;   // [electrolyzer][t]
  std::vector<Series> g2p_m3h;  // [fuel cell][t]
  Series p2g_price;             // $/kWh
  Series g2p_price;             // $/m3

  static TradeDecision zero(const Scenario& s);

  // Payments over the horizon: the GDN pays p2g_payment to the ADN and
  // receives g2p_payment from it.
  double p2g_payment(double dt_hours) const;
  double g2p_payment(double dt_hours) const;
  double p2g_energy_kwh(int t, double dt_hours) const;
  double g2p_volume_m3(int t, double dt_hours) const;
  bool has_prices() const { return !p2g_price.empty() && !g2p_price.empty(); }
};

}  // namespace hcng
