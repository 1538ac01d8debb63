#include "hcng/trade.hpp"

namespace hcng {

TradeDecision TradeDecision::zero(const Scenario& s) {
  const int T = s.periods();
  TradeDecision d;
  d.p2g_kw.assign(s.devices.electrolyzers.size(), Series(T, 0.0));
  d.g2p_m3h.assign(s.devices.fuel_cells.size(), Series(T, 0.0));
  d.p2g_price.assign(T, 0.0);
  d.g2p_price.assign(T, 0.0);
  return d;
}

double TradeDecision::p2g_energy_kwh(int t, double dt_hours) const {
  double e = 0.0;
  for (const auto& s : p2g_kw) e += s.at(t) * dt_hours;
  return e;
}

double TradeDecision::g2p_volume_m3(int t, double dt_hours) const {
  double v = 0.0;
  for (const auto& s : g2p_m3h) v += s.at(t) * dt_hours;
  return v;
}

double TradeDecision::p2g_payment(double dt_hours) const {
  double c = 0.0;
  for (std::size_t t = 0; t < p2g_price.size(); ++t)
    c += p2g_price[t] * p2g_energy_kwh(static_cast<int>(t), dt_hours);
  return c;
}

double TradeDecision::g2p_payment(double dt_hours) const {
  double c = 0.0;
  for (std::size_t t = 0; t < g2p_price.size(); ++t)
    c += g2p_price[t] * g2p_volume_m3(static_cast<int>(t), dt_hours);
  return c;
}

}  // namespace hcng
