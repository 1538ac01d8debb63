#include "hcng/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hcng/error.hpp"

namespace hcng {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string msg = "invalid scenario:";
  for (const auto& p : problems) msg += "\n  " + p;
  return msg;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

int GasNetwork::node_index(const std::string& id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return static_cast<int>(i);
  return -1;
}

int PowerNetwork::bus_index(const std::string& id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return static_cast<int>(i);
  return -1;
}

double hydrogen_fraction(double h2_volume, double ch4_volume) {
  if (h2_volume < 0.0 || ch4_volume < 0.0)
    throw DomainError("hydrogen_fraction: volumes must be nonnegative");
  const double total = h2_volume + ch4_volume;
  if (!(total > 0.0)) throw DomainError("hydrogen_fraction: both volumes are zero");
  return h2_volume / total;
}

double hhv_mix(double omega, double hhv_h2, double hhv_ch4) {
  if (!(omega >= 0.0 && omega <= 1.0))
    throw DomainError("hhv_mix: hydrogen fraction outside [0, 1]");
  if (!(hhv_h2 > 0.0) || !(hhv_ch4 > 0.0))
    throw DomainError("hhv_mix: heat values must be positive");
  if (!(hhv_h2 < hhv_ch4)) throw DomainError("hhv_mix: hydrogen heat value must be below methane's");
  return omega * hhv_h2 + (1.0 - omega) * hhv_ch4;
}

double equivalent_gas_load(double load, double hhv_mix_value, double hhv_ch4) {
  if (!(hhv_mix_value > 0.0) || !(hhv_ch4 > 0.0))
    throw DomainError("equivalent_gas_load: heat values must be positive");
  if (load < 0.0) throw DomainError("equivalent_gas_load: negative load");
  return load * hhv_ch4 / hhv_mix_value;
}

BlendState BlendState::from_omega(const Series& omega, const BlendConstants& c) {
  BlendState b;
  b.omega = omega;
  b.hhv_mix.resize(omega.size());
  for (std::size_t t = 0; t < omega.size(); ++t)
    b.hhv_mix[t] = hcng::hhv_mix(omega[t], c.hhv_h2, c.hhv_ch4);
  b.h2_volume.assign(omega.size(), 0.0);
  b.ch4_volume.assign(omega.size(), 0.0);
  return b;
}

BlendState BlendState::pure_methane(int periods, const BlendConstants& c) {
  return from_omega(Series(periods, 0.0), c);
}

BlendState BlendState::pure_hydrogen(int periods, const BlendConstants& c) {
  return from_omega(Series(periods, 1.0), c);
}

BlendState BlendState::from_volumes(const Series& h2, const Series& ch4, const BlendConstants& c) {
  Series omega(h2.size());
  for (std::size_t t = 0; t < h2.size(); ++t) {
    // Tiny negative volumes are solver noise around a zero bound.
    const double a = std::max(h2[t], 0.0);
    const double b = std::max(ch4[t], 0.0);
    omega[t] = (a + b > 0.0) ? hydrogen_fraction(a, b) : 0.0;
  }
  BlendState s = from_omega(omega, c);
  s.h2_volume = h2;
  s.ch4_volume = ch4;
  return s;
}

double BlendState::max_change(const BlendState& other) const {
  double d = 0.0;
  const std::size_t n = std::min(omega.size(), other.omega.size());
  for (std::size_t t = 0; t < n; ++t) d = std::max(d, std::abs(omega[t] - other.omega[t]));
  return d;
}

const char* to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::Cooperative: return "model1";
    case ModelVariant::SelfConversion: return "model2";
    case ModelVariant::BatteryOnly: return "model3";
  }
  return "model1";
}

ModelVariant parse_variant(const std::string& s) {
  if (s == "model1" || s == "cooperative") return ModelVariant::Cooperative;
  if (s == "model2" || s == "self-conversion") return ModelVariant::SelfConversion;
  if (s == "model3" || s == "battery-only") return ModelVariant::BatteryOnly;
  throw ValidationError({"variant: unknown value '" + s + "' (expected model1, model2 or model3)"});
}

double Scenario::pressure_penalty() const {
  if (algo.pressure_penalty) return *algo.pressure_penalty;
  const auto& p = market.gas_price;
  if (p.empty()) return 1e-3;
  const double mean = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
  return std::max(1e-3 * mean, 1e-9);
}

Scenario with_variant(const Scenario& s, ModelVariant v) {
  Scenario out = s;
  out.variant = v;
  if (v == ModelVariant::BatteryOnly) {
    out.devices.electrolyzers.clear();
    out.devices.fuel_cells.clear();
    out.devices.tanks.clear();
  }
  return out;
}

}  // namespace hcng
