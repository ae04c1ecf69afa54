#ifndef WDNSE_MEASUREMENTS_HPP
#define WDNSE_MEASUREMENTS_HPP

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "wdnse/error.hpp"
#include "wdnse/incidence.hpp"
#include "wdnse/network.hpp"

namespace wdnse {

/// Observed head difference h_from - h_to at one time step.
struct Measurement
{
  std::string from;
  std::string to;
  double value = 0.0;  // ft
  double weight = 1.0; // larger is more trusted
  std::size_t step = 0;

  bool operator==(const Measurement&) const = default;
};

struct MeasurementSet
{
  std::vector<Measurement> entries;
  std::map<std::string, double> fixed;  // heads known exactly at step 0

  std::vector<SensorPair> sensors() const
  {
    std::vector<SensorPair> out;
    out.reserve(entries.size());
    for (const auto& m : entries) out.push_back({m.from, m.to});
    return out;
  }

  void validate(const Network& net, std::size_t steps = 1) const
  {
    for (const auto& m : entries) {
      net.node_index(m.from);
      net.node_index(m.to);
      if (m.from == m.to) throw ValidationError("measurement between '" + m.from + "' and itself");
      if (!(m.weight > 0.0) || !std::isfinite(m.weight)) {
        throw ValidationError("measurement weights must be positive");
      }
      if (!std::isfinite(m.value)) throw ValidationError("measurement value is not finite");
      if (m.step >= steps) throw ValidationError("measurement step outside the horizon");
    }
    for (const auto& [node, head] : fixed) {
      net.node_index(node);
      if (!std::isfinite(head)) throw ValidationError("fixed head of '" + node + "' is not finite");
    }
  }

  /// Same set with every weight multiplied by `factor`.
  MeasurementSet scaled(double factor) const
  {
    MeasurementSet out = *this;
    for (auto& m : out.entries) m.weight *= factor;
    return out;
  }
};

}  // namespace wdnse

#endif  // WDNSE_MEASUREMENTS_HPP
