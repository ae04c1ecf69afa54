#pragma once

#include <string>

#include "wdnse/inp.hpp"
#include "wdnse/network.hpp"

namespace wdnse::fixtures {

inline std::string data_path(const std::string& name) { return std::string(WDNSE_DATA_DIR) + "/" + name; }

/// Reservoir 2 -> junction 3 (demand d3) -> tank 4, resistance-only pipes.
inline Network three_node(double r23 = 2.4e-3, double r34 = 9.8e-3, double mu = 1.852, double d3 = 200.0)
{
  return Network({Junction::make("3", 50.0, d3)}, {{"2", 200.0}}, {Tank::make("4", 50.0, 80.0, 0.0, 150.0, 50.0)},
                 {Pipe::with_resistance("23", "2", "3", r23, mu), Pipe::with_resistance("34", "3", "4", r34, mu)},
                 {});
}

inline Network net8() { return read_inp(data_path("net8.inp")); }

}  // namespace wdnse::fixtures
