#ifndef WDNSE_IO_HPP
#define WDNSE_IO_HPP

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wdnse/error.hpp"
#include "wdnse/estimator.hpp"
#include "wdnse/measurements.hpp"
#include "wdnse/network.hpp"
#include "wdnse/oracle.hpp"
#include "wdnse/state.hpp"

// File formats used by the command-line tool.
//
// Measurements: either a JSON array of
//   {"from": id, "to": id, "value_ft": x, "weight": w, "step": k}
// ("weight" defaults to 1, "step" to 0) or an object
//   {"measurements": [...], "fixed": {id: head_ft, ...}}.
//
// State (state.json / truth.json):
//   {"format": "wdnse-state", "version": 1,
//    "units": {"head": "ft", "flow": "gpm"},
//    "steps": [{"step": 0,
//               "heads": [{"id", "kind", "head_ft"}...],
//               "flows": [{"id", "kind", "flow_gpm"}...]}]}

namespace wdnse::io {

using json = nlohmann::ordered_json;

inline std::string read_text(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << text;
}

inline std::string format_double(double v)
{
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline MeasurementSet parse_measurements(const std::string& text)
{
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("measurement file is not valid JSON: ") + e.what());
  }
  MeasurementSet out;
  const json* entries = &doc;
  if (doc.is_object()) {
    if (doc.contains("fixed")) {
      if (!doc["fixed"].is_object()) throw ParseError("\"fixed\" must map node ids to heads");
      for (const auto& [id, h] : doc["fixed"].items()) {
        if (!h.is_number()) throw ParseError("fixed head of '" + id + "' is not a number");
        out.fixed[id] = h.get<double>();
      }
    }
    if (!doc.contains("measurements")) {
      entries = nullptr;
    } else {
      entries = &doc["measurements"];
    }
  }
  if (entries) {
    if (!entries->is_array()) throw ParseError("measurements must be a JSON array");
    for (const auto& e : *entries) {
      if (!e.is_object() || !e.contains("from") || !e.contains("to") || !e.contains("value_ft")) {
        throw ParseError("each measurement needs \"from\", \"to\" and \"value_ft\"");
      }
      auto id = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
      Measurement m;
      m.from = id(e["from"]);
      m.to = id(e["to"]);
      if (!e["value_ft"].is_number()) throw ParseError("\"value_ft\" must be a number");
      m.value = e["value_ft"].get<double>();
      if (e.contains("weight")) {
        if (!e["weight"].is_number()) throw ParseError("\"weight\" must be a number");
        m.weight = e["weight"].get<double>();
      }
      if (e.contains("step")) {
        if (!e["step"].is_number_unsigned()) throw ParseError("\"step\" must be a nonnegative integer");
        m.step = e["step"].get<std::size_t>();
      }
      out.entries.push_back(std::move(m));
    }
  }
  return out;
}

inline MeasurementSet read_measurements(const std::filesystem::path& path)
{
  return parse_measurements(read_text(path));
}

inline const char* node_kind_name(NodeKind k)
{
  switch (k) {
    case NodeKind::Junction: return "junction";
    case NodeKind::Reservoir: return "reservoir";
    case NodeKind::Tank: return "tank";
  }
  return "?";
}

inline const char* link_kind_name(LinkKind k) { return k == LinkKind::Pipe ? "pipe" : "pump"; }

inline json state_to_json(const Network& net, const StateVector& s)
{
  s.require(net);
  json doc;
  doc["format"] = "wdnse-state";
  doc["version"] = 1;
  doc["units"] = {{"head", "ft"}, {"flow", "gpm"}};
  json steps = json::array();
  for (std::size_t k = 0; k < s.steps(); ++k) {
    json heads = json::array();
    for (std::size_t n = 0; n < net.node_count(); ++n) {
      heads.push_back({{"id", net.node_id(n)}, {"kind", node_kind_name(net.node_kind(n))}, {"head_ft", s.head(k, n)}});
    }
    json flows = json::array();
    for (std::size_t l = 0; l < net.link_count(); ++l) {
      flows.push_back({{"id", net.link_id(l)}, {"kind", link_kind_name(net.link_kind(l))}, {"flow_gpm", s.flow(k, l)}});
    }
    steps.push_back({{"step", k}, {"heads", std::move(heads)}, {"flows", std::move(flows)}});
  }
  doc["steps"] = std::move(steps);
  return doc;
}

/// One scalar of a state file, keyed by step, quantity and element id.
struct StateEntry
{
  std::string key;  // e.g. "0/head/3"
  double value;
};

inline std::vector<StateEntry> flatten_state_json(const json& doc)
{
  if (!doc.is_object() || doc.value("format", "") != "wdnse-state" || !doc.contains("steps")) {
    throw ParseError("not a wdnse state file");
  }
  std::vector<StateEntry> out;
  for (const auto& st : doc["steps"]) {
    const auto k = std::to_string(st.at("step").get<std::size_t>());
    for (const auto& h : st.at("heads")) out.push_back({k + "/head/" + h.at("id").get<std::string>(), h.at("head_ft").get<double>()});
    for (const auto& f : st.at("flows")) out.push_back({k + "/flow/" + f.at("id").get<std::string>(), f.at("flow_gpm").get<double>()});
  }
  return out;
}

inline std::string trace_csv(const IterationTrace& trace)
{
  std::string out = "n,error,objective,accelerated\n";
  for (const auto& r : trace) {
    out += std::to_string(r.n) + ',' + format_double(r.error) + ',' + format_double(r.objective) + ',' +
           (r.accelerated ? "1" : "0") + '\n';
  }
  return out;
}

inline const char* objective_name(ObjectiveKind k)
{
  return k == ObjectiveKind::WeightedLeastSquares ? "wls" : "wabs";
}

}  // namespace wdnse::io

#endif  // WDNSE_IO_HPP
