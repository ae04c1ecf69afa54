#ifndef WDNSE_INP_HPP
#define WDNSE_INP_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wdnse/error.hpp"
#include "wdnse/models.hpp"
#include "wdnse/network.hpp"

// Reader and writer for the subset of the EPANET `.inp` format that the
// network model supports: GPM/ft units, pipes and pumps, junctions,
// reservoirs and tanks, single-value demands.

namespace wdnse {

namespace detail {

inline std::string upper(std::string_view s)
{
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

inline std::vector<std::string> split_fields(std::string_view line)
{
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double parse_number(const std::string& tok, int line)
{
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("expected a number, got '" + tok + "'", line);
  }
  return v;
}

inline std::string format_number(double v)
{
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline void require_fields(const std::vector<std::string>& f, std::size_t n, const char* section,
                           int line)
{
  if (f.size() < n) {
    throw ParseError(std::string("[") + section + "] entry needs at least " + std::to_string(n) +
                         " fields",
                     line);
  }
}

struct RawPipe
{
  std::string id, from, to;
  double length, diameter, roughness;
  int line;
};

struct RawPump
{
  std::string id, from, to, curve;
  int line;
};

}  // namespace detail

/// Parse `.inp` text into a validated Network.
inline Network parse_inp(std::string_view text)
{
  using namespace detail;

  static const std::set<std::string> skipped = {"TITLE",    "TIMES",  "REPORT",   "COORDINATES",
                                                "VERTICES", "LABELS", "BACKDROP", "TAGS",
                                                "END"};
  static const std::set<std::string> unsupported = {
      "VALVES",  "PATTERNS", "CONTROLS",  "RULES",  "EMITTERS", "QUALITY",
      "SOURCES", "REACTIONS", "MIXING",   "ENERGY", "STATUS",   "LEAKAGE"};
  static const std::set<std::string> handled = {"JUNCTIONS", "RESERVOIRS", "TANKS",  "PIPES",
                                                "PUMPS",     "CURVES",     "DEMANDS", "OPTIONS"};

  std::vector<Junction> junctions;
  std::vector<Reservoir> reservoirs;
  std::vector<Tank> tanks;
  std::vector<RawPipe> raw_pipes;
  std::vector<RawPump> raw_pumps;
  std::vector<Curve> curves;
  std::map<std::string, std::size_t> curve_pos;
  std::vector<std::pair<std::vector<std::string>, int>> demand_rows;
  HeadlossFormula formula = HeadlossFormula::HazenWilliams;

  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view raw = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    if (auto c = raw.find(';'); c != std::string_view::npos) raw = raw.substr(0, c);
    auto fields = split_fields(raw);
    if (fields.empty()) continue;

    if (fields[0].front() == '[') {
      auto close = raw.find(']');
      auto open = raw.find('[');
      if (close == std::string_view::npos) throw ParseError("unterminated section header", line_no);
      section = upper(raw.substr(open + 1, close - open - 1));
      if (unsupported.count(section)) {
        throw UnsupportedFeature("section [" + section + "] is not supported");
      }
      if (!skipped.count(section) && !handled.count(section)) {
        throw ParseError("unknown section [" + section + "]", line_no);
      }
      continue;
    }
    if (section.empty()) throw ParseError("data before the first section header", line_no);
    if (skipped.count(section)) continue;

    if (section == "JUNCTIONS") {
      require_fields(fields, 2, "JUNCTIONS", line_no);
      if (fields.size() > 3) throw UnsupportedFeature("junction demand patterns are not supported");
      const double demand = fields.size() > 2 ? parse_number(fields[2], line_no) : 0.0;
      junctions.push_back(Junction::make(fields[0], parse_number(fields[1], line_no), demand));
    } else if (section == "RESERVOIRS") {
      require_fields(fields, 2, "RESERVOIRS", line_no);
      if (fields.size() > 2) throw UnsupportedFeature("reservoir head patterns are not supported");
      reservoirs.push_back({fields[0], parse_number(fields[1], line_no)});
    } else if (section == "TANKS") {
      require_fields(fields, 6, "TANKS", line_no);
      if (fields.size() > 7) throw UnsupportedFeature("tank volume curves are not supported");
      tanks.push_back(Tank::make(fields[0], parse_number(fields[1], line_no),
                                 parse_number(fields[2], line_no), parse_number(fields[3], line_no),
                                 parse_number(fields[4], line_no),
                                 parse_number(fields[5], line_no)));
    } else if (section == "PIPES") {
      require_fields(fields, 6, "PIPES", line_no);
      if (fields.size() > 6 && parse_number(fields[6], line_no) != 0.0) {
        throw UnsupportedFeature("pipe '" + fields[0] + "': minor losses are not supported");
      }
      if (fields.size() > 7 && upper(fields[7]) != "OPEN") {
        throw UnsupportedFeature("pipe '" + fields[0] + "': status " + fields[7] +
                                 " is not supported");
      }
      raw_pipes.push_back({fields[0], fields[1], fields[2], parse_number(fields[3], line_no),
                           parse_number(fields[4], line_no), parse_number(fields[5], line_no),
                           line_no});
    } else if (section == "PUMPS") {
      require_fields(fields, 5, "PUMPS", line_no);
      RawPump p{fields[0], fields[1], fields[2], {}, line_no};
      for (std::size_t k = 3; k < fields.size(); k += 2) {
        const auto key = upper(fields[k]);
        if (k + 1 >= fields.size()) throw ParseError("pump keyword without value", line_no);
        if (key == "HEAD") {
          p.curve = fields[k + 1];
        } else if (key == "SPEED") {
          if (parse_number(fields[k + 1], line_no) != 1.0) {
            throw UnsupportedFeature("pump '" + p.id + "': only unit relative speed");
          }
        } else {
          throw UnsupportedFeature("pump '" + p.id + "': keyword " + key + " is not supported");
        }
      }
      if (p.curve.empty()) throw ParseError("pump '" + p.id + "' has no HEAD curve", line_no);
      raw_pumps.push_back(std::move(p));
    } else if (section == "CURVES") {
      require_fields(fields, 3, "CURVES", line_no);
      auto [it, inserted] = curve_pos.emplace(fields[0], curves.size());
      if (inserted) curves.push_back({fields[0], {}});
      curves[it->second].points.push_back(
          {parse_number(fields[1], line_no), parse_number(fields[2], line_no)});
    } else if (section == "DEMANDS") {
      require_fields(fields, 2, "DEMANDS", line_no);
      if (fields.size() > 2) throw UnsupportedFeature("demand patterns are not supported");
      demand_rows.emplace_back(fields, line_no);
    } else if (section == "OPTIONS") {
      const auto key = upper(fields[0]);
      if (key == "UNITS") {
        require_fields(fields, 2, "OPTIONS", line_no);
        if (upper(fields[1]) != "GPM") {
          throw UnsupportedFeature("flow units " + fields[1] + " are not supported (GPM only)");
        }
      } else if (key == "HEADLOSS") {
        require_fields(fields, 2, "OPTIONS", line_no);
        const auto v = upper(fields[1]);
        if (v == "H-W") formula = HeadlossFormula::HazenWilliams;
        else if (v == "D-W") formula = HeadlossFormula::DarcyWeisbach;
        else if (v == "C-M") formula = HeadlossFormula::ChezyManning;
        else throw ParseError("unknown headloss formula " + fields[1], line_no);
      }
    }
    if (eol == text.size()) break;
  }

  // [DEMANDS] replaces the junction's base demand; repeated rows accumulate.
  std::set<std::string> overridden;
  for (const auto& [f, line] : demand_rows) {
    auto it = std::find_if(junctions.begin(), junctions.end(),
                           [&](const Junction& j) { return j.id == f[0]; });
    if (it == junctions.end()) throw ValidationError("[DEMANDS] references unknown junction '" + f[0] + "'");
    const double d = parse_number(f[1], line);
    if (overridden.insert(f[0]).second) it->demand = d;
    else it->demand += d;
  }

  std::vector<Pipe> pipes;
  pipes.reserve(raw_pipes.size());
  for (const auto& p : raw_pipes) {
    try {
      pipes.push_back(Pipe::make(p.id, p.from, p.to, p.length, p.diameter, p.roughness, formula));
    } catch (const DomainError& e) {
      throw ParseError("pipe '" + p.id + "': " + e.what(), p.line);
    }
  }

  std::vector<Pump> pumps;
  pumps.reserve(raw_pumps.size());
  for (const auto& p : raw_pumps) {
    auto it = curve_pos.find(p.curve);
    if (it == curve_pos.end()) {
      throw ValidationError("pump '" + p.id + "' references unknown curve '" + p.curve + "'");
    }
    PumpCurve curve;
    try {
      curve = pump_curve_from_points(curves[it->second].points);
    } catch (const DomainError& e) {
      throw ValidationError("pump '" + p.id + "': " + e.what());
    }
    pumps.push_back(Pump::make(p.id, p.from, p.to, curve, p.curve));
  }

  return Network(std::move(junctions), std::move(reservoirs), std::move(tanks), std::move(pipes),
                 std::move(pumps), std::move(curves), formula);
}

inline Network read_inp(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open network file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_inp(ss.str());
}

/**
 * Write a network back as `.inp` text that parse_inp reads to an equal Network.
 *
 * Only networks that came from geometry (pipe lengths and diameters) and from
 * named pump curves can be written; resistance-only pipes have no `.inp` form.
 */
inline std::string write_inp(const Network& net)
{
  using detail::format_number;
  std::ostringstream out;
  out << "[TITLE]\n\n[JUNCTIONS]\n;ID Elev Demand\n";
  for (const auto& j : net.junctions()) {
    if (!(j.head == Junction::make(j.id, j.elevation, j.demand).head)) {
      throw UnsupportedFeature("junction '" + j.id + "' has custom head bounds");
    }
    out << ' ' << j.id << ' ' << format_number(j.elevation) << ' ' << format_number(j.demand)
        << '\n';
  }
  out << "\n[RESERVOIRS]\n;ID Head\n";
  for (const auto& r : net.reservoirs()) out << ' ' << r.id << ' ' << format_number(r.head) << '\n';
  out << "\n[TANKS]\n;ID Elev InitLevel MinLevel MaxLevel Diameter\n";
  for (const auto& t : net.tanks()) {
    out << ' ' << t.id << ' ' << format_number(t.elevation) << ' '
        << format_number(t.initial_head - t.elevation) << ' '
        << format_number(t.head.lower - t.elevation) << ' '
        << format_number(t.head.upper - t.elevation) << ' ' << format_number(t.diameter) << '\n';
  }
  out << "\n[PIPES]\n;ID Node1 Node2 Length Diameter Roughness\n";
  for (const auto& p : net.pipes()) {
    if (!(p.length > 0.0)) throw UnsupportedFeature("pipe '" + p.id + "' has no geometry");
    out << ' ' << p.id << ' ' << p.from << ' ' << p.to << ' ' << format_number(p.length) << ' '
        << format_number(p.diameter) << ' ' << format_number(p.roughness) << '\n';
  }
  out << "\n[PUMPS]\n;ID Node1 Node2 Parameters\n";
  for (const auto& m : net.pumps()) {
    if (m.curve_id.empty()) throw UnsupportedFeature("pump '" + m.id + "' has no named curve");
    out << ' ' << m.id << ' ' << m.from << ' ' << m.to << " HEAD " << m.curve_id << '\n';
  }
  out << "\n[CURVES]\n;ID Flow Head\n";
  for (const auto& c : net.curves()) {
    for (const auto& pt : c.points) {
      out << ' ' << c.id << ' ' << format_number(pt.flow) << ' ' << format_number(pt.head) << '\n';
    }
  }
  out << "\n[OPTIONS]\n Units GPM\n Headloss " << to_string(net.headloss_formula()) << "\n\n[END]\n";
  return out.str();
}

}  // namespace wdnse

#endif  // WDNSE_INP_HPP
