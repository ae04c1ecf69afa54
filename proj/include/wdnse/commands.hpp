#ifndef WDNSE_COMMANDS_HPP
#define WDNSE_COMMANDS_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>

#include "wdnse/estimator.hpp"
#include "wdnse/inp.hpp"
#include "wdnse/io.hpp"
#include "wdnse/oracle.hpp"

// Entry points of the `wdnse` tool. Each returns the process exit code:
// 0 success/converged, 2 iteration limit reached, 1 bad input or failure.

namespace wdnse::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitIterationLimit = 2;

struct EstimateManifest
{
  fs::path network;
  fs::path measurements;
  fs::path out;
  EstimatorConfig config{};
};

struct SimulateManifest
{
  fs::path network;
  std::optional<fs::path> measurements;
  fs::path out;
  bool global = false;
  int starts = 32;
  std::uint64_t seed = kDefaultOracleSeed;
};

struct CompareManifest
{
  fs::path estimate;
  fs::path truth;
  fs::path out;
};

/// Oracle seed: WDN_SEED when set to an unsigned integer, the built-in default otherwise.
inline std::uint64_t seed_from_env()
{
  if (const char* s = std::getenv("WDN_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(s, &used, 0);
      if (used == std::string(s).size()) return v;
    } catch (const std::exception&) {
    }
    throw ContractError("WDN_SEED must be an unsigned integer");
  }
  return kDefaultOracleSeed;
}

namespace detail {

inline void require_file(const fs::path& p, const char* what)
{
  if (!fs::is_regular_file(p)) throw ParseError(std::string(what) + " file '" + p.string() + "' does not exist");
}

inline void prepare_out(const fs::path& dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw ParseError("cannot create output directory '" + dir.string() + "'");
}

template <typename F>
int guarded(std::ostream& log, F&& body)
{
  try {
    return body();
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
  } catch (const nlohmann::json::exception& e) {
    log << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
  }
  return kExitError;
}

}  // namespace detail

inline int cmd_estimate(const EstimateManifest& m, std::ostream& log)
{
  return detail::guarded(log, [&] {
    detail::require_file(m.network, "network");
    detail::require_file(m.measurements, "measurements");
    const auto net = read_inp(m.network.string());
    const auto meas = io::read_measurements(m.measurements);
    m.config.validate();
    meas.validate(net, m.config.horizon);
    detail::prepare_out(m.out);

    const auto start = std::chrono::steady_clock::now();
    const auto result = run(net, meas, m.config);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    io::write_text(m.out / "state.json", io::state_to_json(net, result.state).dump(2) + "\n");
    io::write_text(m.out / "trace.csv", io::trace_csv(result.trace));

    int accelerated = 0;
    int relaxed = 0;
    for (const auto& r : result.trace) {
      accelerated += r.accelerated;
      relaxed += r.relaxed;
    }
    io::json report;
    report["status"] = to_string(result.status);
    report["iterations"] = result.trace.size();
    report["final_error"] = result.trace.empty() ? 0.0 : result.trace.back().error;
    report["threshold"] = m.config.threshold;
    report["objective"] = io::objective_name(m.config.objective);
    report["accelerations_applied"] = accelerated;
    report["accelerations_discarded"] = result.accelerations_discarded;
    report["relaxed_iterations"] = relaxed;
    report["wall_time_s"] = wall;
    io::write_text(m.out / "report.json", report.dump(2) + "\n");

    if (result.status == EstimateStatus::Converged) return kExitOk;
    log << "warning: iteration limit reached after " << result.trace.size() << " iterations\n";
    return kExitIterationLimit;
  });
}

inline int cmd_simulate(const SimulateManifest& m, std::ostream& log)
{
  return detail::guarded(log, [&] {
    detail::require_file(m.network, "network");
    const auto net = read_inp(m.network.string());
    MeasurementSet meas;
    if (m.measurements) {
      detail::require_file(*m.measurements, "measurements");
      meas = io::read_measurements(*m.measurements);
      meas.validate(net);
    }
    detail::prepare_out(m.out);

    OracleResult res;
    io::json doc;
    if (m.global) {
      GlobalSearchOptions opt;
      opt.starts = m.starts;
      opt.seed = m.seed;
      res = solve_se_global(net, meas, opt);
      doc = io::state_to_json(net, res.state);
      doc["source"] = "global-search";
      doc["starts"] = res.starts_tried;
      doc["seed"] = res.seed;
      doc["best_objective"] = res.best_objective;
    } else {
      std::map<std::string, double> fixed;
      for (const auto& [id, h] : meas.fixed) {
        if (net.node_kind(net.node_index(id)) != NodeKind::Junction) fixed[id] = h;
      }
      res = solve_hydraulics(net, fixed);
      doc = io::state_to_json(net, res.state);
      doc["source"] = "hydraulics";
    }
    doc["max_equation_residual"] = res.max_equation_residual;
    io::write_text(m.out / "truth.json", doc.dump(2) + "\n");
    return kExitOk;
  });
}

inline int cmd_compare(const CompareManifest& m, std::ostream& out, std::ostream& log)
{
  return detail::guarded(log, [&] {
    detail::require_file(m.estimate, "estimate");
    detail::require_file(m.truth, "truth");
    const auto est = io::flatten_state_json(io::json::parse(io::read_text(m.estimate)));
    const auto truth = io::flatten_state_json(io::json::parse(io::read_text(m.truth)));
    std::map<std::string, double> by_key;
    for (const auto& e : truth) by_key[e.key] = e.value;
    if (est.size() != truth.size() || by_key.size() != truth.size()) {
      throw ValidationError("estimate and truth have different variables");
    }
    for (const auto& e : est) {
      if (!by_key.count(e.key)) throw ValidationError("truth has no variable '" + e.key + "'");
    }
    detail::prepare_out(m.out);
    std::string csv = "variable,estimate,truth,abs_error\n";
    double sq = 0.0;
    for (const auto& e : est) {
      const double t = by_key[e.key];
      const double d = std::abs(e.value - t);
      sq += d * d;
      csv += e.key + ',' + io::format_double(e.value) + ',' + io::format_double(t) + ',' + io::format_double(d) + '\n';
    }
    io::write_text(m.out / "compare.csv", csv);
    out << io::format_double(std::sqrt(sq)) << '\n';
    return kExitOk;
  });
}

}  // namespace wdnse::cli

#endif  // WDNSE_COMMANDS_HPP
