#pragma once

// Pipeline behind the `test` subcommand: CSV -> ranks -> test -> report,
// including the tie protocol.  Under the random tie policy the whole test
// is repeated on independently re-randomized ranks and the spread of
// p-values is reported; tie-free data collapses to a single run since
// re-randomization would be a no-op.
//
// A report serializes to JSON and to plain text; both carry full-precision
// numbers so the two forms agree to within round-off.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "evcop/csv.hpp"
#include "evcop/errors.hpp"
#include "evcop/max_stability.hpp"
#include "evcop/parallel.hpp"
#include "evcop/ranks.hpp"

namespace evcop {

// A data problem (as opposed to a configuration problem): maps to a
// distinct process exit code in the CLI.
class InvalidInput : public std::runtime_error {
 public:
  explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

struct TestOptions {
  std::vector<double> r_set{3.0, 4.0, 5.0};
  StatisticKind statistic = StatisticKind::PSEUDO;
  int num_multipliers = 0;  // 0: 1000, or 10000 under the midrank policy
  int grid_per_axis = 0;    // 0: default for d
  TiePolicy ties = TiePolicy::RANDOM;
  int repeats = 100;        // tie-randomization repeats (random policy only)
  MultiplierLaw law = MultiplierLaw::STANDARD_NORMAL;
  bool rescale = true;
  std::uint64_t seed = 0;
  std::vector<std::string> columns;  // empty: all
};

struct ReportEntry {
  std::string label;
  char family = 'T';
  std::vector<double> r_set;
  double value = 0.0;    // observed statistic, first repeat
  double p_value = 1.0;  // first repeat
  double p_min = 1.0;
  double p_median = 1.0;
  double p_max = 1.0;
};

struct CliReport {
  std::string source;
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  std::vector<std::string> column_names;
  std::vector<Eigen::Index> tie_counts;
  bool ties_present = false;
  TestOptions options;  // effective (num_multipliers and grid resolved)
  int repeats_executed = 1;
  std::vector<ReportEntry> entries;
  std::string headline_label;  // combined statistic the repeat summary refers to
  double headline_min = 1.0;
  double headline_median = 1.0;
  double headline_max = 1.0;
  std::vector<std::string> warnings;
};

namespace detail {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

inline CliReport run_data_test(const CsvTable& input, const TestOptions& options,
                               const std::string& source = "<data>") {
  if (options.repeats < 1) {
    throw std::invalid_argument("repeats must be >= 1");
  }
  const CsvTable table = select_columns(input, options.columns);
  if (table.values.cols() < 2) {
    throw InvalidInput(source + ": need at least 2 columns, got " +
                       std::to_string(table.values.cols()));
  }

  CliReport report;
  report.source = source;
  report.column_names = table.column_names;
  report.options = options;
  if (report.options.num_multipliers == 0) {
    report.options.num_multipliers = options.ties == TiePolicy::MIDRANK ? 10000 : 1000;
  }

  SampleMatrix data = [&table, &source] {
    try {
      return SampleMatrix(table.values);
    } catch (const std::invalid_argument& e) {
      throw InvalidInput(source + ": " + e.what());
    }
  }();
  report.n = data.n();
  report.d = data.d();
  if (report.options.grid_per_axis == 0) {
    report.options.grid_per_axis = default_grid_per_axis(static_cast<int>(report.d));
  }

  // Inventory ties first (midrank never throws on ties), then apply the
  // requested policy.
  const Ranks probe = compute_ranks(data, TiePolicy::MIDRANK);
  report.tie_counts = probe.tie_counts;
  report.ties_present = probe.has_ties();
  if (options.ties == TiePolicy::NONE && report.ties_present) {
    std::string cols;
    for (std::size_t j = 0; j < probe.tie_counts.size(); ++j) {
      if (probe.tie_counts[j] > 0) {
        if (!cols.empty()) cols += ", ";
        cols += std::to_string(j + 1);
      }
    }
    throw TiesDetected(source + ": ties in column(s) " + cols +
                       " (tie policy 'error' active)");
  }

  TestConfig cfg;
  cfg.r_set = report.options.r_set;
  cfg.statistic = report.options.statistic;
  cfg.num_multipliers = report.options.num_multipliers;
  cfg.grid_per_axis = report.options.grid_per_axis;
  cfg.law = report.options.law;
  cfg.rescale = report.options.rescale;

  const bool randomized = options.ties == TiePolicy::RANDOM && report.ties_present;
  const int repeats = randomized ? options.repeats : 1;
  report.repeats_executed = repeats;

  std::vector<TestResult> results(static_cast<std::size_t>(repeats));
  const std::uint64_t seed = options.seed;
  const TiePolicy policy = options.ties;
  parallel_for(static_cast<std::size_t>(repeats), 0,
               [&data, &results, cfg, seed, policy](std::size_t rep) {
                 const Ranks ranks = compute_ranks(
                     data, policy,
                     derive_seed(seed, {STREAM_RANKS, static_cast<std::uint64_t>(rep)}));
                 TestConfig rep_cfg = cfg;
                 rep_cfg.seed =
                     derive_seed(seed, {STREAM_TEST, static_cast<std::uint64_t>(rep)});
                 results[rep] = run_test(pseudo_observations(ranks), rep_cfg);
               });

  report.warnings = results.front().warnings;
  const bool multi_r = cfg.r_set.size() > 1;
  const TestResult& first = results.front();
  for (const StatisticResult& sr : first.stats) {
    const std::size_t n_entries = sr.r_set.size() + (multi_r ? 1 : 0);
    for (std::size_t e = 0; e < n_entries; ++e) {
      const bool combined = e == sr.r_set.size();
      ReportEntry entry;
      entry.family = sr.family;
      entry.label = combined ? sr.combined_label : sr.labels[e];
      entry.r_set = combined ? sr.r_set : std::vector<double>{sr.r_set[e]};
      entry.value = combined ? sr.combined_observed : sr.observed[e];
      entry.p_value = combined ? sr.combined_p : sr.p_values[e];

      std::vector<double> ps;
      ps.reserve(results.size());
      for (const TestResult& res : results) {
        for (const StatisticResult& other : res.stats) {
          if (other.family != sr.family) continue;
          ps.push_back(combined ? other.combined_p : other.p_values[e]);
        }
      }
      entry.p_min = *std::min_element(ps.begin(), ps.end());
      entry.p_max = *std::max_element(ps.begin(), ps.end());
      entry.p_median = detail::median_of(ps);
      report.entries.push_back(std::move(entry));
    }
  }

  // Repeat summary headline: the combined statistic of the data-averaged
  // family when present, otherwise of the grid family.
  const ReportEntry* headline = nullptr;
  for (const ReportEntry& e : report.entries) {
    if (e.family == 'T' && (headline == nullptr || e.r_set.size() > headline->r_set.size()))
      headline = &e;
  }
  if (headline == nullptr) {
    for (const ReportEntry& e : report.entries) {
      if (headline == nullptr || e.r_set.size() > headline->r_set.size()) headline = &e;
    }
  }
  report.headline_label = headline->label;
  report.headline_min = headline->p_min;
  report.headline_median = headline->p_median;
  report.headline_max = headline->p_max;
  return report;
}

inline CliReport run_csv_test(const std::string& path, const TestOptions& options) {
  return run_data_test(read_csv_file(path), options, path);
}

inline nlohmann::json report_to_json(const CliReport& r) {
  nlohmann::json j;
  j["source"] = r.source;
  j["n"] = r.n;
  j["d"] = r.d;
  j["columns"] = r.column_names;
  j["ties"] = {{"present", r.ties_present},
               {"policy", tie_policy_name(r.options.ties)},
               {"per_column", r.tie_counts}};
  j["config"] = {{"r_set", r.options.r_set},
                 {"statistic", statistic_kind_name(r.options.statistic)},
                 {"num_multipliers", r.options.num_multipliers},
                 {"grid_per_axis", r.options.grid_per_axis},
                 {"multiplier_law", multiplier_law_name(r.options.law)},
                 {"rescale", r.options.rescale},
                 {"repeats_requested", r.options.repeats},
                 {"seed", r.options.seed}};
  j["results"] = nlohmann::json::array();
  for (const ReportEntry& e : r.entries) {
    nlohmann::json je = {{"statistic", std::string(1, e.family)},
                         {"r_set", e.r_set},
                         {"label", e.label},
                         {"value", e.value},
                         {"p_value", e.p_value}};
    if (r.repeats_executed > 1) {
      je["p_min"] = e.p_min;
      je["p_median"] = e.p_median;
      je["p_max"] = e.p_max;
    }
    j["results"].push_back(std::move(je));
  }
  j["repeats"] = {{"k", r.repeats_executed},
                  {"statistic_label", r.headline_label},
                  {"min", r.headline_min},
                  {"median", r.headline_median},
                  {"max", r.headline_max}};
  j["warnings"] = r.warnings;
  return j;
}

namespace detail {

inline std::string full_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string report_to_text(const CliReport& r) {
  std::string out;
  out += "max-stability test\n";
  out += "  source: " + r.source + "\n";
  out += "  n: " + std::to_string(r.n) + "  d: " + std::to_string(r.d) + "\n";
  out += "  columns:";
  for (const std::string& c : r.column_names) out += " " + c;
  out += "\n";
  out += "  ties: ";
  if (r.ties_present) {
    out += "present (";
    for (std::size_t j = 0; j < r.tie_counts.size(); ++j) {
      if (j) out += " ";
      out += std::to_string(r.tie_counts[j]);
    }
    out += " per column)";
  } else {
    out += "none";
  }
  out += ", policy " + std::string(tie_policy_name(r.options.ties)) + "\n";
  out += "  config: r = {";
  for (std::size_t i = 0; i < r.options.r_set.size(); ++i) {
    if (i) out += ",";
    out += format_exponent(r.options.r_set[i]);
  }
  out += "}, statistic = " + std::string(statistic_kind_name(r.options.statistic));
  out += ", N = " + std::to_string(r.options.num_multipliers);
  out += ", grid = " + std::to_string(r.options.grid_per_axis);
  out += ", law = " + std::string(multiplier_law_name(r.options.law));
  out += ", rescale = " + std::string(r.options.rescale ? "on" : "off");
  out += ", seed = " + std::to_string(r.options.seed) + "\n";
  out += "  repeats: " + std::to_string(r.repeats_executed) + "\n";
  out += "  results:\n";
  for (const ReportEntry& e : r.entries) {
    out += "    " + e.label + ": value = " + detail::full_double(e.value) +
           ", p = " + detail::full_double(e.p_value);
    if (r.repeats_executed > 1) {
      out += ", p_min = " + detail::full_double(e.p_min) +
             ", p_median = " + detail::full_double(e.p_median) +
             ", p_max = " + detail::full_double(e.p_max);
    }
    out += "\n";
  }
  if (r.repeats_executed > 1) {
    out += "  repeat summary (" + r.headline_label + "): min = " +
           detail::full_double(r.headline_min) +
           ", median = " + detail::full_double(r.headline_median) +
           ", max = " + detail::full_double(r.headline_max) + "\n";
  }
  for (const std::string& w : r.warnings) out += "  warning: " + w + "\n";
  return out;
}

}  // namespace evcop
