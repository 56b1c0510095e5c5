#pragma once

// Monte Carlo harness: repeat (sample -> ranks -> test) under one copula
// model, aggregate per-statistic rejection rates, and emit result tables.
//
// Every replication derives its sampling and testing seeds from
// (root_seed, replication index), and every result is written to a slot
// owned by its index, so a run is byte-for-byte reproducible for any
// worker count.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "evcop/copulas.hpp"
#include "evcop/max_stability.hpp"
#include "evcop/parallel.hpp"
#include "evcop/ranks.hpp"

namespace evcop {

struct ExperimentSpec {
  std::string name;
  CopulaModel model;
  // Calibration target used to pick model.theta, NaN when the parameter
  // was given directly.  Carried through to the result tables.
  double tau_label = std::numeric_limits<double>::quiet_NaN();
  Eigen::Index n = 100;
  int reps = 1000;
  TestConfig test;
  double level = 0.05;
  std::uint64_t root_seed = 0;
};

struct CellOutcome {
  std::string label;             // e.g. "T(3,4,5)"
  std::vector<double> p_values;  // one per replication
  int rejections = 0;
  double rate_pct = 0.0;
  double se_pct = 0.0;
};

struct ExperimentResult {
  ExperimentSpec spec;  // with the effective test config
  std::vector<CellOutcome> cells;
};

// Labels in the order run_test reports them: grid family first when both
// are requested, per-r entries then the combined statistic (combined only
// when r_set has more than one element).
inline std::vector<std::string> statistic_labels(const TestConfig& cfg) {
  std::vector<std::string> labels;
  auto add_family = [&labels, &cfg](char fam) {
    for (double r : cfg.r_set) labels.push_back(statistic_label(fam, {r}));
    if (cfg.r_set.size() > 1) labels.push_back(statistic_label(fam, cfg.r_set));
  };
  if (cfg.statistic == StatisticKind::GRID || cfg.statistic == StatisticKind::BOTH)
    add_family('S');
  if (cfg.statistic == StatisticKind::PSEUDO || cfg.statistic == StatisticKind::BOTH)
    add_family('T');
  return labels;
}

namespace detail {

inline void flatten_p_values(const TestResult& res, bool multi_r, std::vector<double>& out) {
  out.clear();
  for (const StatisticResult& sr : res.stats) {
    for (double p : sr.p_values) out.push_back(p);
    if (multi_r) out.push_back(sr.combined_p);
  }
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentSpec& spec, unsigned workers = 0) {
  validate_model(spec.model);
  validate_config(spec.test);
  if (spec.reps < 1) throw std::invalid_argument("ExperimentSpec: reps must be >= 1");
  if (!(spec.level > 0.0 && spec.level < 1.0)) {
    throw std::invalid_argument("ExperimentSpec: level must be in (0,1)");
  }

  ExperimentResult result;
  result.spec = spec;
  if (result.spec.test.grid_per_axis == 0) {
    result.spec.test.grid_per_axis = default_grid_per_axis(spec.model.d);
  }
  const std::vector<std::string> labels = statistic_labels(result.spec.test);
  const bool multi_r = result.spec.test.r_set.size() > 1;

  std::vector<std::vector<double>> per_rep(static_cast<std::size_t>(spec.reps));
  const ExperimentSpec& eff = result.spec;
  parallel_for(static_cast<std::size_t>(spec.reps), workers, [&eff, &per_rep, multi_r](std::size_t rep) {
    const std::uint64_t sample_seed =
        derive_seed(eff.root_seed, {STREAM_SAMPLE, static_cast<std::uint64_t>(rep)});
    const std::uint64_t test_seed =
        derive_seed(eff.root_seed, {STREAM_TEST, static_cast<std::uint64_t>(rep)});
    const SampleMatrix x = sample(eff.model, eff.n, sample_seed);
    const Ranks ranks = compute_ranks(x, TiePolicy::NONE);
    const PseudoObservations pseudo = pseudo_observations(ranks);
    TestConfig cfg = eff.test;
    cfg.seed = test_seed;
    const TestResult res = run_test(pseudo, cfg);
    detail::flatten_p_values(res, multi_r, per_rep[rep]);
  });

  result.cells.resize(labels.size());
  for (std::size_t c = 0; c < labels.size(); ++c) {
    CellOutcome& cell = result.cells[c];
    cell.label = labels[c];
    cell.p_values.resize(static_cast<std::size_t>(spec.reps));
    for (std::size_t rep = 0; rep < per_rep.size(); ++rep) {
      cell.p_values[rep] = per_rep[rep][c];
      cell.rejections += per_rep[rep][c] <= spec.level;
    }
    const double phat = static_cast<double>(cell.rejections) / spec.reps;
    cell.rate_pct = 100.0 * phat;
    cell.se_pct = 100.0 * std::sqrt(phat * (1.0 - phat) / spec.reps);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Result tables.

struct TableRow {
  std::string experiment;
  std::string family;
  double tau_label = std::numeric_limits<double>::quiet_NaN();
  std::string param;  // "theta=4" or "rho=0.7" or "theta=4 lambda=0.2|0.95"
  int d = 2;
  Eigen::Index n = 0;
  int reps = 0;
  std::string statistic;
  int num_multipliers = 0;
  int grid_per_axis = 0;
  double level = 0.05;
  std::uint64_t seed = 0;
  int rejections = 0;
  double rate_pct = 0.0;
  double se_pct = 0.0;
};

struct RejectionTable {
  std::vector<TableRow> rows;
};

namespace detail {

inline std::string format_double(double v, const char* fmt = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

inline std::string param_string(const CopulaModel& m) {
  switch (m.family) {
    case Family::INDEPENDENCE:
    case Family::COMONOTONE:
      return "-";
    case Family::NORMAL:
    case Family::STUDENT_T4:
      return "rho=" + format_double(m.theta);
    case Family::KHOUDRAJI_GH: {
      std::string s = "theta=" + format_double(m.theta) + " lambda=";
      for (std::size_t i = 0; i < m.lambda.size(); ++i) {
        if (i) s += '|';
        s += format_double(m.lambda[i]);
      }
      return s;
    }
    default:
      return "theta=" + format_double(m.theta);
  }
}

}  // namespace detail

inline RejectionTable make_table(const std::vector<ExperimentResult>& results) {
  RejectionTable table;
  std::vector<std::string> keys;
  for (const ExperimentResult& res : results) {
    const ExperimentSpec& spec = res.spec;
    for (const CellOutcome& cell : res.cells) {
      TableRow row;
      row.experiment = spec.name;
      row.family = family_name(spec.model.family);
      row.tau_label = spec.tau_label;
      row.param = detail::param_string(spec.model);
      row.d = spec.model.d;
      row.n = spec.n;
      row.reps = spec.reps;
      row.statistic = cell.label;
      row.num_multipliers = spec.test.num_multipliers;
      row.grid_per_axis = spec.test.grid_per_axis;
      row.level = spec.level;
      row.seed = spec.root_seed;
      row.rejections = cell.rejections;
      row.rate_pct = cell.rate_pct;
      row.se_pct = cell.se_pct;

      std::string key = row.family + '|' + row.param + '|' +
                        detail::format_double(row.tau_label) + '|' + std::to_string(row.d) +
                        '|' + std::to_string(row.n) + '|' + row.statistic;
      for (const std::string& seen : keys) {
        if (seen == key) {
          throw std::invalid_argument("duplicate result cell: " + key);
        }
      }
      keys.push_back(std::move(key));
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  std::string out = s;
  for (char& ch : out) {
    if (ch == ',') ch = ';';
  }
  return out;
}

}  // namespace detail

inline std::string table_to_csv(const RejectionTable& table) {
  std::string out =
      "experiment,family,tau,param,d,n,reps,statistic,N,grid,level,seed,rejections,"
      "rate_pct,se_pct\n";
  for (const TableRow& r : table.rows) {
    out += detail::csv_field(r.experiment) + ',';
    out += r.family + ',';
    out += (std::isnan(r.tau_label) ? "" : detail::format_double(r.tau_label)) + std::string(1, ',');
    out += detail::csv_field(r.param) + ',';
    out += std::to_string(r.d) + ',';
    out += std::to_string(r.n) + ',';
    out += std::to_string(r.reps) + ',';
    out += r.statistic + ',';
    out += std::to_string(r.num_multipliers) + ',';
    out += std::to_string(r.grid_per_axis) + ',';
    out += detail::format_double(r.level) + ',';
    out += std::to_string(r.seed) + ',';
    out += std::to_string(r.rejections) + ',';
    out += detail::format_double(r.rate_pct, "%.4f") + ',';
    out += detail::format_double(r.se_pct, "%.4f") + '\n';
  }
  return out;
}

inline std::string table_to_text(const RejectionTable& table) {
  const std::vector<std::string> header = {"experiment", "family", "tau", "param", "d",
                                           "n",          "reps",   "stat", "N",    "grid",
                                           "rate%",      "se%"};
  std::vector<std::vector<std::string>> rows;
  for (const TableRow& r : table.rows) {
    rows.push_back({r.experiment, r.family,
                    std::isnan(r.tau_label) ? "-" : detail::format_double(r.tau_label),
                    r.param, std::to_string(r.d), std::to_string(r.n),
                    std::to_string(r.reps), r.statistic, std::to_string(r.num_multipliers),
                    std::to_string(r.grid_per_axis), detail::format_double(r.rate_pct, "%.1f"),
                    detail::format_double(r.se_pct, "%.1f")});
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto emit_row = [&width](const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) line += "  ";
      line += cells[c];
      line.append(width[c] - cells[c].size(), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    return line + '\n';
  };
  std::string out = emit_row(header);
  std::string rule;
  for (std::size_t c = 0; c < width.size(); ++c) {
    if (c) rule += "  ";
    rule.append(width[c], '-');
  }
  out += rule + '\n';
  for (const auto& row : rows) out += emit_row(row);
  return out;
}

// ---------------------------------------------------------------------------
// Experiment spec files.
//
// Line-based "key = value" format, '#' comments.  Keys before the first
// [experiment] header set defaults inherited by every experiment.
//
//   n = 100
//   reps = 500
//   N = 250
//   seed = 20260821
//
//   [experiment]
//   name = gh-weak
//   family = gh
//   tau = 0.25
//
// Recognized keys: name, family, tau, theta, rho, lambda (comma list), d,
// n, reps, N, g, r (comma list), statistic (S|T|both), law
// (normal|rademacher), rescale (on|off), level, seed.

namespace detail {

struct RawExperiment {
  std::vector<std::pair<std::string, std::string>> kv;
};

inline bool parse_bool(const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected on/off, got '" + v + "'");
}

inline std::vector<double> parse_double_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = item;
    std::size_t pos = 0;
    out.push_back(std::stod(t, &pos));
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

inline ExperimentSpec realize_experiment(const RawExperiment& defaults,
                                         const RawExperiment& exp, int index) {
  ExperimentSpec spec;
  spec.name = "experiment-" + std::to_string(index);
  std::string family;
  double tau = std::numeric_limits<double>::quiet_NaN();
  double theta = std::numeric_limits<double>::quiet_NaN();
  bool have_tau = false;
  bool have_theta = false;

  auto apply = [&](const std::string& key, const std::string& value) {
    if (key == "name") spec.name = value;
    else if (key == "family") family = value;
    else if (key == "tau") { tau = std::stod(value); have_tau = true; }
    else if (key == "theta" || key == "rho") { theta = std::stod(value); have_theta = true; }
    else if (key == "lambda") spec.model.lambda = parse_double_list(value);
    else if (key == "d") spec.model.d = std::stoi(value);
    else if (key == "n") spec.n = std::stol(value);
    else if (key == "reps") spec.reps = std::stoi(value);
    else if (key == "N") spec.test.num_multipliers = std::stoi(value);
    else if (key == "g") spec.test.grid_per_axis = std::stoi(value);
    else if (key == "r") spec.test.r_set = parse_double_list(value);
    else if (key == "statistic") {
      if (value == "S") spec.test.statistic = StatisticKind::GRID;
      else if (value == "T") spec.test.statistic = StatisticKind::PSEUDO;
      else if (value == "both") spec.test.statistic = StatisticKind::BOTH;
      else throw std::invalid_argument("statistic must be S, T or both, got '" + value + "'");
    } else if (key == "law") {
      if (value == "normal") spec.test.law = MultiplierLaw::STANDARD_NORMAL;
      else if (value == "rademacher") spec.test.law = MultiplierLaw::RADEMACHER;
      else throw std::invalid_argument("law must be normal or rademacher, got '" + value + "'");
    } else if (key == "rescale") spec.test.rescale = parse_bool(value);
    else if (key == "level") spec.level = std::stod(value);
    else if (key == "seed") spec.root_seed = std::stoull(value);
    else throw std::invalid_argument("unknown key '" + key + "'");
  };

  for (const auto& [k, v] : defaults.kv) apply(k, v);
  for (const auto& [k, v] : exp.kv) apply(k, v);

  if (family.empty()) {
    throw std::invalid_argument("experiment '" + spec.name + "' has no family");
  }
  spec.model.family = parse_family(family);
  if (have_tau && have_theta) {
    throw std::invalid_argument("experiment '" + spec.name + "': give tau or theta, not both");
  }
  if (have_tau) {
    spec.model.theta = tau_to_param(spec.model.family, tau);
    spec.tau_label = tau;
  } else if (have_theta) {
    spec.model.theta = theta;
  }
  validate_model(spec.model);
  validate_config(spec.test);
  return spec;
}

}  // namespace detail

inline std::vector<ExperimentSpec> parse_experiments(std::istream& in,
                                                     const std::string& source = "<stream>") {
  detail::RawExperiment defaults;
  std::vector<detail::RawExperiment> experiments;
  detail::RawExperiment* current = &defaults;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const std::size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const std::size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t == "[experiment]") {
      experiments.emplace_back();
      current = &experiments.back();
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(source + ":" + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + t + "'");
    }
    current->kv.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  if (experiments.empty()) {
    throw std::invalid_argument(source + ": no [experiment] sections");
  }

  std::vector<ExperimentSpec> specs;
  for (std::size_t i = 0; i < experiments.size(); ++i) {
    try {
      specs.push_back(detail::realize_experiment(defaults, experiments[i],
                                                 static_cast<int>(i + 1)));
    } catch (const UnattainableTau&) {
      throw;
    } catch (const std::exception& e) {
      throw std::invalid_argument(source + ": experiment " + std::to_string(i + 1) + ": " +
                                  e.what());
    }
  }
  return specs;
}

inline std::vector<ExperimentSpec> parse_experiments_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(path + ": cannot open experiment spec");
  return parse_experiments(in, path);
}

}  // namespace evcop
