// diolab: reproducible experiment harness for congruence-constrained
// Diophantine approximation and diagonal-flow excursions.
//
// Subcommands: search, dani, orbit, cusp, joint, crosscheck, campaign.
// Every run reads one JSON config, applies the flag overrides, writes its
// tables into --out, and drops a manifest (config hash, versioned columns,
// summary statistics) alongside them. Same config + seed means byte-identical
// tables at any worker count.
//
// Exit codes: 0 success, 2 config/validation error, 3 enumeration budget
// exhausted, 4 invariant failure (any FAIL from a crosscheck).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "diolab/campaign.hpp"
#include "diolab/csvio.hpp"
#include "diolab/dani.hpp"
#include "diolab/diosearch.hpp"
#include "diolab/flowlab.hpp"
#include "diolab/lattice.hpp"
#include "diolab/numkit.hpp"
#include "diolab/rng.hpp"

using nlohmann::json;

namespace {

constexpr const char* kArtifactVersion = "1.0.0";

// ====== config surface ======
// One entry per key; the same table drives validation, defaults shown in
// --help, and the generated reference page.

struct ConfigKeyDoc {
  const char* key;
  const char* type;
  const char* fallback;
  const char* doc;
};

constexpr ConfigKeyDoc kConfigReference[] = {
    {"m", "int", "1", "rows of theta (approximated block)"},
    {"n", "int", "1", "columns of theta (denominator block)"},
    {"classes", "array", "[]",
     "congruence blocks {moduli:[...], residues:[...]}, one per class; "
     "coordinate-wise moduli are normalized to their lcm"},
    {"psi", "object", "power c=1 delta=1 x0=1",
     "approximation function: {kind:\"power\", c, delta, x0} or "
     "{kind:\"table\", x:[...], values:[...]}"},
    {"theta", "object", "seeded",
     "{mode:\"seeded\"} draws from the seed stream; {mode:\"inline\", "
     "rows:[[...], ...]} fixes one m x n matrix"},
    {"samples", "int", "1", "number of seeded theta samples"},
    {"alpha", "array", "[] (uniform)", "weights on the first m coordinates"},
    {"beta", "array", "[] (uniform)", "weights on the last n coordinates"},
    {"kappa", "array", "[1, 1, ...]", "per-class flow speeds"},
    {"eps", "number", "0.5", "indicator size / witness scale"},
    {"eps_list", "array", "[eps]", "per-leg indicator sizes (joint)"},
    {"t", "number", "1.0", "single flow time"},
    {"t_list", "array", "[t]", "flow times for crosscheck batches"},
    {"thresholds", "array", "[1.0, 1.5, 2.0, 2.5]",
     "cusp thresholds T; the indicator size is e^{-T}"},
    {"t_horizon", "number", "20.0", "orbit horizon"},
    {"dt", "number", "0.05", "orbit grid step"},
    {"q_max", "int", "100", "largest denominator norm / threshold"},
    {"q_grid", "array", "[]", "growth-count thresholds (ascending)"},
    {"c", "number", "1.0", "two-speed scan constant"},
    {"delta", "number", "1.0", "two-speed secondary exponent (0, 1]"},
    {"grid_step", "number", "0.05", "weighted threshold grid: Q = e^{h k}"},
    {"primitive_only", "bool", "false", "search: insist on primitive (p, q)"},
    {"require_primitive", "bool", "false", "weighted: primitive solutions only"},
    {"require_distinct", "bool", "false",
     "weighted: distinct primitive solutions across classes"},
    {"check", "string", "corollary", "crosscheck mode: corollary | dani"},
    {"campaign", "string", "growth",
     "campaign kind: growth | simultaneous | weighted"},
    {"slack", "number", "0.693147...", "dani crosscheck slack (log 2)"},
    {"seed", "u64", "1", "root seed; with the config it fixes every output"},
    {"budget", "int64", "10000000", "enumeration budget (nodes / box points)"},
    {"out", "string", ".", "output directory"},
    {"format", "string", "csv", "table format: csv | json"},
};

struct ClassBlock {
  std::vector<long long> moduli;
  std::vector<long long> residues;
};

struct PsiSpec {
  std::string kind = "power";  // "power" | "table"
  double c = 1.0, delta = 1.0, x0 = 1.0;
  std::vector<double> x, values;
};

struct ThetaSpec {
  std::string mode = "seeded";  // "seeded" | "inline"
  std::vector<std::vector<double>> rows;
};

struct ExperimentConfig {
  int m = 1, n = 1;
  std::vector<ClassBlock> classes;
  PsiSpec psi;
  ThetaSpec theta;
  long long samples = 1;
  std::vector<double> alpha, beta;  // empty = uniform
  std::vector<double> kappa;        // empty = all 1
  double eps = 0.5;
  std::vector<double> eps_list;
  double t = 1.0;
  std::vector<double> t_list;
  std::vector<double> thresholds = {1.0, 1.5, 2.0, 2.5};
  double t_horizon = 20.0;
  double dt = 0.05;
  long long q_max = 100;
  std::vector<long long> q_grid;
  double c = 1.0;
  double delta = 1.0;
  double grid_step = 0.05;
  bool primitive_only = false;
  bool require_primitive = false;
  bool require_distinct = false;
  std::string check = "corollary";
  std::string campaign = "growth";
  double slack = 0.69314718055994531;
  std::uint64_t seed = 1;
  long long budget = 10'000'000;
  std::string out = ".";
  std::string format = "csv";
};

void fail_config(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const char* where) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) known = true;
    if (!known) fail_config(std::string("unknown key \"") + item.key() + "\" in " + where);
  }
}

template <typename T>
void read_into(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) fail_config("top level must be an object");
  std::vector<const char*> allowed;
  for (const auto& row : kConfigReference) allowed.push_back(row.key);
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) known = true;
    if (!known) fail_config("unknown key \"" + item.key() + "\"");
  }

  ExperimentConfig cfg;
  read_into(j, "m", cfg.m);
  read_into(j, "n", cfg.n);
  if (auto it = j.find("classes"); it != j.end()) {
    for (const json& b : *it) {
      check_keys(b, {"moduli", "residues"}, "classes[]");
      ClassBlock blk;
      read_into(b, "moduli", blk.moduli);
      read_into(b, "residues", blk.residues);
      cfg.classes.push_back(std::move(blk));
    }
  }
  if (auto it = j.find("psi"); it != j.end()) {
    check_keys(*it, {"kind", "c", "delta", "x0", "x", "values"}, "psi");
    read_into(*it, "kind", cfg.psi.kind);
    read_into(*it, "c", cfg.psi.c);
    read_into(*it, "delta", cfg.psi.delta);
    read_into(*it, "x0", cfg.psi.x0);
    read_into(*it, "x", cfg.psi.x);
    read_into(*it, "values", cfg.psi.values);
  }
  if (auto it = j.find("theta"); it != j.end()) {
    check_keys(*it, {"mode", "rows"}, "theta");
    read_into(*it, "mode", cfg.theta.mode);
    read_into(*it, "rows", cfg.theta.rows);
  }
  read_into(j, "samples", cfg.samples);
  read_into(j, "alpha", cfg.alpha);
  read_into(j, "beta", cfg.beta);
  read_into(j, "kappa", cfg.kappa);
  read_into(j, "eps", cfg.eps);
  read_into(j, "eps_list", cfg.eps_list);
  read_into(j, "t", cfg.t);
  read_into(j, "t_list", cfg.t_list);
  read_into(j, "thresholds", cfg.thresholds);
  read_into(j, "t_horizon", cfg.t_horizon);
  read_into(j, "dt", cfg.dt);
  read_into(j, "q_max", cfg.q_max);
  read_into(j, "q_grid", cfg.q_grid);
  read_into(j, "c", cfg.c);
  read_into(j, "delta", cfg.delta);
  read_into(j, "grid_step", cfg.grid_step);
  read_into(j, "primitive_only", cfg.primitive_only);
  read_into(j, "require_primitive", cfg.require_primitive);
  read_into(j, "require_distinct", cfg.require_distinct);
  read_into(j, "check", cfg.check);
  read_into(j, "campaign", cfg.campaign);
  read_into(j, "slack", cfg.slack);
  read_into(j, "seed", cfg.seed);
  read_into(j, "budget", cfg.budget);
  read_into(j, "out", cfg.out);
  read_into(j, "format", cfg.format);
  if (cfg.format != "csv" && cfg.format != "json") fail_config("format must be csv or json");
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["m"] = cfg.m;
  j["n"] = cfg.n;
  json cls = json::array();
  for (const ClassBlock& b : cfg.classes)
    cls.push_back(json{{"moduli", b.moduli}, {"residues", b.residues}});
  j["classes"] = cls;
  json psi{{"kind", cfg.psi.kind}};
  if (cfg.psi.kind == "power") {
    psi["c"] = cfg.psi.c;
    psi["delta"] = cfg.psi.delta;
    psi["x0"] = cfg.psi.x0;
  } else {
    psi["x"] = cfg.psi.x;
    psi["values"] = cfg.psi.values;
  }
  j["psi"] = psi;
  json theta{{"mode", cfg.theta.mode}};
  if (cfg.theta.mode == "inline") theta["rows"] = cfg.theta.rows;
  j["theta"] = theta;
  j["samples"] = cfg.samples;
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["kappa"] = cfg.kappa;
  j["eps"] = cfg.eps;
  j["eps_list"] = cfg.eps_list;
  j["t"] = cfg.t;
  j["t_list"] = cfg.t_list;
  j["thresholds"] = cfg.thresholds;
  j["t_horizon"] = cfg.t_horizon;
  j["dt"] = cfg.dt;
  j["q_max"] = cfg.q_max;
  j["q_grid"] = cfg.q_grid;
  j["c"] = cfg.c;
  j["delta"] = cfg.delta;
  j["grid_step"] = cfg.grid_step;
  j["primitive_only"] = cfg.primitive_only;
  j["require_primitive"] = cfg.require_primitive;
  j["require_distinct"] = cfg.require_distinct;
  j["check"] = cfg.check;
  j["campaign"] = cfg.campaign;
  j["slack"] = cfg.slack;
  j["seed"] = cfg.seed;
  j["budget"] = cfg.budget;
  j["out"] = cfg.out;
  j["format"] = cfg.format;
  return j;
}

// ====== config -> library objects ======

diolab::ApproxFunction make_psi(const PsiSpec& p) {
  if (p.kind == "power") return diolab::ApproxFunction::power_law(p.c, p.delta, p.x0);
  if (p.kind == "table") return diolab::ApproxFunction::tabulated(p.x, p.values);
  fail_config("psi.kind must be power or table");
  return diolab::ApproxFunction::power_law(1, 1);  // unreachable
}

diolab::WeightPair make_weights(const ExperimentConfig& cfg) {
  if (cfg.alpha.empty() && cfg.beta.empty())
    return diolab::WeightPair::uniform(cfg.m, cfg.n);
  if (static_cast<int>(cfg.alpha.size()) != cfg.m ||
      static_cast<int>(cfg.beta.size()) != cfg.n)
    fail_config("alpha/beta sizes must match m and n");
  return {diolab::Weight(cfg.alpha), diolab::Weight(cfg.beta)};
}

// One class after coordinate-wise normalization (its own single modulus).
struct NormBlock {
  long long modulus = 1;
  std::vector<long long> residues;
};

// Each block is normalized on its own: coordinate moduli go to their lcm,
// residues are reduced until the class holds primitive vectors. Blocks keep
// separate moduli; nothing is merged across classes.
std::vector<NormBlock> make_classes(const ExperimentConfig& cfg) {
  std::vector<ClassBlock> blocks = cfg.classes;
  if (blocks.empty()) {
    // No constraint at all: the full primitive set, modulus 1.
    blocks.push_back({std::vector<long long>(static_cast<size_t>(cfg.m + cfg.n), 1),
                      std::vector<long long>(static_cast<size_t>(cfg.m + cfg.n), 0)});
  }
  std::vector<NormBlock> out;
  for (const ClassBlock& b : blocks) {
    const diolab::CongruenceConstraint cs{b.moduli, b.residues};
    const auto norm = diolab::normalize_constraints(std::span(&cs, 1), cfg.m, cfg.n);
    out.push_back({norm.modulus, norm.residues.at(0)});
  }
  return out;
}

std::vector<diolab::Mat> make_thetas(const ExperimentConfig& cfg, std::size_t count) {
  if (cfg.theta.mode == "inline") {
    if (static_cast<int>(cfg.theta.rows.size()) != cfg.m)
      fail_config("inline theta must have m rows");
    diolab::Mat th(cfg.m, cfg.n);
    for (int i = 0; i < cfg.m; ++i) {
      if (static_cast<int>(cfg.theta.rows[i].size()) != cfg.n)
        fail_config("inline theta rows must have n entries");
      for (int j = 0; j < cfg.n; ++j) th(i, j) = cfg.theta.rows[i][j];
    }
    return std::vector<diolab::Mat>(count, th);
  }
  if (cfg.theta.mode != "seeded") fail_config("theta.mode must be seeded or inline");
  return diolab::sample_thetas(cfg.seed, count, cfg.m, cfg.n);
}

double kappa_for(const ExperimentConfig& cfg, std::size_t leg) {
  if (cfg.kappa.empty()) return 1.0;
  if (leg >= cfg.kappa.size()) fail_config("kappa list shorter than the class list");
  return cfg.kappa[leg];
}

std::vector<double> eps_per_leg(const ExperimentConfig& cfg, std::size_t legs) {
  if (cfg.eps_list.empty()) return std::vector<double>(legs, cfg.eps);
  if (cfg.eps_list.size() != legs) fail_config("eps_list size must match the class count");
  return cfg.eps_list;
}

// ====== output plumbing ======

struct RunWriter {
  const ExperimentConfig& cfg;
  std::string command;
  json outputs = json::array();
  json summary = json::object();

  void emit(const std::string& stem, const diolab::CsvTable& table,
            const std::vector<std::string>& columns) {
    std::filesystem::create_directories(cfg.out);
    const std::string ext = cfg.format == "json" ? ".json" : ".csv";
    const std::string path = cfg.out + "/" + stem + ext;
    if (cfg.format == "json") {
      // Same cells as the CSV, wrapped as {"columns": [...], "rows": [[...]]}.
      json doc{{"columns", columns}, {"rows", json::array()}};
      std::string csv = table.to_string();
      json rows = json::array();
      std::size_t start = csv.find('\n') + 1;
      while (start < csv.size()) {
        std::size_t end = csv.find('\n', start);
        json row = json::array();
        std::size_t field = start;
        for (;;) {
          std::size_t comma = csv.find(',', field);
          if (comma == std::string::npos || comma > end) {
            row.push_back(csv.substr(field, end - field));
            break;
          }
          row.push_back(csv.substr(field, comma - field));
          field = comma + 1;
        }
        rows.push_back(row);
        start = end + 1;
      }
      doc["rows"] = rows;
      diolab::write_file(path, doc.dump(2) + "\n");
    } else {
      table.write(path);
    }
    outputs.push_back(json{{"file", stem + ext},
                           {"columns", columns},
                           {"rows", table.rows()}});
    std::printf("wrote %s\n", path.c_str());
  }

  void finish() const {
    const std::string canonical = config_to_json(cfg).dump();
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(diolab::fnv1a64(canonical)));
    json manifest{{"artifact_version", kArtifactVersion},
                  {"command", command},
                  {"config_hash", hash},
                  {"created", diolab::utc_timestamp()},
                  {"format", cfg.format},
                  {"outputs", outputs},
                  {"summary", summary}};
    std::filesystem::create_directories(cfg.out);
    const std::string path = cfg.out + "/" + command + ".manifest.json";
    diolab::write_file(path, manifest.dump(2) + "\n");
    std::printf("wrote %s\n", path.c_str());
  }
};

std::vector<std::string> int_cells(std::span<const long long> xs) {
  std::vector<std::string> out;
  for (long long x : xs) out.push_back(diolab::format_int(x));
  return out;
}

// ====== subcommands ======

int cmd_search(const ExperimentConfig& cfg) {
  const auto classes = make_classes(cfg);
  if (classes.size() != 1) fail_config("search expects exactly one class");
  const diolab::Mat theta = make_thetas(cfg, 1)[0];
  const diolab::ApproxFunction psi = make_psi(cfg.psi);
  const diolab::SearchClass cls{classes[0].modulus, classes[0].residues};
  diolab::EnumerateOptions opts;
  opts.primitive_only = cfg.primitive_only;
  opts.box_guard = cfg.budget;
  const auto records = diolab::enumerate_solutions(theta, psi, cls, cfg.q_max, opts);

  std::vector<std::string> columns = {"qnorm", "scale", "residual"};
  for (int j = 0; j < cfg.n; ++j) columns.push_back("q" + std::to_string(j + 1));
  for (int i = 0; i < cfg.m; ++i) columns.push_back("p" + std::to_string(i + 1));
  diolab::CsvTable table(columns);
  for (const auto& rec : records) {
    std::vector<std::string> row = {diolab::format_double(rec.qnorm),
                                    diolab::format_double(rec.scale),
                                    diolab::format_double(rec.residual)};
    for (const auto& cell : int_cells(rec.q)) row.push_back(cell);
    for (const auto& cell : int_cells(rec.p)) row.push_back(cell);
    table.add_row(std::move(row));
  }

  RunWriter out{cfg, "search"};
  out.summary["solutions"] = records.size();
  out.summary["modulus"] = classes[0].modulus;
  out.emit("search", table, columns);
  out.finish();
  std::printf("solutions=%zu\n", records.size());
  return 0;
}

int cmd_dani(const ExperimentConfig& cfg) {
  const diolab::ApproxFunction psi = make_psi(cfg.psi);
  diolab::RateSolveOptions sopts;
  sopts.t_span = cfg.t_horizon;
  const diolab::RateFunction rate = diolab::psi_to_rate(psi, cfg.m, cfg.n, sopts);
  const auto grid = diolab::uniform_grid(rate.t0(), rate.t0() + cfg.t_horizon, cfg.dt);

  const std::vector<std::string> columns = {"t", "r", "lambda", "L", "residual"};
  diolab::CsvTable table(columns);
  double max_residual = 0.0;
  bool lambda_increasing = true;
  double prev_lambda = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    const double lam = rate.lambda(t);
    const double res = diolab::matching_residual(psi, rate, t);
    max_residual = std::max(max_residual, res);
    if (i > 0 && lam <= prev_lambda) lambda_increasing = false;
    prev_lambda = lam;
    table.add_row({diolab::format_double(t), diolab::format_double(rate.r(t)),
                   diolab::format_double(lam), diolab::format_double(rate.ell(t)),
                   diolab::format_double(res)});
  }

  RunWriter out{cfg, "dani"};
  out.summary["max_residual"] = max_residual;
  out.summary["lambda_increasing"] = lambda_increasing;
  out.summary["t0"] = rate.t0();
  out.emit("dani", table, columns);
  out.finish();
  std::printf("grid_points=%zu max_residual=%s\n", grid.size(),
              diolab::format_double(max_residual).c_str());
  return 0;
}

diolab::OrbitSpec make_orbit_spec(const ExperimentConfig& cfg, const diolab::Mat& theta,
                                  const std::vector<NormBlock>& classes, std::size_t leg,
                                  std::vector<double> grid) {
  return {theta,
          diolab::class_gamma(classes.at(leg).residues, classes.at(leg).modulus),
          classes.at(leg).modulus,
          make_weights(cfg),
          kappa_for(cfg, leg),
          std::move(grid)};
}

int cmd_orbit(const ExperimentConfig& cfg) {
  const auto classes = make_classes(cfg);
  const diolab::Mat theta = make_thetas(cfg, 1)[0];
  const auto spec = make_orbit_spec(cfg, theta, classes, 0,
                                    diolab::uniform_grid(0.0, cfg.t_horizon, cfg.dt));
  diolab::EnumBudget budget{cfg.budget, 0};
  const auto series = diolab::orbit_delta_series(spec, budget);

  const std::vector<std::string> columns = {"t", "delta"};
  diolab::CsvTable table(columns);
  double max_delta = series.empty() ? 0.0 : series.front().delta;
  for (const auto& s : series) {
    max_delta = std::max(max_delta, s.delta);
    table.add_row({diolab::format_double(s.t), diolab::format_double(s.delta)});
  }

  RunWriter out{cfg, "orbit"};
  out.summary["max_delta"] = max_delta;
  out.summary["budget_used"] = budget.used;
  out.emit("orbit", table, columns);
  out.finish();
  std::printf("grid_points=%zu max_delta=%s\n", series.size(),
              diolab::format_double(max_delta).c_str());
  return 0;
}

int cmd_cusp(const ExperimentConfig& cfg) {
  const auto classes = make_classes(cfg);
  if (classes.size() != 1) fail_config("cusp expects exactly one class");
  if (cfg.samples < 1) fail_config("samples must be >= 1");
  const auto thetas = make_thetas(cfg, static_cast<std::size_t>(cfg.samples));

  std::vector<double> ts = cfg.thresholds;
  std::sort(ts.begin(), ts.end());
  std::vector<double> eps_list;
  for (double T : ts) eps_list.push_back(std::exp(-T));
  diolab::CuspMassOptions opts;
  opts.dt = cfg.dt;
  opts.node_budget = cfg.budget;
  const diolab::IMat gamma = diolab::class_gamma(classes[0].residues, classes[0].modulus);
  const auto estimates = diolab::estimate_cusp_mass_profile(
      thetas, classes[0].modulus, gamma, cfg.t_horizon, eps_list, opts);

  const std::vector<std::string> columns = {"T", "eps", "estimate", "monotone_ok"};
  diolab::CsvTable table(columns);
  bool monotone = true;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const bool ok = i == 0 || estimates[i].value <= estimates[i - 1].value + 1e-15;
    monotone = monotone && ok;
    table.add_row({diolab::format_double(ts[i]), diolab::format_double(eps_list[i]),
                   diolab::format_double(estimates[i].value),
                   diolab::format_int(ok ? 1 : 0)});
  }

  // Least-squares fit log(estimate) ~ a - b T over the positive rows; the
  // mass of the e^{-T}-thin part should scale like e^{-(m+n) T}.
  double b_hat = 0.0;
  std::size_t positive = 0;
  {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (estimates[i].value <= 0.0) continue;
      ++positive;
      const double x = ts[i], y = std::log(estimates[i].value);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    if (positive >= 2) {
      const double k = static_cast<double>(positive);
      b_hat = -(k * sxy - sx * sy) / (k * sxx - sx * sx);
    }
  }

  RunWriter out{cfg, "cusp"};
  out.summary["monotone"] = monotone;
  out.summary["slope_b"] = b_hat;
  out.summary["slope_target"] = cfg.m + cfg.n;
  out.summary["positive_rows"] = positive;
  out.emit("cusp", table, columns);
  out.finish();
  std::printf("slope_fit: estimate ~ exp(-b T), b=%s (target m+n=%d)\n",
              diolab::format_double(b_hat).c_str(), cfg.m + cfg.n);
  return 0;
}

int cmd_joint(const ExperimentConfig& cfg) {
  const auto classes = make_classes(cfg);
  const std::size_t legs = classes.size();
  if (legs < 1) fail_config("joint expects at least one class");
  const diolab::Mat theta = make_thetas(cfg, 1)[0];
  std::vector<diolab::OrbitSpec> specs;
  for (std::size_t leg = 0; leg < legs; ++leg)
    specs.push_back(make_orbit_spec(cfg, theta, classes, leg, {}));
  const auto eps = eps_per_leg(cfg, legs);
  diolab::JointOptions opts;
  opts.dt = cfg.dt;
  opts.node_budget = cfg.budget;
  const auto rep = diolab::joint_average(specs, eps, cfg.t_horizon, opts);

  std::vector<std::string> columns = {"horizon", "grid_points", "joint"};
  for (std::size_t leg = 0; leg < legs; ++leg)
    columns.push_back("marginal" + std::to_string(leg + 1));
  columns.push_back("product");
  columns.push_back("abs_diff");
  columns.push_back("order_warning");
  diolab::CsvTable table(columns);
  std::vector<std::string> row = {diolab::format_double(rep.horizon),
                                  diolab::format_int(static_cast<long long>(rep.grid_points)),
                                  diolab::format_double(rep.joint)};
  for (double mgl : rep.marginals) row.push_back(diolab::format_double(mgl));
  const double diff = std::abs(rep.joint - rep.marginal_product);
  row.push_back(diolab::format_double(rep.marginal_product));
  row.push_back(diolab::format_double(diff));
  row.push_back(diolab::format_int(rep.exponent_order_warning ? 1 : 0));
  table.add_row(std::move(row));

  RunWriter out{cfg, "joint"};
  out.summary["joint"] = rep.joint;
  out.summary["marginal_product"] = rep.marginal_product;
  out.summary["abs_diff"] = diff;
  out.emit("joint", table, columns);
  out.finish();
  std::printf("joint=%s product=%s abs_diff=%s\n", diolab::format_double(rep.joint).c_str(),
              diolab::format_double(rep.marginal_product).c_str(),
              diolab::format_double(diff).c_str());
  return 0;
}

int cmd_crosscheck(const ExperimentConfig& cfg) {
  const auto classes = make_classes(cfg);
  if (cfg.check == "corollary") {
    if (classes.size() != 1) fail_config("corollary crosscheck expects one class");
    if (cfg.samples < 1) fail_config("samples must be >= 1");
    const auto thetas = make_thetas(cfg, static_cast<std::size_t>(cfg.samples));
    const std::vector<double> t_list = cfg.t_list.empty()
                                           ? std::vector<double>{cfg.t}
                                           : cfg.t_list;
    std::vector<diolab::CorollaryCase> cases;
    for (const auto& th : thetas)
      for (double t : t_list)
        cases.push_back({make_orbit_spec(cfg, th, classes, 0, {}), cfg.eps, t});
    const auto results = diolab::corollary_campaign(cases, cfg.budget);

    std::vector<std::string> columns = {"sample", "t", "eps", "fired", "witness", "pass"};
    for (int i = 0; i < cfg.m; ++i) columns.push_back("p" + std::to_string(i + 1));
    for (int j = 0; j < cfg.n; ++j) columns.push_back("q" + std::to_string(j + 1));
    diolab::CsvTable table(columns);
    long long fired = 0, passed = 0, failed = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      if (r.fired) {
        ++fired;
        ++(r.pass ? passed : failed);
      }
      std::vector<std::string> row = {
          diolab::format_int(static_cast<long long>(i / t_list.size())),
          diolab::format_double(r.t),
          diolab::format_double(r.eps),
          diolab::format_int(r.fired ? 1 : 0),
          diolab::format_int(r.witness_found ? 1 : 0),
          diolab::format_int(r.pass ? 1 : 0)};
      for (int k = 0; k < cfg.m + cfg.n; ++k) {
        const auto& block = k < cfg.m ? r.p : r.q;
        const int idx = k < cfg.m ? k : k - cfg.m;
        row.push_back(r.witness_found ? diolab::format_int(block[static_cast<size_t>(idx)])
                                      : std::string());
      }
      table.add_row(std::move(row));
    }

    RunWriter out{cfg, "crosscheck"};
    out.summary["cases"] = results.size();
    out.summary["fired"] = fired;
    out.summary["pass"] = passed;
    out.summary["fail"] = failed;
    out.emit("crosscheck", table, columns);
    out.finish();
    std::printf("fired=%lld pass=%lld fail=%lld\n", fired, passed, failed);
    return failed == 0 ? 0 : 4;
  }

  if (cfg.check != "dani") fail_config("check must be corollary or dani");
  if (classes.size() != 1) fail_config("dani crosscheck expects one class");
  const diolab::Mat theta = make_thetas(cfg, 1)[0];
  const diolab::ApproxFunction psi = make_psi(cfg.psi);
  diolab::DaniOptions opts;
  opts.dt = cfg.dt;
  opts.slack = cfg.slack;
  opts.node_budget = cfg.budget;
  const diolab::IMat gamma = diolab::class_gamma(classes[0].residues, classes[0].modulus);
  const auto rep =
      diolab::crosscheck_dani(theta, gamma, classes[0].modulus, psi, cfg.t_horizon, opts);

  const std::vector<std::string> cross_cols = {"t", "delta", "rate", "scale_bound",
                                               "matched", "subdomain"};
  diolab::CsvTable crossings(cross_cols);
  for (const auto& c : rep.crossings)
    crossings.add_row({diolab::format_double(c.t), diolab::format_double(c.delta),
                       diolab::format_double(c.rate), diolab::format_double(c.scale_bound),
                       diolab::format_int(c.matched ? 1 : 0),
                       diolab::format_int(c.subdomain ? 1 : 0)});
  const std::vector<std::string> sol_cols = {"scale", "qnorm", "residual", "t_star",
                                             "delta_at_t", "rate_minus_slack", "pass"};
  diolab::CsvTable solutions(sol_cols);
  for (const auto& s : rep.solutions)
    solutions.add_row({diolab::format_double(s.record.scale),
                       diolab::format_double(s.record.qnorm),
                       diolab::format_double(s.record.residual),
                       diolab::format_double(s.t_star), diolab::format_double(s.delta_at_t),
                       diolab::format_double(s.rate_minus_slack),
                       diolab::format_int(s.pass ? 1 : 0)});

  RunWriter out{cfg, "crosscheck"};
  out.summary["crossings"] = rep.crossings.size();
  out.summary["crossing_failures"] = rep.crossing_failures;
  out.summary["solutions"] = rep.solutions.size();
  out.summary["solution_failures"] = rep.solution_failures;
  out.summary["pass"] = rep.pass;
  out.emit("crosscheck_crossings", crossings, cross_cols);
  out.emit("crosscheck_solutions", solutions, sol_cols);
  out.finish();
  std::printf("crossings=%zu solutions=%zu fail=%zu\n", rep.crossings.size(),
              rep.solutions.size(), rep.crossing_failures + rep.solution_failures);
  return rep.pass ? 0 : 4;
}

int cmd_campaign(const ExperimentConfig& cfg) {
  const auto classes = make_classes(cfg);
  if (cfg.samples < 1) fail_config("samples must be >= 1");
  const auto thetas = make_thetas(cfg, static_cast<std::size_t>(cfg.samples));

  if (cfg.campaign == "growth") {
    if (classes.size() != 1) fail_config("growth campaign expects one class");
    if (cfg.q_grid.empty()) fail_config("growth campaign needs a q_grid");
    const diolab::ApproxFunction psi = make_psi(cfg.psi);
    const diolab::SearchClass cls{classes[0].modulus, classes[0].residues};
    diolab::EnumerateOptions opts;
    opts.primitive_only = cfg.primitive_only;
    opts.box_guard = cfg.budget;
    const auto rows = diolab::growth_campaign(thetas, psi, cls, cfg.q_grid, opts);

    std::vector<std::string> columns = {"sample"};
    for (long long q : cfg.q_grid) columns.push_back("count_q" + std::to_string(q));
    diolab::CsvTable table(columns);
    std::size_t grew = 0, ratio3 = 0, no_new = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::vector<std::string> row = {diolab::format_int(static_cast<long long>(i))};
      for (const auto& pt : rows[i]) row.push_back(diolab::format_int(pt.count));
      table.add_row(std::move(row));
      const long long first = rows[i].front().count, last = rows[i].back().count;
      if (last > first) ++grew;
      if (last >= 3 * first && last > 0) ++ratio3;
      if (last == first) ++no_new;
    }
    const double k = static_cast<double>(rows.size());

    RunWriter out{cfg, "campaign"};
    out.summary["kind"] = "growth";
    out.summary["samples"] = rows.size();
    out.summary["frac_grew"] = static_cast<double>(grew) / k;
    out.summary["frac_ratio_ge_3"] = static_cast<double>(ratio3) / k;
    out.summary["frac_no_new"] = static_cast<double>(no_new) / k;
    out.emit("campaign_growth", table, columns);
    out.finish();
    std::printf("campaign=growth samples=%zu frac_grew=%s frac_ratio_ge_3=%s frac_no_new=%s\n",
                rows.size(),
                diolab::format_double(static_cast<double>(grew) / k).c_str(),
                diolab::format_double(static_cast<double>(ratio3) / k).c_str(),
                diolab::format_double(static_cast<double>(no_new) / k).c_str());
    return 0;
  }

  if (cfg.campaign == "simultaneous") {
    std::vector<diolab::SearchClass> cls;
    for (const auto& blk : classes) cls.push_back({blk.modulus, blk.residues});
    diolab::SimultaneousOptions opts;
    opts.box_guard = cfg.budget;
    const auto reports =
        diolab::simultaneous_campaign(thetas, cls, cfg.c, cfg.delta, cfg.q_max, opts);

    const std::vector<std::string> columns = {"sample", "witnesses", "thresholds"};
    diolab::CsvTable table(columns);
    std::size_t ge3 = 0, ge1 = 0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      table.add_row({diolab::format_int(static_cast<long long>(i)),
                     diolab::format_int(reports[i].witness_count),
                     diolab::format_int(reports[i].thresholds)});
      if (reports[i].witness_count >= 3) ++ge3;
      if (reports[i].witness_count >= 1) ++ge1;
    }
    const double k = static_cast<double>(reports.size());

    RunWriter out{cfg, "campaign"};
    out.summary["kind"] = "simultaneous";
    out.summary["samples"] = reports.size();
    out.summary["frac_ge_3"] = static_cast<double>(ge3) / k;
    out.summary["witness_rate"] = static_cast<double>(ge1) / k;
    out.emit("campaign_simultaneous", table, columns);
    out.finish();
    std::printf("campaign=simultaneous samples=%zu frac_ge_3=%s witness_rate=%s\n",
                reports.size(), diolab::format_double(static_cast<double>(ge3) / k).c_str(),
                diolab::format_double(static_cast<double>(ge1) / k).c_str());
    return 0;
  }

  if (cfg.campaign != "weighted") fail_config("campaign must be growth, simultaneous or weighted");
  std::vector<diolab::WeightedClassSpec> specs;
  for (std::size_t leg = 0; leg < classes.size(); ++leg)
    specs.push_back({diolab::SearchClass{classes[leg].modulus, classes[leg].residues},
                     make_weights(cfg), kappa_for(cfg, leg)});
  diolab::WeightedOptions opts;
  opts.grid_step = cfg.grid_step;
  opts.require_primitive = cfg.require_primitive;
  opts.require_distinct = cfg.require_distinct;
  opts.box_guard = cfg.budget;
  const auto reports = diolab::weighted_campaign(thetas, specs, cfg.eps,
                                                 static_cast<double>(cfg.q_max), opts);

  const std::vector<std::string> columns = {"sample", "witnesses", "thresholds",
                                            "order_warning"};
  diolab::CsvTable table(columns);
  std::size_t ge3 = 0, ge1 = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    table.add_row({diolab::format_int(static_cast<long long>(i)),
                   diolab::format_int(reports[i].witness_count),
                   diolab::format_int(reports[i].thresholds),
                   diolab::format_int(reports[i].exponent_gap_warning ? 1 : 0)});
    if (reports[i].witness_count >= 3) ++ge3;
    if (reports[i].witness_count >= 1) ++ge1;
  }
  const double k = static_cast<double>(reports.size());

  RunWriter out{cfg, "campaign"};
  out.summary["kind"] = "weighted";
  out.summary["samples"] = reports.size();
  out.summary["frac_ge_3"] = static_cast<double>(ge3) / k;
  out.summary["witness_rate"] = static_cast<double>(ge1) / k;
  out.emit("campaign_weighted", table, columns);
  out.finish();
  std::printf("campaign=weighted samples=%zu frac_ge_3=%s witness_rate=%s\n", reports.size(),
              diolab::format_double(static_cast<double>(ge3) / k).c_str(),
              diolab::format_double(static_cast<double>(ge1) / k).c_str());
  return 0;
}

void print_config_reference() {
  std::printf("Config keys (JSON object, unknown keys rejected):\n\n");
  for (const auto& row : kConfigReference)
    std::printf("  %-18s %-7s default %-22s %s\n", row.key, row.type, row.fallback, row.doc);
  std::printf("\nFlags --seed, --out, --budget, --format override the config file.\n");
}

struct CliFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<long long> budget;
  std::optional<std::string> format;
};

ExperimentConfig load_config(const CliFlags& flags) {
  json j;
  if (!flags.config.empty()) {
    std::string text;
    try {
      text = diolab::read_file(flags.config);
    } catch (const std::runtime_error& e) {
      fail_config(e.what());
    }
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      fail_config(std::string("JSON parse error: ") + e.what());
    }
  } else {
    j = json::object();
  }
  ExperimentConfig cfg = parse_config(j);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out) cfg.out = *flags.out;
  if (flags.budget) cfg.budget = *flags.budget;
  if (flags.format) cfg.format = *flags.format;
  if (cfg.format != "csv" && cfg.format != "json") fail_config("format must be csv or json");
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diolab: congruence-constrained approximation and flow-excursion lab"};
  app.require_subcommand(0, 1);
  bool config_reference = false;
  app.add_flag("--config-reference", config_reference,
               "print the generated config key reference and exit");

  CliFlags flags;
  const char* names[] = {"search", "dani", "orbit", "cusp", "joint", "crosscheck", "campaign"};
  const char* blurbs[] = {
      "enumerate congruence-constrained solutions below a threshold",
      "tabulate the approximation-rate correspondence with residuals",
      "one flow orbit's shortest-vector excursion series",
      "thin-part mass estimates across thresholds with slope fit",
      "joint vs product indicator averages for coupled flows",
      "membership-implies-witness / solution-implies-crossing audits",
      "seeded multi-sample experiment tables"};
  for (int i = 0; i < 7; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
    sub->add_option("--config", flags.config, "JSON config file");
    sub->add_option("--seed", flags.seed, "override the config seed (u64)");
    sub->add_option("--out", flags.out, "override the output directory");
    sub->add_option("--budget", flags.budget, "override the enumeration budget (nodes)");
    sub->add_option("--format", flags.format, "override the table format: csv|json");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (config_reference) {
    print_config_reference();
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::printf("%s", app.help().c_str());
    return 2;
  }

  const std::string chosen = app.get_subcommands().front()->get_name();
  try {
    const ExperimentConfig cfg = load_config(flags);
    if (chosen == "search") return cmd_search(cfg);
    if (chosen == "dani") return cmd_dani(cfg);
    if (chosen == "orbit") return cmd_orbit(cfg);
    if (chosen == "cusp") return cmd_cusp(cfg);
    if (chosen == "joint") return cmd_joint(cfg);
    if (chosen == "crosscheck") return cmd_crosscheck(cfg);
    if (chosen == "campaign") return cmd_campaign(cfg);
    std::fprintf(stderr, "unknown subcommand %s\n", chosen.c_str());
    return 2;
  } catch (const diolab::BudgetExhausted& e) {
    std::fprintf(stderr, "budget: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal: %s\n", e.what());
    return 4;
  }
}
