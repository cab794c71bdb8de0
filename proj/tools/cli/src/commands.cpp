#include "bqnet_cli/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "bqnet/ergodicity.hpp"
#include "bqnet/simulate.hpp"
#include "bqnet/transient.hpp"
#include "bqnet_cli/config.hpp"
#include "bqnet_cli/tables.hpp"

namespace bqnet::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::vector<double> times;
  std::vector<double> z;
  std::optional<std::uint32_t> cap;
  std::optional<std::uint64_t> seed;
  std::uint64_t reps = 10000;
  unsigned workers = 1;
  unsigned threads = 1;
  std::optional<double> rtol;
  std::string analytic, empirical;
  double tol = 0.005;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot write " + path.string());
  f << content;
  if (!f) throw DomainError("write failed for " + path.string());
}

// The JSON result goes to PREFIX.json, or to `out` without a prefix.
void emit_json(const Options& o, const json& doc, std::ostream& out) {
  if (o.out.empty()) {
    out << dump(doc);
  } else {
    write_file(o.out + ".json", dump(doc));
  }
}

QuadratureSpec quadrature(const Options& o, const ModelConfig& cfg) {
  QuadratureSpec q;
  q.rtol = o.rtol.value_or(cfg.analysis.rtol);
  q.threads = o.threads;
  return q;
}

double single_time(const Options& o) {
  if (o.times.size() != 1) throw ValidationError("--t: expected exactly one time");
  return o.times.front();
}

std::uint64_t resolve_seed(const Options& o, const ModelConfig& cfg) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("BQNET_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      auto v = std::stoull(env, &used, 0);
      if (used == std::char_traits<char>::length(env)) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError(std::string("BQNET_SEED: not an unsigned integer: '") + env + "'");
  }
  return cfg.analysis.seed;
}

OccupancyTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("table not found: " + path);
  return read_occupancy_csv(in);
}

// Snapshot time recorded in the JSON written next to a table, if any.
std::optional<double> sidecar_time(const std::string& csv) {
  fs::path side = fs::path(csv).replace_extension(".json");
  if (!fs::exists(side)) {
    // PREFIX.t<k>.csv tables share PREFIX.json.
    side = fs::path(csv).replace_extension("").replace_extension(".json");
    if (!fs::exists(side)) return std::nullopt;
  }
  std::ifstream in(side);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) return std::nullopt;
  if (doc.contains("t") && doc["t"].is_number()) return doc["t"].get<double>();
  if (doc.contains("snapshots") && doc["snapshots"].is_array()) {
    const std::string name = fs::path(csv).filename().string();
    for (const auto& s : doc["snapshots"]) {
      if (s.value("table", "") == name && s.contains("t")) return s["t"].get<double>();
    }
  }
  return std::nullopt;
}

int cmd_pgf(const Options& o, std::ostream& out) {
  auto cfg = load_config(o.config);
  const double t = single_time(o);
  auto kernel = build_kernel(cfg, t);
  double v = transient_pgf(cfg.model, kernel, t, o.z, quadrature(o, cfg));
  emit_json(o, {{"kind", "pgf"}, {"t", t}, {"z", o.z}, {"value", v}}, out);
  return exit_ok;
}

int cmd_zero_prob(const Options& o, std::ostream& out) {
  auto cfg = load_config(o.config);
  const double t = single_time(o);
  auto kernel = build_kernel(cfg, t);
  double v = transient_zero_prob(cfg.model, kernel, t, quadrature(o, cfg));
  emit_json(o, {{"kind", "zero-prob"}, {"t", t}, {"value", v}}, out);
  return exit_ok;
}

int cmd_moments(const Options& o, std::ostream& out) {
  auto cfg = load_config(o.config);
  const double t = single_time(o);
  auto kernel = build_kernel(cfg, t);
  auto m = transient_moments(cfg.model, kernel, t, quadrature(o, cfg));
  json mean = nullptr, cov = nullptr;
  if (m.mean) mean = std::vector<double>(m.mean->data(), m.mean->data() + m.mean->size());
  if (m.covariance) {
    cov = json::array();
    for (Eigen::Index k = 0; k < m.covariance->rows(); ++k) {
      std::vector<double> row(static_cast<std::size_t>(m.covariance->cols()));
      for (Eigen::Index l = 0; l < m.covariance->cols(); ++l) row[static_cast<std::size_t>(l)] = (*m.covariance)(k, l);
      cov.push_back(row);
    }
  }
  emit_json(o, {{"kind", "moments"}, {"t", t}, {"mean", mean}, {"covariance", cov}, {"quadrature_nodes", m.quadrature_nodes}},
            out);
  return exit_ok;
}

int cmd_pmf(const Options& o, std::ostream& out) {
  auto cfg = load_config(o.config);
  const double t = single_time(o);
  auto kernel = build_kernel(cfg, t);
  auto pmf = transient_pmf(cfg.model, kernel, t, o.cap.value_or(cfg.analysis.cap), quadrature(o, cfg));
  const std::string csv = occupancy_csv(pmf.pmf);
  if (o.out.empty()) {
    out << csv;
  } else {
    write_file(o.out + ".csv", csv);
    write_file(o.out + ".json", dump(pmf_json(pmf, fs::path(o.out + ".csv").filename().string())));
  }
  return exit_ok;
}

int cmd_ergodicity(const Options& o, std::ostream& out) {
  auto cfg = load_config(o.config);
  auto kernel = build_kernel(cfg, 0.0);
  ErgodicityOptions opts;
  opts.power_tail_alpha = cfg.analysis.power_tail_alpha;
  opts.quad = quadrature(o, cfg);
  emit_json(o, verdict_json(classify_ergodicity(cfg.model, kernel, opts)), out);
  return exit_ok;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  auto cfg = load_config(o.config);
  if (o.times.empty()) throw ValidationError("--t: at least one time is required");
  SimulationPlan plan;
  plan.model = &cfg.model;
  plan.times = o.times;
  std::sort(plan.times.begin(), plan.times.end());
  plan.replications = o.reps;
  plan.seed = resolve_seed(o, cfg);
  plan.cap = o.cap.value_or(cfg.analysis.cap);
  plan.workers = o.workers;
  auto est = run_simulation(plan);
  if (o.out.empty()) {
    if (plan.times.size() != 1) throw ValidationError("--out is required with more than one snapshot time");
    out << occupancy_csv(est, 0);
    return exit_ok;
  }
  std::vector<std::string> tables;
  for (std::size_t s = 0; s < plan.times.size(); ++s) {
    const std::string path = plan.times.size() == 1 ? o.out + ".csv" : o.out + ".t" + std::to_string(s) + ".csv";
    write_file(path, occupancy_csv(est, s));
    tables.push_back(fs::path(path).filename().string());
  }
  write_file(o.out + ".json", dump(simulation_json(est, plan.seed, tables)));
  return exit_ok;
}

int cmd_compare(const Options& o, std::ostream& out) {
  auto a = read_table(o.analytic);
  auto e = read_table(o.empirical);
  auto ta = sidecar_time(o.analytic), te = sidecar_time(o.empirical);
  if (ta && te && std::abs(*ta - *te) > 1e-12) {
    throw ValidationError("compare: snapshot times differ (" + format_double(*ta) + " vs " + format_double(*te) + ")");
  }
  auto report = compare_outputs(a, e, o.tol);
  emit_json(o, report.to_json(), out);
  return report.pass ? exit_ok : exit_domain;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transient occupancy, moments, ergodicity and simulation for batch-arrival infinite-server networks"};
  app.name("bqnet");
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("config", o.config, "model configuration (JSON)")->required();
    sub->add_option("--out", o.out, "output prefix; results go to stdout when omitted");
  };
  auto add_quad = [&](CLI::App* sub) {
    sub->add_option("--rtol", o.rtol, "quadrature relative tolerance");
    sub->add_option("--threads", o.threads, "quadrature worker threads (0 = all cores)");
  };

  auto* pgf = app.add_subcommand("pgf", "transient probability generating function");
  add_config(pgf);
  add_quad(pgf);
  pgf->add_option("--t", o.times, "time")->required()->expected(1);
  pgf->add_option("--z", o.z, "argument, comma separated")->required()->delimiter(',');

  auto* pmf = app.add_subcommand("pmf", "occupancy distribution on the lattice |n| <= cap");
  add_config(pmf);
  add_quad(pmf);
  pmf->add_option("--t", o.times, "time")->required()->expected(1);
  pmf->add_option("--cap", o.cap, "largest total occupancy");

  auto* zero = app.add_subcommand("zero-prob", "probability that the network is empty");
  add_config(zero);
  add_quad(zero);
  zero->add_option("--t", o.times, "time")->required()->expected(1);

  auto* mom = app.add_subcommand("moments", "mean vector and covariance matrix");
  add_config(mom);
  add_quad(mom);
  mom->add_option("--t", o.times, "time")->required()->expected(1);

  auto* erg = app.add_subcommand("ergodicity", "stability verdict");
  add_config(erg);
  add_quad(erg);

  auto* sim = app.add_subcommand("simulate", "Monte Carlo occupancy estimates");
  add_config(sim);
  sim->add_option("--t", o.times, "snapshot times, comma separated")->required()->delimiter(',');
  sim->add_option("--reps", o.reps, "replications")->check(CLI::PositiveNumber);
  sim->add_option("--seed", o.seed, "master seed (overrides BQNET_SEED and the config)");
  sim->add_option("--cap", o.cap, "largest tallied total occupancy");
  sim->add_option("--workers", o.workers, "worker threads");

  auto* cmp = app.add_subcommand("compare", "total variation and z-scores between two occupancy tables");
  cmp->add_option("analytic", o.analytic, "analytic table (CSV)")->required();
  cmp->add_option("empirical", o.empirical, "empirical table (CSV)")->required();
  cmp->add_option("--tol", o.tol, "total-variation tolerance");
  cmp->add_option("--out", o.out, "output prefix; report goes to stdout when omitted");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_validation;
  }

  try {
    if (pgf->parsed()) return cmd_pgf(o, out);
    if (pmf->parsed()) return cmd_pmf(o, out);
    if (zero->parsed()) return cmd_zero_prob(o, out);
    if (mom->parsed()) return cmd_moments(o, out);
    if (erg->parsed()) return cmd_ergodicity(o, out);
    if (sim->parsed()) return cmd_simulate(o, out);
    if (cmp->parsed()) return cmd_compare(o, out);
  } catch (const MissingFileError& e) {
    err << "error: " << e.what() << "\n";
    return exit_missing_file;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << " (last " << format_double(e.last_estimate()) << ", previous "
        << format_double(e.previous_estimate()) << ")\n";
    return exit_convergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_domain;
  }
  return exit_validation;
}

}  // namespace bqnet::cli
