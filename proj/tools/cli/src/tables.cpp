#include "bqnet_cli/tables.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>

#include "bqnet/errors.hpp"

namespace bqnet::cli {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string header(std::size_t J, bool empirical) {
  std::string h;
  for (std::size_t k = 1; k <= J; ++k) h += "n_" + std::to_string(k) + ",";
  h += "prob";
  if (empirical) h += ",stderr,replications";
  return h + "\n";
}

std::string cell_prefix(std::span<const std::uint32_t> n) {
  std::string s;
  for (auto v : n) s += std::to_string(v) + ",";
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError("occupancy table line " + std::to_string(line) + ": bad number '" + s + "'");
}

}  // namespace

std::string occupancy_csv(const LatticePmf& pmf) {
  std::string out = header(pmf.dim(), false);
  for (std::size_t r = 0; r < pmf.prob.size(); ++r) {
    out += cell_prefix(pmf.index->at(r)) + format_double(pmf.prob[r]) + "\n";
  }
  return out;
}

std::string occupancy_csv(const SimulationEstimate& est, std::size_t snapshot) {
  std::string out = header(est.index->dim(), true);
  const std::string reps = std::to_string(est.replications);
  for (std::size_t r = 0; r < est.index->size(); ++r) {
    out += cell_prefix(est.index->at(r)) + format_double(est.probability(snapshot, r)) + "," +
           format_double(est.standard_error(snapshot, r)) + "," + reps + "\n";
  }
  return out;
}

OccupancyTable read_occupancy_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("occupancy table: empty input");
  auto cols = split(line);
  OccupancyTable t;
  std::size_t prob_col = 0;
  while (prob_col < cols.size() && cols[prob_col] != "prob") {
    if (cols[prob_col] != "n_" + std::to_string(prob_col + 1)) {
      throw ValidationError("occupancy table: unexpected header column '" + cols[prob_col] + "'");
    }
    ++prob_col;
  }
  if (prob_col == 0 || prob_col == cols.size()) throw ValidationError("occupancy table: header must be n_1,...,n_J,prob");
  t.J = prob_col;
  const bool empirical = cols.size() == prob_col + 3;
  if (empirical && (cols[prob_col + 1] != "stderr" || cols[prob_col + 2] != "replications")) {
    throw ValidationError("occupancy table: trailing columns must be stderr,replications");
  }
  if (!empirical && cols.size() != prob_col + 1) throw ValidationError("occupancy table: unexpected trailing columns");

  for (std::size_t ln = 2; std::getline(in, line); ++ln) {
    if (line.empty()) continue;
    auto f = split(line);
    if (f.size() != cols.size()) throw ValidationError("occupancy table line " + std::to_string(ln) + ": wrong field count");
    Occupancy n(t.J);
    for (std::size_t k = 0; k < t.J; ++k) {
      double v = parse_double(f[k], ln);
      if (v < 0.0 || v != std::floor(v)) throw ValidationError("occupancy table line " + std::to_string(ln) + ": bad count");
      n[k] = static_cast<std::uint32_t>(v);
    }
    t.cells.push_back(std::move(n));
    t.prob.push_back(parse_double(f[t.J], ln));
    if (empirical) {
      t.standard_error.push_back(parse_double(f[t.J + 1], ln));
      auto reps = static_cast<std::uint64_t>(parse_double(f[t.J + 2], ln));
      if (t.replications && *t.replications != reps) throw ValidationError("occupancy table: inconsistent replication counts");
      t.replications = reps;
    }
  }
  return t;
}

json pmf_json(const TransientPmf& pmf, const std::string& table) {
  json cells = json::array();
  for (std::size_t r = 0; r < pmf.pmf.prob.size(); ++r) {
    auto n = pmf.pmf.index->at(r);
    cells.push_back({{"n", std::vector<std::uint32_t>(n.begin(), n.end())}, {"prob", pmf.pmf.prob[r]}});
  }
  return {{"kind", "occupancy-pmf"},
          {"J", pmf.pmf.dim()},
          {"t", pmf.t},
          {"cap", pmf.pmf.cap()},
          {"tail_mass", pmf.pmf.tail_mass},
          {"quadrature_nodes", pmf.quadrature_nodes},
          {"clamped", pmf.clamped},
          {"table", table},
          {"cells", cells}};
}

json simulation_json(const SimulationEstimate& est, std::uint64_t seed, const std::vector<std::string>& tables) {
  json snaps = json::array();
  for (std::size_t s = 0; s < est.snapshots.size(); ++s) {
    snaps.push_back({{"t", est.snapshots[s].t},
                     {"overflow", est.snapshots[s].overflow},
                     {"table", s < tables.size() ? tables[s] : ""}});
  }
  return {{"kind", "occupancy-estimate"},
          {"J", est.index->dim()},
          {"cap", est.index->cap()},
          {"replications", est.replications},
          {"seed", seed},
          {"snapshots", snaps}};
}

json verdict_json(const StabilityVerdict& v) {
  const auto& e = v.expected_occupancy;
  json ew = {{"status", to_string(e.status)}, {"horizon", e.horizon}, {"note", e.note}};
  ew["value"] = e.finite() ? json(e.value) : json(nullptr);
  ew["partial"] = e.value;
  ew["decay_exponent"] = e.decay_exponent ? json(*e.decay_exponent) : json(nullptr);
  auto opt = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
  return {{"kind", "stability-verdict"},
          {"verdict", to_string(v.verdict)},
          {"criterion", to_string(v.criterion)},
          {"E_W", ew},
          {"diagnostics", {{"delta", opt(v.diagnostics.delta)}, {"t0", opt(v.diagnostics.t0)}, {"alpha", opt(v.diagnostics.alpha)}}},
          {"witness", v.witness}};
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

json CompareReport::to_json() const {
  return {{"kind", "comparison"},
          {"total_variation", total_variation},
          {"max_abs_z", !max_abs_z ? json(nullptr) : std::isfinite(*max_abs_z) ? json(*max_abs_z) : json("inf")},
          {"cells", cells},
          {"tolerance", tolerance},
          {"pass", pass}};
}

CompareReport compare_outputs(const OccupancyTable& analytic, const OccupancyTable& empirical, double tol) {
  if (analytic.J != empirical.J) {
    throw ValidationError("compare: tables have J = " + std::to_string(analytic.J) + " and " + std::to_string(empirical.J));
  }
  std::map<Occupancy, std::pair<double, double>> cells;
  for (std::size_t i = 0; i < analytic.cells.size(); ++i) cells[analytic.cells[i]].first += analytic.prob[i];
  for (std::size_t i = 0; i < empirical.cells.size(); ++i) cells[empirical.cells[i]].second += empirical.prob[i];

  CompareReport rep;
  rep.tolerance = tol;
  rep.cells = cells.size();
  const auto R = empirical.replications ? empirical.replications : analytic.replications;
  double tv = 0.0;
  double zmax = 0.0;
  for (const auto& [n, pq] : cells) {
    const auto [pa, pe] = pq;
    tv += std::abs(pa - pe);
    if (R) {
      zmax = std::max(zmax, cell_z_score(pa, pe, *R));
    }
  }
  rep.total_variation = 0.5 * tv;
  if (R) rep.max_abs_z = zmax;
  rep.pass = rep.total_variation <= tol && (!rep.max_abs_z || *rep.max_abs_z <= 5.0);
  return rep;
}

}  // namespace bqnet::cli
