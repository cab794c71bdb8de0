#include "bqnet_cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>

namespace bqnet::cli {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : "\n") + s;
  return out;
}

// Collects problems while walking the document.
class Reader {
 public:
  std::vector<std::string> problems;

  void fail(const std::string& path, const std::string& msg) { problems.push_back(path + ": " + msg); }

  const json* field(const json& obj, const std::string& path, const char* key, bool required = true) {
    if (!obj.is_object()) {
      fail(path, "expected an object");
      return nullptr;
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) fail(path + "." + key, "missing");
      return nullptr;
    }
    return &*it;
  }

  std::optional<double> number(const json& obj, const std::string& path, const char* key, bool required = true) {
    const json* v = field(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      fail(path + "." + key, "expected a number");
      return std::nullopt;
    }
    return v->get<double>();
  }

  std::optional<std::uint64_t> count(const json& obj, const std::string& path, const char* key, bool required = true) {
    const json* v = field(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
      fail(path + "." + key, "expected a non-negative integer");
      return std::nullopt;
    }
    return v->get<std::uint64_t>();
  }

  std::optional<std::string> text(const json& obj, const std::string& path, const char* key, bool required = true) {
    const json* v = field(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      fail(path + "." + key, "expected a string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const json& obj, const std::string& path, const char* key,
                                             bool required = true) {
    const json* v = field(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_array()) {
      fail(path + "." + key, "expected an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) {
        fail(path + "." + key + "[" + std::to_string(i) + "]", "expected a number");
        return std::nullopt;
      }
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }

  std::optional<Occupancy> occupancy(const json& v, const std::string& path) {
    if (!v.is_array()) {
      fail(path, "expected an array of non-negative integers");
      return std::nullopt;
    }
    Occupancy out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer() || v[i].get<std::int64_t>() < 0) {
        fail(path + "[" + std::to_string(i) + "]", "expected a non-negative integer");
        return std::nullopt;
      }
      out.push_back(v[i].get<std::uint32_t>());
    }
    return out;
  }

  // Runs a constructor that validates its own parameters.
  template <class F>
  auto guarded(const std::string& path, F&& make) -> std::optional<decltype(make())> {
    try {
      return make();
    } catch (const Error& e) {
      fail(path, e.what());
      return std::nullopt;
    }
  }
};

std::optional<UnivariateLaw> parse_family(Reader& r, const json& obj, const std::string& path) {
  auto family = r.text(obj, path, "family");
  if (!family) return std::nullopt;
  const std::string& f = *family;
  std::optional<UnivariateLaw::Variant> v;
  if (f == "binomial") {
    auto n = r.count(obj, path, "trials");
    auto p = r.number(obj, path, "prob");
    if (n && p) v = BinomialLaw{static_cast<std::uint32_t>(*n), *p};
  } else if (f == "poisson") {
    if (auto m = r.number(obj, path, "mean")) v = PoissonLaw{*m};
  } else if (f == "negative-binomial") {
    auto shape = r.number(obj, path, "shape");
    auto scale = r.number(obj, path, "scale");
    if (shape && scale) v = NegativeBinomialLaw{*shape, *scale};
  } else if (f == "logarithmic") {
    if (auto rho = r.number(obj, path, "rho")) v = LogarithmicLaw{*rho};
  } else if (f == "geometric") {
    if (auto q = r.number(obj, path, "ratio")) v = GeometricLaw{*q};
  } else if (f == "zeta") {
    if (auto s = r.number(obj, path, "exponent")) v = ZetaLaw{*s};
  } else if (f == "degenerate") {
    if (auto n = r.count(obj, path, "value")) v = DegenerateLaw{static_cast<std::uint32_t>(*n)};
  } else if (f == "table") {
    if (auto probs = r.numbers(obj, path, "probs")) v = TableLaw{*probs};
  } else if (f == "log-weighted-tail") {
    v = LogWeightedTailLaw{};
  } else {
    r.fail(path + ".family", "unknown family '" + f + "'");
  }
  if (!v) return std::nullopt;
  return r.guarded(path, [&] { return UnivariateLaw(*v); });
}

std::optional<ArrivalProcess> parse_arrival(Reader& r, const json& doc) {
  const json* a = r.field(doc, "$", "arrival");
  if (!a) return std::nullopt;
  const std::string path = "arrival";
  auto kind = r.text(*a, path, "kind");
  if (!kind) return std::nullopt;
  if (*kind == "constant") {
    auto rate = r.number(*a, path, "rate");
    if (rate) return r.guarded(path, [&] { return ArrivalProcess::constant(*rate); });
  } else if (*kind == "piecewise") {
    auto b = r.numbers(*a, path, "breakpoints");
    auto rates = r.numbers(*a, path, "rates");
    if (b && rates) return r.guarded(path, [&] { return ArrivalProcess::piecewise(*b, *rates); });
  } else if (*kind == "sinusoidal") {
    auto base = r.number(*a, path, "base");
    auto amp = r.number(*a, path, "amplitude");
    auto freq = r.number(*a, path, "frequency");
    auto phase = r.number(*a, path, "phase", false);
    if (base && amp && freq) {
      return r.guarded(path, [&] { return ArrivalProcess::sinusoidal(*base, *amp, *freq, phase.value_or(0.0)); });
    }
  } else {
    r.fail(path + ".kind", "unknown arrival kind '" + *kind + "'");
  }
  return std::nullopt;
}

std::optional<BatchLaw> parse_batch(Reader& r, const json& doc, std::size_t J) {
  const json* b = r.field(doc, "$", "batch");
  if (!b) return std::nullopt;
  const std::string path = "batch";
  auto variant = r.text(*b, path, "variant");
  if (!variant) return std::nullopt;
  std::optional<BatchLaw> law;
  if (*variant == "constant") {
    if (const json* c = r.field(*b, path, "counts")) {
      if (auto counts = r.occupancy(*c, path + ".counts")) law = r.guarded(path, [&] { return BatchLaw::constant(*counts); });
    }
  } else if (*variant == "iid-assignment") {
    const json* size = r.field(*b, path, "size");
    auto size_law = size ? parse_family(r, *size, path + ".size") : std::nullopt;
    auto probs = r.numbers(*b, path, "entry_probs");
    if (size_law && probs) law = r.guarded(path, [&] { return BatchLaw::iid_assignment(*size_law, *probs); });
  } else if (*variant == "independent") {
    const json* m = r.field(*b, path, "marginals");
    if (m && !m->is_array()) r.fail(path + ".marginals", "expected an array");
    if (m && m->is_array()) {
      std::vector<UnivariateLaw> marginals;
      bool ok = true;
      for (std::size_t i = 0; i < m->size(); ++i) {
        auto u = parse_family(r, (*m)[i], path + ".marginals[" + std::to_string(i) + "]");
        ok = ok && u.has_value();
        if (u) marginals.push_back(*u);
      }
      if (ok) law = r.guarded(path, [&] { return BatchLaw::independent(marginals); });
    }
  } else if (*variant == "table") {
    const json* e = r.field(*b, path, "entries");
    if (e && !e->is_array()) r.fail(path + ".entries", "expected an array");
    if (e && e->is_array()) {
      std::vector<std::pair<Occupancy, double>> entries;
      bool ok = true;
      for (std::size_t i = 0; i < e->size(); ++i) {
        const std::string p = path + ".entries[" + std::to_string(i) + "]";
        const json* n = r.field((*e)[i], p, "n");
        auto occ = n ? r.occupancy(*n, p + ".n") : std::nullopt;
        auto prob = r.number((*e)[i], p, "prob");
        ok = ok && occ && prob;
        if (occ && prob) entries.emplace_back(*occ, *prob);
      }
      if (ok) law = r.guarded(path, [&] { return BatchLaw::table(entries); });
    }
  } else {
    r.fail(path + ".variant", "unknown batch variant '" + *variant + "'");
  }
  if (law && law->dim() != J) {
    r.fail(path, "dimension " + std::to_string(law->dim()) + " does not match J = " + std::to_string(J));
    return std::nullopt;
  }
  return law;
}

std::optional<ServiceLaw> parse_service(Reader& r, const json& obj, const std::string& path) {
  auto kind = r.text(obj, path, "kind");
  if (!kind) return std::nullopt;
  std::optional<ServiceLaw::Variant> v;
  if (*kind == "exponential") {
    if (auto rate = r.number(obj, path, "rate")) v = ExponentialService{*rate};
  } else if (*kind == "erlang") {
    auto shape = r.count(obj, path, "shape");
    auto rate = r.number(obj, path, "rate");
    if (shape && rate) v = ErlangService{static_cast<unsigned>(*shape), *rate};
  } else if (*kind == "deterministic") {
    if (auto d = r.number(obj, path, "delay")) v = DeterministicService{*d};
  } else if (*kind == "tabulated") {
    auto times = r.numbers(obj, path, "times");
    auto cdf = r.numbers(obj, path, "cdf");
    if (times && cdf) v = TabulatedService{*times, *cdf};
  } else if (*kind == "absorbing") {
    v = AbsorbingService{};
  } else {
    r.fail(path + ".kind", "unknown service kind '" + *kind + "'");
  }
  if (!v) return std::nullopt;
  return r.guarded(path, [&] { return ServiceLaw(*v); });
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : ValidationError("invalid configuration:\n" + join(problems)), problems_(std::move(problems)) {}

ModelConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  Reader r;
  ModelConfig cfg;
  if (!doc.is_object()) throw ConfigError({"$: expected a JSON object"});

  std::size_t J = 0;  // 0 when missing or invalid
  if (auto j = r.count(doc, "$", "J")) {
    if (*j == 0) r.fail("J", "must be >= 1");
    J = static_cast<std::size_t>(*j);
  }
  if (auto a = parse_arrival(r, doc)) cfg.model.arrival = *a;

  const json* nodes = r.field(doc, "$", "nodes");
  if (nodes && !nodes->is_array()) r.fail("nodes", "expected an array");
  if (nodes && nodes->is_array()) {
    if (J != 0 && nodes->size() != J) {
      r.fail("nodes", "has " + std::to_string(nodes->size()) + " entries, expected J = " + std::to_string(J));
    }
    for (std::size_t i = 0; i < nodes->size(); ++i) {
      const std::string path = "nodes[" + std::to_string(i) + "]";
      const json& n = (*nodes)[i];
      const json* s = r.field(n, path, "service");
      auto service = s ? parse_service(r, *s, path + ".service") : std::nullopt;
      ServiceNode node;
      if (service) node.service = *service;
      if (!node.service.is_absorbing()) {
        if (auto row = r.numbers(n, path, "routing")) node.routing = *row;
      }
      cfg.model.nodes.push_back(node);
    }
    try {
      validate_routing(cfg.model.nodes);
    } catch (const ValidationError& e) {
      std::string msg = e.what();
      for (std::size_t at = 0; at < msg.size();) {
        std::size_t end = msg.find("; ", at);
        if (end == std::string::npos) end = msg.size();
        std::string item = msg.substr(at, end - at);
        // Rows already reported as malformed above are not repeated.
        const bool duplicate = std::any_of(r.problems.begin(), r.problems.end(), [&](const std::string& p) {
          return p.rfind(item.substr(0, item.find(':')), 0) == 0;
        });
        if (!item.empty() && !duplicate) r.problems.push_back(item);
        at = end + 2;
      }
    }
  }

  if (J != 0) {
    if (auto b = parse_batch(r, doc, J)) cfg.model.batch = *b;
  }

  if (const json* k = r.field(doc, "$", "kernel", false)) {
    auto rep = r.text(*k, "kernel", "representation");
    if (rep) {
      if (*rep == "markov-uniformization") {
        cfg.kernel.representation = KernelRepresentation::markov_uniformization;
      } else if (*rep == "renewal-grid") {
        cfg.kernel.representation = KernelRepresentation::renewal_grid;
        if (auto e = r.number(*k, "kernel", "end", false)) cfg.kernel.grid_end = *e;
        if (auto n = r.count(*k, "kernel", "nodes", false)) {
          if (*n < 3 || *n % 2 == 0) r.fail("kernel.nodes", "must be odd and >= 3");
          cfg.kernel.grid_nodes = *n;
        }
      } else if (*rep == "tabulated") {
        cfg.kernel.representation = KernelRepresentation::tabulated;
        if (auto p = r.text(*k, "kernel", "path")) cfg.kernel.table = base_dir / *p;
      } else {
        r.fail("kernel.representation", "unknown representation '" + *rep + "'");
      }
    }
  } else {
    bool markov = std::all_of(cfg.model.nodes.begin(), cfg.model.nodes.end(), [](const ServiceNode& n) {
      return n.service.is_exponential() || n.service.is_absorbing();
    });
    cfg.kernel.representation = markov ? KernelRepresentation::markov_uniformization : KernelRepresentation::renewal_grid;
  }

  if (const json* a = r.field(doc, "$", "analysis", false)) {
    if (auto cap = r.count(*a, "analysis", "cap", false)) cfg.analysis.cap = static_cast<std::uint32_t>(*cap);
    if (auto rtol = r.number(*a, "analysis", "rtol", false)) {
      if (!(*rtol > 0.0)) r.fail("analysis.rtol", "must be > 0");
      cfg.analysis.rtol = *rtol;
    }
    if (auto seed = r.count(*a, "analysis", "seed", false)) cfg.analysis.seed = *seed;
    if (auto alpha = r.number(*a, "analysis", "power_tail_alpha", false)) {
      if (!(*alpha > 1.0)) r.fail("analysis.power_tail_alpha", "must be > 1");
      cfg.analysis.power_tail_alpha = *alpha;
    }
  }

  if (!r.problems.empty()) throw ConfigError(r.problems);
  return cfg;
}

ModelConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingFileError("config file not found: " + path.string());
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open config file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({"$: " + std::string(e.what())});
  }
  ModelConfig cfg = parse_config(doc, path.parent_path());
  cfg.source = path;
  return cfg;
}

OccupancyKernel build_kernel(const ModelConfig& config, double t_max) {
  const auto& nodes = config.model.nodes;
  switch (config.kernel.representation) {
    case KernelRepresentation::markov_uniformization:
      return build_markov_kernel(nodes);
    case KernelRepresentation::renewal_grid: {
      double end = config.kernel.grid_end > 0.0 ? config.kernel.grid_end : std::max(t_max, 1.0);
      if (end < t_max) {
        throw DomainError("kernel: renewal grid ends at " + std::to_string(end) + " before t = " + std::to_string(t_max));
      }
      return build_renewal_kernel(nodes, TimeGrid(end, config.kernel.grid_nodes));
    }
    case KernelRepresentation::tabulated: {
      std::ifstream in(config.kernel.table);
      if (!in) throw MissingFileError("kernel table not found: " + config.kernel.table.string());
      auto kernel = load_tabulated_kernel_csv(in);
      if (kernel.J() != config.model.J()) throw ValidationError("kernel table dimension does not match J");
      return kernel;
    }
  }
  throw ValidationError("kernel: unknown representation");
}

}  // namespace bqnet::cli
