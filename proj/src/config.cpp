#include "slowfast/config.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace slowfast {

namespace {

nlohmann::json to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = to_json(v);
    return j;
  }
  if (const auto* a = node.as_array()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : *a) j.push_back(to_json(v));
    return j;
  }
  if (const auto* s = node.as_string()) return s->get();
  if (const auto* i = node.as_integer()) return i->get();
  if (const auto* f = node.as_floating_point()) return f->get();
  if (const auto* b = node.as_boolean()) return b->get();
  std::ostringstream os;
  node.visit([&os](const auto& v) {
    if constexpr (toml::is_date<decltype(v)> || toml::is_time<decltype(v)> || toml::is_date_time<decltype(v)>) os << v;
  });
  return os.str();
}

// Per-experiment tables and their defaults.
const nlohmann::json& section_defaults(const std::string& section) {
  using nlohmann::json;
  static const json table = {
      {"convergence", json::object()},
      {"mixing", {{"alt_state", json::array()}, {"occupation_radius", 1.0}}},
      {"uniform", json::object()},
      {"exit", {{"radius", 3.0}, {"s_bar", 0.1}}},
      {"lifting", {{"block", 0}, {"delta", 0.1}}},
      {"resonance",
       {{"windows", {10.0, 100.0, 1000.0}},
        {"delta", 0.1},
        {"radius", 1.0},
        {"samples", 2000},
        {"angle_points", 8},
        {"k_max", 5},
        {"tol", 1e-6}}},
      {"normal_form", {{"hamiltonian", "duffing"}, {"params", json::object()}, {"levels", 64}, {"check_points", 200}}},
  };
  return table.at(section);
}

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a table");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

double get_number(const nlohmann::json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where + "." + key + " must be finite");
  return x;
}

std::uint64_t get_count(const nlohmann::json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() && !(v.is_number_float() && v.get<double>() == std::floor(v.get<double>())))
    throw ConfigError(where + "." + key + " must be an integer");
  if (v.is_number_float() ? v.get<double>() < 0 : v.get<std::int64_t>() < 0)
    throw ConfigError(where + "." + key + " must be >= 0");
  return v.is_number_float() ? static_cast<std::uint64_t>(v.get<double>()) : v.get<std::uint64_t>();
}

std::string get_string(const nlohmann::json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
  return v.get<std::string>();
}

std::vector<double> get_vector(const nlohmann::json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number() || !std::isfinite(e.get<double>()))
      throw ConfigError(where + "." + key + " must be an array of finite numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

bool is_multiple(double value, double step) {
  const double k = std::round(value / step);
  return k >= 1.0 && std::abs(k * step - value) <= 1e-9 * value;
}

}  // namespace

nlohmann::json parse_toml(const std::string& text, const std::string& origin) {
  try {
    const toml::table t = toml::parse(text, origin);
    return to_json(t);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << origin << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw ConfigError(os.str());
  }
}

nlohmann::json load_toml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_toml(ss.str(), path);
}

std::string experiment_section(const std::string& experiment) {
  if (experiment == "averaging-convergence") return "convergence";
  if (experiment == "stationary-mixing") return "mixing";
  if (experiment == "uniform-in-time") return "uniform";
  if (experiment == "exit-time") return "exit";
  if (experiment == "lifting-diagnostic") return "lifting";
  if (experiment == "resonance-scan") return "resonance";
  if (experiment == "normal-form-build") return "normal_form";
  std::string known;
  for (const auto& k : experiment_kinds()) known += (known.empty() ? "" : ", ") + k;
  throw ConfigError("unknown experiment '" + experiment + "' (known: " + known + ")");
}

TorusQuadrature QuadratureSpec::build(int n) const {
  if (kind == "default") return TorusQuadrature::default_for(n);
  if (kind == "tensor-trapezoid") return TorusQuadrature::tensor_trapezoid(n, points_per_dim);
  return TorusQuadrature::rank1_lattice(n, lattice_size);
}

nlohmann::json QuadratureSpec::to_json() const {
  return {{"kind", kind}, {"points_per_dim", points_per_dim}, {"lattice_size", lattice_size}};
}

DistanceOptions DistanceSpec::options(std::uint64_t seed, std::size_t parallelism) const {
  DistanceOptions o;
  o.n_slices = slices;
  o.seed = seed;
  o.bootstrap = bootstrap;
  o.support_cap = support_cap;
  o.parallelism = parallelism;
  o.reduction = reduction;
  return o;
}

nlohmann::json DistanceSpec::to_json() const {
  return {{"slices", slices}, {"bootstrap", bootstrap}, {"support_cap", support_cap}, {"reduction", to_string(reduction)}};
}

std::size_t ScenarioConfig::record_stride() const {
  const double every = record_every > 0.0 ? record_every : horizon;
  return static_cast<std::size_t>(std::llround(every / step));
}

ScenarioConfig scenario_from_json(const nlohmann::json& doc) {
  ScenarioConfig c;
  c.source = doc;
  if (!doc.is_object()) throw ConfigError("config must be a table");
  if (!doc.contains("experiment")) throw ConfigError("missing key 'experiment'");
  c.experiment = get_string(doc, "experiment", "config");
  const std::string section = experiment_section(c.experiment);
  check_keys(doc, {"experiment", "seed", "output", "threads", "system", "run", "quadrature", "distance", section},
             "the top level");
  if (doc.contains("seed")) c.seed = get_count(doc, "seed", "config");
  if (doc.contains("output")) c.output_dir = get_string(doc, "output", "config");
  if (doc.contains("threads")) {
    const auto t = get_count(doc, "threads", "config");
    if (t < 1) throw ConfigError("threads must be >= 1");
    c.threads = t;
  }

  const bool needs_system = c.experiment != "normal-form-build";
  if (needs_system) {
    if (!doc.contains("system")) throw ConfigError("missing table [system]");
    const auto& s = doc["system"];
    check_keys(s, {"name", "params"}, "[system]");
    if (!s.contains("name")) throw ConfigError("missing key system.name");
    c.system = get_string(s, "name", "system");
    c.system_params = s.value("params", nlohmann::json::object());
    if (!c.system_params.is_object()) throw ConfigError("system.params must be a table");
  } else if (doc.contains("system")) {
    throw ConfigError("normal-form-build takes its Hamiltonian from [normal_form], not [system]");
  }

  const nlohmann::json run = doc.value("run", nlohmann::json::object());
  check_keys(run,
             {"eps_grid", "horizon", "step", "record_every", "n_paths", "dump_paths", "scheme", "boundary", "init_actions",
              "init_angles", "init_state"},
             "[run]");
  if (run.contains("eps_grid")) c.eps_grid = get_vector(run, "eps_grid", "run");
  const bool needs_eps = c.experiment != "normal-form-build" && c.experiment != "resonance-scan";
  if (needs_eps && c.eps_grid.empty()) throw ConfigError("run.eps_grid must list at least one epsilon");
  for (double e : c.eps_grid)
    if (!(e > 0.0 && e <= 1.0)) throw ConfigError("run.eps_grid entries must lie in (0, 1]");
  if (run.contains("horizon")) c.horizon = get_number(run, "horizon", "run");
  if (run.contains("step")) c.step = get_number(run, "step", "run");
  if (run.contains("record_every")) c.record_every = get_number(run, "record_every", "run");
  if (run.contains("n_paths")) c.n_paths = get_count(run, "n_paths", "run");
  if (run.contains("dump_paths")) c.dump_paths = get_count(run, "dump_paths", "run");
  if (!(c.step > 0.0)) throw ConfigError("run.step must be positive");
  if (!(c.horizon > 0.0)) throw ConfigError("run.horizon must be positive");
  if (!is_multiple(c.horizon, c.step)) throw ConfigError("run.horizon must be a positive multiple of run.step");
  if (c.record_every < 0.0) throw ConfigError("run.record_every must be >= 0");
  if (c.record_every > 0.0 && (!is_multiple(c.record_every, c.step) || c.record_every > c.horizon * (1 + 1e-12)))
    throw ConfigError("run.record_every must be a multiple of run.step not exceeding run.horizon");
  if (c.n_paths < 1) throw ConfigError("run.n_paths must be >= 1");
  try {
    if (run.contains("scheme")) c.scheme = parse_scheme(get_string(run, "scheme", "run"));
    if (run.contains("boundary")) c.boundary = parse_boundary_policy(get_string(run, "boundary", "run"));
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("run: ") + e.what());
  }
  if (run.contains("init_actions")) c.init_actions = get_vector(run, "init_actions", "run");
  if (run.contains("init_angles")) c.init_angles = get_vector(run, "init_angles", "run");
  if (run.contains("init_state")) c.init_state = get_vector(run, "init_state", "run");

  if (doc.contains("quadrature")) {
    const auto& q = doc["quadrature"];
    check_keys(q, {"kind", "points_per_dim", "lattice_size"}, "[quadrature]");
    if (q.contains("kind")) c.quadrature.kind = get_string(q, "kind", "quadrature");
    if (c.quadrature.kind != "default" && c.quadrature.kind != "tensor-trapezoid" && c.quadrature.kind != "rank1-lattice")
      throw ConfigError("quadrature.kind must be default, tensor-trapezoid or rank1-lattice");
    if (q.contains("points_per_dim")) c.quadrature.points_per_dim = static_cast<int>(get_count(q, "points_per_dim", "quadrature"));
    if (q.contains("lattice_size")) c.quadrature.lattice_size = static_cast<int>(get_count(q, "lattice_size", "quadrature"));
    if (c.quadrature.points_per_dim < 1 || c.quadrature.lattice_size < 1)
      throw ConfigError("quadrature sizes must be >= 1");
  }

  if (doc.contains("distance")) {
    const auto& d = doc["distance"];
    check_keys(d, {"slices", "bootstrap", "support_cap", "reduction"}, "[distance]");
    if (d.contains("slices")) c.distance.slices = get_count(d, "slices", "distance");
    if (d.contains("bootstrap")) c.distance.bootstrap = get_count(d, "bootstrap", "distance");
    if (d.contains("support_cap")) c.distance.support_cap = get_count(d, "support_cap", "distance");
    if (d.contains("reduction")) {
      try {
        c.distance.reduction = parse_slice_reduction(get_string(d, "reduction", "distance"));
      } catch (const std::exception& e) {
        throw ConfigError(std::string("distance: ") + e.what());
      }
    }
    if (c.distance.slices < 1) throw ConfigError("distance.slices must be >= 1");
  }

  c.section = section_defaults(section);
  if (doc.contains(section)) {
    const auto& s = doc[section];
    std::set<std::string> allowed;
    for (auto it = c.section.begin(); it != c.section.end(); ++it) allowed.insert(it.key());
    check_keys(s, allowed, "[" + section + "]");
    for (auto it = s.begin(); it != s.end(); ++it) {
      const auto& def = c.section[it.key()];
      const bool ok = def.is_number() ? it.value().is_number()
                      : def.is_array() ? it.value().is_array()
                                       : def.type() == it.value().type();
      if (!ok) throw ConfigError(section + "." + it.key() + " has the wrong type");
      c.section[it.key()] = it.value();
    }
  }
  return c;
}

ScenarioConfig load_scenario(const std::string& path) { return scenario_from_json(load_toml_file(path)); }

}  // namespace slowfast
