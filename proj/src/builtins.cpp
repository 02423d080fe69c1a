#include "slowfast/builtins.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace slowfast {

std::string to_string(SystemKind k) { return k == SystemKind::Torus ? "torus" : "birkhoff"; }

int BuiltSystem::action_dim() const { return kind == SystemKind::Torus ? torus->d : birkhoff->n; }

const std::vector<BuiltinInfo>& builtin_catalog() {
  using nlohmann::json;
  static const std::vector<BuiltinInfo> catalog = {
      {"rotator", SystemKind::Torus,
       "torus system dI = (-gamma (I - c) - b cos^2(phi_1) I + A cos phi) dt + sigma dW, "
       "dphi = theta(I)/eps dt + sigma_phi dW', theta_k(I) = theta_k + theta_slope I_1",
       json{{"d", 1},
            {"theta", {1.0}},
            {"theta_slope", 0.0},
            {"gamma", 2.0},
            {"c", 0.0},
            {"b", 1.0},
            {"A", 0.0},
            {"sigma", 0.5},
            {"sigma_phi", 0.0}},
       false},
      {"ou", SystemKind::Birkhoff, "Ornstein-Uhlenbeck benchmark P = -gamma v, B = sigma Id, constant W = w",
       json{{"n", 1}, {"w", 1.0}, {"gamma", 1.0}, {"sigma", 1.0}}, false},
      {"constant-shift", SystemKind::Birkhoff,
       "coercive benchmark P_k = -v_k + A (1, 0), B = sigma Id, constant W = w",
       json{{"n", 1}, {"w", 1.0}, {"A", 1.0}, {"sigma", 1.0}}, false},
      {"radial-noise", SystemKind::Birkhoff,
       "P_k = -v_k + a (1 / (1 + (x_k/s)^2), 0), B_kk = (1 + beta r_k^2/(1 + r_k^2)) Id + eta diag(1/(1 + (x_k/s)^2), 0), "
       "W_k = w0_k + w1 I_k",
       json{{"n", 2},
            {"w0", {1.0, 1.4142135623730951}},
            {"w1", 0.5},
            {"a", 1.0},
            {"s", 1.5},
            {"beta", 0.5},
            {"eta", 0.3}},
       false},
      {"duffing-chain", SystemKind::Birkhoff,
       "chain of Duffing oscillators in normal-form coordinates, W_k = omega(I_k) from an ActionProfile, "
       "P_k = -gamma v_k + kappa (v_{k-1} - 2 v_k + v_{k+1}), B = sigma Id",
       json{{"n", 2}, {"gamma", 1.0}, {"kappa", 0.1}, {"sigma", 1.0}, {"profile", ""}}, true},
  };
  return catalog;
}

const BuiltinInfo& builtin_info(const std::string& name) {
  for (const auto& b : builtin_catalog())
    if (b.name == name) return b;
  std::string known;
  for (const auto& b : builtin_catalog()) known += (known.empty() ? "" : ", ") + b.name;
  throw PreconditionError("unknown builtin system '" + name + "' (known: " + known + ")");
}

namespace {

bool same_type(const nlohmann::json& def, const nlohmann::json& v) {
  if (def.is_number()) return v.is_number();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array() && std::all_of(v.begin(), v.end(), [](const auto& e) { return e.is_number(); });
  return def.type() == v.type();
}

nlohmann::json merge_params(const BuiltinInfo& info, const nlohmann::json& given) {
  nlohmann::json out = info.defaults;
  if (given.is_null()) return out;
  if (!given.is_object()) throw PreconditionError(info.name + ": parameters must be a table");
  for (auto it = given.begin(); it != given.end(); ++it) {
    if (!info.defaults.contains(it.key()))
      throw PreconditionError(info.name + ": unknown parameter '" + it.key() + "'");
    if (!same_type(info.defaults[it.key()], it.value()))
      throw PreconditionError(info.name + ": parameter '" + it.key() + "' has the wrong type");
    out[it.key()] = it.value();
  }
  return out;
}

int positive_int(const nlohmann::json& p, const std::string& key, const std::string& who) {
  const double v = p.at(key).get<double>();
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e6) throw PreconditionError(who + ": '" + key + "' must be a positive integer");
  return static_cast<int>(v);
}

double positive(const nlohmann::json& p, const std::string& key, const std::string& who) {
  const double v = p.at(key).get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) throw PreconditionError(who + ": '" + key + "' must be positive");
  return v;
}

double finite(const nlohmann::json& p, const std::string& key, const std::string& who) {
  const double v = p.at(key).get<double>();
  if (!std::isfinite(v)) throw PreconditionError(who + ": '" + key + "' must be finite");
  return v;
}

PhaseField scaled_identity(int dim, double sigma) {
  return [dim, sigma](ConstSpan, OutSpan out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (int i = 0; i < dim; ++i) out[static_cast<std::size_t>(i) * dim + i] = sigma;
  };
}

FrequencyMap constant_frequency(double w) {
  return [w](ConstSpan, OutSpan out) { std::fill(out.begin(), out.end(), w); };
}

TorusSystem make_rotator(const nlohmann::json& p) {
  const std::string who = "rotator";
  const int d = positive_int(p, "d", who);
  const std::vector<double> theta = p.at("theta").get<std::vector<double>>();
  if (theta.empty()) throw PreconditionError(who + ": 'theta' must be non-empty");
  const int n = static_cast<int>(theta.size());
  const double slope = finite(p, "theta_slope", who), gamma = finite(p, "gamma", who), c = finite(p, "c", who),
               b = finite(p, "b", who), A = finite(p, "A", who), sigma = positive(p, "sigma", who);
  const double sigma_phi = finite(p, "sigma_phi", who);
  TorusSystem sys;
  sys.name = "rotator";
  sys.d = d;
  sys.n = n;
  sys.d1 = d + n;
  sys.growth_q = 1.0;
  sys.theta = [theta, slope](ConstSpan I, OutSpan out) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = theta[k] + slope * I[0];
  };
  sys.drift_I = [gamma, c, b, A, n](ConstSpan I, ConstSpan phi, OutSpan out) {
    const double c1 = std::cos(phi[0]);
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = -gamma * (I[i] - c) - b * c1 * c1 * I[i] + A * std::cos(phi[i % n]);
  };
  sys.drift_phi = [](ConstSpan, ConstSpan, OutSpan out) { std::fill(out.begin(), out.end(), 0.0); };
  sys.disp_I = [d, sigma](ConstSpan, ConstSpan, OutSpan out) {
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t cols = out.size() / d;
    for (int i = 0; i < d; ++i) out[i * cols + i] = sigma;
  };
  sys.disp_phi = [d, n, sigma_phi](ConstSpan, ConstSpan, OutSpan out) {
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t cols = out.size() / n;
    for (int k = 0; k < n; ++k) out[k * cols + d + k] = sigma_phi;
  };
  return sys;
}

BirkhoffSystem make_ou(const nlohmann::json& p) {
  const std::string who = "ou";
  const int n = positive_int(p, "n", who);
  const double gamma = finite(p, "gamma", who), sigma = positive(p, "sigma", who), w = finite(p, "w", who);
  BirkhoffSystem sys;
  sys.name = "ou";
  sys.n = n;
  sys.n1 = n;
  sys.growth_q = 1.0;
  sys.frequencies = constant_frequency(w);
  sys.drift = [gamma](ConstSpan v, OutSpan out) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = -gamma * v[i];
  };
  sys.dispersion = scaled_identity(2 * n, sigma);
  return sys;
}

BirkhoffSystem make_constant_shift(const nlohmann::json& p) {
  const std::string who = "constant-shift";
  const int n = positive_int(p, "n", who);
  const double A = finite(p, "A", who), sigma = positive(p, "sigma", who), w = finite(p, "w", who);
  BirkhoffSystem sys;
  sys.name = "constant-shift";
  sys.n = n;
  sys.n1 = n;
  sys.growth_q = 1.0;
  sys.frequencies = constant_frequency(w);
  sys.drift = [A](ConstSpan v, OutSpan out) {
    for (std::size_t k = 0; 2 * k < v.size(); ++k) {
      out[2 * k] = -v[2 * k] + A;
      out[2 * k + 1] = -v[2 * k + 1];
    }
  };
  sys.dispersion = scaled_identity(2 * n, sigma);
  return sys;
}

BirkhoffSystem make_radial_noise(const nlohmann::json& p) {
  const std::string who = "radial-noise";
  const int n = positive_int(p, "n", who);
  const std::vector<double> w0 = p.at("w0").get<std::vector<double>>();
  if (static_cast<int>(w0.size()) != n) throw PreconditionError(who + ": 'w0' must have n entries");
  const double w1 = finite(p, "w1", who), a = finite(p, "a", who), s = positive(p, "s", who);
  const double beta = finite(p, "beta", who), eta = finite(p, "eta", who);
  if (!(beta >= 0.0) || !(eta >= 0.0)) throw PreconditionError(who + ": 'beta' and 'eta' must be >= 0");
  BirkhoffSystem sys;
  sys.name = "radial-noise";
  sys.n = n;
  sys.n1 = n;
  sys.growth_q = 1.0;
  sys.frequencies = [w0, w1](ConstSpan I, OutSpan out) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = w0[k] + w1 * I[k];
  };
  sys.drift = [a, s](ConstSpan v, OutSpan out) {
    for (std::size_t k = 0; 2 * k < v.size(); ++k) {
      const double x = v[2 * k] / s;
      out[2 * k] = -v[2 * k] + a / (1.0 + x * x);
      out[2 * k + 1] = -v[2 * k + 1];
    }
  };
  sys.dispersion = [n, s, beta, eta](ConstSpan v, OutSpan out) {
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t cols = 2 * static_cast<std::size_t>(n);
    for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
      const double r2 = v[2 * k] * v[2 * k] + v[2 * k + 1] * v[2 * k + 1];
      const double x = v[2 * k] / s;
      const double b = 1.0 + beta * r2 / (1.0 + r2);
      out[(2 * k) * cols + 2 * k] = b + eta / (1.0 + x * x);
      out[(2 * k + 1) * cols + 2 * k + 1] = b;
    }
  };
  return sys;
}

BirkhoffSystem make_duffing_chain(const nlohmann::json& p, std::shared_ptr<const ActionProfile> profile) {
  const std::string who = "duffing-chain";
  const int n = positive_int(p, "n", who);
  const double gamma = finite(p, "gamma", who), kappa = finite(p, "kappa", who), sigma = positive(p, "sigma", who);
  if (!profile)
    throw PreconditionError(who +
                            ": requires a prebuilt ActionProfile; set params.profile to a profile JSON written by "
                            "a normal-form-build scenario");
  const PhaseField coupling = [gamma, kappa](ConstSpan v, OutSpan out) {
    const std::size_t n = v.size() / 2;
    for (std::size_t k = 0; k < n; ++k)
      for (int c = 0; c < 2; ++c) {
        const double left = k > 0 ? v[2 * (k - 1) + c] : 0.0;
        const double right = k + 1 < n ? v[2 * (k + 1) + c] : 0.0;
        const double mid = v[2 * k + c];
        out[2 * k + c] = -gamma * mid + kappa * (left - 2.0 * mid + right);
      }
  };
  BirkhoffSystem sys = build_oscillator_chain(profile, n, coupling, scaled_identity(2 * n, sigma), n);
  sys.name = "duffing-chain";
  sys.growth_q = 1.0;
  return sys;
}

}  // namespace

std::shared_ptr<const ActionProfile> load_action_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open action profile '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError("action profile '" + path + "' is not valid JSON: " + e.what());
  }
  // A report from normal-form-build nests the profile under "profile".
  if (j.contains("profile") && j["profile"].is_object()) j = j["profile"];
  try {
    return std::make_shared<const ActionProfile>(ActionProfile::from_json(j));
  } catch (const DomainError& e) {
    throw PreconditionError("action profile '" + path + "': " + e.what());
  }
}

BuiltSystem make_builtin(const std::string& name, const nlohmann::json& params,
                         std::shared_ptr<const ActionProfile> profile) {
  const BuiltinInfo& info = builtin_info(name);
  BuiltSystem out;
  out.name = name;
  out.kind = info.kind;
  out.params = merge_params(info, params);
  if (name == "rotator") {
    out.torus = make_rotator(out.params);
  } else if (name == "ou") {
    out.birkhoff = make_ou(out.params);
  } else if (name == "constant-shift") {
    out.birkhoff = make_constant_shift(out.params);
  } else if (name == "radial-noise") {
    out.birkhoff = make_radial_noise(out.params);
  } else {
    if (!profile && !out.params.at("profile").get<std::string>().empty())
      profile = load_action_profile(out.params.at("profile").get<std::string>());
    out.birkhoff = make_duffing_chain(out.params, profile);
    out.profile = profile;
  }
  return out;
}

}  // namespace slowfast
