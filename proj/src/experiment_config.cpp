#include "uglms/experiment_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace uglms {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || trim(v.substr(pos)).size() != 0) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || trim(v.substr(pos)).size() != 0) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const long long x = to_integer(key, v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError(key + ": value out of range");
  }
  return static_cast<int>(x);
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
  const long long x = to_integer(key, v);
  if (x < 0) throw ConfigError(key + ": seeds must be non-negative");
  return static_cast<std::uint64_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string s = lower(v);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
  return out;
}

std::vector<int> to_ints(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& s : split_list(v)) out.push_back(to_int(key, s));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string join(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string join(const std::vector<std::string>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << x;
  return os.str();
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Field {
  std::string key;
  Setter set;
  Getter get;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"experiment", [](auto& c, auto&, auto& v) { c.experiment = parse_experiment_kind(v); },
       [](auto& c) { return to_string(c.experiment); }},
      {"n_bits", [](auto& c, auto& k, auto& v) { c.n_bits = to_int(k, v); }, [](auto& c) { return std::to_string(c.n_bits); }},
      {"sigma_unit", [](auto& c, auto& k, auto& v) { c.sigma_unit = to_double(k, v); }, [](auto& c) { return num(c.sigma_unit); }},
      {"noise_sigma", [](auto& c, auto& k, auto& v) { c.noise_sigma = to_double(k, v); },
       [](auto& c) { return num(c.noise_sigma); }},
      {"carrier", [](auto& c, auto& k, auto& v) { c.carrier = to_doubles(k, v); }, [](auto& c) { return join(c.carrier); }},
      {"carrier_offset", [](auto& c, auto& k, auto& v) { c.carrier_offset = to_double(k, v); },
       [](auto& c) { return num(c.carrier_offset); }},
      {"carrier_bow", [](auto& c, auto& k, auto& v) { c.carrier_bow = to_double(k, v); },
       [](auto& c) { return num(c.carrier_bow); }},
      {"device_seed", [](auto& c, auto& k, auto& v) { c.device_seed = to_seed(k, v); },
       [](auto& c) { return std::to_string(c.device_seed); }},
      {"vary_device", [](auto& c, auto& k, auto& v) { c.vary_device = to_bool(k, v); },
       [](auto& c) { return std::string(c.vary_device ? "true" : "false"); }},
      {"R",
       [](auto& c, auto& k, auto& v) {
         if (lower(v) == "auto") {
           c.R.reset();
         } else {
           c.R = to_double(k, v);
         }
       },
       [](auto& c) { return c.R ? num(*c.R) : std::string("auto"); }},
      {"r_scale", [](auto& c, auto& k, auto& v) { c.r_scale = to_double(k, v); }, [](auto& c) { return num(c.r_scale); }},
      {"alpha", [](auto& c, auto& k, auto& v) { c.alpha = to_double(k, v); }, [](auto& c) { return num(c.alpha); }},
      {"tau", [](auto& c, auto& k, auto& v) { c.tau = to_double(k, v); }, [](auto& c) { return num(c.tau); }},
      {"epsilon", [](auto& c, auto& k, auto& v) { c.epsilon = to_double(k, v); }, [](auto& c) { return num(c.epsilon); }},
      {"n_term", [](auto& c, auto& k, auto& v) { c.n_term = to_int(k, v); }, [](auto& c) { return std::to_string(c.n_term); }},
      {"update_mode", [](auto& c, auto&, auto& v) { c.update_mode = parse_update_mode(v); },
       [](auto& c) { return to_string(c.update_mode); }},
      {"inflation_mode", [](auto& c, auto&, auto& v) { c.inflation_mode = parse_inflation_mode(v); },
       [](auto& c) { return to_string(c.inflation_mode); }},
      {"poly_order", [](auto& c, auto& k, auto& v) { c.poly_order = to_int(k, v); },
       [](auto& c) { return std::to_string(c.poly_order); }},
      {"expected_unit_sigma",
       [](auto& c, auto& k, auto& v) {
         if (lower(v) == "auto") {
           c.expected_unit_sigma.reset();
         } else {
           c.expected_unit_sigma = to_double(k, v);
         }
       },
       [](auto& c) { return c.expected_unit_sigma ? num(*c.expected_unit_sigma) : std::string("auto"); }},
      {"p0_mismatch_scale", [](auto& c, auto& k, auto& v) { c.p0_mismatch_scale = to_double(k, v); },
       [](auto& c) { return num(c.p0_mismatch_scale); }},
      {"p0_poly_scale", [](auto& c, auto& k, auto& v) { c.p0_poly_scale = to_double(k, v); },
       [](auto& c) { return num(c.p0_poly_scale); }},
      {"exact_check_every", [](auto& c, auto& k, auto& v) { c.exact_check_every = to_int(k, v); },
       [](auto& c) { return std::to_string(c.exact_check_every); }},
      {"signed_trace_delta", [](auto& c, auto& k, auto& v) { c.signed_trace_delta = to_bool(k, v); },
       [](auto& c) { return std::string(c.signed_trace_delta ? "true" : "false"); }},
      {"stop",
       [](auto& c, auto& k, auto& v) {
         const auto s = lower(v);
         if (s == "fixed" || s == "fixed-iterations") {
           c.stop = StopRule::kFixedIterations;
         } else if (s == "trace" || s == "trace-termination") {
           c.stop = StopRule::kTraceTermination;
         } else {
           throw ConfigError(k + ": expected fixed|trace, got '" + v + "'");
         }
       },
       [](auto& c) { return std::string(c.stop == StopRule::kFixedIterations ? "fixed" : "trace"); }},
      {"samples", [](auto& c, auto& k, auto& v) { c.samples = to_int(k, v); }, [](auto& c) { return std::to_string(c.samples); }},
      {"window_span",
       [](auto& c, auto& k, auto& v) {
         if (lower(v) == "auto") {
           c.window_span.reset();
         } else {
           c.window_span = to_double(k, v);
         }
       },
       [](auto& c) { return c.window_span ? num(*c.window_span) : std::string("auto"); }},
      {"runs", [](auto& c, auto& k, auto& v) { c.runs = to_int(k, v); }, [](auto& c) { return std::to_string(c.runs); }},
      {"iterations",
       [](auto& c, auto& k, auto& v) {
         if (lower(v) == "auto") {
           c.iterations.reset();
         } else {
           c.iterations = to_int(k, v);
         }
       },
       [](auto& c) { return c.iterations ? std::to_string(*c.iterations) : std::string("auto"); }},
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = to_seed(k, v); }, [](auto& c) { return std::to_string(c.seed); }},
      {"out", [](auto& c, auto&, auto& v) { c.out_dir = v; }, [](auto& c) { return c.out_dir; }},
      {"workers", [](auto& c, auto& k, auto& v) { c.workers = to_int(k, v); }, [](auto& c) { return std::to_string(c.workers); }},
      {"error_every", [](auto& c, auto& k, auto& v) { c.error_every = to_int(k, v); },
       [](auto& c) { return std::to_string(c.error_every); }},
      {"alphas", [](auto& c, auto& k, auto& v) { c.alphas = to_doubles(k, v); }, [](auto& c) { return join(c.alphas); }},
      {"taus", [](auto& c, auto& k, auto& v) { c.taus = to_doubles(k, v); }, [](auto& c) { return join(c.taus); }},
      {"epsilons", [](auto& c, auto& k, auto& v) { c.epsilons = to_doubles(k, v); }, [](auto& c) { return join(c.epsilons); }},
      {"resolutions", [](auto& c, auto& k, auto& v) { c.resolutions = to_ints(k, v); },
       [](auto& c) { return join(c.resolutions); }},
      {"variants", [](auto& c, auto&, auto& v) { c.variants = split_list(v); }, [](auto& c) { return join(c.variants); }},
  };
  return table;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kSingle: return "single";
    case ExperimentKind::kConvergence: return "convergence";
    case ExperimentKind::kHeatmap: return "heatmap";
    case ExperimentKind::kEpsilon: return "epsilon";
    case ExperimentKind::kTiming: return "timing";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::kSingle, ExperimentKind::kConvergence, ExperimentKind::kHeatmap,
                 ExperimentKind::kEpsilon, ExperimentKind::kTiming}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown experiment '" + s + "' (single|convergence|heatmap|epsilon|timing)");
}

int ExperimentConfig::iteration_budget() const {
  if (iterations) return *iterations;
  return (experiment == ExperimentKind::kConvergence || experiment == ExperimentKind::kEpsilon) ? 1000 : 200;
}

CarrierPolynomial quadratic_carrier(int n_bits, double offset, double bow) {
  const double c_max = static_cast<double>(AdcGeometry(n_bits).n_edges());
  // Edges c + b c^2 deviate from their endpoint line by b (c - 1)(c - c_max),
  // peaking at h = ((c_max - 1) / 2)^2 in the middle; dividing by the endpoint
  // step 1 + b (c_max + 1) and solving for a peak of `bow` gives b.
  const double h = 0.25 * (c_max - 1.0) * (c_max - 1.0);
  const double denom = h + bow * (c_max + 1.0);
  const double b2 = (c_max > 2.0 && denom != 0.0) ? -bow / denom : 0.0;
  return CarrierPolynomial({offset, 0.0, b2});
}

CarrierPolynomial ExperimentConfig::carrier_polynomial() const {
  if (!carrier.empty()) return CarrierPolynomial(carrier);
  if (carrier_bow != 0.0) return quadratic_carrier(n_bits, carrier_offset, carrier_bow);
  return CarrierPolynomial({carrier_offset});
}

EstimatorConfig ExperimentConfig::estimator() const {
  EstimatorConfig e;
  e.measurement_variance = R;
  if (!R && r_scale > 0.0 && noise_sigma > 0.0) e.measurement_variance = r_scale * noise_sigma * noise_sigma;
  e.alpha = alpha;
  e.tau = tau;
  e.epsilon = epsilon;
  e.n_term = n_term;
  e.max_iterations = iteration_budget();
  e.update_mode = update_mode;
  e.inflation_mode = inflation_mode;
  e.poly_order = poly_order;
  e.expected_unit_sigma = expected_unit_sigma.value_or(sigma_unit);
  e.p0_mismatch_scale = p0_mismatch_scale;
  e.p0_poly_scale = p0_poly_scale;
  e.exact_check_every = exact_check_every;
  e.signed_trace_delta = signed_trace_delta;
  return e;
}

SweepConfig ExperimentConfig::sweep() const {
  if (window_span) return SweepConfig{samples, *window_span};
  return SweepConfig::with_default_span(samples, noise_sigma);
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      try {
        f.set(*this, key, trim(value));
      } catch (const ConfigError&) {
        throw;
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key + ": " + e.what());
      }
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void ExperimentConfig::validate() const {
  try {
    AdcGeometry geometry(n_bits);
    (void)geometry;
    (void)carrier_polynomial();
    estimator().validate();
    sweep().validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(sigma_unit >= 0.0)) throw ConfigError("sigma_unit must be >= 0");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
  if (!(r_scale >= 0.0)) throw ConfigError("r_scale must be >= 0");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (error_every < 0) throw ConfigError("error_every must be >= 0");
  if (experiment == ExperimentKind::kConvergence && runs < 2) throw ConfigError("convergence study needs runs >= 2");
  if (experiment == ExperimentKind::kHeatmap && (alphas.empty() || taus.empty())) {
    throw ConfigError("heatmap needs non-empty alphas and taus");
  }
  if (experiment == ExperimentKind::kEpsilon && epsilons.empty()) throw ConfigError("epsilon study needs epsilons");
  for (double a : alphas) {
    if (!(a > 1.0)) throw ConfigError("alphas must be > 1");
  }
  for (double t : taus) {
    if (!(t > 0.0)) throw ConfigError("taus must be > 0");
  }
  for (double e : epsilons) {
    if (!(e > 0.0)) throw ConfigError("epsilons must be > 0");
  }
  for (int b : resolutions) {
    if (b < kMinBits || b > kMaxBits) throw ConfigError("resolutions must lie in [1, 24]");
  }
  for (const auto& v : variants) {
    if (v != "dense-baseline" && v != "rank1" && v != "rank1+poly") {
      throw ConfigError("unknown timing variant '" + v + "' (dense-baseline|rank1|rank1+poly)");
    }
  }
}

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return k;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::string key;
    std::string value;
    if (const auto eq = line.find('='); eq != std::string::npos) {
      key = trim(line.substr(0, eq));
      value = trim(line.substr(eq + 1));
    } else {
      const auto sp = line.find_first_of(" \t");
      if (sp == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": missing value for '" + line + "'");
      key = line.substr(0, sp);
      value = trim(line.substr(sp));
    }
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  for (const auto& f : fields()) {
    const std::string v = f.get(*this);
    if (!v.empty()) os << f.key << " = " << v << '\n';
  }
  return os.str();
}

}  // namespace uglms
