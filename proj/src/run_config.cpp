#include "pkinn/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pkinn/errors.hpp"

namespace pkinn {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + value + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long out = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key,
                                const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    out.push_back(static_cast<int>(parse_int(key, trim(cell))));
  }
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fmt(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace

void set_config_value(RunConfig& c, const std::string& key,
                      const std::string& value) {
  using Setter = std::function<void(RunConfig&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"seed", [](RunConfig& c, const std::string& v) {
         c.seed = static_cast<std::uint64_t>(parse_int("seed", v));
       }},
      {"out", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
      {"noise", [](RunConfig& c, const std::string& v) { c.noise = v; }},
      {"t_start", [](RunConfig& c, const std::string& v) {
         c.t_start = parse_double("t_start", v);
       }},
      {"t_end", [](RunConfig& c, const std::string& v) {
         c.t_end = parse_double("t_end", v);
       }},
      {"n_points", [](RunConfig& c, const std::string& v) {
         c.n_points = static_cast<int>(parse_int("n_points", v));
       }},
      {"t_split", [](RunConfig& c, const std::string& v) {
         c.t_split = parse_double("t_split", v);
       }},
      {"substeps", [](RunConfig& c, const std::string& v) {
         c.substeps = static_cast<int>(parse_int("substeps", v));
       }},
      {"init_x0", [](RunConfig& c, const std::string& v) {
         c.init_x0 = parse_double("init_x0", v);
       }},
      {"init_x1", [](RunConfig& c, const std::string& v) {
         c.init_x1 = parse_double("init_x1", v);
       }},
      {"init_x2", [](RunConfig& c, const std::string& v) {
         c.init_x2 = parse_double("init_x2", v);
       }},
      {"noise_as_variance", [](RunConfig& c, const std::string& v) {
         c.noise_as_variance = parse_bool("noise_as_variance", v);
       }},
      {"pk_ka", [](RunConfig& c, const std::string& v) {
         c.pk.ka = parse_double("pk_ka", v);
       }},
      {"pk_cl", [](RunConfig& c, const std::string& v) {
         c.pk.cl = parse_double("pk_cl", v);
       }},
      {"pk_q", [](RunConfig& c, const std::string& v) {
         c.pk.q = parse_double("pk_q", v);
       }},
      {"pk_v1", [](RunConfig& c, const std::string& v) {
         c.pk.v1 = parse_double("pk_v1", v);
       }},
      {"pk_v2", [](RunConfig& c, const std::string& v) {
         c.pk.v2 = parse_double("pk_v2", v);
       }},
      {"mode", [](RunConfig& c, const std::string& v) { c.mode = v; }},
      {"epochs", [](RunConfig& c, const std::string& v) {
         c.epochs = static_cast<int>(parse_int("epochs", v));
       }},
      {"learning_rate", [](RunConfig& c, const std::string& v) {
         c.learning_rate = parse_double("learning_rate", v);
       }},
      {"lambda_data", [](RunConfig& c, const std::string& v) {
         c.lambda_data = parse_double("lambda_data", v);
       }},
      {"lambda_ode", [](RunConfig& c, const std::string& v) {
         c.lambda_ode = parse_double("lambda_ode", v);
       }},
      {"lambda_ic", [](RunConfig& c, const std::string& v) {
         c.lambda_ic = parse_double("lambda_ic", v);
       }},
      {"x_hidden", [](RunConfig& c, const std::string& v) {
         c.x_hidden = parse_int_list("x_hidden", v);
       }},
      {"f_hidden", [](RunConfig& c, const std::string& v) {
         c.f_hidden = parse_int_list("f_hidden", v);
       }},
      {"method", [](RunConfig& c, const std::string& v) { c.method = v; }},
      {"library_degree", [](RunConfig& c, const std::string& v) {
         c.library_degree = static_cast<int>(parse_int("library_degree", v));
       }},
      {"stlsq_threshold", [](RunConfig& c, const std::string& v) {
         c.stlsq_threshold = parse_double("stlsq_threshold", v);
       }},
      {"stlsq_max_iter", [](RunConfig& c, const std::string& v) {
         c.stlsq_max_iter = static_cast<int>(parse_int("stlsq_max_iter", v));
       }},
      {"stlsq_ridge", [](RunConfig& c, const std::string& v) {
         c.stlsq_ridge = parse_double("stlsq_ridge", v);
       }},
      {"gp_population", [](RunConfig& c, const std::string& v) {
         c.gp_population = static_cast<int>(parse_int("gp_population", v));
       }},
      {"gp_generations", [](RunConfig& c, const std::string& v) {
         c.gp_generations = static_cast<int>(parse_int("gp_generations", v));
       }},
      {"gp_parsimony", [](RunConfig& c, const std::string& v) {
         c.gp_parsimony = parse_double("gp_parsimony", v);
       }},
      {"gp_max_size", [](RunConfig& c, const std::string& v) {
         c.gp_max_size = static_cast<int>(parse_int("gp_max_size", v));
       }},
      {"gp_crossover", [](RunConfig& c, const std::string& v) {
         c.gp_crossover = parse_double("gp_crossover", v);
       }},
      {"gp_mutation", [](RunConfig& c, const std::string& v) {
         c.gp_mutation = parse_double("gp_mutation", v);
       }},
      {"sr_target", [](RunConfig& c, const std::string& v) {
         c.sr_target = v;
       }},
      {"deriv_source", [](RunConfig& c, const std::string& v) {
         c.deriv_source = v;
       }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("config: unknown key '" + key + "'");
  it->second(c, value);
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  RunConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    }
    set_config_value(config, trim(line.substr(0, eq)),
                     trim(line.substr(eq + 1)));
  }
  return config;
}

std::string render_config(const RunConfig& c) {
  std::ostringstream out;
  out << "seed=" << c.seed << "\n";
  out << "out=" << c.out_dir << "\n";
  out << "noise=" << c.noise << "\n";
  out << "t_start=" << fmt(c.t_start) << "\n";
  out << "t_end=" << fmt(c.t_end) << "\n";
  out << "n_points=" << c.n_points << "\n";
  out << "t_split=" << fmt(c.t_split) << "\n";
  out << "substeps=" << c.substeps << "\n";
  out << "init_x0=" << fmt(c.init_x0) << "\n";
  out << "init_x1=" << fmt(c.init_x1) << "\n";
  out << "init_x2=" << fmt(c.init_x2) << "\n";
  out << "noise_as_variance=" << (c.noise_as_variance ? "true" : "false")
      << "\n";
  out << "pk_ka=" << fmt(c.pk.ka) << "\n";
  out << "pk_cl=" << fmt(c.pk.cl) << "\n";
  out << "pk_q=" << fmt(c.pk.q) << "\n";
  out << "pk_v1=" << fmt(c.pk.v1) << "\n";
  out << "pk_v2=" << fmt(c.pk.v2) << "\n";
  out << "mode=" << c.mode << "\n";
  out << "epochs=" << c.epochs << "\n";
  out << "learning_rate=" << fmt(c.learning_rate) << "\n";
  out << "lambda_data=" << fmt(c.lambda_data) << "\n";
  out << "lambda_ode=" << fmt(c.lambda_ode) << "\n";
  out << "lambda_ic=" << fmt(c.lambda_ic) << "\n";
  out << "x_hidden=" << fmt(c.x_hidden) << "\n";
  out << "f_hidden=" << fmt(c.f_hidden) << "\n";
  out << "method=" << c.method << "\n";
  out << "library_degree=" << c.library_degree << "\n";
  out << "stlsq_threshold=" << fmt(c.stlsq_threshold) << "\n";
  out << "stlsq_max_iter=" << c.stlsq_max_iter << "\n";
  out << "stlsq_ridge=" << fmt(c.stlsq_ridge) << "\n";
  out << "gp_population=" << c.gp_population << "\n";
  out << "gp_generations=" << c.gp_generations << "\n";
  out << "gp_parsimony=" << fmt(c.gp_parsimony) << "\n";
  out << "gp_max_size=" << c.gp_max_size << "\n";
  out << "gp_crossover=" << fmt(c.gp_crossover) << "\n";
  out << "gp_mutation=" << fmt(c.gp_mutation) << "\n";
  out << "sr_target=" << c.sr_target << "\n";
  out << "deriv_source=" << c.deriv_source << "\n";
  return out.str();
}

void validate(const RunConfig& c) {
  auto expect = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  expect(c.noise == "low" || c.noise == "medium" || c.noise == "high" ||
             c.noise == "all",
         "noise must be low|medium|high|all");
  expect(c.mode == "blackbox" || c.mode == "parametric",
         "mode must be blackbox|parametric");
  expect(c.method == "stlsq" || c.method == "gp" || c.method == "both",
         "method must be stlsq|gp|both");
  expect(c.sr_target == "f" || c.sr_target == "derivative",
         "sr_target must be f|derivative");
  expect(c.deriv_source == "autodiff" || c.deriv_source == "data",
         "deriv_source must be autodiff|data");
  expect(c.n_points >= 2, "n_points must be >= 2");
  expect(c.t_end > c.t_start, "t_end must exceed t_start");
  expect(c.t_split > c.t_start && c.t_split <= c.t_end,
         "t_split must lie inside (t_start, t_end]");
  expect(c.substeps >= 1, "substeps must be >= 1");
  expect(c.epochs >= 1, "epochs must be >= 1");
  expect(c.learning_rate > 0, "learning_rate must be positive");
  expect(c.lambda_data > 0 && c.lambda_ode > 0 && c.lambda_ic > 0,
         "loss weights must be positive");
  expect(c.library_degree == 1 || c.library_degree == 2,
         "library_degree must be 1 or 2");
  expect(c.stlsq_threshold > 0, "stlsq_threshold must be positive");
  expect(c.stlsq_max_iter >= 1, "stlsq_max_iter must be >= 1");
  expect(c.stlsq_ridge >= 0, "stlsq_ridge must be >= 0");
  expect(c.gp_population >= 2, "gp_population must be >= 2");
  expect(c.gp_generations >= 1, "gp_generations must be >= 1");
  expect(c.gp_max_size >= 1, "gp_max_size must be >= 1");
  expect(c.gp_crossover >= 0 && c.gp_crossover <= 1 && c.gp_mutation >= 0 &&
             c.gp_mutation <= 1 &&
             c.gp_crossover + c.gp_mutation <= 1.0,
         "gp rates must lie in [0,1] and sum to at most 1");
  try {
    pkinn::validate(c.pk);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (int w : c.x_hidden) expect(w >= 1, "x_hidden widths must be positive");
  for (int w : c.f_hidden) expect(w >= 1, "f_hidden widths must be positive");
}

NoiseLevel resolve_noise_level(const RunConfig& config,
                               const std::string& name) {
  double nominal;
  int index;
  if (name == "low") {
    nominal = 0.005;
    index = 0;
  } else if (name == "medium") {
    nominal = 0.01;
    index = 1;
  } else if (name == "high") {
    nominal = 0.02;
    index = 2;
  } else {
    throw ConfigError("config: unknown noise level '" + name + "'");
  }
  const double sigma =
      config.noise_as_variance ? std::sqrt(nominal) : nominal;
  return NoiseLevel{name, sigma, index};
}

std::vector<NoiseLevel> selected_noise_levels(const RunConfig& config) {
  if (config.noise == "all") {
    return {resolve_noise_level(config, "low"),
            resolve_noise_level(config, "medium"),
            resolve_noise_level(config, "high")};
  }
  return {resolve_noise_level(config, config.noise)};
}

std::uint64_t stage_seed(const RunConfig& config, const NoiseLevel& level,
                         int stage_index) {
  return config.seed + 1000ull * static_cast<std::uint64_t>(level.index) +
         static_cast<std::uint64_t>(stage_index);
}

}  // namespace pkinn
