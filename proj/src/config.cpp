#include "chainctl/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "chainctl/csv.hpp"

namespace chainctl {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

int parse_int(const std::string& v, int line, const std::string& key) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(line, "key '" + key + "': expected integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& v, int line, const std::string& key) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(line, "key '" + key + "': expected unsigned integer, got '" + v + "'");
  return out;
}

double parse_dbl(const std::string& v, int line, const std::string& key) {
  try {
    return parse_double(v);
  } catch (const std::exception&) {
    throw ConfigError(line, "key '" + key + "': expected number, got '" + v + "'");
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

Flavor parse_flavor(const std::string& v, int line) {
  if (v == "neumann") return Flavor::Neumann;
  if (v == "dirichlet") return Flavor::Dirichlet;
  throw ConfigError(line, "flavor must be neumann|dirichlet, got '" + v + "'");
}

LayoutKind parse_layout(const std::string& v, int line) {
  if (v == "two-boundary") return LayoutKind::TwoBoundary;
  if (v == "interior-block") return LayoutKind::InteriorBlock;
  if (v == "extension-block") return LayoutKind::ExtensionBlock;
  throw ConfigError(line, "layout must be two-boundary|interior-block|extension-block, got '" + v + "'");
}

Scaling parse_scaling(const std::string& v, int line) {
  if (v == "inv-n2") return Scaling::InverseNSquared;
  if (v == "inv-n") return Scaling::InverseN;
  if (v == "unscaled") return Scaling::Unscaled;
  throw ConfigError(line, "scaling must be inv-n2|inv-n|unscaled, got '" + v + "'");
}

Frame parse_frame(const std::string& v, int line) {
  if (v == "rescaled") return Frame::Rescaled;
  if (v == "physical") return Frame::Physical;
  throw ConfigError(line, "frame must be rescaled|physical, got '" + v + "'");
}

HorizonMode parse_horizon_mode(const std::string& v, int line) {
  if (v == "grow-n2") return HorizonMode::TimeGrowsAsN2;
  if (v == "fixed-t") return HorizonMode::FixedT;
  throw ConfigError(line, "horizon_mode must be grow-n2|fixed-t, got '" + v + "'");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  return parse_config(text, RunConfig{});
}

RunConfig parse_config(const std::string& text, const RunConfig& base) {
  RunConfig c = base;
  using Setter = std::function<void(RunConfig&, const std::string&, int)>;
  static const std::map<std::string, Setter> setters = {
      {"n", [](RunConfig& c, const std::string& v, int ln) {
         c.n = parse_int(v, ln, "n");
         if (c.n < 2) throw ConfigError(ln, "range error: chain needs n >= 2");
       }},
      {"flavor", [](RunConfig& c, const std::string& v, int ln) { c.flavor = parse_flavor(v, ln); }},
      {"layout", [](RunConfig& c, const std::string& v, int ln) { c.layout = parse_layout(v, ln); }},
      {"block_start", [](RunConfig& c, const std::string& v, int ln) {
         c.block_start = parse_int(v, ln, "block_start");
         if (c.block_start < 0) throw ConfigError(ln, "block_start must be >= 0");
       }},
      {"block_size", [](RunConfig& c, const std::string& v, int ln) {
         c.block_size = parse_int(v, ln, "block_size");
         if (c.block_size < 0) throw ConfigError(ln, "block_size must be >= 0");
       }},
      {"nonlinearity", [](RunConfig& c, const std::string& v, int ln) {
         if (v != "zero" && v != "gauss" && v != "tanh" && v != "linear")
           throw ConfigError(ln, "nonlinearity must be zero|gauss|tanh|linear, got '" + v + "'");
         c.nonlinearity = v;
       }},
      {"nl_param", [](RunConfig& c, const std::string& v, int ln) { c.nl_param = parse_dbl(v, ln, "nl_param"); }},
      {"scaling", [](RunConfig& c, const std::string& v, int ln) { c.scaling = parse_scaling(v, ln); }},
      {"consensus_shift", [](RunConfig& c, const std::string& v, int ln) {
         c.consensus_shift = parse_dbl(v, ln, "consensus_shift");
       }},
      {"frame", [](RunConfig& c, const std::string& v, int ln) { c.frame = parse_frame(v, ln); }},
      {"T", [](RunConfig& c, const std::string& v, int ln) {
         c.T = parse_dbl(v, ln, "T");
         if (!(c.T > 0.0)) throw ConfigError(ln, "range error: T must be > 0");
       }},
      {"beta", [](RunConfig& c, const std::string& v, int ln) {
         c.beta = parse_dbl(v, ln, "beta");
         if (!(c.beta > 0.0)) throw ConfigError(ln, "range error: beta must be > 0");
       }},
      {"n_steps", [](RunConfig& c, const std::string& v, int ln) {
         c.n_steps = parse_int(v, ln, "n_steps");
         if (c.n_steps < 0) throw ConfigError(ln, "n_steps must be >= 0 (0 = auto)");
       }},
      {"max_iters", [](RunConfig& c, const std::string& v, int ln) {
         c.max_iters = parse_int(v, ln, "max_iters");
         if (c.max_iters < 1) throw ConfigError(ln, "max_iters must be >= 1");
       }},
      {"grad_tol", [](RunConfig& c, const std::string& v, int ln) {
         c.grad_tol = parse_dbl(v, ln, "grad_tol");
         if (c.grad_tol < 0.0) throw ConfigError(ln, "grad_tol must be >= 0");
       }},
      {"memory", [](RunConfig& c, const std::string& v, int ln) {
         c.memory = parse_int(v, ln, "memory");
         if (c.memory < 1) throw ConfigError(ln, "memory must be >= 1");
       }},
      {"seed", [](RunConfig& c, const std::string& v, int ln) { c.seed = parse_u64(v, ln, "seed"); }},
      {"y0", [](RunConfig& c, const std::string& v, int ln) {
         if (v != "sine" && v != "random" && v != "ones")
           throw ConfigError(ln, "y0 must be sine|random|ones, got '" + v + "'");
         c.y0 = v;
       }},
      {"outdir", [](RunConfig& c, const std::string& v, int) { c.outdir = v; }},
      {"n_values", [](RunConfig& c, const std::string& v, int ln) {
         c.n_values.clear();
         for (const auto& item : split_list(v)) {
           const int n = parse_int(item, ln, "n_values");
           if (n < 2) throw ConfigError(ln, "range error: n_values entries need n >= 2");
           c.n_values.push_back(n);
         }
         if (c.n_values.empty()) throw ConfigError(ln, "n_values must not be empty");
       }},
      {"regimes", [](RunConfig& c, const std::string& v, int ln) {
         c.regimes.clear();
         for (const auto& item : split_list(v)) c.regimes.push_back(parse_scaling(item, ln));
         if (c.regimes.empty()) throw ConfigError(ln, "regimes must not be empty");
       }},
      {"horizon_mode", [](RunConfig& c, const std::string& v, int ln) {
         c.horizon_mode = parse_horizon_mode(v, ln);
       }},
      {"interior_ratio", [](RunConfig& c, const std::string& v, int ln) {
         c.interior_ratio = parse_dbl(v, ln, "interior_ratio");
         if (!(c.interior_ratio > 0.0 && c.interior_ratio < 1.0))
           throw ConfigError(ln, "interior_ratio must lie in (0, 1)");
       }},
  };

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line_no, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError(line_no, "unknown key '" + key + "'");
    it->second(c, value, line_no);
  }
  return c;
}

std::string render_config(const RunConfig& c) {
  std::ostringstream out;
  out << "n = " << c.n << "\n";
  out << "flavor = " << to_string(c.flavor) << "\n";
  out << "layout = " << to_string(c.layout) << "\n";
  out << "block_start = " << c.block_start << "\n";
  out << "block_size = " << c.block_size << "\n";
  out << "nonlinearity = " << c.nonlinearity << "\n";
  out << "nl_param = " << format_double(c.nl_param) << "\n";
  out << "scaling = " << to_string(c.scaling) << "\n";
  out << "consensus_shift = " << format_double(c.consensus_shift) << "\n";
  out << "frame = " << to_string(c.frame) << "\n";
  out << "T = " << format_double(c.T) << "\n";
  out << "beta = " << format_double(c.beta) << "\n";
  out << "n_steps = " << c.n_steps << "\n";
  out << "max_iters = " << c.max_iters << "\n";
  out << "grad_tol = " << format_double(c.grad_tol) << "\n";
  out << "memory = " << c.memory << "\n";
  out << "seed = " << c.seed << "\n";
  out << "y0 = " << c.y0 << "\n";
  if (!c.outdir.empty()) out << "outdir = " << c.outdir << "\n";
  out << "n_values = ";
  for (std::size_t i = 0; i < c.n_values.size(); ++i)
    out << (i ? "," : "") << c.n_values[i];
  out << "\n";
  out << "regimes = ";
  for (std::size_t i = 0; i < c.regimes.size(); ++i)
    out << (i ? "," : "") << to_string(c.regimes[i]);
  out << "\n";
  out << "horizon_mode = " << to_string(c.horizon_mode) << "\n";
  out << "interior_ratio = " << format_double(c.interior_ratio) << "\n";
  return out.str();
}

ChainOperatord make_operator(const RunConfig& config) {
  return build_chain_operator(config.n, config.flavor);
}

ControlLayout make_layout(const RunConfig& config) {
  LayoutParams params;
  params.block_start = config.block_start;
  params.block_size = config.block_size;
  return build_control_layout(config.n, config.layout, params);
}

NonlinearitySpec make_spec(const RunConfig& config) {
  NonlinearitySpec spec = make_nonlinearity(config.nonlinearity, config.nl_param);
  spec.scaling = config.scaling;
  spec.consensus_shift = config.consensus_shift;
  validate_nonlinearity(spec);
  return spec;
}

TimeFrame make_frame(const RunConfig& config) {
  if (config.frame == Frame::Rescaled) return rescaled_frame(config.n, config.T);
  return physical_frame(config.n, config.T * config.n * config.n);
}

VectorXd make_y0(const RunConfig& config) {
  return make_initial_state(config.y0, config.n, config.seed);
}

int resolved_n_steps(const RunConfig& config) {
  return config.n_steps > 0 ? config.n_steps : default_n_steps(config.n);
}

MinimizeOptions make_minimize_options(const RunConfig& config) {
  MinimizeOptions opts;
  opts.max_iters = config.max_iters;
  opts.grad_tol = config.grad_tol;
  opts.memory = config.memory;
  return opts;
}

ControlProblem make_problem(const RunConfig& config) {
  return ControlProblem{make_operator(config), make_spec(config),
                        make_layout(config),   make_y0(config),
                        make_frame(config),    resolved_n_steps(config)};
}

SweepPlan make_sweep_plan(const RunConfig& config) {
  SweepPlan plan;
  plan.n_values = config.n_values;
  plan.regimes = config.regimes;
  plan.horizon_mode = config.horizon_mode;
  plan.base_T = config.T;
  plan.flavor = config.flavor;
  plan.layout_kind = config.layout;
  plan.interior_ratio = config.interior_ratio;
  plan.nonlinearity = config.nonlinearity;
  plan.nl_param = config.nl_param;
  plan.y0_kind = config.y0;
  plan.beta = config.beta;
  plan.optimizer = make_minimize_options(config);
  plan.n_steps = config.n_steps;
  plan.seed = config.seed;
  return plan;
}

}  // namespace chainctl
