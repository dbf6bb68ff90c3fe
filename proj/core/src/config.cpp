#include "rdskit/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "rdskit/binary_io.hpp"
#include "rdskit/error.hpp"

namespace rdskit {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& s) {
  std::string t = trim(s);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw std::invalid_argument("expected a number, got '" + t + "'");
  }
  return v;
}

template <class I>
I parse_integer(const std::string& s) {
  std::string t = trim(s);
  I v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw std::invalid_argument("expected an integer, got '" + t + "'");
  }
  return v;
}

// Value <-> text conversions, one overload pair per field type.
std::string to_text(double v) { return io::format_double(v); }
std::string to_text(int v) { return std::to_string(v); }
std::string to_text(std::uint64_t v) { return std::to_string(v); }
std::string to_text(const std::string& v) { return v; }
std::string to_text(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + io::format_double(v[i]);
  return out;
}
std::string to_text(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
  return out;
}
std::string to_text(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.size(); ++i) out += (i ? "; " : "") + to_text(m[i]);
  return out;
}
std::string to_text(const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); }

void from_text(const std::string& s, double& v) { v = parse_double(s); }
void from_text(const std::string& s, int& v) { v = parse_integer<int>(s); }
void from_text(const std::string& s, std::uint64_t& v) { v = parse_integer<std::uint64_t>(s); }
void from_text(const std::string& s, std::string& v) { v = trim(s); }
void from_text(const std::string& s, std::vector<double>& v) {
  v.clear();
  if (trim(s).empty()) return;
  for (const auto& item : split(s, ',')) v.push_back(parse_double(item));
}
void from_text(const std::string& s, std::vector<std::string>& v) {
  v.clear();
  if (trim(s).empty()) return;
  for (const auto& item : split(s, ',')) {
    if (item.empty()) throw std::invalid_argument("empty list entry");
    v.push_back(item);
  }
}
void from_text(const std::string& s, Matrix& m) {
  m.clear();
  if (trim(s).empty()) return;
  for (const auto& row : split(s, ';')) {
    std::vector<double> r;
    from_text(row, r);
    m.push_back(std::move(r));
  }
}
void from_text(const std::string& s, std::optional<double>& v) {
  if (trim(s).empty()) {
    v.reset();
  } else {
    v = parse_double(s);
  }
}

bool is_present(double) { return true; }
bool is_present(int) { return true; }
bool is_present(std::uint64_t) { return true; }
bool is_present(const std::string&) { return true; }
template <class T>
bool is_present(const std::vector<T>& v) {
  return !v.empty();
}
bool is_present(const std::optional<double>& v) { return v.has_value(); }

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<bool(const ExperimentConfig&)> present;
};

template <class Access>
Field make_field(const char* section, const char* key, Access access) {
  return Field{
      section,
      key,
      [access](const ExperimentConfig& c) { return to_text(access(const_cast<ExperimentConfig&>(c))); },
      [access](ExperimentConfig& c, const std::string& s) { from_text(s, access(c)); },
      [access](const ExperimentConfig& c) { return is_present(access(const_cast<ExperimentConfig&>(c))); },
  };
}

#define RDS_FIELD(section, key, member) \
  make_field(section, key, [](ExperimentConfig& c) -> auto& { return c.member; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      RDS_FIELD("operator", "kind", op.kind),
      RDS_FIELD("operator", "eigenvalues", op.eigenvalues),
      RDS_FIELD("operator", "modes", op.modes),
      RDS_FIELD("operator", "viscosity", op.viscosity),
      RDS_FIELD("operator", "box_dim", op.box_dim),

      RDS_FIELD("nonlinearity", "kind", nonlinearity.kind),
      RDS_FIELD("nonlinearity", "matrix", nonlinearity.matrix),
      RDS_FIELD("nonlinearity", "gain", nonlinearity.gain),
      RDS_FIELD("nonlinearity", "offset", nonlinearity.offset),
      RDS_FIELD("nonlinearity", "alpha", nonlinearity.alpha),
      RDS_FIELD("nonlinearity", "target", nonlinearity.target),
      RDS_FIELD("nonlinearity", "source", nonlinearity.source),
      RDS_FIELD("nonlinearity", "coefficient", nonlinearity.coefficient),

      RDS_FIELD("noise", "coupling", noise.coupling),
      RDS_FIELD("noise", "sigma", noise.sigma),
      RDS_FIELD("noise", "power_modes", noise.power_modes),
      RDS_FIELD("noise", "power_amplitude", noise.power_amplitude),
      RDS_FIELD("noise", "power_decay", noise.power_decay),
      RDS_FIELD("noise", "b0", noise.b0),
      RDS_FIELD("noise", "tail_bound", noise.tail_bound),
      RDS_FIELD("noise", "step", noise.step),

      RDS_FIELD("stepper", "h", stepper.h),
      RDS_FIELD("stepper", "collocation", stepper.collocation),
      RDS_FIELD("stepper", "blowup_cap", stepper.blowup_cap),

      RDS_FIELD("run", "seed", run.seed),
      RDS_FIELD("run", "window", run.window),
      RDS_FIELD("run", "horizon", run.horizon),
      RDS_FIELD("run", "tol", run.tol),
      RDS_FIELD("run", "tail_tol", run.tail_tol),
      RDS_FIELD("run", "max_iter", run.max_iter),

      RDS_FIELD("pipeline", "stages", pipeline.stages),
      RDS_FIELD("pipeline", "stationary_method", pipeline.stationary_method),
      RDS_FIELD("pipeline", "simulate_time", pipeline.simulate_time),
      RDS_FIELD("pipeline", "x0", pipeline.x0),
      RDS_FIELD("pipeline", "record_every", pipeline.record_every),
      RDS_FIELD("pipeline", "pullback_time", pipeline.pullback_time),
      RDS_FIELD("pipeline", "pullback_tol", pipeline.pullback_tol),
      RDS_FIELD("pipeline", "lyapunov_horizon", pipeline.lyapunov_horizon),
      RDS_FIELD("pipeline", "reorth_every", pipeline.reorth_every),
      RDS_FIELD("pipeline", "lyapunov_count", pipeline.lyapunov_count),
      RDS_FIELD("pipeline", "batches", pipeline.batches),
      RDS_FIELD("pipeline", "zero_band", pipeline.zero_band),
      RDS_FIELD("pipeline", "split_initial", pipeline.split_initial),
      RDS_FIELD("pipeline", "split_max", pipeline.split_max),
      RDS_FIELD("pipeline", "split_tol", pipeline.split_tol),
      RDS_FIELD("pipeline", "dichotomy_horizon", pipeline.dichotomy_horizon),
      RDS_FIELD("pipeline", "dichotomy_samples", pipeline.dichotomy_samples),
      RDS_FIELD("pipeline", "delta1", pipeline.delta1),
      RDS_FIELD("pipeline", "delta2", pipeline.delta2),
      RDS_FIELD("pipeline", "n_max", pipeline.n_max),
      RDS_FIELD("pipeline", "t_back", pipeline.t_back),
      RDS_FIELD("pipeline", "chain_depth", pipeline.chain_depth),
      RDS_FIELD("pipeline", "stable_points", pipeline.stable_points),
      RDS_FIELD("pipeline", "unstable_points", pipeline.unstable_points),
      RDS_FIELD("pipeline", "rho1", pipeline.rho1),
      RDS_FIELD("pipeline", "rho2", pipeline.rho2),
      RDS_FIELD("pipeline", "beta1", pipeline.beta1),
      RDS_FIELD("pipeline", "beta2", pipeline.beta2),
      RDS_FIELD("pipeline", "eps1", pipeline.eps1),
      RDS_FIELD("pipeline", "eps2", pipeline.eps2),
      RDS_FIELD("pipeline", "invariance_times", pipeline.invariance_times),

      RDS_FIELD("output", "directory", output.directory),
      RDS_FIELD("output", "formats", output.formats),

      RDS_FIELD("verify", "cocycle_tol", verify.cocycle_tol),
      RDS_FIELD("verify", "jacobian_tol", verify.jacobian_tol),
      RDS_FIELD("verify", "fd_tol", verify.fd_tol),
      RDS_FIELD("verify", "shift_tol", verify.shift_tol),
      RDS_FIELD("verify", "contraction_slack", verify.contraction_slack),
      RDS_FIELD("verify", "sum_rule_tol", verify.sum_rule_tol),
      RDS_FIELD("verify", "sum_rule_horizon", verify.sum_rule_horizon),
      RDS_FIELD("verify", "max_time", verify.max_time),
      RDS_FIELD("verify", "samples", verify.samples),
  };
  return table;
}

#undef RDS_FIELD

const std::vector<std::string>& section_order() {
  static const std::vector<std::string> order = {"operator", "nonlinearity", "noise",  "stepper",
                                                 "run",      "pipeline",     "output", "verify"};
  return order;
}

[[noreturn]] void fail_at(int line, const std::string& message) {
  if (line > 0) throw Error(ErrorCode::config_invalid, "line " + std::to_string(line) + ": " + message);
  throw Error(ErrorCode::config_invalid, message);
}

// Semantic failures point at the line that set the field when there is one.
class Checker {
 public:
  explicit Checker(const ExperimentConfig& c) : c_(c) {}

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& message) const {
    auto it = c_.lines.find(section + "." + key);
    fail_at(it == c_.lines.end() ? 0 : it->second, "[" + section + "] " + key + ": " + message);
  }
  void positive(const std::string& section, const std::string& key, double v) const {
    if (!(v > 0.0) || !std::isfinite(v)) fail(section, key, "must be positive and finite, got " + to_text(v));
  }
  void non_negative(const std::string& section, const std::string& key, double v) const {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(section, key, "must be non-negative and finite, got " + to_text(v));
  }
  void one_of(const std::string& section, const std::string& key, const std::string& v,
              std::initializer_list<const char*> allowed) const {
    std::string list;
    for (const char* a : allowed) {
      if (v == a) return;
      list += (list.empty() ? "" : ", ") + std::string(a);
    }
    fail(section, key, "unknown value '" + v + "' (expected one of " + list + ")");
  }

 private:
  const ExperimentConfig& c_;
};

Eigen::MatrixXd to_eigen(const Matrix& m) {
  const auto rows = static_cast<Eigen::Index>(m.size());
  const auto cols = rows ? static_cast<Eigen::Index>(m.front().size()) : 0;
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return out;
}

int state_dim(const ExperimentConfig& c) {
  return c.op.kind == "eigenvalues" ? static_cast<int>(c.op.eigenvalues.size()) : c.op.modes;
}

}  // namespace

bool ExperimentConfig::has_stage(const std::string& name) const {
  return std::find(pipeline.stages.begin(), pipeline.stages.end(), name) != pipeline.stages.end();
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::set<std::string> known_sections(section_order().begin(), section_order().end());
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail_at(line, "unterminated section header '" + s + "'");
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      if (!known_sections.count(section)) fail_at(line, "unknown section [" + section + "]");
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) fail_at(line, "expected 'key = value', got '" + s + "'");
    if (section.empty()) fail_at(line, "key outside of any section");
    std::string key = trim(std::string_view(s).substr(0, eq));
    std::string value = trim(std::string_view(s).substr(eq + 1));
    const auto& table = fields();
    auto it = std::find_if(table.begin(), table.end(),
                           [&](const Field& f) { return f.section == section && f.key == key; });
    if (it == table.end()) fail_at(line, "unknown key '" + key + "' in [" + section + "]");
    const std::string id = section + "." + key;
    if (config.lines.count(id)) {
      fail_at(line, "duplicate key '" + key + "' in [" + section + "] (first set on line " +
                        std::to_string(config.lines[id]) + ")");
    }
    try {
      it->set(config, value);
    } catch (const std::invalid_argument& e) {
      fail_at(line, "[" + section + "] " + key + ": " + e.what());
    } catch (const std::out_of_range& e) {
      fail_at(line, "[" + section + "] " + key + ": value out of range");
    }
    config.lines[id] = line;
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config_invalid, "cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& section : section_order()) {
    std::string body;
    for (const auto& f : fields()) {
      if (f.section != section || !f.present(config)) continue;
      body += f.key + " = " + f.get(config) + "\n";
    }
    if (body.empty()) continue;
    if (!out.empty()) out += "\n";
    out += "[" + section + "]\n" + body;
  }
  return out;
}

void validate_config(const ExperimentConfig& c) {
  Checker check(c);

  check.one_of("operator", "kind", c.op.kind, {"eigenvalues", "dirichlet_interval", "dirichlet_box"});
  if (c.op.kind == "eigenvalues") {
    if (c.op.eigenvalues.empty()) check.fail("operator", "eigenvalues", "required for kind = eigenvalues");
    for (std::size_t i = 0; i < c.op.eigenvalues.size(); ++i) {
      if (!std::isfinite(c.op.eigenvalues[i])) check.fail("operator", "eigenvalues", "entries must be finite");
      if (c.op.eigenvalues[i] == 0.0) check.fail("operator", "eigenvalues", "zero eigenvalue has no splitting");
      if (i && c.op.eigenvalues[i] < c.op.eigenvalues[i - 1]) {
        check.fail("operator", "eigenvalues", "must be non-decreasing");
      }
    }
  } else {
    if (c.op.modes < 1) check.fail("operator", "modes", "must be at least 1");
    check.positive("operator", "viscosity", c.op.viscosity);
    if (c.op.kind == "dirichlet_box" && (c.op.box_dim < 1 || c.op.box_dim > 3)) {
      check.fail("operator", "box_dim", "must be 1, 2 or 3");
    }
  }
  const int n = state_dim(c);

  const auto& nl = c.nonlinearity;
  check.one_of("nonlinearity", "kind", nl.kind,
               {"zero", "linear", "tanh_coupling", "square_transfer", "pointwise_tanh", "dissipative_reaction",
                "burgers"});
  if (nl.kind == "linear" || nl.kind == "tanh_coupling") {
    if (static_cast<int>(nl.matrix.size()) != n) {
      check.fail("nonlinearity", "matrix", "needs " + std::to_string(n) + " rows");
    }
    for (const auto& row : nl.matrix) {
      if (static_cast<int>(row.size()) != n) {
        check.fail("nonlinearity", "matrix", "needs " + std::to_string(n) + " columns per row");
      }
    }
    if (!nl.offset.empty() && static_cast<int>(nl.offset.size()) != n) {
      check.fail("nonlinearity", "offset", "needs " + std::to_string(n) + " entries");
    }
  }
  if (nl.kind == "square_transfer") {
    if (nl.target < 0 || nl.target >= n) check.fail("nonlinearity", "target", "mode index out of range");
    if (nl.source < 0 || nl.source >= n) check.fail("nonlinearity", "source", "mode index out of range");
  }
  if (nl.kind == "pointwise_tanh" || nl.kind == "dissipative_reaction" || nl.kind == "burgers") {
    if (c.op.kind != "dirichlet_interval") {
      check.fail("nonlinearity", "kind", nl.kind + " is evaluated on a physical grid and needs operator kind = dirichlet_interval");
    }
  }
  if (nl.kind == "dissipative_reaction") check.positive("nonlinearity", "alpha", nl.alpha);

  const auto& nz = c.noise;
  check.one_of("noise", "coupling", nz.coupling, {"none", "additive", "multiplicative"});
  const int sources = (!nz.b0.empty() ? 1 : 0) + (!nz.sigma.empty() ? 1 : 0) + (nz.power_modes > 0 ? 1 : 0);
  if (nz.coupling != "none") {
    if (sources == 0) check.fail("noise", "coupling", "needs one of sigma, power_modes or b0");
    if (sources > 1) check.fail("noise", "sigma", "give only one of sigma, power_modes or b0");
  }
  if (nz.power_modes > 0) {
    check.positive("noise", "power_amplitude", nz.power_amplitude);
    if (!(nz.power_decay > 1.0)) check.fail("noise", "power_decay", "must exceed 1");
  }
  for (double s : nz.sigma) {
    if (!std::isfinite(s) || s < 0.0) check.fail("noise", "sigma", "entries must be finite and non-negative");
  }
  if (!nz.b0.empty()) {
    if (static_cast<int>(nz.b0.size()) != n) check.fail("noise", "b0", "needs " + std::to_string(n) + " rows");
    for (const auto& row : nz.b0) {
      if (row.size() != nz.b0.front().size() || row.empty()) check.fail("noise", "b0", "rows must share a length");
    }
  }
  check.non_negative("noise", "tail_bound", nz.tail_bound);
  if (nz.coupling == "multiplicative") {
    if (static_cast<int>(nz.sigma.size()) != n) {
      check.fail("noise", "sigma", "multiplicative coupling needs one sigma per mode (" + std::to_string(n) + ")");
    }
  }

  check.positive("stepper", "h", c.stepper.h);
  if (c.stepper.collocation < 0) check.fail("stepper", "collocation", "must be non-negative");
  check.positive("stepper", "blowup_cap", c.stepper.blowup_cap);
  if (nz.step) {
    check.positive("noise", "step", *nz.step);
    if (std::abs(*nz.step - c.stepper.h) > 1e-12 * c.stepper.h) {
      check.fail("noise", "step",
                 "noise grid step " + to_text(*nz.step) + " differs from stepper h " + to_text(c.stepper.h));
    }
  }

  check.non_negative("run", "window", c.run.window);
  check.non_negative("run", "horizon", c.run.horizon);
  check.positive("run", "tol", c.run.tol);
  check.positive("run", "tail_tol", c.run.tail_tol);
  if (!(c.run.tail_tol < 1.0)) check.fail("run", "tail_tol", "must be below 1");
  if (c.run.max_iter < 1) check.fail("run", "max_iter", "must be at least 1");

  const auto& p = c.pipeline;
  if (p.stages.empty()) check.fail("pipeline", "stages", "at least one stage is required");
  for (const auto& s : p.stages) {
    check.one_of("pipeline", "stages", s, {"simulate", "stationary", "spectrum", "manifolds"});
  }
  if (c.has_stage("spectrum") && !c.has_stage("stationary")) {
    check.fail("pipeline", "stages", "spectrum requires the stationary stage");
  }
  if (c.has_stage("manifolds") && !c.has_stage("spectrum")) {
    check.fail("pipeline", "stages", "manifolds requires the spectrum stage");
  }
  check.one_of("pipeline", "stationary_method", p.stationary_method,
               {"auto", "contraction", "pullback", "equilibrium"});
  check.non_negative("pipeline", "simulate_time", p.simulate_time);
  if (!p.x0.empty() && static_cast<int>(p.x0.size()) != n) {
    check.fail("pipeline", "x0", "needs " + std::to_string(n) + " entries");
  }
  if (p.record_every < 1) check.fail("pipeline", "record_every", "must be at least 1");
  check.positive("pipeline", "pullback_time", p.pullback_time);
  check.positive("pipeline", "pullback_tol", p.pullback_tol);
  check.positive("pipeline", "lyapunov_horizon", p.lyapunov_horizon);
  if (p.reorth_every < 1) check.fail("pipeline", "reorth_every", "must be at least 1");
  if (p.lyapunov_count < 0 || p.lyapunov_count > n) check.fail("pipeline", "lyapunov_count", "must lie in [0, N]");
  if (p.batches < 10) check.fail("pipeline", "batches", "must be at least 10");
  check.non_negative("pipeline", "zero_band", p.zero_band);
  check.positive("pipeline", "split_initial", p.split_initial);
  if (!(p.split_max >= p.split_initial)) check.fail("pipeline", "split_max", "must be at least split_initial");
  check.positive("pipeline", "split_tol", p.split_tol);
  check.positive("pipeline", "dichotomy_horizon", p.dichotomy_horizon);
  if (p.dichotomy_samples < 0) check.fail("pipeline", "dichotomy_samples", "must be non-negative");
  if (p.delta1) check.positive("pipeline", "delta1", *p.delta1);
  if (p.delta2) check.positive("pipeline", "delta2", *p.delta2);
  if (p.n_max < 1) check.fail("pipeline", "n_max", "must be at least 1");
  check.positive("pipeline", "t_back", p.t_back);
  if (p.chain_depth < 1) check.fail("pipeline", "chain_depth", "must be at least 1");
  if (p.stable_points < 0) check.fail("pipeline", "stable_points", "must be non-negative");
  if (p.unstable_points < 0) check.fail("pipeline", "unstable_points", "must be non-negative");
  for (const auto& [key, v] : {std::pair{"rho1", p.rho1}, std::pair{"rho2", p.rho2}, std::pair{"beta1", p.beta1},
                               std::pair{"beta2", p.beta2}, std::pair{"eps1", p.eps1}, std::pair{"eps2", p.eps2}}) {
    if (v) check.positive("pipeline", key, *v);
  }
  for (double t : p.invariance_times) check.non_negative("pipeline", "invariance_times", t);

  if (c.output.directory.empty()) check.fail("output", "directory", "must not be empty");
  for (const auto& f : c.output.formats) check.one_of("output", "formats", f, {"json", "csv", "binary"});

  check.positive("verify", "cocycle_tol", c.verify.cocycle_tol);
  check.positive("verify", "jacobian_tol", c.verify.jacobian_tol);
  check.positive("verify", "fd_tol", c.verify.fd_tol);
  check.positive("verify", "shift_tol", c.verify.shift_tol);
  check.non_negative("verify", "contraction_slack", c.verify.contraction_slack);
  check.positive("verify", "sum_rule_tol", c.verify.sum_rule_tol);
  check.positive("verify", "sum_rule_horizon", c.verify.sum_rule_horizon);
  check.positive("verify", "max_time", c.verify.max_time);
  if (c.verify.samples < 1) check.fail("verify", "samples", "must be at least 1");

  // Horizons must land on the grid.
  const double h = c.stepper.h;
  auto aligned = [&](const std::string& section, const std::string& key, double t) {
    const double k = t / h;
    if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, std::abs(k))) {
      check.fail(section, key, "value " + to_text(t) + " is not a multiple of h = " + to_text(h));
    }
  };
  aligned("run", "window", c.run.window);
  aligned("run", "horizon", c.run.horizon);
  aligned("pipeline", "simulate_time", p.simulate_time);
  aligned("pipeline", "pullback_time", p.pullback_time);
  aligned("pipeline", "lyapunov_horizon", p.lyapunov_horizon);
  aligned("pipeline", "split_initial", p.split_initial);
  aligned("pipeline", "split_max", p.split_max);
  aligned("pipeline", "dichotomy_horizon", p.dichotomy_horizon);
  aligned("pipeline", "t_back", p.t_back);
  for (double t : p.invariance_times) aligned("pipeline", "invariance_times", t);
  aligned("verify", "sum_rule_horizon", c.verify.sum_rule_horizon);
  aligned("verify", "max_time", c.verify.max_time);
}

OperatorSpec build_operator(const ExperimentConfig& c) {
  if (c.op.kind == "eigenvalues") return OperatorSpec::from_eigenvalues(c.op.eigenvalues);
  if (c.op.kind == "dirichlet_interval") return OperatorSpec::dirichlet_interval(c.op.modes, c.op.viscosity);
  return OperatorSpec::dirichlet_box(c.op.modes, c.op.box_dim, c.op.viscosity);
}

NonlinearitySpec build_nonlinearity(const ExperimentConfig& c, const OperatorSpec& op) {
  const auto& nl = c.nonlinearity;
  const int n = op.dim();
  if (nl.kind == "zero") return NonlinearitySpec::zero();
  if (nl.kind == "linear") return NonlinearitySpec::linear(to_eigen(nl.matrix));
  if (nl.kind == "tanh_coupling") {
    Eigen::VectorXd offset = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < static_cast<int>(nl.offset.size()); ++i) offset[i] = nl.offset[static_cast<std::size_t>(i)];
    return NonlinearitySpec::tanh_coupling(to_eigen(nl.matrix), nl.gain, offset);
  }
  if (nl.kind == "square_transfer") {
    const int target = nl.target;
    const int source = nl.source;
    const double a = nl.coefficient;
    auto field = [=](const Eigen::VectorXd& u) {
      Eigen::VectorXd out = Eigen::VectorXd::Zero(u.size());
      out[target] = a * u[source] * u[source];
      return out;
    };
    auto jac = [=](const Eigen::VectorXd& u) {
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(u.size(), u.size());
      out(target, source) = 2.0 * a * u[source];
      return out;
    };
    return NonlinearitySpec::callable("square_transfer", field, jac, std::numeric_limits<double>::infinity());
  }
  if (nl.kind == "pointwise_tanh") {
    const double g = nl.gain;
    return NonlinearitySpec::pointwise(
        "pointwise_tanh", [g](double x) { return g * std::tanh(x); },
        [g](double x) {
          const double t = std::tanh(x);
          return g * (1.0 - t * t);
        },
        std::abs(g), std::abs(g));
  }
  if (nl.kind == "dissipative_reaction") return NonlinearitySpec::dissipative_reaction(nl.alpha);
  if (nl.kind == "burgers") return NonlinearitySpec::burgers();
  throw Error(ErrorCode::config_invalid, "unknown nonlinearity kind '" + nl.kind + "'");
}

CovarianceSpec build_covariance(const ExperimentConfig& c, int state_dim) {
  const auto& nz = c.noise;
  if (nz.coupling == "none") return CovarianceSpec::cylindrical(std::vector<double>(1, 0.0));
  if (!nz.b0.empty()) return CovarianceSpec::from_matrix(to_eigen(nz.b0));
  if (nz.power_modes > 0) return CovarianceSpec::power_law(std::min(nz.power_modes, state_dim), nz.power_amplitude, nz.power_decay);
  return CovarianceSpec::cylindrical(nz.sigma, nz.tail_bound);
}

NoiseCoupling build_coupling(const ExperimentConfig& c) {
  if (c.noise.coupling == "additive") return NoiseCoupling::additive;
  if (c.noise.coupling == "multiplicative") return NoiseCoupling::diagonal_multiplicative;
  return NoiseCoupling::none;
}

SemiflowModel build_model(const ExperimentConfig& config) {
  OperatorSpec op = build_operator(config);
  NonlinearitySpec nl = build_nonlinearity(config, op);
  CovarianceSpec cov = build_covariance(config, op.dim());
  StepperConfig stepper{config.stepper.h, config.stepper.collocation, config.stepper.blowup_cap};
  return SemiflowModel(std::move(op), std::move(nl), std::move(cov), build_coupling(config), stepper);
}

}  // namespace rdskit
