#include "rdskit/pipeline.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "rdskit/binary_io.hpp"
#include "rdskit/manifolds.hpp"
#include "rdskit/noise.hpp"
#include "rdskit/parallel.hpp"
#include "rdskit/spectrum.hpp"
#include "rdskit/stationary.hpp"

namespace rdskit {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::config_invalid: return exit_config_error;
    case ErrorCode::not_hyperbolic: return exit_not_hyperbolic;
    default: return exit_stage_failure;
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::io_error, "SHA-256 digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

namespace {

// JSON has no infinities or NaN; they are written as strings.
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json vec(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v[i]));
  return out;
}

json vec(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(num(x));
  return out;
}

json mat(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vec(Eigen::VectorXd(m.row(i).transpose())));
  return out;
}

json fit_json(const LineFit& f) {
  return {{"slope", num(f.slope)},
          {"intercept", num(f.intercept)},
          {"slope_stderr", num(f.slope_stderr)},
          {"r_squared", num(f.r_squared)},
          {"points", f.points}};
}

json graph_json(const GraphFit& g) {
  return {{"linear", mat(g.linear)},
          {"quadratic", mat(g.quadratic)},
          {"radius", num(g.radius)},
          {"rms_residual", num(g.rms_residual)},
          {"samples", g.samples},
          {"contract_ok", g.contract_ok}};
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
    text_ += "\n";
  }
  void row(const std::vector<double>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + io::format_double(cells[i]);
    text_ += "\n";
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

std::vector<std::string> mode_header(const std::string& lead, const std::string& prefix, int n) {
  std::vector<std::string> h;
  std::istringstream in(lead);
  std::string item;
  while (std::getline(in, item, ',')) h.push_back(item);
  for (int i = 1; i <= n; ++i) h.push_back(prefix + std::to_string(i));
  return h;
}

std::vector<double> row_with(std::initializer_list<double> lead, const Eigen::VectorXd& v) {
  std::vector<double> r(lead);
  r.insert(r.end(), v.data(), v.data() + v.size());
  return r;
}

// Owns the artifact directory for the lifetime of a run.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& dir) : path_(dir / ".rdskit.lock") {
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) {
      if (errno == EEXIST) {
        throw Error(ErrorCode::io_error, "artifact directory '" + dir.string() + "' is locked (" +
                                             path_.filename().string() + " exists)");
      }
      throw Error(ErrorCode::io_error, "cannot create lock file in '" + dir.string() + "'");
    }
    std::fclose(f);
  }
  ~DirectoryLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
};

class ArtifactSink {
 public:
  ArtifactSink(fs::path dir, std::vector<std::string> formats) : dir_(std::move(dir)), formats_(std::move(formats)) {}

  bool wants(const std::string& format) const {
    return std::find(formats_.begin(), formats_.end(), format) != formats_.end();
  }
  void write(const std::string& name, const std::string& bytes) {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write '" + p.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io_error, "write failed for '" + p.string() + "'");
    entries_.push_back({{"file", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    names_.push_back(name);
  }
  void json_file(const std::string& name, const json& j) {
    if (wants("json")) write(name, j.dump(2) + "\n");
  }
  void csv_file(const std::string& name, const CsvWriter& csv) {
    if (wants("csv")) write(name, csv.text());
  }
  template <class Fn>
  void binary_file(const std::string& name, Fn&& fill) {
    if (!wants("binary")) return;
    std::ostringstream out(std::ios::binary);
    fill(out);
    write(name, out.str());
  }

  const json& entries() const { return entries_; }
  const std::vector<std::string>& names() const { return names_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> formats_;
  json entries_ = json::array();
  std::vector<std::string> names_;
};

void save_trajectory(std::ostream& out, const CocycleTrajectory& traj) {
  io::write_header(out, io::RecordKind::trajectory);
  const std::uint64_t count = traj.states.size();
  const std::uint64_t dim = count ? static_cast<std::uint64_t>(traj.states.front().size()) : 0;
  io::write_u64(out, count);
  io::write_u64(out, dim);
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    io::write_f64(out, traj.times[i]);
    const auto& c = traj.states[i].coords();
    io::write_f64s(out, std::span<const double>(c.data(), static_cast<std::size_t>(c.size())));
  }
}

struct Plan {
  ShiftWindow window;
  std::int64_t cell_lo = 0;
  std::int64_t cell_hi = 0;
};

double max_or(const std::vector<double>& v, double fallback) {
  return v.empty() ? fallback : *std::max_element(v.begin(), v.end());
}

std::string auto_method(const SemiflowModel& model) {
  if (model.coupling() != NoiseCoupling::additive) return "equilibrium";
  const auto& f = model.nonlinearity();
  if (f.globally_bounded() && model.op().has_splitting() &&
      contraction_constant(model.op(), f.lipschitz) < 1.0) {
    return "contraction";
  }
  return "pullback";
}

// Shift window of the stationary point and the noise cells every stage needs.
Plan make_plan(const ExperimentConfig& c, const SemiflowModel& model, const std::string& method) {
  const auto& p = c.pipeline;
  double lo = c.run.window;
  double hi = std::max(c.run.window, c.run.horizon);
  if (c.has_stage("spectrum")) {
    lo = std::max(lo, p.split_max);
    hi = std::max({hi, p.lyapunov_horizon, p.split_max, p.dichotomy_horizon});
  }
  if (c.has_stage("manifolds")) {
    lo = std::max(lo, p.t_back + p.split_max);
    hi = std::max(hi, p.n_max + max_or(p.invariance_times, 0.0));
  }
  Plan plan;
  plan.window = ShiftWindow::between(model, -(lo + 1.0), hi + 1.0);
  std::int64_t a = plan.window.first - 2;
  std::int64_t b = plan.window.last + 2;
  if (method == "contraction") {
    const auto cells = fixed_point_cells(model, plan.window, c.run.tail_tol);
    a = std::min(a, cells.first);
    b = std::max(b, cells.second);
  } else if (method == "pullback") {
    a = std::min(a, plan.window.first - model.steps_for(p.pullback_time) - 2);
  }
  if (c.has_stage("simulate")) b = std::max(b, model.steps_for(p.simulate_time) + 2);
  plan.cell_lo = a - 16;
  plan.cell_hi = b + 16;
  return plan;
}

WienerPath make_path(const SemiflowModel& model, const NoiseCoupling coupling, std::int64_t cell_lo,
                     std::int64_t cell_hi, std::uint64_t seed) {
  const double h = model.h();
  const double t_back = static_cast<double>(std::max<std::int64_t>(-cell_lo, 0)) * h;
  const double t_fwd = static_cast<double>(std::max<std::int64_t>(cell_hi, 0)) * h;
  if (coupling == NoiseCoupling::none) return zero_path(model.noise_modes(), t_back, t_fwd, h);
  return sample_path(model.covariance(), t_back, t_fwd, h, seed);
}

void log_line(const RunOptions& o, const std::string& s) {
  if (o.log) *o.log << s << "\n";
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

struct StageContext {
  const ExperimentConfig& config;
  const RunOptions& options;
  const SemiflowModel& model;
  WienerPath path;
  Plan plan;
  std::string method;
  ArtifactSink& sink;
  std::vector<std::string>& summary;
  std::optional<StationaryPoint> y;
  std::optional<LyapunovReport> spectrum;
  std::optional<Splitting> split;
};

void stage_simulate(StageContext& s) {
  const auto& p = s.config.pipeline;
  const int n = s.model.dim();
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < static_cast<int>(p.x0.size()); ++i) x0[i] = p.x0[static_cast<std::size_t>(i)];
  EvolveOptions eo;
  eo.record_every = p.record_every;
  const auto traj = evolve(s.model, s.model.op().vec(x0), s.path, p.simulate_time, eo);
  double max_norm = 0.0;
  CsvWriter csv(mode_header("t", "u", n));
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    max_norm = std::max(max_norm, traj.states[i].norm());
    csv.row(row_with({traj.times[i]}, traj.states[i].coords()));
  }
  s.sink.json_file("simulate.json", {{"stage", "simulate"},
                                     {"duration", num(p.simulate_time)},
                                     {"h", num(s.model.h())},
                                     {"recorded_states", traj.states.size()},
                                     {"x0", vec(x0)},
                                     {"final_state", vec(traj.states.back().coords())},
                                     {"max_norm", num(max_norm)}});
  s.sink.csv_file("trajectory.csv", csv);
  s.sink.binary_file("trajectory.bin", [&](std::ostream& out) { save_trajectory(out, traj); });
  s.sink.binary_file("noise_path.bin", [&](std::ostream& out) { s.path.save(out); });
  s.summary.push_back("simulate: " + std::to_string(traj.states.size()) + " states, max |u| = " + fmt(max_norm));
}

void stage_stationary(StageContext& s) {
  const auto& c = s.config;
  StationaryPoint y;
  if (s.method == "contraction") {
    FixedPointOptions fo;
    fo.tol = c.run.tol;
    fo.max_iter = c.run.max_iter;
    fo.tail_tol = c.run.tail_tol;
    y = solve_fixed_point(s.model, s.path, s.plan.window, fo);
  } else if (s.method == "pullback") {
    PullbackOptions po;
    po.pullback_time = c.pipeline.pullback_time;
    po.tol = c.pipeline.pullback_tol;
    y = pullback_estimate(s.model, s.path, s.plan.window, po);
  } else {
    EquilibriumOptions eo;
    eo.max_iter = std::max(c.run.max_iter, 1);
    y = equilibrium_point(s.model, eo);
  }
  StationaryReport& rep = y.report();
  rep.stationarity_residual = stationarity_residual(s.model, y, s.path, c.run.horizon);

  const int n = s.model.dim();
  json j = {{"stage", "stationary"},
            {"method", to_string(rep.method)},
            {"condition_mu", num(rep.condition_mu)},
            {"iterations", rep.iterations},
            {"iterate_distances", vec(rep.iterate_distances)},
            {"drift_tail_bound", num(rep.drift_tail_bound)},
            {"noise_tail_bound", num(rep.noise_tail_bound)},
            {"stationarity_residual", num(rep.stationarity_residual)},
            {"residual_horizon", num(c.run.horizon)},
            {"h", num(s.model.h())},
            {"y_at_origin", vec(y.coords_at(s.path, 0))}};
  if (!y.is_constant()) {
    j["window"] = {{"first_index", y.first_index()}, {"last_index", y.last_index()}};
  }
  if (!rep.sync_gap.empty()) {
    j["sync_final_gap"] = num(rep.sync_gap.back());
    j["sync_points"] = rep.sync_gap.size();
  }
  s.sink.json_file("stationary.json", j);

  CsvWriter csv(mode_header("k,t", "y", n));
  const std::int64_t half = s.model.steps_for(c.run.window);
  const std::int64_t lo = y.is_constant() ? 0 : std::max(-half, y.first_index() - s.path.anchor_steps());
  const std::int64_t hi = y.is_constant() ? 0 : std::min(half, y.last_index() - s.path.anchor_steps());
  for (std::int64_t k = lo; k <= hi; ++k) {
    csv.row(row_with({static_cast<double>(k), static_cast<double>(k) * s.model.h()}, y.coords_at(s.path, k)));
  }
  s.sink.csv_file("stationary.csv", csv);
  if (!rep.sync_gap.empty()) {
    CsvWriter gap({"t", "gap"});
    for (std::size_t i = 0; i < rep.sync_gap.size(); ++i) gap.row({rep.sync_times[i], rep.sync_gap[i]});
    s.sink.csv_file("sync_gap.csv", gap);
  }
  s.sink.binary_file("stationary.bin", [&](std::ostream& out) { y.save(out); });

  std::string line = "stationary: method " + to_string(rep.method) + ", residual " + fmt(rep.stationarity_residual);
  if (rep.iterations > 0) line += ", " + std::to_string(rep.iterations) + " iterations";
  s.summary.push_back(line);
  s.y = std::move(y);
}

void stage_spectrum(StageContext& s) {
  const auto& p = s.config.pipeline;
  LyapunovOptions lo;
  lo.horizon = p.lyapunov_horizon;
  lo.reorth_every = p.reorth_every;
  lo.count = p.lyapunov_count;
  lo.batches = p.batches;
  lo.zero_band = p.zero_band;
  LyapunovReport rep = lyapunov_qr(s.model, *s.y, s.path, lo);
  const GapInfo& gap = rep.gap;

  json j = {{"stage", "spectrum"},
            {"exponents", vec(rep.exponents)},
            {"std_errors", vec(rep.std_errors)},
            {"multiplicities", rep.multiplicities},
            {"hyperbolic", gap.hyperbolic},
            {"i0", gap.i0},
            {"lambda_i0", num(gap.lambda_i0)},
            {"lambda_i0_minus_1", num(gap.lambda_i0_minus_1)},
            {"unstable_dim", gap.unstable_dim},
            {"offending", gap.offending},
            {"qr_meta", {{"horizon", num(rep.horizon)}, {"reorth_every", rep.reorth_every}, {"h", num(rep.h)},
                         {"batches", rep.batches}}}};

  CsvWriter series(mode_header("t", "lambda", static_cast<int>(rep.exponents.size())));
  for (std::size_t i = 0; i < rep.series_times.size(); ++i) {
    std::vector<double> r{rep.series_times[i]};
    r.insert(r.end(), rep.series[i].begin(), rep.series[i].end());
    series.row(r);
  }

  std::string line = "spectrum: exponents";
  for (double e : rep.exponents) line += " " + fmt(e);
  if (gap.hyperbolic) {
    SplitOptions so;
    so.unstable_dim = gap.unstable_dim;
    so.initial_horizon = p.split_initial;
    so.max_horizon = p.split_max;
    so.tol = p.split_tol;
    Splitting split = split_subspaces(s.model, *s.y, s.path, so);
    auto history = [](const std::vector<SubspaceConvergence>& h) {
      json out = json::array();
      for (const auto& e : h) out.push_back({{"horizon", num(e.horizon)}, {"angle", num(e.angle)}});
      return out;
    };
    j["splitting"] = {{"stable_basis", mat(split.stable_basis)},
                      {"unstable_basis", mat(split.unstable_basis)},
                      {"min_angle", num(split.min_angle)},
                      {"stable_history", history(split.stable_history)},
                      {"unstable_history", history(split.unstable_history)}};

    DichotomyOptions dopt;
    dopt.delta1 = p.delta1.value_or(std::isfinite(gap.lambda_i0_minus_1) ? gap.lambda_i0_minus_1 / 2.0 : 0.5);
    dopt.delta2 = p.delta2.value_or(std::isfinite(gap.lambda_i0) ? -gap.lambda_i0 / 2.0 : 0.5);
    dopt.horizon = p.dichotomy_horizon;
    dopt.random_samples = p.dichotomy_samples;
    dopt.seed = s.config.run.seed;
    DichotomyReport d = dichotomy_check(s.model, *s.y, s.path, split, dopt);
    json samples = json::array();
    CsvWriter dcsv({"sample", "stable", "tau", "finite"});
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
      const auto& e = d.samples[i];
      const bool stable = e.side == Subspace::plus;
      samples.push_back({{"side", stable ? "stable" : "unstable"}, {"tau", num(e.tau)}, {"finite", e.finite}});
      dcsv.row({static_cast<double>(i), stable ? 1.0 : 0.0, e.tau, e.finite ? 1.0 : 0.0});
    }
    j["dichotomy"] = {{"delta1", num(dopt.delta1)},
                      {"delta2", num(dopt.delta2)},
                      {"horizon", num(dopt.horizon)},
                      {"max_tau_unstable", num(d.max_tau_unstable)},
                      {"max_tau_stable", num(d.max_tau_stable)},
                      {"violations", d.violations},
                      {"filtered", d.filtered},
                      {"samples", samples}};
    s.sink.csv_file("dichotomy.csv", dcsv);
    line += ", unstable dim " + std::to_string(gap.unstable_dim) + ", dichotomy violations " +
            std::to_string(d.violations);
    s.split = std::move(split);
  } else {
    line += ", not hyperbolic";
  }
  s.sink.json_file("spectrum.json", j);
  s.sink.csv_file("lyapunov_series.csv", series);
  s.summary.push_back(line);
  s.spectrum = std::move(rep);
}

void stage_manifolds(StageContext& s) {
  const GapInfo& gap = s.spectrum->gap;
  if (!gap.hyperbolic || !s.split) {
    throw Error(ErrorCode::not_hyperbolic,
                "exponent " + std::to_string(gap.offending + 1) + " lies within the zero band; the manifolds stage "
                "needs a hyperbolic spectrum");
  }
  const auto& p = s.config.pipeline;
  ManifoldParams params = ManifoldParams::from_gap(gap);
  if (p.rho1) params.rho1 = *p.rho1;
  if (p.rho2) params.rho2 = *p.rho2;
  if (p.beta1) params.beta1 = *p.beta1;
  if (p.beta2) params.beta2 = *p.beta2;
  if (p.eps1) params.eps1 = *p.eps1;
  if (p.eps2) params.eps2 = *p.eps2;
  params.n_max = p.n_max;
  params.t_back = p.t_back;
  params.chain_depth = p.chain_depth;
  params.validate();

  const int n = s.model.dim();
  Eigen::MatrixXd unstable_past(n, 0);
  if (gap.unstable_dim > 0) {
    SplitOptions so;
    so.unstable_dim = gap.unstable_dim;
    so.initial_horizon = p.split_initial;
    so.max_horizon = p.split_max;
    so.tol = p.split_tol;
    so.want_stable = false;
    unstable_past = split_subspaces(s.model, *s.y, s.path.shifted(-p.t_back), so).unstable_basis;
  }
  AtlasOptions ao;
  ao.stable_points = p.stable_points;
  ao.unstable_points = p.unstable_points;
  ao.invariance_times = p.invariance_times;
  ao.seed = s.config.run.seed + 11;
  ao.threads = s.options.threads;
  const ManifoldAtlas atlas = build_atlas(s.model, *s.y, s.path, *s.split, unstable_past, params, ao);

  json stable = json::array();
  CsvWriter scsv(mode_header("sample,verdict", "x", n));
  int in = 0;
  for (std::size_t i = 0; i < atlas.stable.size(); ++i) {
    const auto& e = atlas.stable[i];
    in += e.evidence.verdict == StableVerdict::in;
    stable.push_back({{"verdict", to_string(e.evidence.verdict)},
                      {"first_failure", e.evidence.first_failure},
                      {"decay_rate", num(e.decay_rate)},
                      {"offset", num((e.point - atlas.anchor).norm())}});
    const double code = e.evidence.verdict == StableVerdict::in ? 1.0 : e.evidence.verdict == StableVerdict::out ? 0.0 : 0.5;
    scsv.row(row_with({static_cast<double>(i), code}, e.point));
  }
  json unstable = json::array();
  CsvWriter ucsv(mode_header("sample", "x", n));
  CsvWriter chains({"sample", "n", "distance"});
  for (std::size_t i = 0; i < atlas.unstable.size(); ++i) {
    const auto& u = atlas.unstable[i];
    json entry = {{"offset", num(u.offset)}, {"shrinks", u.shrinks}, {"depth", u.chain.depth()},
                  {"truncated", u.chain.truncated}};
    try {
      entry["backward_rate"] = fit_json(unstable_backward_rate(u.chain, params.noise_floor));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::chain_too_short && e.code() != ErrorCode::series_too_short) throw;
    }
    unstable.push_back(entry);
    ucsv.row(row_with({static_cast<double>(i)}, u.point));
    for (std::size_t k = 0; k < u.chain.distances.size(); ++k) {
      chains.row({static_cast<double>(i), static_cast<double>(k), u.chain.distances[k]});
    }
  }
  const auto& t = atlas.tangency;
  json j = {{"stage", "manifolds"},
            {"anchor", vec(atlas.anchor)},
            {"params", {{"rho1", num(params.rho1)}, {"rho2", num(params.rho2)}, {"beta1", num(params.beta1)},
                        {"beta2", num(params.beta2)}, {"eps1", num(params.eps1)}, {"eps2", num(params.eps2)},
                        {"lambda_i0", num(params.lambda_i0)}, {"lambda_i0_minus_1", num(params.lambda_i0_minus_1)},
                        {"n_max", params.n_max}, {"t_back", num(params.t_back)}, {"chain_depth", params.chain_depth}}},
            {"stable_samples", stable},
            {"stable_in", in},
            {"unstable_samples", unstable},
            {"tangency", {{"stable_graph", graph_json(t.stable)},
                          {"unstable_graph", graph_json(t.unstable)},
                          {"stable_dim", t.stable_dim},
                          {"unstable_dim", t.unstable_dim},
                          {"dims_sum_ok", t.dims_sum_ok},
                          {"min_angle", num(t.min_angle)},
                          {"angle_floor", num(t.angle_floor)},
                          {"transversal", t.transversal}}}};
  if (!atlas.invariance.t.empty()) {
    j["invariance"] = {{"t", vec(atlas.invariance.t)},
                       {"fraction", vec(atlas.invariance.fraction)},
                       {"in", atlas.invariance.in},
                       {"out", atlas.invariance.out},
                       {"boundary", atlas.invariance.boundary},
                       {"tau1", num(atlas.invariance.tau1)}};
  }
  if (atlas.has_lipschitz) j["lipschitz"] = fit_json(atlas.lipschitz.fit);
  s.sink.json_file("manifolds.json", j);
  s.sink.csv_file("stable_points.csv", scsv);
  s.sink.csv_file("unstable_points.csv", ucsv);
  s.sink.csv_file("unstable_chains.csv", chains);

  std::string line = "manifolds: " + std::to_string(in) + "/" + std::to_string(atlas.stable.size()) +
                     " stable samples in, " + std::to_string(atlas.unstable.size()) + " unstable samples";
  if (t.stable.quadratic.size() > 0 && t.stable.samples > 0) {
    line += ", stable graph quadratic " + fmt(t.stable.quadratic(0, 0));
  }
  s.summary.push_back(line);
}

}  // namespace

RunResult run_pipeline(ExperimentConfig config, const RunOptions& options) {
  RunResult result;
  try {
    if (options.seed) config.run.seed = *options.seed;
    if (options.out_dir) config.output.directory = *options.out_dir;
    validate_config(config);
  } catch (const Error& e) {
    result.exit_code = exit_status_for(e.code());
    result.status = e.what();
    return result;
  }

  const fs::path dir(config.output.directory);
  result.out_dir = dir.string();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    result.exit_code = exit_stage_failure;
    result.status = "io_error: cannot create '" + dir.string() + "': " + ec.message();
    return result;
  }
  std::optional<DirectoryLock> lock;
  try {
    lock.emplace(dir);
  } catch (const Error& e) {
    result.exit_code = exit_stage_failure;
    result.status = e.what();
    return result;
  }

  ArtifactSink sink(dir, config.output.formats);
  // The recorded config omits the output location so reruns into different
  // directories produce identical manifests.
  ExperimentConfig recorded = config;
  recorded.output.directory = ".";
  const std::string config_text = serialize_config(recorded);
  sink.write("config.txt", config_text);
  std::string current = "setup";
  try {
    const SemiflowModel model = build_model(config);
    std::string method = config.pipeline.stationary_method;
    if (method == "auto") method = auto_method(model);
    const Plan plan = make_plan(config, model, method);
    StageContext ctx{config, options, model, {}, plan, method, sink, result.summary, {}, {}, {}};
    ctx.path = make_path(model, model.coupling(), plan.cell_lo, plan.cell_hi, config.run.seed);

    const std::vector<std::pair<std::string, std::function<void(StageContext&)>>> stages = {
        {"simulate", stage_simulate},
        {"stationary", stage_stationary},
        {"spectrum", stage_spectrum},
        {"manifolds", stage_manifolds},
    };
    for (const auto& [name, run] : stages) {
      if (!config.has_stage(name)) continue;
      current = name;
      log_line(options, "[" + name + "] running");
      run(ctx);
      log_line(options, "[" + name + "] done: " + result.summary.back());
    }
    result.status = "ok";
  } catch (const Error& e) {
    result.exit_code = exit_status_for(e.code());
    result.status = "stage " + current + " failed: " + e.what();
    log_line(options, "[" + current + "] " + result.status);
  } catch (const std::exception& e) {
    result.exit_code = exit_stage_failure;
    result.status = "stage " + current + " failed: " + e.what();
    log_line(options, "[" + current + "] " + result.status);
  }

  json manifest = {{"format", "rdskit-manifest"},
                   {"version", 1},
                   {"config_sha256", sha256_hex(config_text)},
                   {"seed", config.run.seed},
                   {"stages", config.pipeline.stages},
                   {"status", result.status},
                   {"exit_code", result.exit_code},
                   {"artifacts", sink.entries()}};
  try {
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    out << manifest.dump(2) << "\n";
    if (!out) throw Error(ErrorCode::io_error, "cannot write manifest.json");
  } catch (const Error& e) {
    if (result.exit_code == exit_ok) {
      result.exit_code = exit_stage_failure;
      result.status = e.what();
    }
  }
  result.artifacts = sink.names();
  result.artifacts.push_back("manifest.json");
  return result;
}

bool VerifyResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed || c.skipped; });
}

std::string format_verify_table(const VerifyResult& result) {
  std::ostringstream out;
  out << std::left << std::setw(22) << "check" << std::setw(14) << "measured" << std::setw(14) << "threshold"
      << "result\n";
  for (const auto& c : result.checks) {
    out << std::left << std::setw(22) << c.name;
    if (c.skipped) {
      out << std::setw(14) << "-" << std::setw(14) << "-" << "SKIP";
    } else {
      std::ostringstream m;
      std::ostringstream t;
      m << std::setprecision(3) << std::scientific << c.measured;
      t << std::setprecision(3) << std::scientific << c.threshold;
      out << std::setw(14) << m.str() << std::setw(14) << t.str() << (c.passed ? "PASS" : "FAIL");
    }
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << "\n";
  }
  out << (result.passed() ? "all checks passed\n" : "some checks FAILED\n");
  return out.str();
}

namespace {

VerifyCheck make_check(std::string name, double measured, double threshold, std::string detail = {}) {
  VerifyCheck c;
  c.name = std::move(name);
  c.measured = measured;
  c.threshold = threshold;
  c.passed = std::isfinite(measured) && measured <= threshold;
  c.detail = std::move(detail);
  return c;
}

VerifyCheck skipped(std::string name, std::string why) {
  VerifyCheck c;
  c.name = std::move(name);
  c.skipped = true;
  c.detail = std::move(why);
  return c;
}

struct Trial {
  std::int64_t k1 = 0;
  std::int64_t k2 = 0;
  Eigen::VectorXd x;
};

}  // namespace

VerifyResult verify_suite(ExperimentConfig config, const RunOptions& options) {
  if (options.seed) config.run.seed = *options.seed;
  validate_config(config);
  const auto& v = config.verify;
  const SemiflowModel model = build_model(config);
  const int n = model.dim();
  const double h = model.h();
  const std::int64_t kmax = std::max<std::int64_t>(1, model.steps_for(v.max_time));
  const std::int64_t ksum = model.steps_for(v.sum_rule_horizon);
  const WienerPath path = make_path(model, model.coupling(), -2 * kmax - 8, 2 * kmax + ksum + 8, config.run.seed);

  std::mt19937_64 rng(config.run.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::int64_t> steps(1, kmax);
  std::normal_distribution<double> normal(0.0, 0.5);
  std::vector<Trial> trials(static_cast<std::size_t>(v.samples));
  for (auto& t : trials) {
    t.k1 = steps(rng);
    t.k2 = steps(rng);
    t.x = Eigen::VectorXd(n);
    for (int i = 0; i < n; ++i) t.x[i] = normal(rng);
  }
  const std::size_t count = trials.size();
  VerifyResult result;

  {
    double worst = 0.0;
    for (const auto& t : trials) {
      const WienerPath a = path.shifted_steps(t.k1).shifted_steps(-t.k2);
      const WienerPath b = path.shifted_steps(t.k1 - t.k2);
      worst = std::max(worst, a.max_increment_difference(b));
      for (int m = 0; m < path.mode_count(); ++m) {
        const double s = static_cast<double>(t.k2) * h;
        const double lhs = path.shifted_steps(t.k1).value(m, s);
        const double rhs = path.value(m, static_cast<double>(t.k1) * h + s) - path.value(m, static_cast<double>(t.k1) * h);
        worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
      }
    }
    result.checks.push_back(make_check("shift_group_law", worst, v.shift_tol));
  }

  // A cocycle orbit from a fixed state; it anchors the centered cocycle
  // Z(t, z) = U(t, z + y(0)) - y(t) and the sum-rule test below.
  const auto orbit = evolve_steps(model, model.op().vec(Eigen::VectorXd::Constant(n, 0.7)), path, std::max(2 * kmax, ksum) + 1);
  std::vector<Eigen::VectorXd> states;
  for (const auto& s : orbit.states) states.push_back(s.coords());
  const StationaryPoint track(h, model.op().basis_id(), path.seed(), path.anchor_steps(), 0, states);

  // The raw law replays identical arithmetic; the centered one adds and
  // removes the orbit, so its residual carries genuine round-off.
  std::vector<double> raw(count, 0.0);
  std::vector<double> centered(count, 0.0);
  parallel_for(count, options.threads, [&](std::size_t i) {
    const auto& t = trials[i];
    const ModeVec x = model.op().vec(t.x);
    const ModeVec whole = cocycle_eval_steps(model, t.k1 + t.k2, x, path);
    const ModeVec first = cocycle_eval_steps(model, t.k1, x, path);
    const ModeVec composed = cocycle_eval_steps(model, t.k2, first, path.shifted_steps(t.k1));
    raw[i] = (whole - composed).norm() / (1.0 + whole.norm());
    const double t1 = static_cast<double>(t.k1) * h;
    const double t2 = static_cast<double>(t.k2) * h;
    const ModeVec z_whole = centered_eval(model, track, t1 + t2, x, path);
    const ModeVec z_first = centered_eval(model, track, t1, x, path);
    const ModeVec z_composed = centered_eval(model, track, t2, z_first, path.shifted_steps(t.k1));
    centered[i] = (z_whole - z_composed).norm() / (1.0 + z_whole.norm());
  });
  const double raw_worst = max_or(raw, 0.0);
  const double centered_worst = max_or(centered, 0.0);
  result.checks.push_back(make_check("cocycle_law", std::max(raw_worst, centered_worst), v.cocycle_tol,
                                     "raw " + fmt(raw_worst) + ", centered " + fmt(centered_worst)));

  if (!model.nonlinearity().differentiable()) {
    result.checks.push_back(skipped("jacobian_cocycle", "F has no derivative"));
    result.checks.push_back(skipped("jacobian_fd", "F has no derivative"));
  } else {
    std::vector<double> jac(count, 0.0);
    std::vector<double> fd(count, 0.0);
    parallel_for(count, options.threads, [&](std::size_t i) {
      const auto& t = trials[i];
      const ModeVec x = model.op().vec(t.x);
      const auto [u1, d1] = tangent_eval_steps(model, t.k1, x, path);
      const auto [u2, d2] = tangent_eval_steps(model, t.k2, u1, path.shifted_steps(t.k1));
      const auto whole = tangent_eval_steps(model, t.k1 + t.k2, x, path);
      const Eigen::MatrixXd product = d2 * d1;
      jac[i] = (whole.second - product).norm() / (1.0 + whole.second.norm());

      Eigen::MatrixXd numeric(n, n);
      const double eps = 1e-6 * (1.0 + t.x.norm());
      for (int col = 0; col < n; ++col) {
        Eigen::VectorXd xp = t.x;
        Eigen::VectorXd xm = t.x;
        xp[col] += eps;
        xm[col] -= eps;
        numeric.col(col) = (cocycle_eval_steps(model, t.k1, model.op().vec(xp), path).coords() -
                            cocycle_eval_steps(model, t.k1, model.op().vec(xm), path).coords()) /
                           (2.0 * eps);
      }
      fd[i] = (numeric - d1).norm() / (1.0 + d1.norm());
    });
    result.checks.push_back(make_check("jacobian_cocycle", max_or(jac, 0.0), v.jacobian_tol));
    result.checks.push_back(make_check("jacobian_fd", max_or(fd, 0.0), v.fd_tol));
  }

  const auto& f = model.nonlinearity();
  if (model.coupling() == NoiseCoupling::diagonal_multiplicative || !f.globally_bounded() ||
      !model.op().has_splitting() || !(contraction_constant(model.op(), f.lipschitz) < 1.0)) {
    result.checks.push_back(skipped("contraction_ratios", "contraction condition does not apply"));
  } else {
    const double cmu = contraction_constant(model.op(), f.lipschitz);
    const ShiftWindow window = ShiftWindow::between(model, -1.0, 1.0);
    const auto cells = fixed_point_cells(model, window, config.run.tail_tol);
    const WienerPath fp_path = make_path(model, model.coupling(), cells.first - 4, cells.second + 4, config.run.seed);
    FixedPointOptions fo;
    fo.tol = config.run.tol;
    fo.max_iter = config.run.max_iter;
    fo.tail_tol = config.run.tail_tol;
    const StationaryPoint y = solve_fixed_point(model, fp_path, window, fo);
    const auto& d = y.report().iterate_distances;
    double worst = 0.0;
    for (std::size_t j = 0; j + 1 < d.size(); ++j) {
      if (d[j] > 1e-12) worst = std::max(worst, d[j + 1] / d[j]);
    }
    result.checks.push_back(make_check("contraction_ratios", worst, cmu + v.contraction_slack,
                                       "c = " + fmt(cmu) + ", " + std::to_string(d.size()) + " iterations"));
  }

  if (!model.nonlinearity().differentiable()) {
    result.checks.push_back(skipped("qr_sum_rule", "F has no derivative"));
  } else {
    // Sum of exponents along the orbit against the accumulated log |det| of
    // the per-step Jacobians.
    LyapunovOptions lo;
    lo.horizon = v.sum_rule_horizon;
    lo.batches = 10;
    const LyapunovReport rep = lyapunov_qr(model, track, path, lo);
    double sum = 0.0;
    for (double e : rep.exponents) sum += e;
    double logdet = 0.0;
    for (std::int64_t k = 0; k < ksum; ++k) {
      Eigen::VectorXd u = states[static_cast<std::size_t>(k)];
      Eigen::MatrixXd jstep = Eigen::MatrixXd::Identity(n, n);
      model.step(u, path.cell(k), &jstep);
      logdet += std::log(std::abs(jstep.fullPivLu().determinant()));
    }
    const double expected = logdet / v.sum_rule_horizon;
    result.checks.push_back(make_check("qr_sum_rule", std::abs(sum - expected) / std::max(1.0, std::abs(expected)),
                                       v.sum_rule_tol, "sum " + fmt(sum) + " vs " + fmt(expected)));
  }
  return result;
}

}  // namespace rdskit
