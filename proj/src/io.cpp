#include "certirl/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "certirl/errors.hpp"

namespace certirl {

namespace {

using json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- json encoding of the polynomial/system/config tree -------------------

json poly_json(const Polynomial& p) {
  json terms = json::array();
  for (const auto& [m, c] : p.terms()) {
    if (!c.dec.empty())
      throw ConfigError("cannot serialize a polynomial carrying decision symbols");
    json t;
    t["e"] = m.e;
    t["c0"] = c.base.c0;
    if (!c.base.lin.empty()) {
      json lin = json::array();
      for (const auto& [idx, v] : c.base.lin) lin.push_back({idx, v});
      t["lin"] = lin;
    }
    terms.push_back(std::move(t));
  }
  return json{{"n", p.nvars()}, {"terms", std::move(terms)}};
}

Polynomial poly_from_json(const json& j) {
  Polynomial p(j.at("n").get<int>());
  for (const auto& t : j.at("terms")) {
    ParamExpr c = ParamExpr::constant(t.at("c0").get<double>());
    if (t.contains("lin"))
      for (const auto& pair : t.at("lin"))
        c.base.lin[pair.at(0).get<int>()] = pair.at(1).get<double>();
    p.add_term(Monomial{t.at("e").get<std::vector<int>>()}, c);
  }
  return p;
}

json set_json(const SemialgebraicSet& s) {
  json j;
  switch (s.shape) {
    case SemialgebraicSet::Shape::ball: j["shape"] = "ball"; break;
    case SemialgebraicSet::Shape::box: j["shape"] = "box"; break;
    case SemialgebraicSet::Shape::generic: j["shape"] = "generic"; break;
  }
  if (!s.center.empty()) j["center"] = s.center;
  if (s.radius != 0.0) j["radius"] = s.radius;
  if (!s.lo.empty()) j["lo"] = s.lo;
  if (!s.hi.empty()) j["hi"] = s.hi;
  json ineqs = json::array();
  for (const auto& g : s.ineqs) ineqs.push_back(poly_json(g));
  j["ineqs"] = std::move(ineqs);
  return j;
}

SemialgebraicSet set_from_json(const json& j) {
  SemialgebraicSet s;
  const std::string shape = j.at("shape").get<std::string>();
  if (shape == "ball")
    s.shape = SemialgebraicSet::Shape::ball;
  else if (shape == "box")
    s.shape = SemialgebraicSet::Shape::box;
  else if (shape == "generic")
    s.shape = SemialgebraicSet::Shape::generic;
  else
    throw ConfigError("unknown set shape '" + shape + "'");
  if (j.contains("center")) s.center = j.at("center").get<std::vector<double>>();
  if (j.contains("radius")) s.radius = j.at("radius").get<double>();
  if (j.contains("lo")) s.lo = j.at("lo").get<std::vector<double>>();
  if (j.contains("hi")) s.hi = j.at("hi").get<std::vector<double>>();
  for (const auto& g : j.at("ineqs")) s.ineqs.push_back(poly_from_json(g));
  return s;
}

json system_json(const DynamicalSystem& sys) {
  json j;
  j["name"] = sys.name;
  j["state"] = sys.state;
  j["inputs"] = sys.inputs;
  json f = json::array();
  for (const auto& fi : sys.f) f.push_back(poly_json(fi));
  j["f"] = std::move(f);
  j["n_alpha"] = sys.n_alpha;
  j["alpha_offset"] = sys.alpha_offset;
  json bounds = json::array();
  for (const auto& b : sys.alpha_bounds) bounds.push_back({b[0], b[1]});
  j["alpha_bounds"] = std::move(bounds);
  j["alpha_truth"] = sys.alpha_truth;
  j["goal"] = sys.goal;
  j["X"] = set_json(sys.X);
  j["X0"] = set_json(sys.X0);
  if (sys.Xu) j["Xu"] = set_json(*sys.Xu);
  j["n_original"] = sys.n_original;
  j["trig_of_original"] = sys.trig_of_original;
  return j;
}

DynamicalSystem system_from_json(const json& j) {
  DynamicalSystem sys;
  sys.name = j.at("name").get<std::string>();
  sys.state = j.at("state").get<std::vector<std::string>>();
  sys.inputs = j.at("inputs").get<std::vector<std::string>>();
  for (const auto& fi : j.at("f")) sys.f.push_back(poly_from_json(fi));
  sys.n_alpha = j.at("n_alpha").get<int>();
  sys.alpha_offset = j.at("alpha_offset").get<int>();
  for (const auto& b : j.at("alpha_bounds"))
    sys.alpha_bounds.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
  sys.alpha_truth = j.at("alpha_truth").get<std::vector<double>>();
  sys.goal = j.at("goal").get<std::vector<double>>();
  sys.X = set_from_json(j.at("X"));
  sys.X0 = set_from_json(j.at("X0"));
  if (j.contains("Xu")) sys.Xu = set_from_json(j.at("Xu"));
  sys.n_original = j.at("n_original").get<int>();
  sys.trig_of_original = j.at("trig_of_original").get<std::vector<int>>();
  return sys;
}

json controller_json(const Controller& ctrl) {
  json basis = json::array();
  for (const auto& m : ctrl.basis) basis.push_back(m.e);
  json theta = json::array();
  for (int i = 0; i < ctrl.theta.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < ctrl.theta.cols(); ++k) row.push_back(ctrl.theta(i, k));
    theta.push_back(std::move(row));
  }
  return json{{"basis", std::move(basis)}, {"n_inputs", ctrl.n_inputs},
              {"theta", std::move(theta)}};
}

Controller controller_from_json(const json& j) {
  Controller ctrl;
  for (const auto& e : j.at("basis")) ctrl.basis.push_back(Monomial{e.get<std::vector<int>>()});
  ctrl.n_inputs = j.at("n_inputs").get<int>();
  const auto& rows = j.at("theta");
  ctrl.theta = Eigen::MatrixXd::Zero(ctrl.n_inputs, ctrl.basis.size());
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    const auto& row = rows[i];
    for (int k = 0; k < static_cast<int>(row.size()); ++k)
      ctrl.theta(i, k) = row[k].get<double>();
  }
  return ctrl;
}

const char* backend_name(Backend b) { return b == Backend::sos ? "sos" : "handelman"; }
Backend backend_from(const std::string& s) {
  if (s == "sos") return Backend::sos;
  if (s == "handelman") return Backend::handelman;
  throw ConfigError("unknown backend '" + s + "'");
}

const char* kind_name(CertificateKind k) {
  return k == CertificateKind::barrier ? "barrier" : "lyapunov";
}
CertificateKind kind_from(const std::string& s) {
  if (s == "barrier") return CertificateKind::barrier;
  if (s == "lyapunov") return CertificateKind::lyapunov;
  throw ConfigError("unknown certificate kind '" + s + "'");
}

json config_json(const TrainConfig& c) {
  json certs = json::array();
  for (const auto& r : c.certs) certs.push_back({{"kind", kind_name(r.kind)}, {"degree", r.degree}});
  json j;
  j["step"] = c.step;
  j["penalty0"] = c.penalty0;
  j["penalty_growth"] = c.penalty_growth;
  j["penalty_cap"] = c.penalty_cap;
  j["max_iters"] = c.max_iters;
  j["backend"] = backend_name(c.backend);
  j["certs"] = std::move(certs);
  j["c_tol"] = c.c_tol;
  j["lambda_rate"] = c.lambda_rate;
  j["decrease_margin"] = c.decrease_margin;
  j["shell_delta"] = c.shell_delta;
  j["handelman_degree"] = c.handelman_degree;
  j["sos_mult_degree"] = c.sos_mult_degree;
  j["strict_eps"] = c.strict_eps;
  j["horizon"] = c.horizon;
  j["rollouts"] = c.rollouts;
  j["gamma"] = c.gamma;
  j["dt"] = c.dt;
  j["id_lr"] = c.id_lr;
  j["u_weight"] = c.u_weight;
  j["shield"] = c.shield;
  j["seed"] = c.seed;
  j["solver_tol"] = c.solver_tol;
  j["verify_samples"] = c.verify_samples;
  j["fd_fallback"] = c.fd_fallback;
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.step = j.at("step").get<double>();
  c.penalty0 = j.at("penalty0").get<double>();
  c.penalty_growth = j.at("penalty_growth").get<double>();
  c.penalty_cap = j.at("penalty_cap").get<double>();
  c.max_iters = j.at("max_iters").get<int>();
  c.backend = backend_from(j.at("backend").get<std::string>());
  c.certs.clear();
  for (const auto& r : j.at("certs"))
    c.certs.push_back({kind_from(r.at("kind").get<std::string>()), r.at("degree").get<int>()});
  c.c_tol = j.at("c_tol").get<double>();
  c.lambda_rate = j.at("lambda_rate").get<double>();
  c.decrease_margin = j.at("decrease_margin").get<double>();
  c.shell_delta = j.at("shell_delta").get<double>();
  c.handelman_degree = j.at("handelman_degree").get<int>();
  c.sos_mult_degree = j.at("sos_mult_degree").get<int>();
  c.strict_eps = j.at("strict_eps").get<double>();
  c.horizon = j.at("horizon").get<int>();
  c.rollouts = j.at("rollouts").get<int>();
  c.gamma = j.at("gamma").get<double>();
  c.dt = j.at("dt").get<double>();
  c.id_lr = j.at("id_lr").get<double>();
  c.u_weight = j.at("u_weight").get<double>();
  c.shield = j.at("shield").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.solver_tol = j.at("solver_tol").get<double>();
  c.verify_samples = j.at("verify_samples").get<long long>();
  c.fd_fallback = j.at("fd_fallback").get<bool>();
  return c;
}

// ---- line helpers for the text artifacts -----------------------------------

std::string next_line(std::istream& is, const char* what) {
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return line;
  }
  throw ConfigError(std::string("unexpected end of file, expected ") + what);
}

std::vector<double> parse_doubles(const std::string& line, int expect, const char* what) {
  std::istringstream ss(line);
  std::vector<double> out;
  double v;
  while (ss >> v) out.push_back(v);
  if (expect >= 0 && static_cast<int>(out.size()) != expect)
    throw ConfigError(std::string(what) + ": expected " + std::to_string(expect) +
                      " numbers, got " + std::to_string(out.size()));
  return out;
}

Monomial parse_mono(const std::string& line, int nvars) {
  std::istringstream ss(line);
  Monomial m;
  int e;
  while (ss >> e) m.e.push_back(e);
  if (static_cast<int>(m.e.size()) != nvars)
    throw ConfigError("monomial line has " + std::to_string(m.e.size()) +
                      " exponents, expected " + std::to_string(nvars));
  return m;
}

// "key value..." -> value..., enforcing the key
std::string expect_kv(std::istream& is, const std::string& key) {
  std::string line = next_line(is, key.c_str());
  if (line.size() < key.size() || line.compare(0, key.size(), key) != 0)
    throw ConfigError("expected '" + key + "', got '" + line + "'");
  std::string rest = line.substr(key.size());
  const size_t pos = rest.find_first_not_of(' ');
  return pos == std::string::npos ? std::string() : rest.substr(pos);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write '" + path + "'");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read '" + path + "'");
  return is;
}

}  // namespace

// ---- benchmark specs -------------------------------------------------------

void save_benchmark(const BenchmarkSpec& spec, const std::string& path) {
  json j;
  j["format"] = "certirl benchmark v1";
  j["name"] = spec.name;
  j["system"] = system_json(spec.sys);
  j["controller"] = controller_json(spec.ctrl);
  j["config"] = config_json(spec.config);
  j["lp_shell_delta"] = spec.lp_shell_delta;
  j["lp_degree"] = spec.lp_degree;
  j["notes"] = spec.notes;
  auto os = open_out(path);
  os << j.dump(2) << "\n";
}

BenchmarkSpec load_benchmark(const std::string& path) {
  auto is = open_in(path);
  json j;
  try {
    is >> j;
    if (j.at("format").get<std::string>() != "certirl benchmark v1")
      throw ConfigError("'" + path + "' is not a benchmark spec");
    BenchmarkSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.sys = system_from_json(j.at("system"));
    spec.ctrl = controller_from_json(j.at("controller"));
    spec.config = config_from_json(j.at("config"));
    spec.lp_shell_delta = j.at("lp_shell_delta").get<double>();
    spec.lp_degree = j.at("lp_degree").get<int>();
    spec.notes = j.at("notes").get<std::string>();
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError("malformed benchmark '" + path + "': " + e.what());
  }
}

BenchmarkSpec resolve_benchmark(const std::string& name_or_path) {
  namespace fs = std::filesystem;
  if (fs::exists(name_or_path) && fs::is_regular_file(name_or_path))
    return load_benchmark(name_or_path);
  std::vector<std::string> dirs;
  if (const char* env = std::getenv("CERTIRL_BENCH_DIR")) dirs.push_back(env);
#ifdef CERTIRL_BENCH_DIR
  dirs.push_back(CERTIRL_BENCH_DIR);
#endif
  for (const auto& d : dirs) {
    const std::string candidate = d + "/" + name_or_path + ".json";
    if (fs::exists(candidate)) return load_benchmark(candidate);
  }
  return builtin(name_or_path);  // throws UnknownBenchmark with the name
}

// ---- controller artifact ----------------------------------------------------

void write_controller(std::ostream& os, const Controller& ctrl) {
  const int nvars = ctrl.basis.empty() ? 0 : static_cast<int>(ctrl.basis.front().e.size());
  os << "certirl controller v1\n";
  os << "inputs " << ctrl.n_inputs << "\n";
  os << "nvars " << nvars << "\n";
  os << "basis " << ctrl.basis.size() << "\n";
  for (const auto& m : ctrl.basis) {
    for (size_t i = 0; i < m.e.size(); ++i) os << (i ? " " : "") << m.e[i];
    os << "\n";
  }
  os << "theta\n";
  for (int i = 0; i < ctrl.theta.rows(); ++i) {
    for (int k = 0; k < ctrl.theta.cols(); ++k) os << (k ? " " : "") << fmt(ctrl.theta(i, k));
    os << "\n";
  }
  os << "end\n";
}

Controller read_controller(std::istream& is) {
  if (next_line(is, "header") != "certirl controller v1")
    throw ConfigError("not a controller file");
  Controller ctrl;
  ctrl.n_inputs = std::stoi(expect_kv(is, "inputs"));
  const int nvars = std::stoi(expect_kv(is, "nvars"));
  const int nb = std::stoi(expect_kv(is, "basis"));
  for (int k = 0; k < nb; ++k) ctrl.basis.push_back(parse_mono(next_line(is, "basis monomial"), nvars));
  if (next_line(is, "theta") != "theta") throw ConfigError("expected 'theta'");
  ctrl.theta = Eigen::MatrixXd::Zero(ctrl.n_inputs, nb);
  for (int i = 0; i < ctrl.n_inputs; ++i) {
    auto row = parse_doubles(next_line(is, "theta row"), nb, "theta row");
    for (int k = 0; k < nb; ++k) ctrl.theta(i, k) = row[k];
  }
  if (next_line(is, "end") != "end") throw ConfigError("expected 'end'");
  return ctrl;
}

void save_controller(const Controller& ctrl, const std::string& path) {
  auto os = open_out(path);
  write_controller(os, ctrl);
}

Controller load_controller(const std::string& path) {
  auto is = open_in(path);
  return read_controller(is);
}

// ---- certificate artifact ----------------------------------------------------

void write_certificate(std::ostream& os, const Certificate& cert) {
  const int nvars = cert.tmpl.basis.empty() ? 0 : static_cast<int>(cert.tmpl.basis.front().e.size());
  os << "certirl certificate v1\n";
  os << "kind " << kind_name(cert.tmpl.kind) << "\n";
  os << "degree " << cert.tmpl.degree << "\n";
  os << "lambda_rate " << fmt(cert.tmpl.lambda_rate) << "\n";
  os << "backend " << backend_name(cert.backend) << "\n";
  os << "strict_eps " << fmt(cert.strict_eps) << "\n";
  os << "decrease_margin " << fmt(cert.cond_opts.decrease_margin) << "\n";
  os << "shell_delta " << fmt(cert.cond_opts.shell_delta) << "\n";
  os << "nvars " << nvars << "\n";
  os << "alpha " << cert.alpha.size() << "\n";
  if (!cert.alpha.empty()) {
    for (size_t i = 0; i < cert.alpha.size(); ++i) os << (i ? " " : "") << fmt(cert.alpha[i]);
    os << "\n";
  }
  os << "basis " << cert.tmpl.basis.size() << "\n";
  for (const auto& m : cert.tmpl.basis) {
    for (size_t i = 0; i < m.e.size(); ++i) os << (i ? " " : "") << m.e[i];
    os << "\n";
  }
  os << "beta\n";
  for (size_t i = 0; i < cert.beta.size(); ++i) os << (i ? " " : "") << fmt(cert.beta[i]);
  os << "\n";
  os << "grams " << cert.grams.size() << "\n";
  for (const auto& g : cert.grams) {
    os << "gram " << g.condition << " " << g.ineq << " " << g.basis.size() << "\n";
    for (const auto& m : g.basis) {
      for (size_t i = 0; i < m.e.size(); ++i) os << (i ? " " : "") << m.e[i];
      os << "\n";
    }
    for (int r = 0; r < g.Q.rows(); ++r) {
      for (int cidx = 0; cidx < g.Q.cols(); ++cidx) os << (cidx ? " " : "") << fmt(g.Q(r, cidx));
      os << "\n";
    }
  }
  os << "lambdas " << cert.lambdas.size() << "\n";
  for (const auto& l : cert.lambdas) {
    os << "lambda " << l.condition << " " << fmt(l.weight);
    for (int p : l.powers) os << " " << p;
    os << "\n";
  }
  os << "end\n";
}

Certificate read_certificate(std::istream& is) {
  if (next_line(is, "header") != "certirl certificate v1")
    throw ConfigError("not a certificate file");
  Certificate cert;
  cert.tmpl.kind = kind_from(expect_kv(is, "kind"));
  cert.tmpl.degree = std::stoi(expect_kv(is, "degree"));
  cert.tmpl.lambda_rate = std::strtod(expect_kv(is, "lambda_rate").c_str(), nullptr);
  cert.backend = backend_from(expect_kv(is, "backend"));
  cert.strict_eps = std::strtod(expect_kv(is, "strict_eps").c_str(), nullptr);
  cert.cond_opts.decrease_margin = std::strtod(expect_kv(is, "decrease_margin").c_str(), nullptr);
  cert.cond_opts.shell_delta = std::strtod(expect_kv(is, "shell_delta").c_str(), nullptr);
  const int nvars = std::stoi(expect_kv(is, "nvars"));
  const int nalpha = std::stoi(expect_kv(is, "alpha"));
  if (nalpha > 0) cert.alpha = parse_doubles(next_line(is, "alpha values"), nalpha, "alpha");
  const int nb = std::stoi(expect_kv(is, "basis"));
  for (int k = 0; k < nb; ++k)
    cert.tmpl.basis.push_back(parse_mono(next_line(is, "basis monomial"), nvars));
  if (next_line(is, "beta") != "beta") throw ConfigError("expected 'beta'");
  cert.beta = parse_doubles(next_line(is, "beta values"), nb, "beta");
  const int ngrams = std::stoi(expect_kv(is, "grams"));
  for (int gi = 0; gi < ngrams; ++gi) {
    std::istringstream hdr(expect_kv(is, "gram"));
    Certificate::Gram g;
    int bsize = 0;
    if (!(hdr >> g.condition >> g.ineq >> bsize))
      throw ConfigError("malformed gram header");
    for (int k = 0; k < bsize; ++k)
      g.basis.push_back(parse_mono(next_line(is, "gram basis monomial"), nvars));
    g.Q = Eigen::MatrixXd::Zero(bsize, bsize);
    for (int r = 0; r < bsize; ++r) {
      auto row = parse_doubles(next_line(is, "gram row"), bsize, "gram row");
      for (int cidx = 0; cidx < bsize; ++cidx) g.Q(r, cidx) = row[cidx];
    }
    cert.grams.push_back(std::move(g));
  }
  const int nlam = std::stoi(expect_kv(is, "lambdas"));
  for (int li = 0; li < nlam; ++li) {
    std::istringstream ls(expect_kv(is, "lambda"));
    Certificate::Multiplier mult;
    if (!(ls >> mult.condition >> mult.weight)) throw ConfigError("malformed lambda line");
    int p;
    while (ls >> p) mult.powers.push_back(p);
    cert.lambdas.push_back(std::move(mult));
  }
  if (next_line(is, "end") != "end") throw ConfigError("expected 'end'");
  return cert;
}

void save_certificate(const Certificate& cert, const std::string& path) {
  auto os = open_out(path);
  write_certificate(os, cert);
}

Certificate load_certificate(const std::string& path) {
  auto is = open_in(path);
  return read_certificate(is);
}

// ---- csv artifacts -----------------------------------------------------------

void write_train_log(std::ostream& os, const std::vector<IterRow>& rows) {
  const size_t na = rows.empty() ? 0 : rows.front().alpha.size();
  os << "iteration,value,c_star,vtheta_norm,ctheta_norm,lambda_pen";
  for (size_t j = 0; j < na; ++j) os << ",alpha_" << j;
  os << "\n";
  for (const auto& r : rows) {
    os << r.iteration << "," << fmt(r.value) << "," << fmt(r.c_star) << ","
       << fmt(r.vtheta_norm) << "," << fmt(r.ctheta_norm) << "," << fmt(r.lambda_pen);
    for (double a : r.alpha) os << "," << fmt(a);
    os << "\n";
  }
}

void write_timings(std::ostream& os, const std::vector<TimingRow>& rows) {
  os << "iteration,rollout_seconds,solve_seconds,total_seconds\n";
  for (const auto& r : rows)
    os << r.iteration << "," << fmt(r.rollout_seconds) << "," << fmt(r.solve_seconds) << ","
       << fmt(r.total_seconds) << "\n";
}

void write_trajectories(std::ostream& os, const std::vector<Trajectory>& runs,
                        const std::vector<std::string>& state,
                        const std::vector<std::string>& inputs) {
  os << "run,t,time";
  for (const auto& s : state) os << "," << s;
  for (const auto& u : inputs) os << "," << u;
  os << ",reward,shielded\n";
  for (size_t r = 0; r < runs.size(); ++r) {
    const Trajectory& tr = runs[r];
    for (size_t t = 0; t < tr.x.size(); ++t) {
      os << r << "," << t << "," << fmt(static_cast<double>(t) * tr.dt);
      for (double v : tr.x[t]) os << "," << fmt(v);
      for (double v : tr.u[t]) os << "," << fmt(v);
      os << "," << fmt(tr.r[t]) << "," << (tr.terminated_by_shield ? 1 : 0) << "\n";
    }
  }
}

}  // namespace certirl
