#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ovl/curves.hpp"
#include "ovl/finite_kernel.hpp"
#include "ovl/limits.hpp"
#include "ovl/montecarlo.hpp"
#include "ovl/selftest.hpp"

using json = nlohmann::json;
using namespace ovl;

namespace {

std::string fmt(double v) {
  if (v == 0.0) v = 0.0;
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::string fmt_complex(cplx z) {
  return fmt(z.real()) + (std::signbit(z.imag()) ? "-" : "+") + fmt(std::abs(z.imag())) + "i";
}

double parse_double(std::string_view s, const std::string& what) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw validation_error("cannot parse '" + std::string(s) + "' as a number for " + what);
  return v;
}

// a, bi, a+bi, a-bi (no spaces)
cplx parse_complex(const std::string& s, const std::string& what) {
  if (s.empty()) throw validation_error("empty complex number for " + what);
  if (s.back() != 'i') return parse_double(s, what);
  const std::string body = s.substr(0, s.size() - 1);
  auto imag_part = [&](const std::string& t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    return parse_double(t, what);
  };
  for (std::size_t k = body.size(); k-- > 1;)
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E')
      return {parse_double(body.substr(0, k), what), imag_part(body.substr(k))};
  return {0.0, imag_part(body)};
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (s.back() == sep) out.emplace_back();
  return out;
}

std::vector<cplx> parse_complex_list(const json& j, const std::string& what) {
  std::vector<cplx> out;
  for (const auto& s : j) out.push_back(parse_complex(s.get<std::string>(), what));
  return out;
}

json complex_list(const std::string& csv, const std::string& what) {
  json out = json::array();
  for (const auto& s : split(csv, ',')) out.push_back(fmt_complex(parse_complex(s, what)));
  return out;
}

// ---------------------------------------------------------------- output

using Cell = std::variant<std::monostate, std::string, long long, double>;

class Writer {
public:
  Writer(std::ostream& os, std::string format, const json& config, std::vector<std::string> columns)
      : os_(os), jsonl_(format == "jsonl"), columns_(std::move(columns)) {
    if (jsonl_) {
      os_ << json{{"config", config}}.dump() << '\n';
    } else {
      os_ << "# " << config.dump() << '\n';
      for (std::size_t i = 0; i < columns_.size(); ++i) os_ << (i ? "," : "") << columns_[i];
      os_ << '\n';
    }
  }

  void row(const std::vector<Cell>& cells) {
    if (jsonl_) {
      json j = json::object();
      for (std::size_t i = 0; i < cells.size(); ++i)
        std::visit(
            [&](const auto& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, std::monostate>)
                j[columns_[i]] = nullptr;
              else
                j[columns_[i]] = v;
            },
            cells[i]);
      os_ << j.dump() << '\n';
      return;
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::string>)
              os_ << v;
            else if constexpr (std::is_same_v<T, long long>)
              os_ << v;
            else if constexpr (std::is_same_v<T, double>)
              os_ << fmt(v);
          },
          cells[i]);
    }
    os_ << '\n';
  }

  bool jsonl() const { return jsonl_; }

private:
  std::ostream& os_;
  bool jsonl_;
  std::vector<std::string> columns_;
};

const std::vector<std::string> kMatrixColumns{"kind", "row", "col", "re_val", "im_val"};

void write_matrix(Writer& w, const std::string& kind, const Eigen::MatrixXcd& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) w.row({kind, (long long)i, (long long)j, m(i, j).real(), m(i, j).imag()});
}

void write_scalar(Writer& w, const std::string& kind, cplx v) { w.row({kind, {}, {}, v.real(), v.imag()}); }

// ---------------------------------------------------------------- runners

struct Context {
  std::ostream& out;
  std::ostream& summary;
  int workers = 1;
};

int run_eval_kernel(const json& c, Context& ctx) {
  const finite::ModelParams p{c.at("N").get<int>(), c.at("alpha").get<double>(), c.at("sigma_sq").get<double>()};
  std::vector<cplx> zs{parse_complex(c.at("lambda").get<std::string>(), "--lambda")};
  for (cplx z : parse_complex_list(c.at("points"), "--points")) zs.push_back(z);
  const std::string kind = c.at("kind");
  const int k = static_cast<int>(zs.size());
  Writer w(ctx.out, c.at("format"), c, kMatrixColumns);
  if (kind == "D11") {
    const cplx d = finite::D11(k, p, zs);
    const auto m = finite::D11_matrix(p, finite::detail::unscaled(p, zs));
    write_matrix(w, "K11", m.entries);
    write_scalar(w, "det", m.det_value);
    write_scalar(w, "D11", d);
  } else if (kind == "D12") {
    const cplx d = finite::D12(k, p, zs);
    const auto m = finite::D12_matrix(p, finite::detail::unscaled(p, zs));
    write_matrix(w, "K12", m.entries);
    write_scalar(w, "det", m.det_value);
    write_scalar(w, "D12", d);
  } else {
    throw validation_error("eval-kernel: --kind must be D11 or D12");
  }
  return 0;
}

limits::RegimePoint regime_point(const json& c) {
  limits::RegimePoint rp;
  rp.regime = limits::regime_from_string(c.at("regime"));
  rp.b = c.at("b");
  rp.rho = c.at("rho");
  rp.p = parse_complex(c.at("p").get<std::string>(), "--p");
  rp.theta = c.at("theta");
  rp.validate();
  return rp;
}

int run_eval_limit(const json& c, Context& ctx) {
  const auto rp = regime_point(c);
  const auto e = limits::evaluate_limit(rp, parse_complex_list(c.at("points"), "--points"));
  Writer w(ctx.out, c.at("format"), c, kMatrixColumns);
  write_matrix(w, "K11", e.kernel_matrix.entries);
  write_scalar(w, "det", e.kernel_matrix.det_value);
  write_scalar(w, "psi11", e.psi11);
  if (e.psi12) write_scalar(w, "psi12", *e.psi12);
  return 0;
}

int run_converge(const json& c, Context& ctx) {
  const auto rp = regime_point(c);
  std::vector<std::pair<cplx, cplx>> pairs;
  for (const auto& pr : c.at("pairs"))
    pairs.emplace_back(parse_complex(pr.at(0), "--zeta1"), parse_complex(pr.at(1), "--zeta2"));
  const auto Ns = c.at("Ns").get<std::vector<int>>();
  if (Ns.empty()) throw validation_error("converge: --Ns must not be empty");
  if (pairs.empty()) throw validation_error("converge: need at least one test pair");
  const auto res = limits::converge_probe(rp, Ns, pairs);
  Writer w(ctx.out, c.at("format"), c, {"regime", "N", "residual", "kernel_residual"});
  const std::string name = limits::to_string(rp.regime);
  for (const auto& r : res.rows) w.row({name, (long long)r.N, r.residual, r.kernel_residual});
  w.row({name, std::string("fit"), res.exponent, res.kernel_exponent});
  return 0;
}

json estimate_json(const std::string& name, const mc::Estimate& e, cplx analytic, const json& config) {
  json j = {{"estimator", name},
          {"re_value", e.value.real()},
          {"im_value", e.value.imag()},
          {"std_error", e.std_error()},
          {"re_analytic", analytic.real()},
          {"im_analytic", analytic.imag()},
          {"used", e.used},
          {"hits", e.hits},
          {"discard_rate", e.discard_rate()},
          {"config", config}};
  if (e.hits == 0) j["warning"] = "no eigenvalue fell in the window";
  return j;
}

json test_json(const std::string& name, const mc::ConditionalMeanTest& t, const json& config) {
  return {{"estimator", name},
          {"re_value", t.mean_diff.real()},
          {"im_value", t.mean_diff.imag()},
          {"std_error", std::hypot(t.std_error_re, t.std_error_im)},
          {"z_score", t.z_score()},
          {"passes_3sigma", t.passes(3.0)},
          {"used", t.used},
          {"discard_rate", t.used + t.discarded == 0 ? 0.0 : double(t.discarded) / (t.used + t.discarded)},
          {"config", config}};
}

int run_mc(const json& c, Context& ctx) {
  mc::SamplerConfig cfg;
  cfg.N = c.at("N");
  cfg.alpha_int = c.at("alpha");
  cfg.seed = c.at("seed");
  cfg.replicas = c.at("replicas");
  cfg.workers = ctx.workers;
  cfg.validate();
  mc::SuiteTargets t;
  t.d11_lambda = parse_complex(c.at("lambda"), "--lambda");
  t.d12_lambda1 = parse_complex(c.at("lambda1"), "--lambda1");
  t.d12_lambda2 = parse_complex(c.at("lambda2"), "--lambda2");
  t.bandwidth = c.at("bandwidth");

  Writer w(ctx.out, c.at("format"), c, {"replica", "eig_index", "re_z", "im_z", "O11_eig", "O11_prod"});
  for (const auto& r : mc::sample_batch(cfg))
    w.row({(long long)r.replica, (long long)r.eig_index, r.z.real(), r.z.imag(), r.O11_eig, r.O11_prod});

  const auto s = mc::overlap_suite(cfg, t);
  const finite::ModelParams p{cfg.N, double(cfg.alpha_int), 1.0};
  std::ostream& sum = w.jsonl() ? ctx.out : ctx.summary;
  sum << estimate_json("D11", s.d11, finite::D11(1, p, {t.d11_lambda}), c).dump() << '\n';
  sum << estimate_json("D12", s.d12, finite::D12(2, p, {t.d12_lambda1, t.d12_lambda2}), c).dump() << '\n';
  sum << test_json("O11_eig_minus_prod", s.o11, c).dump() << '\n';
  sum << test_json("O12_eig_minus_prod", s.o12, c).dump() << '\n';
  return 0;
}

int run_curves(const json& c, Context& ctx) {
  curves::CurveSpec s;
  s.figure = c.at("figure");
  s.xmin = c.at("xmin");
  s.xmax = c.at("xmax");
  s.steps = c.at("steps");
  s.params = c.at("params").get<std::vector<double>>();
  s.ymin = c.at("ymin");
  s.ymax = c.at("ymax");
  s.grid = c.at("grid");
  s.chi = parse_complex(c.at("chi"), "--chi");
  s.rho = c.at("rho");
  const auto pts = curves::make_curves(s);
  Writer w(ctx.out, c.at("format"), c, {"regime", "function", "param", "re_arg", "im_arg", "re_val", "im_val"});
  for (const auto& p : pts)
    w.row({p.regime, p.function, p.param, p.arg.real(), p.arg.imag(), p.value.real(), p.value.imag()});
  return 0;
}

int run_selftest(const json& c, Context& ctx) {
  const auto results = selftest::run_all();
  Writer w(ctx.out, c.at("format"), c, {"module", "check", "value", "tolerance", "status"});
  bool ok = true;
  for (const auto& r : results) {
    ok = ok && r.passed;
    w.row({r.module, r.name, r.value, r.tolerance, std::string(r.passed ? "PASS" : r.error.empty() ? "FAIL" : "ERROR")});
  }
  return ok ? 0 : 1;
}

int run(const json& c, Context& ctx) {
  const std::string cmd = c.at("command");
  const std::string format = c.at("format");
  if (format != "csv" && format != "jsonl") throw validation_error("--format must be csv or jsonl");
  if (cmd == "eval-kernel") return run_eval_kernel(c, ctx);
  if (cmd == "eval-limit") return run_eval_limit(c, ctx);
  if (cmd == "converge") return run_converge(c, ctx);
  if (cmd == "mc-overlap") return run_mc(c, ctx);
  if (cmd == "curves") return run_curves(c, ctx);
  if (cmd == "selftest") return run_selftest(c, ctx);
  throw validation_error("unknown command '" + cmd + "'");
}

json read_replay(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open replay file '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (line.rfind("# ", 0) == 0) return json::parse(line.substr(2));
  const json j = json::parse(line);
  if (!j.contains("config")) throw validation_error("replay file has no config header");
  return j.at("config");
}

int default_workers() {
  if (const char* env = std::getenv("OVL_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (const std::exception&) {
    }
    throw validation_error(std::string("OVL_WORKERS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Overlap-weighted correlations of the induced Ginibre ensemble"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  std::string output = "-", format = "csv", replay, summary;
  int workers = 0;
  app.add_option("-o,--output", output, "output file, - for stdout");
  app.add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  app.add_option("--workers", workers, "worker threads (default: OVL_WORKERS or 1)")->check(CLI::PositiveNumber);
  app.add_option("--replay", replay, "rerun the config echoed in an earlier output file");
  app.add_option("--summary", summary, "mc-overlap summary file (csv mode; default stderr)");

  int N = 20, mcN = 30;
  double alpha = 0.0, sigma_sq = 1.0;
  std::string lambda = "1", points, kind = "D11";
  auto* ek = app.add_subcommand("eval-kernel", "finite-N kernel matrix, determinant and D11/D12");
  ek->add_option("--N", N)->required();
  ek->add_option("--alpha", alpha);
  ek->add_option("--sigma-sq", sigma_sq);
  ek->add_option("--lambda", lambda)->required();
  ek->add_option("--points", points, "comma-separated complex points after lambda");
  ek->add_option("--kind", kind)->check(CLI::IsMember({"D11", "D12"}));

  std::string regime = "bulk", p = "0", zeta1, zeta2, Ns = "50,100,200,400";
  double b = 0.0, rho = 1.0, theta = 0.0;
  auto add_regime = [&](CLI::App* sc) {
    sc->add_option("--regime", regime)->required();
    sc->add_option("--b", b);
    sc->add_option("--rho", rho);
    sc->add_option("--p", p);
    sc->add_option("--theta", theta);
  };
  auto* el = app.add_subcommand("eval-limit", "scaling-limit kernel matrix and Psi functions");
  add_regime(el);
  el->add_option("--points", points, "comma-separated zeta_1, ..., zeta_k")->required();

  auto* cv = app.add_subcommand("converge", "finite-N to limit residuals and fitted decay exponent");
  add_regime(cv);
  cv->add_option("--Ns", Ns);
  cv->add_option("--zeta1", zeta1, "comma-separated first points of the test pairs");
  cv->add_option("--zeta2", zeta2, "comma-separated second points of the test pairs");

  int mc_alpha = 2, replicas = 1000;
  std::uint64_t seed = 1;
  std::string mc_lambda = "3.5", lambda1 = "3.3", lambda2 = "3.3+1.5i";
  double bandwidth = 0.35;
  auto* mo = app.add_subcommand("mc-overlap", "Monte Carlo overlaps, windowed estimators and conditional-mean tests");
  mo->add_option("--N", mcN);
  mo->add_option("--alpha", mc_alpha);
  mo->add_option("--seed", seed);
  mo->add_option("--replicas", replicas);
  mo->add_option("--lambda", mc_lambda);
  mo->add_option("--lambda1", lambda1);
  mo->add_option("--lambda2", lambda2);
  mo->add_option("--bandwidth", bandwidth);

  std::string figure = "F", chi = "0", params;
  double xmin = -4.0, xmax = 4.0, ymin = -2.0, ymax = 2.0, curve_rho = 10.0;
  int steps = 400, grid = 50;
  auto* cu = app.add_subcommand("curves", "figure data for F, L, E and the bulk/weak kernel surfaces");
  cu->add_option("--figure", figure)->check(CLI::IsMember({"F", "L", "E", "bulk", "weak"}));
  cu->add_option("--xmin", xmin);
  cu->add_option("--xmax", xmax);
  cu->add_option("--steps", steps);
  cu->add_option("--params", params, "comma-separated rho (L) or b (E) values");
  cu->add_option("--ymin", ymin);
  cu->add_option("--ymax", ymax);
  cu->add_option("--grid", grid);
  cu->add_option("--chi", chi);
  cu->add_option("--rho", curve_rho);

  app.add_subcommand("selftest", "invariant checks of every module");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  json config;
  try {
    if (!replay.empty()) {
      config = read_replay(replay);
    } else if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 2;
    } else {
      const auto* sc = app.get_subcommands().front();
      config["command"] = sc->get_name();
      config["format"] = format;
      if (sc == ek) {
        config.update({{"N", N}, {"alpha", alpha}, {"sigma_sq", sigma_sq}, {"kind", kind},
                       {"lambda", fmt_complex(parse_complex(lambda, "--lambda"))}, {"points", complex_list(points, "--points")}});
      } else if (sc == el || sc == cv) {
        config.update({{"regime", regime}, {"b", b}, {"rho", rho}, {"theta", theta},
                       {"p", fmt_complex(parse_complex(p, "--p"))}});
        if (sc == el) config["points"] = complex_list(points, "--points");
        if (sc == cv) {
          std::vector<int> ns;
          for (const auto& s : split(Ns, ',')) ns.push_back(static_cast<int>(parse_double(s, "--Ns")));
          config["Ns"] = ns;
          json pairs = json::array();
          if (zeta1.empty() && zeta2.empty()) {
            for (const auto& [a, z] : limits::default_probe_points(limits::regime_from_string(regime)))
              pairs.push_back({fmt_complex(a), fmt_complex(z)});
          } else {
            const json a = complex_list(zeta1, "--zeta1"), z = complex_list(zeta2, "--zeta2");
            if (a.size() != z.size()) throw validation_error("converge: --zeta1 and --zeta2 differ in length");
            for (std::size_t i = 0; i < a.size(); ++i) pairs.push_back({a[i], z[i]});
          }
          config["pairs"] = pairs;
        }
      } else if (sc == mo) {
        config.update({{"N", mcN}, {"alpha", mc_alpha}, {"seed", seed}, {"replicas", replicas},
                       {"lambda", fmt_complex(parse_complex(mc_lambda, "--lambda"))},
                       {"lambda1", fmt_complex(parse_complex(lambda1, "--lambda1"))},
                       {"lambda2", fmt_complex(parse_complex(lambda2, "--lambda2"))}, {"bandwidth", bandwidth}});
      } else if (sc == cu) {
        std::vector<double> ps;
        for (const auto& s : split(params, ',')) ps.push_back(parse_double(s, "--params"));
        config.update({{"figure", figure}, {"xmin", xmin}, {"xmax", xmax}, {"steps", steps}, {"params", ps},
                       {"ymin", ymin}, {"ymax", ymax}, {"grid", grid}, {"rho", curve_rho},
                       {"chi", fmt_complex(parse_complex(chi, "--chi"))}});
      }
    }

    std::ostringstream buffer, summary_buffer;
    Context ctx{buffer, summary_buffer, workers > 0 ? workers : default_workers()};
    const int status = run(config, ctx);
    if (output == "-") {
      std::cout << buffer.str() << std::flush;
    } else {
      std::ofstream f(output, std::ios::binary);
      if (!f) throw validation_error("cannot open output file '" + output + "'");
      f << buffer.str();
    }
    if (!summary_buffer.str().empty()) {
      if (summary.empty()) {
        std::cerr << summary_buffer.str();
      } else {
        std::ofstream f(summary, std::ios::binary);
        if (!f) throw validation_error("cannot open summary file '" + summary + "'");
        f << summary_buffer.str();
      }
    }
    return status;
  } catch (const validation_error& e) {
    std::cerr << "ovl: validation error: " << e.what() << "\n  config: " << config.dump() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "ovl: bad config: " << e.what() << '\n';
    return 2;
  } catch (const numerical_error& e) {
    std::cerr << "ovl: numerical error: " << e.what() << "\n  config: " << config.dump() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "ovl: error: " << e.what() << "\n  config: " << config.dump() << '\n';
    return 3;
  }
}
