#include <bergman/bergman.hpp>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

using bergman::Complex;
using bergman::DomainSpec;
using bergman::ErrorCode;
using bergman::Point;
using Json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitHard = 1;
constexpr int kExitPartial = 2;

struct Options {
  std::string domain = "annulus";
  double r = 1e-8;
  std::vector<std::string> factors;  // product factors: "disk" or "annulus:<r>"
  std::vector<std::string> z;        // one "a,b" per coordinate
  std::vector<std::string> zeta;
  std::string orders = "0,0";
  std::string metric = "bergman";
  std::optional<double> tol;
  std::string out;
  std::optional<std::string> format;
  bool plot = false;
  std::optional<std::uint64_t> seed;
  std::string config;
  double eps = 0.05;
  int nodes = 64;
};

Complex parse_complex(const std::string& text) {
  const auto comma = text.find(',');
  try {
    if (comma == std::string::npos) return {std::stod(text), 0.0};
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    bergman::fail(ErrorCode::InvalidArgument, "not a complex pair a,b: " + text);
  }
}

DomainSpec planar_from_name(const std::string& name, double r) {
  if (name == "disk") return DomainSpec::unit_disk();
  if (name == "annulus") return DomainSpec::annulus(r);
  if (name.rfind("annulus:", 0) == 0) return DomainSpec::annulus(bergman::parse_real("annulus", name.substr(8)));
  bergman::fail(ErrorCode::InvalidArgument, "unknown planar domain: " + name);
}

DomainSpec make_domain(const Options& o) {
  if (o.domain == "product") {
    bergman::require(!o.factors.empty(), ErrorCode::InvalidArgument, "--domain product needs --factors");
    std::vector<DomainSpec> fs;
    for (const auto& f : o.factors) fs.push_back(planar_from_name(f, o.r));
    return DomainSpec::product(std::move(fs));
  }
  return planar_from_name(o.domain, o.r);
}

Point make_point(const std::vector<std::string>& coords, const char* flag) {
  bergman::require(!coords.empty(), ErrorCode::InvalidArgument, std::string("missing ") + flag);
  std::vector<Complex> c;
  for (const auto& s : coords) c.push_back(parse_complex(s));
  return Point(std::move(c));
}

bergman::MetricKind make_metric(const Options& o) {
  if (o.metric == "bergman") return bergman::MetricKind::Bergman;
  if (o.metric == "tilde") return bergman::MetricKind::Tilde;
  bergman::fail(ErrorCode::InvalidArgument, "unknown metric: " + o.metric);
}

bergman::Truncation make_trunc(const Options& o) {
  bergman::Truncation t;
  if (o.tol) t.tol_abs = *o.tol;
  return t;
}

Json complex_json(Complex c) { return Json::array({c.real(), c.imag()}); }

Json matrix_json(const Eigen::MatrixXcd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

std::string complex_text(Complex c) { return fmt::format("{:.15g} {:+.15g}i", c.real(), c.imag()); }

void print_text(const Json& obj, const std::string& indent = "") {
  for (const auto& [key, value] : obj.items()) {
    if (value.is_object()) {
      fmt::print("{}{}:\n", indent, key);
      print_text(value, indent + "  ");
    } else if (value.is_array() && value.size() == 2 && value[0].is_number() && value[1].is_number()) {
      fmt::print("{}{}: {}\n", indent, key, complex_text({value[0].get<double>(), value[1].get<double>()}));
    } else if (value.is_number_float()) {
      fmt::print("{}{}: {:.15g}\n", indent, key, value.get<double>());
    } else if (value.is_string()) {
      fmt::print("{}{}: {}\n", indent, key, value.get<std::string>());
    } else {
      fmt::print("{}{}: {}\n", indent, key, value.dump());
    }
  }
}

void output(const Options& o, const Json& obj) {
  if (o.format && *o.format == "json") {
    fmt::print("{}\n", obj.dump(2));
  } else {
    print_text(obj);
  }
}

int cmd_kernel(const Options& o) {
  const DomainSpec d = make_domain(o);
  const Point z = make_point(o.z, "--z");
  const Point zeta = o.zeta.empty() ? z : make_point(o.zeta, "--zeta");
  const Complex ord = parse_complex(o.orders);
  const bergman::JetOrder order{static_cast<int>(ord.real()), static_cast<int>(ord.imag())};
  const bergman::KernelJet jet = bergman::eval_kernel_jet(d, z, zeta, order, make_trunc(o));
  Json out;
  out["domain"] = d.describe();
  out["K"] = complex_json(jet.value());
  if (d.is_planar()) {
    Json entries;
    for (int a = 0; a <= order.a; ++a)
      for (int b = 0; b <= order.b; ++b) entries[fmt::format("d{}{}", a, b)] = complex_json(jet.factor(0).at(a, b));
    out["jet"] = entries;
  }
  out["terms_used"] = jet.certificate().terms_used;
  out["tail_bound"] = jet.certificate().tail_bound;
  output(o, out);
  return kExitOk;
}

int cmd_metric(const Options& o) {
  const DomainSpec d = make_domain(o);
  const Point z = make_point(o.z, "--z");
  const bergman::MetricSample s = bergman::tilde_metric(d, z, make_trunc(o));
  Json out;
  out["domain"] = d.describe();
  out["T"] = matrix_json(s.metric);
  out["det_T"] = s.det_metric;
  if (s.ricci) out["Ric"] = matrix_json(*s.ricci);
  if (s.tilde) out["Ttilde"] = matrix_json(*s.tilde);
  if (s.tilde_direct) out["Ttilde_direct"] = *s.tilde_direct;
  output(o, out);
  return kExitOk;
}

int cmd_dist(const Options& o) {
  const DomainSpec d = make_domain(o);
  const Point z = make_point(o.z, "--z");
  const Point w = make_point(o.zeta, "--zeta");
  bergman::DistanceOptions opts;
  opts.nodes = o.nodes;
  if (o.tol) opts.tol = *o.tol;
  const bergman::DistanceResult res = bergman::distance(d, z, w, make_metric(o), opts);
  Json out;
  out["domain"] = d.describe();
  out["metric"] = o.metric;
  out["lower"] = res.lower;
  out["upper"] = res.upper;
  out["seed"] = res.seed;
  out["iterations"] = res.iterations;
  out["converged"] = res.converged;
  output(o, out);
  return res.converged ? kExitOk : kExitPartial;
}

int cmd_zeros(const Options& o) {
  bergman::require(o.domain == "annulus", ErrorCode::InvalidArgument, "zeros works on --domain annulus");
  const double r = o.r;
  Json out;
  out["domain"] = DomainSpec::annulus(r).describe();
  const bergman::SmallnessReport small = bergman::check_smallness(r, o.eps);
  out["smallness"] = Json{{"inverse_log", small.inverse_log}, {"r_log", small.r_log}, {"geometric", small.geometric}};
  int code = kExitOk;
  try {
    const bergman::RootReport z = bergman::kernel_zero_bisection(r, o.eps, {1.0, 1e-12, make_trunc(o)});
    out["kernel_zero"] = Json{{"s", z.parameter.real()},
                              {"location", complex_json(z.location)},
                              {"residual", z.residual},
                              {"scale", z.scale}};
  } catch (const bergman::Error& e) {
    if (e.code() != ErrorCode::NoSignChange) throw;
    out["kernel_zero"] = Json{{"error", e.what()}};
    code = kExitPartial;
  }
  const bergman::Truncation trunc = make_trunc(o);
  const bergman::ComplexFunction f = [r, trunc](Complex xi) { return bergman::thm5_defect(r, xi, trunc); };
  const bergman::RegionRoots roots = bergman::complex_roots_region(f, bergman::Rect{0.6, 1.4, -0.4, 0.4}, 4, 4);
  Json list = Json::array();
  for (const auto& root : roots.roots)
    list.push_back(Json{{"xi", complex_json(root.location)}, {"residual", root.residual}, {"scale", root.scale}});
  const bergman::ReferenceRoot ref = bergman::thm5_reference_root(r);
  out["defect_roots"] = list;
  out["boundary_winding"] = roots.boundary_winding;
  out["window_count"] = bergman::winding_number_circle(f, 1.0, o.eps);
  out["reference_root"] = complex_json(ref.root);
  out["reference_residual"] = ref.residual;
  output(o, out);
  return code;
}

int cmd_repcoord(const Options& o) {
  const DomainSpec d = make_domain(o);
  const Point z = make_point(o.z, "--z");
  const Point z0 = make_point(o.zeta, "--zeta");
  const bergman::RepCoordResult res = bergman::representative_coordinates(d, z0, z, make_trunc(o));
  Json w = Json::array();
  for (const Complex c : res.w) w.push_back(complex_json(c));
  Json out;
  out["domain"] = d.describe();
  out["w"] = w;
  out["jacobian"] = matrix_json(res.jacobian);
  out["jac_det"] = complex_json(res.jac_det);
  out["defect"] = complex_json(bergman::immersion_defect(d, z0, z, make_trunc(o)));
  output(o, out);
  return kExitOk;
}

bergman::ExperimentConfig make_experiment_config(const Options& o) {
  bergman::ExperimentConfig c;
  if (!o.config.empty()) c = bergman::load_config_file(o.config, c);
  if (o.format) c.output_format = bergman::parse_format(*o.format);
  if (o.plot) c.plot = true;
  if (o.seed) c.seed = *o.seed;
  if (o.tol) c.trunc.tol_abs = *o.tol;
  return c;
}

int report_table(const Options& o, const bergman::ExperimentConfig& c, const bergman::ExperimentTable& t) {
  for (const auto& row : t.rejected)
    fmt::print(stderr, "r = {:g}: {} ({})\n", row.r, bergman::to_string(row.status), row.message);
  fmt::print(stderr, "rows attempted {}, emitted {}, failed {}, skipped {}\n", t.attempted, t.rows.size(), t.failed(),
             t.skipped());
  if (t.rows.empty()) return kExitHard;
  if (o.out.empty()) {
    fmt::print("{}", bergman::format_report(t.rows, c.output_format));
    if (c.plot) fmt::print(stderr, "--plot needs --out\n");
  } else {
    bergman::emit_report(t.rows, c.output_format, o.out, c.plot);
  }
  return t.rejected.empty() ? kExitOk : kExitPartial;
}

int cmd_thm4(const Options& o) {
  const bergman::ExperimentConfig c = make_experiment_config(o);
  return report_table(o, c, bergman::run_thm4_table(c));
}

int cmd_thm5(const Options& o) {
  const bergman::ExperimentConfig c = make_experiment_config(o);
  return report_table(o, c, bergman::run_thm5_table(c));
}

int cmd_grassmann(const Options& o) {
  const std::uint64_t base = o.seed.value_or(0);
  double inv = 0.0, cb = 0.0, fs = 0.0;
  for (std::uint64_t s = base; s < base + 100; ++s) {
    for (int n = 1; n <= 3; ++n) {
      for (int m = n; m <= 7; ++m) {
        const Eigen::MatrixXcd z = bergman::random_matrix_sample(n, m, s).Z;
        const Eigen::MatrixXcd e = bergman::random_matrix_sample(n, m, s + 1000).Z;
        const Eigen::MatrixXcd f = bergman::random_matrix_sample(n, m, s + 2000).Z;
        inv = std::max(inv, bergman::grassmann_inverse_identity(z));
        cb = std::max(cb, bergman::cauchy_binet_check(z).residual);
        fs = std::max(fs, bergman::fs_pullback_fd_check(z, e, f, 1e-4).mismatch);
      }
    }
  }
  const bool ok = inv <= 1e-10 && cb <= 1e-10 && fs <= 1e-5;
  Json out;
  out["seeds"] = fmt::format("{}..{}", base, base + 99);
  out["inverse_identity_max"] = inv;
  out["cauchy_binet_max"] = cb;
  out["fubini_study_max"] = fs;
  out["status"] = ok ? "ok" : "out of tolerance";
  output(o, out);
  return ok ? kExitOk : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bergman kernel, metric, distance and locus computations on model domains"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--domain", o.domain, "disk, annulus or product")
      ->check(CLI::IsMember({"disk", "annulus", "product"}));
  app.add_option("--r", o.r, "annulus inner radius");
  app.add_option("--factors", o.factors, "product factors: disk or annulus:<r>")->delimiter(' ');
  app.add_option("--z", o.z, "point, one a,b pair per coordinate");
  app.add_option("--zeta", o.zeta, "second point or base point, one a,b pair per coordinate");
  app.add_option("--orders", o.orders, "jet orders a,b");
  app.add_option("--metric", o.metric, "bergman or tilde")->check(CLI::IsMember({"bergman", "tilde"}));
  app.add_option("--tol", o.tol, "series tolerance, or optimizer tolerance for dist");
  app.add_option("--out", o.out, "report file");
  app.add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--plot", o.plot, "also write an SVG plot next to --out");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--config", o.config, "key = value file overriding defaults");
  app.add_option("--eps", o.eps, "bracket half-width for zeros");
  app.add_option("--nodes", o.nodes, "polyline edges for dist");

  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const std::vector<Sub> subs = {
      {"kernel", "kernel value and jet", cmd_kernel},
      {"metric", "Bergman, Ricci and tilde tensors", cmd_metric},
      {"dist", "distance bounds between --z and --zeta", cmd_dist},
      {"zeros", "kernel zero and defect roots on the annulus", cmd_zeros},
      {"repcoord", "representative coordinates of --z based at --zeta", cmd_repcoord},
      {"reproduce-thm4", "kernel-zero distance table", cmd_thm4},
      {"reproduce-thm5", "immersion-defect distance table", cmd_thm5},
      {"check-grassmann", "Grassmannian identity checks", cmd_grassmann},
  };
  std::map<const CLI::App*, int (*)(const Options&)> handlers;
  for (const auto& s : subs) handlers[app.add_subcommand(s.name, s.help)] = s.run;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitHard;
  }

  try {
    for (const auto& [sub, run] : handlers)
      if (sub->parsed()) return run(o);
  } catch (const bergman::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitHard;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitHard;
  }
  return kExitHard;
}
