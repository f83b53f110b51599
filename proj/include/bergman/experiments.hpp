#pragma once

#include <bergman/domain.hpp>
#include <bergman/error.hpp>
#include <bergman/geodesics.hpp>
#include <bergman/geometry.hpp>
#include <bergman/kernel.hpp>
#include <bergman/loci.hpp>
#include <bergman/log.hpp>

#include <json.hpp>
#include <spdlog/fmt/fmt.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace bergman {

enum class OutputFormat { Csv, Json };

struct ExperimentConfig {
  std::vector<double> r_grid{1e-4, 1e-6, 1e-8, 1e-10, 1e-12};
  double epsilon = 0.05;
  int nodes = 64;
  int quad_order = 8;
  Truncation trunc{};
  OutputFormat output_format = OutputFormat::Csv;
  bool plot = false;
  std::uint64_t seed = 0;
  bool skip_non_small = false;  // skip rows failing check_smallness instead of flagging them
  bool optimize = false;        // also run the distance optimizer from the same endpoints
  bool wall_time = false;       // record per-row timings (breaks byte-identical output)
  bool parallel = true;
};

enum class RowStatus { Ok, Failed, Skipped };

inline const char* to_string(RowStatus s) {
  switch (s) {
    case RowStatus::Ok: return "ok";
    case RowStatus::Failed: return "failed";
    case RowStatus::Skipped: return "skipped";
  }
  return "?";
}

/// One grid point of a reproduction table. Unavailable values are NaN.
struct ExperimentRow {
  static constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  std::string table;
  double r = nan;
  Complex z0{nan, nan};
  Complex root{nan, nan};       // kernel zero (thm4) or defect point i zeta0 / xi* (thm5)
  Complex parameter{nan, nan};  // s* (thm4) or xi* (thm5)
  double len_gamma1 = nan;
  double len_gamma2 = nan;
  double total = nan;
  double lower_bound = nan;
  double excess = nan;
  double wall_time = nan;

  bool small = false;
  bool bracket_ok = false;     // thm4: sign change on [1 - eps, 1 + eps]
  double residual = nan;       // root residual
  double residual_scale = nan; // magnitude the residual is measured against
  Complex reference{nan, nan}; // thm5: closed-form root of the leading-order equation
  double reference_gap = nan;  // thm5: |xi* - reference|
  int window_count = -1;       // thm5: defect roots with |xi - 1| <= eps
  double tilde_ratio = nan;    // thm5: Ttilde(zeta0) / (sqrt 2 sqrt|log r^2|)
  double optimized = nan;      // optimizer upper bound between the same endpoints
  RowStatus status = RowStatus::Ok;
  std::string message;
};

struct ExperimentTable {
  std::vector<ExperimentRow> rows;      // emitted rows
  std::vector<ExperimentRow> rejected;  // failed or skipped rows, with their messages
  std::size_t attempted = 0;

  std::size_t failed() const {
    return static_cast<std::size_t>(
        std::count_if(rejected.begin(), rejected.end(), [](const auto& r) { return r.status == RowStatus::Failed; }));
  }
  std::size_t skipped() const { return rejected.size() - failed(); }
};

namespace detail {

inline void validate(const ExperimentConfig& c) {
  require(!c.r_grid.empty(), ErrorCode::InvalidArgument, "r_grid must be nonempty");
  for (double r : c.r_grid) require(r > 0.0 && r < 1.0, ErrorCode::InvalidArgument, "r_grid entries must lie in (0, 1)");
  require(c.epsilon > 0.0 && c.epsilon < 1.0, ErrorCode::InvalidArgument, "epsilon must lie in (0, 1)");
  require(c.nodes >= 2, ErrorCode::InvalidArgument, "nodes must be at least 2");
  require(c.quad_order >= 2, ErrorCode::InvalidArgument, "quad_order must be at least 2");
}

inline void finish_row(ExperimentRow& row) {
  row.total = row.len_gamma1 + row.len_gamma2;
  row.excess = row.total - std::numbers::pi / 2;
  if (!(row.excess > 0.0)) fail(ErrorCode::InvalidArgument, "path total does not exceed pi/2");
  if (!(row.lower_bound <= row.total)) fail(ErrorCode::InvalidArgument, "lower bound exceeds the path total");
}

/// Kernel zero on the symmetric bracket, widened when the sign check fails.
inline std::pair<RootReport, bool> thm4_zero(double r, double eps, const KernelZeroOptions& opts) {
  try {
    return {kernel_zero_bisection(r, eps, opts), true};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoSignChange) throw;
    logger().info("thm4: symmetric bracket fails at r = {:g}: {}", r, e.what());
  }
  for (double w = 2.0 * eps; w < 1.0; w *= 2.0) {
    try {
      return {kernel_zero_search(r, std::max(1.0 - w, 0.1), 1.0 + w, opts), false};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoSignChange) throw;
    }
  }
  fail(ErrorCode::NoSignChange, "no kernel sign change for s in [0.1, 2]");
}

template <class Compute>
ExperimentTable run_table(const ExperimentConfig& config, const char* name, Compute compute) {
  validate(config);
  auto one = [&config, name, &compute](double r) {
    ExperimentRow row;
    row.table = name;
    row.r = r;
    row.small = check_smallness(r, config.epsilon).all();
    if (!row.small) {
      if (config.skip_non_small) {
        row.status = RowStatus::Skipped;
        row.message = "outside the smallness window";
        logger().warn("{}: r = {:g} skipped, outside the smallness window for eps = {:g}", name, r, config.epsilon);
        return row;
      }
      logger().info("{}: r = {:g} is outside the smallness window for eps = {:g}", name, r, config.epsilon);
    }
    const auto start = std::chrono::steady_clock::now();
    try {
      compute(row);
      finish_row(row);
    } catch (const Error& e) {
      row.status = RowStatus::Failed;
      row.message = e.what();
      logger().warn("{}: r = {:g} failed: {}", name, r, e.what());
    }
    if (config.wall_time) {
      row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return row;
  };

  std::vector<ExperimentRow> computed;
  if (config.parallel) {
    std::vector<std::future<ExperimentRow>> jobs;
    for (double r : config.r_grid) jobs.push_back(std::async(std::launch::async, one, r));
    for (auto& j : jobs) computed.push_back(j.get());
  } else {
    for (double r : config.r_grid) computed.push_back(one(r));
  }

  ExperimentTable out;
  out.attempted = computed.size();
  for (auto& row : computed) (row.status == RowStatus::Ok ? out.rows : out.rejected).push_back(std::move(row));
  return out;
}

}  // namespace detail

/// Defect determinant along the ray zeta = i zeta0 / xi, based at zeta0 = (2|log r^2|)^{-1/4}.
inline Complex thm5_defect(double r, Complex xi, const Truncation& trunc = {}) {
  const double zeta0 = std::pow(2.0 * detail::abs_log_r2(r), -0.25);
  return immersion_defect(DomainSpec::annulus(r), Point{zeta0}, Point{Complex(0.0, zeta0) / xi}, trunc);
}

/// Kernel-zero table: zero of K(., z0) near -z0, the segment-plus-half-circle path to z0, and its Bergman length.
inline ExperimentTable run_thm4_table(const ExperimentConfig& config) {
  return detail::run_table(config, "thm4", [&config](ExperimentRow& row) {
    const double r = row.r;
    const DomainSpec ann = DomainSpec::annulus(r);
    const Point z0{1.0 / std::sqrt(detail::abs_log_r2(r))};
    row.z0 = z0[0];
    const auto [zero, symmetric] = detail::thm4_zero(r, config.epsilon, KernelZeroOptions{1.0, 1e-12, config.trunc});
    row.bracket_ok = symmetric;
    row.root = zero.location;
    row.parameter = zero.parameter;
    row.residual = zero.residual;
    row.residual_scale = zero.scale;

    const ParamPath path = paper_path_thm4(r, zero.parameter.real());
    const std::vector<double> lens = segment_lengths(ann, path, MetricKind::Bergman, config.quad_order, config.trunc);
    row.len_gamma1 = lens.at(0);
    row.len_gamma2 = lens.at(1);
    row.lower_bound = skwarczynski_bound(ann, Point{row.root}, z0, config.trunc);
    if (config.optimize) {
      DistanceOptions opts;
      opts.nodes = config.nodes;
      opts.quad_order = config.quad_order;
      opts.trunc = config.trunc;
      row.optimized = distance(ann, Point{row.root}, z0, MetricKind::Bergman, opts).upper;
    }
  });
}

/// Defect-root table: root xi* of the defect along i zeta0 / xi, the segment-plus-quarter-circle
/// path to zeta0, and its tilde length.
inline ExperimentTable run_thm5_table(const ExperimentConfig& config) {
  return detail::run_table(config, "thm5", [&config](ExperimentRow& row) {
    const double r = row.r;
    const DomainSpec ann = DomainSpec::annulus(r);
    const double L = detail::abs_log_r2(r);
    const Point z0{std::pow(2.0 * L, -0.25)};
    row.z0 = z0[0];
    const Truncation trunc = config.trunc;
    const ComplexFunction f = [r, trunc](Complex xi) { return thm5_defect(r, xi, trunc); };

    const RegionRoots found = complex_roots_region(f, Rect{0.6, 1.4, -0.4, 0.4}, 4, 4);
    require(!found.roots.empty(), ErrorCode::NoSignChange, "no defect root in the search box");
    auto best = std::min_element(found.roots.begin(), found.roots.end(), [](const auto& a, const auto& b) {
      return std::abs(a.location - 1.0) < std::abs(b.location - 1.0);
    });
    if (found.roots.size() > 1) logger().warn("thm5: {} defect roots at r = {:g}", found.roots.size(), r);
    const Complex xi = best->location;
    row.parameter = xi;
    row.root = Complex(0.0, z0[0].real()) / xi;
    row.residual = best->residual;
    row.residual_scale = best->scale;
    row.window_count = winding_number_circle(f, 1.0, config.epsilon);

    const ReferenceRoot ref = thm5_reference_root(r);
    row.reference = ref.root;
    row.reference_gap = std::abs(xi - ref.root);
    row.tilde_ratio = (*tilde_metric(ann, z0, trunc).tilde)(0, 0).real() / (std::sqrt(2.0) * std::sqrt(L));

    const ParamPath path = paper_path_thm5(r, xi);
    const std::vector<double> lens = segment_lengths(ann, path, MetricKind::Tilde, config.quad_order, trunc);
    row.len_gamma1 = lens.at(0);
    row.len_gamma2 = lens.at(1);
    row.lower_bound = tilde_bound(ann, Point{row.root}, z0, trunc);
    if (config.optimize) {
      DistanceOptions opts;
      opts.nodes = config.nodes;
      opts.quad_order = config.quad_order;
      opts.trunc = trunc;
      row.optimized = distance(ann, Point{row.root}, z0, MetricKind::Tilde, opts).upper;
    }
  });
}

namespace detail {

struct Column {
  const char* name;
  double (*get)(const ExperimentRow&);
};

inline const std::vector<Column>& numeric_columns() {
  static const std::vector<Column> cols = {
      {"r", [](const ExperimentRow& w) { return w.r; }},
      {"z0_re", [](const ExperimentRow& w) { return w.z0.real(); }},
      {"z0_im", [](const ExperimentRow& w) { return w.z0.imag(); }},
      {"root_re", [](const ExperimentRow& w) { return w.root.real(); }},
      {"root_im", [](const ExperimentRow& w) { return w.root.imag(); }},
      {"parameter_re", [](const ExperimentRow& w) { return w.parameter.real(); }},
      {"parameter_im", [](const ExperimentRow& w) { return w.parameter.imag(); }},
      {"len_gamma1", [](const ExperimentRow& w) { return w.len_gamma1; }},
      {"len_gamma2", [](const ExperimentRow& w) { return w.len_gamma2; }},
      {"total", [](const ExperimentRow& w) { return w.total; }},
      {"lower_bound", [](const ExperimentRow& w) { return w.lower_bound; }},
      {"excess", [](const ExperimentRow& w) { return w.excess; }},
      {"wall_time", [](const ExperimentRow& w) { return w.wall_time; }},
      {"residual", [](const ExperimentRow& w) { return w.residual; }},
      {"residual_scale", [](const ExperimentRow& w) { return w.residual_scale; }},
      {"reference_re", [](const ExperimentRow& w) { return w.reference.real(); }},
      {"reference_im", [](const ExperimentRow& w) { return w.reference.imag(); }},
      {"reference_gap", [](const ExperimentRow& w) { return w.reference_gap; }},
      {"tilde_ratio", [](const ExperimentRow& w) { return w.tilde_ratio; }},
      {"optimized", [](const ExperimentRow& w) { return w.optimized; }},
  };
  return cols;
}

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.15g}", v);
}

inline std::string csv_text(const std::vector<ExperimentRow>& rows) {
  std::string out = "table";
  for (const auto& c : numeric_columns()) out += fmt::format(",{}", c.name);
  out += ",small,bracket_ok,window_count,status\n";
  for (const auto& row : rows) {
    out += row.table;
    for (const auto& c : numeric_columns()) out += "," + format_number(c.get(row));
    out += fmt::format(",{},{},{},{}\n", row.small ? 1 : 0, row.bracket_ok ? 1 : 0, row.window_count,
                       to_string(row.status));
  }
  return out;
}

inline nlohmann::ordered_json json_rows(const std::vector<ExperimentRow>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json obj;
    obj["table"] = row.table;
    for (const auto& c : numeric_columns()) {
      const double v = c.get(row);
      if (std::isfinite(v)) {
        obj[c.name] = v;
      } else {
        obj[c.name] = nullptr;
      }
    }
    obj["small"] = row.small;
    obj["bracket_ok"] = row.bracket_ok;
    obj["window_count"] = row.window_count;
    obj["status"] = to_string(row.status);
    if (!row.message.empty()) obj["message"] = row.message;
    arr.push_back(std::move(obj));
  }
  return arr;
}

/// Excess against log10 r, one polyline per table name.
inline std::string svg_plot(const std::vector<ExperimentRow>& rows) {
  constexpr double width = 640, height = 400, margin = 60;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y1 = 0.0;
  for (const auto& row : rows) {
    if (!(row.r > 0.0) || !std::isfinite(row.excess)) continue;
    const double x = std::log10(row.r);
    series[row.table].emplace_back(x, row.excess);
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y1 = std::max(y1, row.excess);
  }
  if (series.empty()) {
    x0 = -1.0;
    x1 = 0.0;
  }
  if (x1 <= x0) x1 = x0 + 1.0;
  if (y1 <= 0.0) y1 = 1.0;
  y1 *= 1.1;
  auto px = [&](double x) { return margin + (x1 - x) / (x1 - x0) * (width - 2 * margin); };
  auto py = [&](double y) { return height - margin - y / y1 * (height - 2 * margin); };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      width, height);
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", margin, height - margin,
                     width - margin);
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", margin, margin,
                     height - margin);
  for (int k = 0; k <= 4; ++k) {
    const double xv = x1 - (x1 - x0) * k / 4.0, yv = y1 * k / 4.0;
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"11\" text-anchor=\"middle\">{:.3g}</text>\n", px(xv),
                       height - margin + 16, xv);
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"11\" text-anchor=\"end\">{:.3g}</text>\n", margin - 6,
                       py(yv) + 4, yv);
  }
  out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"13\" text-anchor=\"middle\">log10 r</text>\n",
                     width / 2, height - 14);
  out += fmt::format(
      "<text x=\"16\" y=\"{:.1f}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1f})\">"
      "total - pi/2</text>\n",
      height / 2, height / 2);
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  int idx = 0;
  for (const auto& [name, pts] : series) {
    const char* color = colors[idx % 4];
    std::string poly;
    for (const auto& [x, y] : pts) poly += fmt::format("{:.2f},{:.2f} ", px(x), py(y));
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", color, poly);
    for (const auto& [x, y] : pts)
      out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(x), py(y), color);
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"12\" fill=\"{}\">{}</text>\n", width - margin - 40,
                       margin + 16.0 * (idx + 1), color, name);
    ++idx;
  }
  out += "</svg>\n";
  return out;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  f << text;
  f.close();
  if (!f) fail(ErrorCode::IoFailure, "write to " + path + " failed");
}

}  // namespace detail

/// Report text in the requested format.
inline std::string format_report(const std::vector<ExperimentRow>& rows, OutputFormat format) {
  require(!rows.empty(), ErrorCode::InvalidArgument, "report needs at least one row");
  if (format == OutputFormat::Csv) return detail::csv_text(rows);
  return detail::json_rows(rows).dump(2) + "\n";
}

/// Writes the report to path; with plot, also writes an SVG next to it (path with extension .svg).
inline void emit_report(const std::vector<ExperimentRow>& rows, OutputFormat format, const std::string& path,
                        bool plot = false) {
  detail::write_file(path, format_report(rows, format));
  if (plot) {
    const auto dot = path.find_last_of('.');
    const auto slash = path.find_last_of('/');
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    detail::write_file((has_ext ? path.substr(0, dot) : path) + ".svg", detail::svg_plot(rows));
  }
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::InvalidArgument, "config key " + key + ": not a number: " + value);
}

inline long parse_integer(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::InvalidArgument, "config key " + key + ": not an integer: " + value);
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  fail(ErrorCode::InvalidArgument, "config key " + key + ": not a boolean: " + value);
}

inline OutputFormat parse_format(const std::string& value) {
  if (value == "csv") return OutputFormat::Csv;
  if (value == "json") return OutputFormat::Json;
  fail(ErrorCode::InvalidArgument, "unknown output format: " + value);
}

/// Applies one key = value setting; unknown keys raise InvalidArgument.
inline void apply_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "r_grid") {
    c.r_grid.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) c.r_grid.push_back(parse_real(key, trim(item)));
  } else if (key == "epsilon") {
    c.epsilon = parse_real(key, value);
  } else if (key == "nodes") {
    c.nodes = static_cast<int>(parse_integer(key, value));
  } else if (key == "quad_order") {
    c.quad_order = static_cast<int>(parse_integer(key, value));
  } else if (key == "tol_abs") {
    c.trunc.tol_abs = parse_real(key, value);
  } else if (key == "tol_rel") {
    c.trunc.tol_rel = parse_real(key, value);
  } else if (key == "max_terms") {
    c.trunc.max_terms = parse_integer(key, value);
  } else if (key == "format") {
    c.output_format = parse_format(value);
  } else if (key == "plot") {
    c.plot = parse_bool(key, value);
  } else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(parse_integer(key, value));
  } else if (key == "skip_non_small") {
    c.skip_non_small = parse_bool(key, value);
  } else if (key == "optimize") {
    c.optimize = parse_bool(key, value);
  } else if (key == "wall_time") {
    c.wall_time = parse_bool(key, value);
  } else if (key == "parallel") {
    c.parallel = parse_bool(key, value);
  } else {
    fail(ErrorCode::InvalidArgument, "unknown config key: " + key);
  }
}

/// Key-value text: one "key = value" per line, '#' starts a comment.
inline void parse_config_text(ExperimentConfig& c, const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::InvalidArgument, "config line " + std::to_string(lineno) + " has no '='");
    }
    apply_config_value(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

inline ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::IoFailure, "cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  parse_config_text(base, ss.str());
  return base;
}

}  // namespace bergman
