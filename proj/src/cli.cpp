#include "twistlab/cli.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twistlab/families.hpp"
#include "twistlab/lie.hpp"
#include "twistlab/scene_io.hpp"

namespace twistlab {
namespace {

using Clock = std::chrono::steady_clock;

void emit_timing(std::ostream& err, const char* what, Clock::time_point t0) {
  double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0)
                  .count();
  char buf[64];
  std::snprintf(buf, sizeof buf, "[timing] %s: %.3f ms", what, ms);
  err << buf << '\n';
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SchemaError("cannot write file: " + path);
  f << text;
  if (!f.good()) throw SchemaError("failed writing file: " + path);
}

struct RunOptions {
  std::string scene_path;
  int order = 2;
  std::string mode = "oracle";
  double tol = 0.0;  // 0 means: use the scene's tolerance
  std::string csv_path;
  int threads = 0;
};

Report base_report(const Scene& scene, const std::string& bytes,
                   const ProductMetric& metric, std::size_t grid_size) {
  Report report;
  report.scene_sha256 = sha256_hex(bytes);
  report.points_per_dim = scene.grid.points_per_dim;
  report.inset = scene.grid.inset;
  report.grid_size = grid_size;
  report.tolerance = scene.tolerance;
  report.vars = metric.vars;
  return report;
}

int cmd_validate(const std::string& path, std::ostream& err) {
  Scene scene = scene_from_json(read_file(path));
  audit_scene(scene);
  std::size_t points = sample_grid(scene.factors, scene.grid).size();
  std::size_t dim = 0;
  for (const FactorChart& f : scene.factors) dim += f.dim();
  err << "scene valid: " << scene.factors.size() << " factor(s), dimension "
      << dim << ", " << points << " grid point(s)\n";
  return 0;
}

int cmd_check(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  Clock::time_point t0 = Clock::now();
  std::string bytes = read_file(opt.scene_path);
  Scene scene = scene_from_json(bytes);
  if (opt.tol > 0.0) scene.tolerance = opt.tol;
  audit_scene(scene);
  std::vector<Env> grid = sample_grid(scene.factors, scene.grid);
  LieEngine engine(scene);
  Mode mode = *mode_from_string(opt.mode);
  ResidualReport rep =
      engine.residual(mode, opt.order, grid, scene.tolerance, opt.threads);

  Report report = base_report(scene, bytes, engine.metric(), grid.size());
  ModeReport m;
  m.mode = mode;
  (opt.order == 1 ? m.order1 : m.order2) = rep;
  report.modes.push_back(std::move(m));
  out << report_to_json(report);
  if (!opt.csv_path.empty())
    write_text_file(opt.csv_path, report_to_csv(report, grid));
  emit_timing(err, "check", t0);
  return rep.verdict ? 0 : 1;
}

int cmd_compare(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  Clock::time_point t0 = Clock::now();
  std::string bytes = read_file(opt.scene_path);
  Scene scene = scene_from_json(bytes);
  if (opt.tol > 0.0) scene.tolerance = opt.tol;
  audit_scene(scene);
  std::vector<Env> grid = sample_grid(scene.factors, scene.grid);
  LieEngine engine(scene);

  Report report = base_report(scene, bytes, engine.metric(), grid.size());
  for (Mode mode : {Mode::Oracle, Mode::Paper, Mode::Corrected}) {
    ModeReport m;
    m.mode = mode;
    m.order1 = engine.residual(mode, 1, grid, scene.tolerance, opt.threads);
    m.order2 = engine.residual(mode, 2, grid, scene.tolerance, opt.threads);
    report.modes.push_back(std::move(m));
  }
  for (int order = 1; order <= 2; ++order) {
    auto rep = [&](std::size_t i) -> const ResidualReport& {
      return order == 1 ? *report.modes[i].order1 : *report.modes[i].order2;
    };
    bool v0 = rep(0).verdict;
    if (rep(1).verdict != v0 || rep(2).verdict != v0)
      report.disagreement.push_back(
          Disagreement{order, rep(0).sup, rep(1).sup, rep(2).sup});
  }
  out << report_to_json(report);
  if (!opt.csv_path.empty())
    write_text_file(opt.csv_path, report_to_csv(report, grid));
  emit_timing(err, "compare", t0);
  return report.disagreement.empty() ? 0 : 4;
}

double param_number(const std::string& key, const std::string& value) {
  double v = 0.0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
    throw SchemaError("generate: parameter \"" + key +
                      "\" needs a numeric value, got \"" + value + "\"");
  return v;
}

// key=value pairs: a b c k c1 c2 c0 c0p ci sign lo hi n
void apply_param(FamilyParams& p, int& n_spatial, const std::string& token) {
  std::size_t eq = token.find('=');
  if (eq == std::string::npos || eq == 0)
    throw SchemaError("generate: expected key=value, got \"" + token + "\"");
  std::string key = token.substr(0, eq);
  std::string value = token.substr(eq + 1);
  if (key == "sign") {
    if (value == "+" || value == "+1" || value == "1")
      p.sign = +1;
    else if (value == "-" || value == "-1")
      p.sign = -1;
    else
      throw SchemaError("generate: sign must be + or -, got \"" + value +
                        "\"");
    return;
  }
  if (key == "n") {
    n_spatial = static_cast<int>(param_number(key, value));
    return;
  }
  double v = param_number(key, value);
  if (key == "a") p.a = v;
  else if (key == "b") p.b = v;
  else if (key == "c") p.c = v;
  else if (key == "k") p.k = v;
  else if (key == "c1") p.c1 = v;
  else if (key == "c2") p.c2 = v;
  else if (key == "c0") p.c0 = v;
  else if (key == "c0p") p.c0p = v;
  else if (key == "ci") p.ci = v;
  else if (key == "lo") p.domain.lo = v;
  else if (key == "hi") p.domain.hi = v;
  else
    throw SchemaError("generate: unknown parameter \"" + key + "\"");
}

Scene build_family(const std::string& family,
                   const std::vector<std::string>& params) {
  FamilyParams p;
  int n_spatial = 1;
  for (const std::string& token : params) apply_param(p, n_spatial, token);
  if (family == "base-flow")
    return family_scene(FamilyVariant::BaseFlow, p, n_spatial);
  if (family == "r42")
    return family_scene(p.k == 0.0 ? FamilyVariant::R42KZero
                                   : FamilyVariant::R42KNonzero,
                        p, n_spatial);
  if (family == "r46")
    return family_scene(p.k == 0.0 ? FamilyVariant::R46KZero
                                   : FamilyVariant::R46KNonzero,
                        p, n_spatial);
  if (family == "r410")
    return family_scene(FamilyVariant::R410Killing, p, n_spatial);
  if (family == "example43") return example_scene(43, n_spatial);
  if (family == "example44") return example_scene(44, n_spatial);
  if (family == "example47") return example_scene(47, n_spatial);
  if (family == "example48") return example_scene(48, n_spatial, p.c);
  throw SchemaError(
      "generate: unknown family \"" + family +
      "\" (expected base-flow, r42, r46, r410 or example43/44/47/48)");
}

int cmd_generate(const std::string& family,
                 const std::vector<std::string>& params,
                 const std::string& out_path, std::ostream& out,
                 std::ostream& err) {
  Scene scene = build_family(family, params);
  audit_scene(scene);
  std::string text = scene_to_json(scene);
  if (out_path.empty()) {
    out << text;
  } else {
    write_text_file(out_path, text);
    err << "wrote " << out_path << '\n';
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Killing / 2-Killing verification on multiply twisted products",
               "twistlab"};
  app.require_subcommand(1);

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "Audit a scene file");
  validate->add_option("scene", validate_path, "Scene JSON file")->required();

  RunOptions check_opt;
  CLI::App* check =
      app.add_subcommand("check", "Run one mode/order residual check");
  check->add_option("scene", check_opt.scene_path, "Scene JSON file")
      ->required();
  check->add_option("--order", check_opt.order, "Derivative order (1 or 2)")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
  check->add_option("--mode", check_opt.mode, "oracle | paper | corrected")
      ->check(CLI::IsMember({"oracle", "paper", "corrected"}))
      ->capture_default_str();
  check->add_option("--tol", check_opt.tol,
                    "Override the scene tolerance (must be > 0)")
      ->check(CLI::PositiveNumber);
  check->add_option("--csv", check_opt.csv_path,
                    "Write per-point residuals to this CSV file");
  check->add_option("--threads", check_opt.threads,
                    "Worker cap; 0 = available parallelism");

  RunOptions compare_opt;
  CLI::App* compare = app.add_subcommand(
      "compare", "Run all three modes at both orders and flag disagreement");
  compare->add_option("scene", compare_opt.scene_path, "Scene JSON file")
      ->required();
  compare->add_option("--tol", compare_opt.tol,
                      "Override the scene tolerance (must be > 0)")
      ->check(CLI::PositiveNumber);
  compare->add_option("--csv", compare_opt.csv_path,
                      "Write per-point residuals to this CSV file");
  compare->add_option("--threads", compare_opt.threads,
                      "Worker cap; 0 = available parallelism");

  std::string gen_family, gen_out;
  std::vector<std::string> gen_params;
  CLI::App* generate = app.add_subcommand(
      "generate", "Emit a closed-form family scene as JSON");
  generate
      ->add_option("family", gen_family,
                   "base-flow | r42 | r46 | r410 | example43/44/47/48")
      ->required();
  generate->add_option("params", gen_params,
                       "key=value pairs: a b c k c1 c2 c0 c0p ci sign lo hi n");
  generate->add_option("--out", gen_out, "Write here instead of stdout");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (validate->parsed()) return cmd_validate(validate_path, err);
    if (check->parsed()) return cmd_check(check_opt, out, err);
    if (compare->parsed()) return cmd_compare(compare_opt, out, err);
    if (generate->parsed())
      return cmd_generate(gen_family, gen_params, gen_out, out, err);
  } catch (const SceneDomainError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const EvalError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace twistlab
