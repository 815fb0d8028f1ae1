#include "twistlab/scene_io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

namespace twistlab {
namespace {

using nlohmann::json;

// ---- reading -------------------------------------------------------------

const json& member(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + " must be an object");
  auto it = j.find(key);
  if (it == j.end())
    throw SchemaError(where + ": missing \"" + std::string(key) + "\"");
  return *it;
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw SchemaError(where + " must be a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw SchemaError(where + " must be an integer");
  return j.get<int>();
}

bool get_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw SchemaError(where + " must be a boolean");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw SchemaError(where + " must be a string");
  return j.get<std::string>();
}

Expr get_expr(const json& j, const std::map<std::string, double>& constants,
              const std::string& where) {
  std::string text = get_string(j, where);
  try {
    return parse(text, constants);
  } catch (const ParseError& e) {
    throw SchemaError(where + ": " + e.what());
  }
}

// ---- writing -------------------------------------------------------------

// Shortest round-trip form, matching the expression printer's numerals.
std::string fmt_shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Fixed 17 significant digits for reports.
std::string fmt_17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  out += '"';
  return out;
}

template <typename It, typename F>
std::string join(It first, It last, F f) {
  std::string out;
  for (It it = first; it != last; ++it) {
    if (!out.empty()) out += ", ";
    out += f(*it);
  }
  return out;
}

std::string residual_json(const ResidualReport& rep,
                          const std::vector<std::string>& vars,
                          const std::string& pad) {
  std::ostringstream os;
  os << "{\n";
  os << pad << "  \"sup\": " << fmt_17(rep.sup) << ",\n";
  os << pad << "  \"argmax\": {\n";
  os << pad << "    \"point\": {"
     << join(vars.begin(), vars.end(),
             [&](const std::string& v) {
               return quoted(v) + ": " + fmt_17(rep.argmax.point.get(v));
             })
     << "},\n";
  os << pad << "    \"component\": [" << rep.argmax.a << ", " << rep.argmax.b
     << "]\n";
  os << pad << "  },\n";
  os << pad << "  \"verdict\": " << (rep.verdict ? "true" : "false") << "\n";
  os << pad << "}";
  return os.str();
}

}  // namespace

Scene scene_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("scene JSON: ") + e.what());
  }
  if (!doc.is_object())
    throw SchemaError("scene JSON: top level must be an object");

  std::map<std::string, double> constants;
  if (doc.contains("constants")) {
    const json& c = doc["constants"];
    if (!c.is_object()) throw SchemaError("\"constants\" must be an object");
    for (auto it = c.begin(); it != c.end(); ++it)
      constants[it.key()] =
          get_number(it.value(), "constant \"" + it.key() + "\"");
  }

  Scene scene;

  const json& factors = member(doc, "factors", "scene");
  if (!factors.is_array() || factors.empty())
    throw SchemaError("\"factors\" must be a nonempty array");
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const std::string where = "factors[" + std::to_string(i) + "]";
    const json& fj = factors[i];
    FactorChart chart;
    chart.name = get_string(member(fj, "name", where), where + ".name");
    const json& vars = member(fj, "vars", where);
    if (!vars.is_array()) throw SchemaError(where + ".vars must be an array");
    for (std::size_t v = 0; v < vars.size(); ++v)
      chart.vars.push_back(get_string(
          vars[v], where + ".vars[" + std::to_string(v) + "]"));
    const json& metric = member(fj, "metric", where);
    if (!metric.is_array())
      throw SchemaError(where + ".metric must be an array of rows");
    for (std::size_t r = 0; r < metric.size(); ++r) {
      const std::string rw = where + ".metric[" + std::to_string(r) + "]";
      if (!metric[r].is_array()) throw SchemaError(rw + " must be an array");
      std::vector<Expr> row;
      for (std::size_t c = 0; c < metric[r].size(); ++c)
        row.push_back(get_expr(metric[r][c], constants,
                               rw + "[" + std::to_string(c) + "]"));
      chart.metric.push_back(std::move(row));
    }
    const json& box = member(fj, "box", where);
    if (!box.is_array()) throw SchemaError(where + ".box must be an array");
    for (std::size_t b = 0; b < box.size(); ++b) {
      const std::string bw = where + ".box[" + std::to_string(b) + "]";
      if (!box[b].is_array() || box[b].size() != 2)
        throw SchemaError(bw + " must be [lo, hi]");
      chart.box.push_back(Interval{get_number(box[b][0], bw + "[0]"),
                                   get_number(box[b][1], bw + "[1]")});
    }
    scene.factors.push_back(std::move(chart));
  }

  if (doc.contains("twists")) {
    const json& twists = doc["twists"];
    if (!twists.is_array()) throw SchemaError("\"twists\" must be an array");
    for (std::size_t i = 0; i < twists.size(); ++i) {
      const std::string where = "twists[" + std::to_string(i) + "]";
      const json& tj = twists[i];
      int factor = get_int(member(tj, "factor", where), where + ".factor");
      if (factor < 0) throw SchemaError(where + ".factor must be >= 0");
      scene.twists.push_back(TwistFunction{
          static_cast<std::size_t>(factor),
          get_expr(member(tj, "f", where), constants, where + ".f")});
    }
  }

  const json& field = member(doc, "field", "scene");
  scene.field.lifted = field.contains("lifted")
                           ? get_bool(field["lifted"], "field.lifted")
                           : true;
  const json& comps = member(field, "components", "field");
  if (!comps.is_array())
    throw SchemaError("field.components must be an array");
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const std::string where = "field.components[" + std::to_string(k) + "]";
    if (!comps[k].is_array()) throw SchemaError(where + " must be an array");
    std::vector<Expr> block;
    for (std::size_t j = 0; j < comps[k].size(); ++j)
      block.push_back(get_expr(comps[k][j], constants,
                               where + "[" + std::to_string(j) + "]"));
    scene.field.components.push_back(std::move(block));
  }

  if (doc.contains("grid")) {
    const json& grid = doc["grid"];
    if (!grid.is_object()) throw SchemaError("\"grid\" must be an object");
    if (grid.contains("points_per_dim")) {
      scene.grid.points_per_dim =
          get_int(grid["points_per_dim"], "grid.points_per_dim");
      if (scene.grid.points_per_dim < 1)
        throw SchemaError("grid.points_per_dim must be >= 1");
    }
    if (grid.contains("inset")) {
      scene.grid.inset = get_number(grid["inset"], "grid.inset");
      if (scene.grid.inset < 0.0 || scene.grid.inset >= 0.5)
        throw SchemaError("grid.inset must lie in [0, 0.5)");
    }
    if (grid.contains("guards")) {
      const json& guards = grid["guards"];
      if (!guards.is_array())
        throw SchemaError("grid.guards must be an array");
      for (std::size_t i = 0; i < guards.size(); ++i)
        scene.grid.guards.push_back(get_expr(
            guards[i], constants, "grid.guards[" + std::to_string(i) + "]"));
    }
    if (grid.contains("guard_delta")) {
      scene.grid.guard_delta =
          get_number(grid["guard_delta"], "grid.guard_delta");
      if (scene.grid.guard_delta < 0.0)
        throw SchemaError("grid.guard_delta must be >= 0");
    }
  }

  if (doc.contains("tolerance")) {
    scene.tolerance = get_number(doc["tolerance"], "\"tolerance\"");
    if (!(scene.tolerance > 0.0))
      throw SchemaError("\"tolerance\" must be positive");
  }

  return scene;
}

std::string scene_to_json(const Scene& scene) {
  std::ostringstream os;
  os << "{\n  \"factors\": [\n";
  for (std::size_t i = 0; i < scene.factors.size(); ++i) {
    const FactorChart& f = scene.factors[i];
    os << "    {\n";
    os << "      \"name\": " << quoted(f.name) << ",\n";
    os << "      \"vars\": ["
       << join(f.vars.begin(), f.vars.end(), quoted) << "],\n";
    os << "      \"metric\": ["
       << join(f.metric.begin(), f.metric.end(),
               [](const std::vector<Expr>& row) {
                 return "[" +
                        join(row.begin(), row.end(),
                             [](const Expr& e) { return quoted(print(e)); }) +
                        "]";
               })
       << "],\n";
    os << "      \"box\": ["
       << join(f.box.begin(), f.box.end(),
               [](const Interval& iv) {
                 return "[" + fmt_shortest(iv.lo) + ", " +
                        fmt_shortest(iv.hi) + "]";
               })
       << "]\n";
    os << "    }" << (i + 1 < scene.factors.size() ? "," : "") << "\n";
  }
  os << "  ],\n";

  os << "  \"twists\": [";
  for (std::size_t i = 0; i < scene.twists.size(); ++i) {
    os << (i ? ",\n    " : "\n    ");
    os << "{\"factor\": " << scene.twists[i].factor
       << ", \"f\": " << quoted(print(scene.twists[i].f)) << "}";
  }
  os << (scene.twists.empty() ? "" : "\n  ") << "],\n";

  os << "  \"field\": {\n";
  os << "    \"lifted\": " << (scene.field.lifted ? "true" : "false") << ",\n";
  os << "    \"components\": ["
     << join(scene.field.components.begin(), scene.field.components.end(),
             [](const std::vector<Expr>& block) {
               return "[" +
                      join(block.begin(), block.end(),
                           [](const Expr& e) { return quoted(print(e)); }) +
                      "]";
             })
     << "]\n  },\n";

  os << "  \"grid\": {\n";
  os << "    \"points_per_dim\": " << scene.grid.points_per_dim << ",\n";
  os << "    \"inset\": " << fmt_shortest(scene.grid.inset) << ",\n";
  os << "    \"guards\": ["
     << join(scene.grid.guards.begin(), scene.grid.guards.end(),
             [](const Expr& e) { return quoted(print(e)); })
     << "],\n";
  os << "    \"guard_delta\": " << fmt_shortest(scene.grid.guard_delta)
     << "\n  },\n";

  os << "  \"tolerance\": " << fmt_shortest(scene.tolerance) << "\n}\n";
  return os.str();
}

std::string read_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw SchemaError("cannot read file: " + path);
  std::string data;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) data.append(buf, n);
  std::fclose(f);
  return data;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

std::string report_to_json(const Report& r) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"scene_sha256\": " << quoted(r.scene_sha256) << ",\n";
  os << "  \"modes\": [\n";
  for (std::size_t i = 0; i < r.modes.size(); ++i) {
    const ModeReport& m = r.modes[i];
    os << "    {\n      \"mode\": " << quoted(to_string(m.mode));
    if (m.order1)
      os << ",\n      \"order1\": " << residual_json(*m.order1, r.vars,
                                                     "      ");
    if (m.order2)
      os << ",\n      \"order2\": " << residual_json(*m.order2, r.vars,
                                                     "      ");
    os << "\n    }" << (i + 1 < r.modes.size() ? "," : "") << "\n";
  }
  os << "  ],\n";
  os << "  \"disagreement\": [";
  for (std::size_t i = 0; i < r.disagreement.size(); ++i) {
    const Disagreement& d = r.disagreement[i];
    os << (i ? ",\n    " : "\n    ");
    os << "{\"order\": " << d.order << ", \"oracle\": " << fmt_17(d.oracle)
       << ", \"paper\": " << fmt_17(d.paper)
       << ", \"corrected\": " << fmt_17(d.corrected) << "}";
  }
  os << (r.disagreement.empty() ? "" : "\n  ") << "],\n";
  os << "  \"grid\": {\n";
  os << "    \"points_per_dim\": " << r.points_per_dim << ",\n";
  os << "    \"inset\": " << fmt_17(r.inset) << ",\n";
  os << "    \"size\": " << r.grid_size << "\n  },\n";
  os << "  \"tolerance\": " << fmt_17(r.tolerance) << "\n}\n";
  return os.str();
}

std::string report_to_csv(const Report& r, const std::vector<Env>& grid) {
  std::ostringstream os;
  os << "mode,order";
  for (const std::string& v : r.vars) os << ',' << v;
  os << ",residual\n";
  for (const ModeReport& m : r.modes) {
    for (int order : {1, 2}) {
      const std::optional<ResidualReport>& rep =
          order == 1 ? m.order1 : m.order2;
      if (!rep) continue;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        os << to_string(m.mode) << ',' << order;
        for (const std::string& v : r.vars) os << ',' << fmt_17(grid[i].get(v));
        os << ',' << fmt_17(rep->point_sup[i]) << '\n';
      }
    }
  }
  return os.str();
}

}  // namespace twistlab
