#include "twistlab/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace twistlab {

std::size_t ProductMetric::block_of(std::size_t axis) const {
  for (std::size_t k = 0; k < blocks.size(); ++k)
    if (axis >= blocks[k].first && axis < blocks[k].second) return k;
  throw std::out_of_range("axis outside product metric");
}

namespace {

void check_factor_shapes(const std::vector<FactorChart>& factors) {
  if (factors.empty()) throw SchemaError("scene has no factors");
  std::set<std::string> seen;
  for (const auto& fc : factors) {
    if (fc.vars.empty())
      throw SchemaError("factor '" + fc.name + "' has no coordinates");
    if (fc.metric.size() != fc.dim())
      throw SchemaError("factor '" + fc.name + "' metric row count " +
                        std::to_string(fc.metric.size()) + " != dim " +
                        std::to_string(fc.dim()));
    for (const auto& row : fc.metric)
      if (row.size() != fc.dim())
        throw SchemaError("factor '" + fc.name + "' metric is not square");
    if (fc.box.size() != fc.dim())
      throw SchemaError("factor '" + fc.name + "' box count != dim");
    for (const auto& iv : fc.box)
      if (!(iv.lo < iv.hi))
        throw SchemaError("factor '" + fc.name + "' has an empty box");
    for (const auto& v : fc.vars)
      if (!seen.insert(v).second)
        throw SchemaError("duplicate variable name '" + v + "'");
    // Metric entries live on the factor's own chart.
    std::set<std::string> own(fc.vars.begin(), fc.vars.end());
    for (const auto& row : fc.metric)
      for (const auto& entry : row)
        for (const auto& v : free_vars(entry))
          if (!own.count(v))
            throw SchemaError("metric of factor '" + fc.name +
                              "' references variable '" + v +
                              "' outside its chart");
  }
}

}  // namespace

ProductMetric assemble_metric(const std::vector<FactorChart>& factors,
                              const std::vector<TwistFunction>& twists) {
  check_factor_shapes(factors);

  // Exactly one twist per factor i >= 1, none for the base.
  std::vector<const TwistFunction*> by_factor(factors.size(), nullptr);
  for (const auto& tw : twists) {
    if (tw.factor == 0)
      throw SchemaError("twist attached to the base factor");
    if (tw.factor >= factors.size())
      throw SchemaError("twist attached to nonexistent factor index " +
                        std::to_string(tw.factor));
    if (by_factor[tw.factor])
      throw SchemaError("factor '" + factors[tw.factor].name +
                        "' has more than one twist");
    by_factor[tw.factor] = &tw;
  }
  for (std::size_t i = 1; i < factors.size(); ++i)
    if (!by_factor[i])
      throw SchemaError("factor '" + factors[i].name + "' has no twist");

  // Twist scope: base coordinates plus the twisted factor's own.
  for (std::size_t i = 1; i < factors.size(); ++i) {
    std::set<std::string> allowed(factors[0].vars.begin(),
                                  factors[0].vars.end());
    allowed.insert(factors[i].vars.begin(), factors[i].vars.end());
    for (const auto& v : free_vars(by_factor[i]->f))
      if (!allowed.count(v))
        throw SceneDomainError("twist of factor '" + factors[i].name +
                               "' references variable '" + v +
                               "' from another factor");
  }

  ProductMetric G;
  for (const auto& fc : factors) {
    std::size_t first = G.vars.size();
    G.vars.insert(G.vars.end(), fc.vars.begin(), fc.vars.end());
    G.blocks.emplace_back(first, G.vars.size());
  }
  G.dim = G.vars.size();

  Expr zero = Expr::constant(0.0);
  G.entries.assign(G.dim, std::vector<Expr>(G.dim, zero));

  for (std::size_t k = 0; k < factors.size(); ++k) {
    const auto& fc = factors[k];
    std::size_t off = G.blocks[k].first;
    Expr scale = Expr::constant(1.0);
    if (k > 0) {
      const Expr& f = by_factor[k]->f;
      scale = Expr::mul(f, f);
    }
    for (std::size_t i = 0; i < fc.dim(); ++i) {
      for (std::size_t j = i; j < fc.dim(); ++j) {
        // Upper triangle of the chart is authoritative; the mirror entry
        // shares the same Expr so G is symmetric by construction.
        Expr entry = k > 0 ? Expr::mul(scale, fc.metric[i][j]) : fc.metric[i][j];
        G.entries[off + i][off + j] = entry;
        G.entries[off + j][off + i] = entry;
      }
    }
  }
  return G;
}

std::vector<Env> sample_grid(const std::vector<FactorChart>& factors,
                             const GridSpec& grid) {
  check_factor_shapes(factors);
  if (grid.points_per_dim < 1)
    throw SchemaError("points_per_dim must be at least 1");
  if (!(grid.inset >= 0.0) || !(grid.inset < 0.5))
    throw SchemaError("inset must lie in [0, 0.5)");

  std::vector<std::string> vars;
  std::vector<std::vector<double>> axes;
  for (const auto& fc : factors) {
    for (std::size_t j = 0; j < fc.dim(); ++j) {
      vars.push_back(fc.vars[j]);
      double w = fc.box[j].hi - fc.box[j].lo;
      double a = fc.box[j].lo + grid.inset * w;
      double b = fc.box[j].hi - grid.inset * w;
      std::vector<double> pts;
      int n = grid.points_per_dim;
      if (n == 1) {
        pts.push_back(0.5 * (a + b));
      } else {
        for (int s = 0; s < n; ++s)
          pts.push_back(s == n - 1 ? b : a + (b - a) * s / (n - 1));
      }
      axes.push_back(std::move(pts));
    }
  }

  std::vector<Env> out;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    Env p;
    for (std::size_t d = 0; d < axes.size(); ++d)
      p.set(vars[d], axes[d][idx[d]]);
    bool keep = true;
    for (const auto& guard : grid.guards) {
      if (std::fabs(eval(guard, p)) < grid.guard_delta) {
        keep = false;
        break;
      }
    }
    if (keep) out.push_back(std::move(p));
    // Advance the last index fastest: lexicographic order, first
    // coordinate slowest.
    std::size_t d = axes.size();
    while (d > 0) {
      --d;
      if (++idx[d] < axes[d].size()) break;
      idx[d] = 0;
      if (d == 0) {
        if (out.empty())
          throw SceneDomainError("no grid points survive the guards");
        return out;
      }
    }
  }
}

void validate_vector_field(const VectorFieldSpec& vf,
                           const std::vector<FactorChart>& factors) {
  check_factor_shapes(factors);
  if (vf.components.size() != factors.size())
    throw SchemaError("vector field has " +
                      std::to_string(vf.components.size()) +
                      " component lists for " +
                      std::to_string(factors.size()) + " factors");
  std::set<std::string> all;
  for (const auto& fc : factors) all.insert(fc.vars.begin(), fc.vars.end());

  for (std::size_t k = 0; k < factors.size(); ++k) {
    const auto& fc = factors[k];
    if (vf.components[k].size() != fc.dim())
      throw SchemaError("vector field on factor '" + fc.name + "' has " +
                        std::to_string(vf.components[k].size()) +
                        " components for dimension " +
                        std::to_string(fc.dim()));
    std::set<std::string> own(fc.vars.begin(), fc.vars.end());
    for (const auto& comp : vf.components[k]) {
      for (const auto& v : free_vars(comp)) {
        if (!all.count(v))
          throw SchemaError("vector field component references unknown "
                            "variable '" + v + "'");
        if (vf.lifted && !own.count(v))
          throw SceneDomainError("lifted vector field on factor '" + fc.name +
                                 "' references foreign variable '" + v + "'");
      }
    }
  }
}

double metric_determinant(const ProductMetric& G, const Env& p) {
  std::size_t n = G.dim;
  std::vector<std::vector<double>> m(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m[i][j] = eval(G.entries[i][j], p);

  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(m[r][col]) > std::fabs(m[piv][col])) piv = r;
    if (m[piv][col] == 0.0) return 0.0;
    if (piv != col) {
      std::swap(m[piv], m[col]);
      det = -det;
    }
    det *= m[col][col];
    for (std::size_t r = col + 1; r < n; ++r) {
      double factor = m[r][col] / m[col][col];
      for (std::size_t c = col; c < n; ++c) m[r][c] -= factor * m[col][c];
    }
  }
  return det;
}

void audit_scene(const Scene& scene) {
  ProductMetric G = assemble_metric(scene.factors, scene.twists);
  validate_vector_field(scene.field, scene.factors);
  std::vector<Env> grid = sample_grid(scene.factors, scene.grid);

  // Twists must be positive wherever we sample.
  for (const auto& tw : scene.twists) {
    for (const auto& p : grid) {
      double v = eval(tw.f, p);
      if (!(v > 0.0))
        throw SceneDomainError(
            "twist of factor '" + scene.factors[tw.factor].name +
            "' is not positive on the grid (reaches " + std::to_string(v) +
            ")");
    }
  }

  // The provided lower triangle of each factor metric must agree in value
  // with the authoritative upper triangle.
  for (const auto& fc : scene.factors) {
    for (std::size_t i = 0; i < fc.dim(); ++i) {
      for (std::size_t j = i + 1; j < fc.dim(); ++j) {
        for (const auto& p : grid) {
          double up = eval(fc.metric[i][j], p);
          double lo = eval(fc.metric[j][i], p);
          if (std::fabs(up - lo) > 1e-12 * (1.0 + std::fabs(up)))
            throw SceneDomainError("metric of factor '" + fc.name +
                                   "' is not symmetric");
        }
      }
    }
  }

  for (const auto& p : grid) {
    if (std::fabs(metric_determinant(G, p)) <= 1e-12)
      throw SceneDomainError("product metric is numerically degenerate at a "
                             "sample point");
  }
}

}  // namespace twistlab
