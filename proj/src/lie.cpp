#include "twistlab/lie.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <stdexcept>
#include <thread>

namespace twistlab {

const char* to_string(Mode m) {
  switch (m) {
    case Mode::Oracle: return "oracle";
    case Mode::Paper: return "paper";
    case Mode::Corrected: return "corrected";
  }
  return "?";
}

std::optional<Mode> mode_from_string(std::string_view s) {
  if (s == "oracle") return Mode::Oracle;
  if (s == "paper") return Mode::Paper;
  if (s == "corrected") return Mode::Corrected;
  return std::nullopt;
}

const char* to_string(Classification c) {
  switch (c) {
    case Classification::Killing: return "KILLING";
    case Classification::TwoKillingOnly: return "TWO_KILLING_ONLY";
    case Classification::Neither: return "NEITHER";
  }
  return "?";
}

double SymTensorValue::max_abs() const {
  double s = 0.0;
  for (const auto& row : m)
    for (double v : row) s = std::max(s, std::fabs(v));
  return s;
}

std::vector<std::vector<Expr>> lie_derivative_tensor(
    const std::vector<std::vector<Expr>>& T,
    const std::vector<std::string>& vars, const std::vector<Expr>& field) {
  std::size_t n = vars.size();
  if (T.size() != n || field.size() != n)
    throw std::invalid_argument("lie_derivative_tensor: shape mismatch");
  for (const auto& row : T)
    if (row.size() != n)
      throw std::invalid_argument("lie_derivative_tensor: T not square");

  // dV[c][a] = d field[c] / d vars[a]
  Expr zero = Expr::constant(0.0);
  std::vector<std::vector<Expr>> dV(n, std::vector<Expr>(n, zero));
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t a = 0; a < n; ++a) dV[c][a] = diff(field[c], vars[a]);

  std::vector<std::vector<Expr>> out(n, std::vector<Expr>(n, zero));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      Expr sum = zero;
      for (std::size_t c = 0; c < n; ++c)
        sum = Expr::add(sum, Expr::mul(field[c], diff(T[a][b], vars[c])));
      for (std::size_t c = 0; c < n; ++c)
        sum = Expr::add(sum, Expr::mul(T[c][b], dV[c][a]));
      for (std::size_t c = 0; c < n; ++c)
        sum = Expr::add(sum, Expr::mul(T[a][c], dV[c][b]));
      // Mirrored entries share the Expr: the result of deriving a
      // symmetric tensor is symmetric, and sharing keeps it exact.
      out[a][b] = sum;
      out[b][a] = sum;
    }
  }
  return out;
}

Expr directional_derivative(const Expr& scalar,
                            const std::vector<std::string>& vars,
                            const std::vector<Expr>& field) {
  if (vars.size() != field.size())
    throw std::invalid_argument("directional_derivative: shape mismatch");
  Expr sum = Expr::constant(0.0);
  for (std::size_t j = 0; j < vars.size(); ++j)
    sum = Expr::add(sum, Expr::mul(field[j], diff(scalar, vars[j])));
  return sum;
}

std::vector<Expr> flatten_field(const VectorFieldSpec& vf) {
  std::vector<Expr> out;
  for (const auto& comps : vf.components)
    out.insert(out.end(), comps.begin(), comps.end());
  return out;
}

namespace {

SymTensorValue eval_sym(const std::vector<std::vector<Expr>>& T,
                        const Env& p) {
  SymTensorValue out;
  out.dim = T.size();
  out.m.assign(out.dim, std::vector<double>(out.dim, 0.0));
  EvalCache cache;
  for (std::size_t a = 0; a < out.dim; ++a) {
    for (std::size_t b = a; b < out.dim; ++b) {
      double v = cache.eval(T[a][b], p);
      out.m[a][b] = v;
      out.m[b][a] = v;
    }
  }
  return out;
}

// Runs fn(0..n-1) on up to `threads` workers; any exception is rethrown
// for the smallest failing index, so failures are deterministic.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn) {
  unsigned want = threads > 0 ? static_cast<unsigned>(threads)
                              : std::thread::hardware_concurrency();
  if (want == 0) want = 1;
  want = static_cast<unsigned>(
      std::min<std::size_t>(want, n == 0 ? 1 : n));
  if (want <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(want);
  std::vector<std::size_t> error_index(want, n);
  std::vector<std::thread> pool;
  pool.reserve(want);
  for (unsigned w = 0; w < want; ++w) {
    pool.emplace_back([&, w] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
          error_index[w] = i;
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  std::size_t first = n;
  std::exception_ptr who;
  for (unsigned w = 0; w < want; ++w) {
    if (errors[w] && error_index[w] < first) {
      first = error_index[w];
      who = errors[w];
    }
  }
  if (who) std::rethrow_exception(who);
}

struct StructuralParts {
  std::vector<std::vector<Expr>> l1, l2_paper, l2_corrected;
};

StructuralParts build_structural(const Scene& scene, const ProductMetric& G) {
  const auto& factors = scene.factors;
  std::vector<const Expr*> twist_of(factors.size(), nullptr);
  for (const auto& tw : scene.twists) twist_of[tw.factor] = &tw.f;

  Expr zero = Expr::constant(0.0);
  std::size_t N = G.dim;
  StructuralParts parts;
  parts.l1.assign(N, std::vector<Expr>(N, zero));
  parts.l2_paper = parts.l1;
  parts.l2_corrected = parts.l1;

  const auto& base = factors[0];
  const auto& Vbase = scene.field.components[0];

  for (std::size_t k = 0; k < factors.size(); ++k) {
    const auto& fc = factors[k];
    const auto& Vk = scene.field.components[k];
    std::size_t off = G.blocks[k].first;
    auto Lk1 = lie_derivative_tensor(fc.metric, fc.vars, Vk);
    auto Lk2 = lie_derivative_tensor(Lk1, fc.vars, Vk);

    if (k == 0) {
      for (std::size_t i = 0; i < fc.dim(); ++i) {
        for (std::size_t j = i; j < fc.dim(); ++j) {
          parts.l1[off + i][off + j] = parts.l1[off + j][off + i] = Lk1[i][j];
          parts.l2_paper[off + i][off + j] =
              parts.l2_paper[off + j][off + i] = Lk2[i][j];
          parts.l2_corrected[off + i][off + j] =
              parts.l2_corrected[off + j][off + i] = Lk2[i][j];
        }
      }
      continue;
    }

    const Expr& f = *twist_of[k];
    Expr fsq = Expr::mul(f, f);
    // u = V1(f^2) + Vk(f^2); the twist depends on base and factor-k
    // coordinates only, so these two directional derivatives cover V(f^2).
    Expr u = Expr::add(directional_derivative(fsq, base.vars, Vbase),
                       directional_derivative(fsq, fc.vars, Vk));
    Expr w_printed = directional_derivative(u, base.vars, Vbase);
    Expr w_completed = directional_derivative(u, fc.vars, Vk);
    Expr two_u = Expr::mul(Expr::constant(2.0), u);

    for (std::size_t i = 0; i < fc.dim(); ++i) {
      for (std::size_t j = i; j < fc.dim(); ++j) {
        const Expr& gij = fc.metric[i][j];
        Expr e1 = Expr::add(Expr::mul(fsq, Lk1[i][j]), Expr::mul(u, gij));
        Expr e2p = Expr::add(
            Expr::add(Expr::mul(fsq, Lk2[i][j]),
                      Expr::mul(two_u, Lk1[i][j])),
            Expr::mul(w_printed, gij));
        Expr e2c = Expr::add(e2p, Expr::mul(w_completed, gij));
        parts.l1[off + i][off + j] = parts.l1[off + j][off + i] = e1;
        parts.l2_paper[off + i][off + j] = parts.l2_paper[off + j][off + i] =
            e2p;
        parts.l2_corrected[off + i][off + j] =
            parts.l2_corrected[off + j][off + i] = e2c;
      }
    }
  }
  return parts;
}

}  // namespace

LieEngine::LieEngine(const Scene& scene)
    : metric_(assemble_metric(scene.factors, scene.twists)),
      lifted_(scene.field.lifted) {
  validate_vector_field(scene.field, scene.factors);
  std::vector<Expr> V = flatten_field(scene.field);
  l1_oracle_ = lie_derivative_tensor(metric_.entries, metric_.vars, V);
  l2_oracle_ = lie_derivative_tensor(l1_oracle_, metric_.vars, V);
  if (lifted_) {
    StructuralParts parts = build_structural(scene, metric_);
    l1_structural_ = std::move(parts.l1);
    l2_paper_ = std::move(parts.l2_paper);
    l2_corrected_ = std::move(parts.l2_corrected);
  }
}

const std::vector<std::vector<Expr>>& LieEngine::tensor(Mode mode,
                                                        int order) const {
  if (order != 1 && order != 2)
    throw std::invalid_argument("order must be 1 or 2");
  if (mode == Mode::Oracle) return order == 1 ? l1_oracle_ : l2_oracle_;
  if (!lifted_)
    throw SceneDomainError(
        "structural evaluation requires a lifted vector field");
  if (order == 1) return l1_structural_;
  return mode == Mode::Paper ? l2_paper_ : l2_corrected_;
}

SymTensorValue LieEngine::lie1(Mode mode, const Env& p) const {
  return eval_sym(tensor(mode, 1), p);
}

SymTensorValue LieEngine::lie2(Mode mode, const Env& p) const {
  return eval_sym(tensor(mode, 2), p);
}

ResidualReport LieEngine::residual(Mode mode, int order,
                                   const std::vector<Env>& grid,
                                   double tolerance, int threads) const {
  if (grid.empty()) throw SceneDomainError("residual over an empty grid");
  const auto& T = tensor(mode, order);
  std::size_t N = metric_.dim;

  // Component scales 1 + max |G_ab| over the grid (tolerance is scale-free).
  std::vector<std::vector<double>> scale(N, std::vector<double>(N, 1.0));
  {
    EvalCache cache;
    for (const Env& p : grid) {
      cache.reset();
      for (std::size_t a = 0; a < N; ++a) {
        for (std::size_t b = a; b < N; ++b) {
          double s = 1.0 + std::fabs(cache.eval(metric_.entries[a][b], p));
          if (s > scale[a][b]) scale[a][b] = scale[b][a] = s;
        }
      }
    }
  }

  ResidualReport rep;
  rep.mode = mode;
  rep.order = order;
  rep.tolerance = tolerance;
  rep.point_sup.assign(grid.size(), 0.0);
  rep.tensors.assign(grid.size(), SymTensorValue{});

  parallel_for(grid.size(), threads, [&](std::size_t gi) {
    SymTensorValue tv = eval_sym(T, grid[gi]);
    double ps = 0.0;
    for (std::size_t a = 0; a < N; ++a)
      for (std::size_t b = a; b < N; ++b)
        ps = std::max(ps, std::fabs(tv.m[a][b]) / scale[a][b]);
    rep.point_sup[gi] = ps;
    rep.tensors[gi] = std::move(tv);
  });

  // Sequential reduction in grid order: results do not depend on the
  // thread count, and ties resolve to the earliest point/component.
  double sup = -1.0;
  std::size_t best = 0, ba = 0, bb = 0;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    for (std::size_t a = 0; a < N; ++a) {
      for (std::size_t b = a; b < N; ++b) {
        double v = std::fabs(rep.tensors[gi].m[a][b]) / scale[a][b];
        if (v > sup) {
          sup = v;
          best = gi;
          ba = a;
          bb = b;
        }
      }
    }
  }
  rep.sup = sup;
  rep.argmax = {grid[best], ba, bb};
  rep.verdict = rep.sup <= tolerance;
  return rep;
}

SymTensorValue lie1_oracle(const Scene& scene, const Env& p) {
  return LieEngine(scene).lie1(Mode::Oracle, p);
}

SymTensorValue lie2_oracle(const Scene& scene, const Env& p) {
  return LieEngine(scene).lie2(Mode::Oracle, p);
}

SymTensorValue lie1_structural(const Scene& scene, const Env& p, Mode mode) {
  return LieEngine(scene).lie1(mode, p);
}

SymTensorValue lie2_structural(const Scene& scene, const Env& p, Mode mode) {
  return LieEngine(scene).lie2(mode, p);
}

ResidualReport killing_residual(const Scene& scene, Mode mode,
                                const std::vector<Env>& grid, int threads) {
  return LieEngine(scene).residual(mode, 1, grid, scene.tolerance, threads);
}

ResidualReport two_killing_residual(const Scene& scene, Mode mode,
                                    const std::vector<Env>& grid,
                                    int threads) {
  return LieEngine(scene).residual(mode, 2, grid, scene.tolerance, threads);
}

Classification classify(const ResidualReport& order1,
                        const ResidualReport& order2) {
  if (order1.order != 1 || order2.order != 2)
    throw std::invalid_argument(
        "classify needs an order-1 and an order-2 report");
  if (order1.mode != order2.mode || order1.tolerance != order2.tolerance ||
      order1.point_sup.size() != order2.point_sup.size())
    throw std::invalid_argument("classify reports are from different runs");
  if (order1.verdict) return Classification::Killing;
  if (order2.verdict) return Classification::TwoKillingOnly;
  return Classification::Neither;
}

Expr base_ode_expr(const Expr& v, const std::string& tvar) {
  Expr v1 = diff(v, tvar);
  Expr v2 = diff(v1, tvar);
  return Expr::add(Expr::mul(v, v2),
                   Expr::mul(Expr::constant(2.0), Expr::mul(v1, v1)));
}

BaseOdeReport base_ode_residual(const Expr& v, const std::string& tvar,
                                const std::vector<Env>& grid,
                                double tolerance) {
  if (grid.empty()) throw SceneDomainError("residual over an empty grid");
  Expr r = base_ode_expr(v, tvar);
  BaseOdeReport rep;
  rep.tolerance = tolerance;
  rep.values.reserve(grid.size());
  for (const Env& p : grid) {
    double val = eval(r, p);
    rep.values.push_back(val);
    rep.sup = std::max(rep.sup, std::fabs(val));
  }
  rep.verdict = rep.sup < tolerance;
  return rep;
}

}  // namespace twistlab
