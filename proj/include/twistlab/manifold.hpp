#pragma once

// Product-manifold plumbing: coordinate charts for the factors, twist
// functions, assembly of the block-diagonal product metric
//
//   G = g_1  (+)  f_2^2 g_2  (+)  ...  (+)  f_n^2 g_n
//
// and deterministic grid sampling over the factor boxes.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "twistlab/expr.hpp"

namespace twistlab {

// Structural problems: malformed shapes, unresolved or misplaced names.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

// Mathematical problems with an otherwise well-formed scene: twist scope or
// positivity violations, degenerate metric, empty guarded grid, invalid
// family parameters.
class SceneDomainError : public std::runtime_error {
 public:
  explicit SceneDomainError(const std::string& what)
      : std::runtime_error(what) {}
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// One factor manifold in a single coordinate chart. `metric` is the
// symmetric dim x dim component matrix in these coordinates; `box` gives
// the sampled coordinate ranges. Variable names are global: no two factors
// may share one.
struct FactorChart {
  std::string name;
  std::vector<std::string> vars;
  std::vector<std::vector<Expr>> metric;
  std::vector<Interval> box;

  std::size_t dim() const { return vars.size(); }
};

// Positive scalar f scaling factor `factor` (>= 1); the engine uses f^2.
// f may depend only on base (factor 0) coordinates and its own factor's
// coordinates.
struct TwistFunction {
  std::size_t factor = 0;
  Expr f = Expr::constant(1.0);
};

// A vector field on the product, stored per factor: components[k][j] is the
// coefficient of d/d(vars_k[j]). When `lifted` is set, components of factor
// k may reference only factor k's own variables; otherwise any product
// variable is allowed (such fields are accepted by the coordinate evaluator
// only).
struct VectorFieldSpec {
  bool lifted = true;
  std::vector<std::vector<Expr>> components;
};

// Sampling plan: `points_per_dim` uniformly spaced points per coordinate,
// inset from each box edge by `inset` times the box width. Points where any
// guard expression is smaller than `guard_delta` in absolute value are
// dropped.
struct GridSpec {
  int points_per_dim = 9;
  double inset = 0.05;
  std::vector<Expr> guards;
  double guard_delta = 1e-6;
};

struct Scene {
  std::vector<FactorChart> factors;
  std::vector<TwistFunction> twists;
  VectorFieldSpec field;
  GridSpec grid;
  double tolerance = 1e-8;
};

// Assembled product metric: N x N symmetric Expr matrix over the
// concatenated variable list, block diagonal by factor. Mirrored entries
// share one Expr, so evaluated values are symmetric exactly.
struct ProductMetric {
  std::size_t dim = 0;
  std::vector<std::string> vars;
  // Half-open index range [first, second) of each factor's block.
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  std::vector<std::vector<Expr>> entries;

  std::size_t block_of(std::size_t axis) const;
};

// Validates global variable uniqueness, twist coverage (exactly one twist
// per factor >= 1) and twist scope, then builds the block-diagonal metric.
// Throws SchemaError or SceneDomainError.
ProductMetric assemble_metric(const std::vector<FactorChart>& factors,
                              const std::vector<TwistFunction>& twists);

// Cartesian product of per-dimension points, lexicographic with the first
// coordinate slowest; a single point per dimension sits at the box middle.
// Guard-filtered; throws SceneDomainError if nothing survives.
std::vector<Env> sample_grid(const std::vector<FactorChart>& factors,
                             const GridSpec& grid);

// Checks component counts against factor dimensions and, for lifted fields,
// that no component references a foreign variable.
void validate_vector_field(const VectorFieldSpec& vf,
                           const std::vector<FactorChart>& factors);

// Determinant of G evaluated at p (LU with partial pivoting).
double metric_determinant(const ProductMetric& G, const Env& p);

// Full pre-run audit: assembly, field validation, guarded grid
// construction, twist positivity at every sample point, input metric
// symmetry, and nondegeneracy |det G| > 1e-12 at every sample point.
void audit_scene(const Scene& scene);

}  // namespace twistlab
