#pragma once

// First and second Lie derivatives of the product metric along a vector
// field, by three methods:
//
//   Oracle     - the definitional coordinate formula applied to the full
//                N x N metric; accepts any vector field. Ground truth.
//   Paper      - the per-factor decomposition
//                  order 1:  (L_{V1} g1)  (+)  f_i^2 (L_{Vi} g_i)
//                            + (V1(f_i^2) + Vi(f_i^2)) g_i
//                  order 2:  (L_{V1} L_{V1} g1)  (+)  f_i^2 (L_{Vi} L_{Vi} g_i)
//                            + 2 (V1(f_i^2) + Vi(f_i^2)) (L_{Vi} g_i)
//                            + (V1(V1(f_i^2)) + V1(Vi(f_i^2))) g_i
//                requires a lifted field.
//   Corrected  - Paper plus the completed product-rule terms
//                  + (Vi(V1(f_i^2)) + Vi(Vi(f_i^2))) g_i
//                at order 2 (orders 1 coincide with Paper).
//
// Residual reports carry normalized sup norms: component (a,b) is divided
// by 1 + max over the grid of |G_ab|, making the tolerance scale-free.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "twistlab/manifold.hpp"

namespace twistlab {

enum class Mode { Oracle, Paper, Corrected };

const char* to_string(Mode m);
std::optional<Mode> mode_from_string(std::string_view s);

// Components of a symmetric (0,2) tensor at a point.
struct SymTensorValue {
  std::size_t dim = 0;
  std::vector<std::vector<double>> m;

  double max_abs() const;
};

// Symbolic coordinate Lie derivative of a symmetric (0,2) tensor:
//   (L_V T)_ab = sum_c ( V^c dT_ab/dc + T_cb dV^c/da + T_ac dV^c/db ).
// T must be symmetric; mirrored output entries share one Expr.
std::vector<std::vector<Expr>> lie_derivative_tensor(
    const std::vector<std::vector<Expr>>& T,
    const std::vector<std::string>& vars, const std::vector<Expr>& field);

// Directional derivative sum_j field[j] * d(scalar)/d vars[j].
Expr directional_derivative(const Expr& scalar,
                            const std::vector<std::string>& vars,
                            const std::vector<Expr>& field);

// Concatenates per-factor components into full-coordinate order.
std::vector<Expr> flatten_field(const VectorFieldSpec& vf);

struct ArgMax {
  Env point;
  std::size_t a = 0;
  std::size_t b = 0;
};

struct ResidualReport {
  Mode mode = Mode::Oracle;
  int order = 1;
  double sup = 0.0;  // normalized grid sup
  ArgMax argmax;
  double tolerance = 1e-8;
  bool verdict = false;  // sup <= tolerance, certified on the sample grid
  std::vector<double> point_sup;        // normalized, one per grid point
  std::vector<SymTensorValue> tensors;  // raw components, one per grid point
};

enum class Classification { Killing, TwoKillingOnly, Neither };
const char* to_string(Classification c);

// Builds all symbolic derivative tensors for a scene once; evaluation per
// point is then read-only and thread-safe.
class LieEngine {
 public:
  explicit LieEngine(const Scene& scene);

  const ProductMetric& metric() const { return metric_; }
  bool lifted() const { return lifted_; }

  // Structural modes (Paper/Corrected) throw SceneDomainError unless the
  // scene's field is lifted.
  SymTensorValue lie1(Mode mode, const Env& p) const;
  SymTensorValue lie2(Mode mode, const Env& p) const;

  // Normalized residual over a grid; `threads` <= 0 means use available
  // parallelism. Results are independent of the thread count.
  ResidualReport residual(Mode mode, int order, const std::vector<Env>& grid,
                          double tolerance, int threads = 0) const;

 private:
  const std::vector<std::vector<Expr>>& tensor(Mode mode, int order) const;

  ProductMetric metric_;
  bool lifted_ = false;
  std::vector<std::vector<Expr>> l1_oracle_, l2_oracle_;
  std::vector<std::vector<Expr>> l1_structural_;  // Paper == Corrected
  std::vector<std::vector<Expr>> l2_paper_, l2_corrected_;
};

// Single-point conveniences (assemble per call; prefer LieEngine in loops).
SymTensorValue lie1_oracle(const Scene& scene, const Env& p);
SymTensorValue lie2_oracle(const Scene& scene, const Env& p);
SymTensorValue lie1_structural(const Scene& scene, const Env& p, Mode mode);
SymTensorValue lie2_structural(const Scene& scene, const Env& p, Mode mode);

// Grid residual of the order-1 / order-2 Killing condition.
ResidualReport killing_residual(const Scene& scene, Mode mode,
                                const std::vector<Env>& grid,
                                int threads = 0);
ResidualReport two_killing_residual(const Scene& scene, Mode mode,
                                    const std::vector<Env>& grid,
                                    int threads = 0);

// Killing if the order-1 sup passes; otherwise 2-Killing-only if order 2
// passes; otherwise neither. Reports must be orders 1 and 2 of one run.
Classification classify(const ResidualReport& order1,
                        const ResidualReport& order2);

// r(t) = v v'' + 2 (v')^2 for a flow v(t) d/dt on the base (I, -dt^2);
// v is 2-Killing there exactly when r vanishes. The tt-component of the
// second Lie derivative is -2 r.
Expr base_ode_expr(const Expr& v, const std::string& tvar);

struct BaseOdeReport {
  std::vector<double> values;  // r at each grid point, unnormalized
  double sup = 0.0;
  double tolerance = 1e-8;
  bool verdict = false;
};

BaseOdeReport base_ode_residual(const Expr& v, const std::string& tvar,
                                const std::vector<Env>& grid,
                                double tolerance = 1e-8);

}  // namespace twistlab
