#pragma once

// Closed-form solution families on spacetimes I x I_2 x ... x I_n with
// metric -dt^2 + sum f_i^2 dx_i^2, plus the four bundled example scenes.
//
// All twisted functions here have the separated form f^2 = e^(a x + b) h(t)
// where h solves the second-order ODE that makes the designated flow a
// 2-Killing field (or, for the Killing family, the first-order condition).
// The "+-" of the closed forms is an explicit sign parameter, and the
// absolute value is kept as a literal abs node; its argument is validated
// to keep one strict sign across the base interval (64-point sampling),
// so differentiation never crosses the kink.

#include <string>

#include "twistlab/manifold.hpp"

namespace twistlab {

enum class FamilyVariant {
  BaseFlow,      // v(t) = cbrt(c1 t + c2) on the bare base
  R42KNonzero,   // V = cbrt(c1 t + c2) d/dt + k d/dx, k != 0
  R42KZero,      // V = cbrt(c1 t + c2) d/dt
  R46KNonzero,   // V = c d/dt + k d/dx, k != 0
  R46KZero,      // V = c d/dt
  R410Killing,   // V = c d/dt + k d/dx with f = ci e^(a (c x - k t)/c)
  Example43,
  Example44,
  Example47,
  Example48,
};

struct FamilyParams {
  double c1 = 1.0, c2 = 0.0;  // base flow cbrt(c1 t + c2)
  double c = 1.0;             // constant base speed
  double k = 1.0;             // constant spatial speed
  double a = 1.0;             // exponential x-slope (nonzero)
  double b = 0.0;
  double c0 = 0.0;            // integration constant (log of |h'| scale)
  double c0p = 0.0;           // integration constant added to h
  double ci = 1.0;            // Killing-family amplitude (positive)
  int sign = +1;              // the printed "+-"
  Interval domain{1.0, 2.0};  // base interval I
};

// v(t) = cbrt(c1 t + c2).
Expr base_flow(double c1, double c2, const std::string& tvar = "t");

// Twisted function making V = cbrt(c1 t + c2) d/dt + k d/dx 2-Killing:
//   k != 0:  f = e^((a x + b)/2) sqrt(| s/(a k) e^(c0 - 3 a k cbrt(u)^2 /
//            (2 c1)) + c0p |),  u = c1 t + c2
//   k == 0:  f = e^((a x + b)/2) sqrt(| s 3 e^(c0)/(2 c1) cbrt(u)^2 + c0p |)
// Requires c1 != 0, a != 0, -c2/c1 outside the base interval, and a
// nonvanishing abs argument there. Throws SceneDomainError otherwise.
Expr twist_r42(const FamilyParams& p, const std::string& tvar = "t",
               const std::string& xvar = "x2");

// Twisted function making V = c d/dt + k d/dx 2-Killing:
//   k != 0:  f = e^((a x + b)/2) sqrt(| s c/(a k) e^(c0 - (a k/c) t) + c0p |)
//   k == 0:  f = e^((a x + b)/2) sqrt(| s e^(c0) t + c0p |)
// Requires c != 0, a != 0, and a nonvanishing abs argument on the base
// interval.
Expr twist_r46(const FamilyParams& p, const std::string& tvar = "t",
               const std::string& xvar = "x2");

// Killing-family twist f = ci e^(a (c x - k t)/c); c, k, a nonzero and
// ci > 0.
Expr twist_r410(const FamilyParams& p, const std::string& tvar = "t",
                const std::string& xvar = "x2");

// Complete scene for a family: base (t, -dt^2) over p.domain, n_spatial
// twisted interval factors x2.. with boxes [0,1], the family's designated
// field, default grid and tolerance. BaseFlow ignores n_spatial and has no
// spatial factors.
Scene family_scene(FamilyVariant variant, const FamilyParams& p,
                   int n_spatial = 1);

// The four bundled examples over t in [1,2], x_i in [0,1]:
//   43: f = fourth-root(e^(2x - 3 t^(2/3))),  V = cbrt(t) d/dt + sum d/dx_i
//   44: f = cbrt(t) sqrt(e^x),                V = cbrt(t) d/dt
//   47: f = sqrt(e^(t+x)),                    V = -d/dt + sum d/dx_i
//   48: f = sqrt(t e^x),                      V = c d/dt   (c is the
//       `base_speed` argument; the printed |t| is just t on [1,2])
Scene example_scene(int id, int n_spatial = 1, double base_speed = 1.0);

}  // namespace twistlab
