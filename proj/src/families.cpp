#include "twistlab/families.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace twistlab {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw SceneDomainError(msg);
}

// e^((a x + b)/2)
Expr separable_prefactor(double a, double b, const std::string& xvar) {
  Expr ax_b = Expr::add(Expr::mul(Expr::constant(a), Expr::variable(xvar)),
                        Expr::constant(b));
  return Expr::exp(Expr::div(std::move(ax_b), Expr::constant(2.0)));
}

// The abs argument must keep one strict sign across the base interval,
// otherwise f vanishes (degenerate metric) or loses smoothness. Sampled at
// 64 points including both endpoints.
void check_sign_constant(const Expr& arg, const std::string& tvar,
                         const Interval& domain, const std::string& family) {
  constexpr int kSamples = 64;
  double first = 0.0;
  for (int j = 0; j < kSamples; ++j) {
    double t = domain.lo + (domain.hi - domain.lo) * j / (kSamples - 1);
    double v = eval(arg, Env{{tvar, t}});
    if (j == 0) first = v;
    require(v != 0.0 && first * v > 0.0,
            family + ": twist argument changes sign or vanishes on the base "
                     "interval (t = " +
                std::to_string(t) + ")");
  }
}

Expr wrap(const FamilyParams& p, Expr arg, const std::string& tvar,
          const std::string& xvar, const std::string& family) {
  check_sign_constant(arg, tvar, p.domain, family);
  return Expr::mul(separable_prefactor(p.a, p.b, xvar),
                   Expr::sqrt(Expr::abs(std::move(arg))));
}

FactorChart base_chart(const Interval& domain) {
  return FactorChart{"base", {"t"}, {{Expr::constant(-1.0)}}, {domain}};
}

FactorChart spatial_chart(const std::string& var) {
  return FactorChart{var, {var}, {{Expr::constant(1.0)}}, {{0.0, 1.0}}};
}

std::string spatial_var(int i) { return "x" + std::to_string(i + 2); }

// Assembles base + n_spatial twisted interval factors, one twist expression
// per spatial factor (instantiated with that factor's own variable), and the
// field (v1; vk on every spatial factor).
Scene spatial_scene(const FamilyParams& p, int n_spatial,
                    Expr (*twist)(const FamilyParams&, const std::string&,
                                  const std::string&),
                    const Expr& v1, const Expr& vk) {
  require(n_spatial >= 1, "family scene needs at least one spatial factor");
  Scene scene;
  scene.factors.push_back(base_chart(p.domain));
  for (int i = 0; i < n_spatial; ++i) {
    std::string var = spatial_var(i);
    scene.factors.push_back(spatial_chart(var));
    scene.twists.push_back(
        TwistFunction{static_cast<std::size_t>(i) + 1, twist(p, "t", var)});
  }
  scene.field.lifted = true;
  scene.field.components.push_back({v1});
  for (int i = 0; i < n_spatial; ++i) scene.field.components.push_back({vk});
  return scene;
}

}  // namespace

Expr base_flow(double c1, double c2, const std::string& tvar) {
  return Expr::cbrt(Expr::add(Expr::mul(Expr::constant(c1),
                                        Expr::variable(tvar)),
                              Expr::constant(c2)));
}

Expr twist_r42(const FamilyParams& p, const std::string& tvar,
               const std::string& xvar) {
  require(p.c1 != 0.0, "r42: c1 must be nonzero");
  require(p.a != 0.0, "r42: a must be nonzero");
  double root = -p.c2 / p.c1;
  require(root < p.domain.lo || root > p.domain.hi,
          "r42: c1 t + c2 vanishes inside the base interval");
  Expr u = Expr::add(Expr::mul(Expr::constant(p.c1), Expr::variable(tvar)),
                     Expr::constant(p.c2));
  Expr cbrt_u2 = Expr::pow(Expr::cbrt(std::move(u)), 2.0);
  Expr arg = [&] {
    if (p.k != 0.0) {
      Expr exponent = Expr::sub(
          Expr::constant(p.c0),
          Expr::mul(Expr::constant(3.0 * p.a * p.k / (2.0 * p.c1)),
                    std::move(cbrt_u2)));
      return Expr::add(Expr::mul(Expr::constant(p.sign / (p.a * p.k)),
                                 Expr::exp(std::move(exponent))),
                       Expr::constant(p.c0p));
    }
    return Expr::add(
        Expr::mul(Expr::constant(p.sign * 3.0 * std::exp(p.c0) / (2.0 * p.c1)),
                  std::move(cbrt_u2)),
        Expr::constant(p.c0p));
  }();
  return wrap(p, std::move(arg), tvar, xvar, "r42");
}

Expr twist_r46(const FamilyParams& p, const std::string& tvar,
               const std::string& xvar) {
  require(p.c != 0.0, "r46: c must be nonzero");
  require(p.a != 0.0, "r46: a must be nonzero");
  Expr arg = [&] {
    if (p.k != 0.0) {
      Expr exponent =
          Expr::sub(Expr::constant(p.c0),
                    Expr::mul(Expr::constant(p.a * p.k / p.c),
                              Expr::variable(tvar)));
      return Expr::add(Expr::mul(Expr::constant(p.sign * p.c / (p.a * p.k)),
                                 Expr::exp(std::move(exponent))),
                       Expr::constant(p.c0p));
    }
    return Expr::add(Expr::mul(Expr::constant(p.sign * std::exp(p.c0)),
                               Expr::variable(tvar)),
                     Expr::constant(p.c0p));
  }();
  return wrap(p, std::move(arg), tvar, xvar, "r46");
}

Expr twist_r410(const FamilyParams& p, const std::string& tvar,
                const std::string& xvar) {
  require(p.c != 0.0, "r410: c must be nonzero");
  require(p.k != 0.0, "r410: k must be nonzero");
  require(p.a != 0.0, "r410: a must be nonzero");
  require(p.ci > 0.0, "r410: ci must be positive");
  Expr phase = Expr::sub(Expr::mul(Expr::constant(p.c), Expr::variable(xvar)),
                         Expr::mul(Expr::constant(p.k), Expr::variable(tvar)));
  Expr exponent = Expr::div(Expr::mul(Expr::constant(p.a), std::move(phase)),
                            Expr::constant(p.c));
  return Expr::mul(Expr::constant(p.ci), Expr::exp(std::move(exponent)));
}

Scene family_scene(FamilyVariant variant, const FamilyParams& p,
                   int n_spatial) {
  switch (variant) {
    case FamilyVariant::BaseFlow: {
      require(p.c1 != 0.0 || p.c2 != 0.0,
              "base-flow: c1 and c2 must not both vanish");
      Scene scene;
      scene.factors.push_back(base_chart(p.domain));
      scene.field.lifted = true;
      scene.field.components.push_back({base_flow(p.c1, p.c2)});
      return scene;
    }
    case FamilyVariant::R42KNonzero:
      require(p.k != 0.0, "r42 (k != 0): k must be nonzero");
      return spatial_scene(p, n_spatial, &twist_r42, base_flow(p.c1, p.c2),
                           Expr::constant(p.k));
    case FamilyVariant::R42KZero: {
      require(p.k == 0.0, "r42 (k = 0): k must be zero");
      return spatial_scene(p, n_spatial, &twist_r42, base_flow(p.c1, p.c2),
                           Expr::constant(0.0));
    }
    case FamilyVariant::R46KNonzero:
      require(p.k != 0.0, "r46 (k != 0): k must be nonzero");
      return spatial_scene(p, n_spatial, &twist_r46, Expr::constant(p.c),
                           Expr::constant(p.k));
    case FamilyVariant::R46KZero:
      require(p.k == 0.0, "r46 (k = 0): k must be zero");
      return spatial_scene(p, n_spatial, &twist_r46, Expr::constant(p.c),
                           Expr::constant(0.0));
    case FamilyVariant::R410Killing:
      return spatial_scene(p, n_spatial, &twist_r410, Expr::constant(p.c),
                           Expr::constant(p.k));
    case FamilyVariant::Example43:
      return example_scene(43, n_spatial);
    case FamilyVariant::Example44:
      return example_scene(44, n_spatial);
    case FamilyVariant::Example47:
      return example_scene(47, n_spatial);
    case FamilyVariant::Example48:
      return example_scene(48, n_spatial);
  }
  throw SceneDomainError("unknown family variant");
}

Scene example_scene(int id, int n_spatial, double base_speed) {
  FamilyParams p;  // a=1, b=0, c1=1, c2=0, c0=0, c0p=0, sign=+, I=[1,2]
  switch (id) {
    case 43:
      p.k = 1.0;
      return family_scene(FamilyVariant::R42KNonzero, p, n_spatial);
    case 44:
      p.k = 0.0;
      p.c0 = std::log(2.0 / 3.0);  // makes the coefficient 3 e^c0/(2 c1) = 1
      return family_scene(FamilyVariant::R42KZero, p, n_spatial);
    case 47:
      p.c = -1.0;
      p.k = 1.0;
      p.sign = -1;  // keeps the abs argument e^t positive
      return family_scene(FamilyVariant::R46KNonzero, p, n_spatial);
    case 48: {
      require(base_speed != 0.0, "example 48: base speed must be nonzero");
      require(n_spatial >= 1, "family scene needs at least one spatial factor");
      // f = sqrt(t e^x); |t| = t on [1,2] so the abs is dropped.
      Scene scene;
      scene.factors.push_back(base_chart(p.domain));
      for (int i = 0; i < n_spatial; ++i) {
        std::string var = spatial_var(i);
        scene.factors.push_back(spatial_chart(var));
        Expr f = Expr::mul(
            Expr::exp(Expr::div(Expr::variable(var), Expr::constant(2.0))),
            Expr::sqrt(Expr::variable("t")));
        scene.twists.push_back(
            TwistFunction{static_cast<std::size_t>(i) + 1, std::move(f)});
      }
      scene.field.lifted = true;
      scene.field.components.push_back({Expr::constant(base_speed)});
      for (int i = 0; i < n_spatial; ++i)
        scene.field.components.push_back({Expr::constant(0.0)});
      return scene;
    }
    default:
      throw SceneDomainError("unknown example id " + std::to_string(id) +
                             " (expected 43, 44, 47 or 48)");
  }
}

}  // namespace twistlab
