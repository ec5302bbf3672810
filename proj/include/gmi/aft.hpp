#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gmi/distributions.hpp"
#include "gmi/subject.hpp"

namespace gmi {

enum class AftFamily { lognormal, loglogistic };

inline const char* aft_family_name(AftFamily f) {
  return f == AftFamily::lognormal ? "lognormal" : "loglogistic";
}

// Location-scale fit to the censored log ratios log(y1/t0).
struct AftFit {
  AftFamily family = AftFamily::lognormal;
  double location = 0.0;
  double scale = 1.0;
  bool converged = false;
  double loglik = -std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

namespace detail {

// Censored log likelihood on the log-ratio scale, parameterized by
// (location, log scale) so the scale constraint disappears. Gradient and
// Hessian are analytic.
struct AftObjective {
  AftFamily family;
  const std::vector<double>& x;            // log ratios
  const std::vector<std::uint8_t>& event;  // 1 = density term, 0 = survival term

  double operator()(const std::array<double, 2>& theta, std::array<double, 2>* grad,
                    std::array<double, 3>* hess) const {
    const double loc = theta[0];
    const double log_scale = theta[1];
    const double sigma = std::exp(log_scale);
    double ll = 0.0, g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double u = (x[i] - loc) / sigma;
      if (family == AftFamily::lognormal) {
        if (event[i]) {
          ll += -0.5 * u * u - log_scale - 0.91893853320467274;
          g0 += u / sigma;
          g1 += u * u - 1.0;
          h00 += -1.0 / (sigma * sigma);
          h01 += -2.0 * u / sigma;
          h11 += -2.0 * u * u;
        } else {
          ll += log_norm_sf(u);
          const double lam = norm_hazard(u);
          const double lam_du = lam * (lam - u);
          g0 += lam / sigma;
          g1 += lam * u;
          h00 += -lam_du / (sigma * sigma);
          h01 += -(lam_du * u + lam) / sigma;
          h11 += -lam_du * u * u - lam * u;
        }
      } else {
        const double F = logistic_cdf(u);
        const double Fp = F * (1.0 - F);
        if (event[i]) {
          ll += u - 2.0 * softplus(u) - log_scale;
          g0 += (2.0 * F - 1.0) / sigma;
          g1 += u * (2.0 * F - 1.0) - 1.0;
          h00 += -2.0 * Fp / (sigma * sigma);
          h01 += (-2.0 * Fp * u - (2.0 * F - 1.0)) / sigma;
          h11 += u * (1.0 - 2.0 * F) - 2.0 * u * u * Fp;
        } else {
          ll += -softplus(u);
          g0 += F / sigma;
          g1 += F * u;
          h00 += -Fp / (sigma * sigma);
          h01 += -(Fp * u + F) / sigma;
          h11 += -Fp * u * u - F * u;
        }
      }
    }
    if (grad) (*grad) = {g0, g1};
    if (hess) (*hess) = {h00, h01, h11};
    return ll;
  }
};

// Small Nelder-Mead on 2 parameters, used only when Newton stalls.
template <typename F>
inline std::array<double, 2> nelder_mead_2d(const F& f, std::array<double, 2> start,
                                            double step, int max_iter) {
  std::array<std::array<double, 2>, 3> v{start, start, start};
  v[1][0] += step;
  v[2][1] += step;
  std::array<double, 3> fv{f(v[0]), f(v[1]), f(v[2])};
  for (int it = 0; it < max_iter; ++it) {
    // order so fv[0] is best (largest)
    for (int a = 0; a < 2; ++a)
      for (int b = a + 1; b < 3; ++b)
        if (fv[b] > fv[a]) {
          std::swap(fv[a], fv[b]);
          std::swap(v[a], v[b]);
        }
    if (std::fabs(fv[0] - fv[2]) < 1e-13 * (1.0 + std::fabs(fv[0]))) break;
    const std::array<double, 2> centroid{0.5 * (v[0][0] + v[1][0]),
                                         0.5 * (v[0][1] + v[1][1])};
    auto point = [&](double coef) {
      return std::array<double, 2>{centroid[0] + coef * (centroid[0] - v[2][0]),
                                   centroid[1] + coef * (centroid[1] - v[2][1])};
    };
    const auto refl = point(1.0);
    const double f_refl = f(refl);
    if (f_refl > fv[0]) {
      const auto exp_p = point(2.0);
      const double f_exp = f(exp_p);
      if (f_exp > f_refl) {
        v[2] = exp_p;
        fv[2] = f_exp;
      } else {
        v[2] = refl;
        fv[2] = f_refl;
      }
    } else if (f_refl > fv[1]) {
      v[2] = refl;
      fv[2] = f_refl;
    } else {
      const auto contr = point(-0.5);
      const double f_contr = f(contr);
      if (f_contr > fv[2]) {
        v[2] = contr;
        fv[2] = f_contr;
      } else {
        for (int k = 1; k < 3; ++k) {
          v[k] = {0.5 * (v[k][0] + v[0][0]), 0.5 * (v[k][1] + v[0][1])};
          fv[k] = f(v[k]);
        }
      }
    }
  }
  for (int a = 1; a < 3; ++a)
    if (fv[a] > fv[0]) std::swap(v[0], v[a]), std::swap(fv[0], fv[a]);
  return v[0];
}

inline bool newton_climb(const AftObjective& obj, std::array<double, 2>& theta, double& ll,
                         std::array<double, 2>& grad, double& grad_norm, int& iterations,
                         int max_iter) {
  std::array<double, 3> hess{};
  ll = obj(theta, &grad, &hess);
  for (int it = 0; it < max_iter; ++it) {
    grad_norm = std::max(std::fabs(grad[0]), std::fabs(grad[1]));
    if (grad_norm < 1e-8) return true;
    ++iterations;
    const double det = hess[0] * hess[2] - hess[1] * hess[1];
    std::array<double, 2> dir;
    if (hess[0] < 0.0 && det > 0.0) {
      dir[0] = (hess[1] * grad[1] - hess[2] * grad[0]) / det;
      dir[1] = (hess[1] * grad[0] - hess[0] * grad[1]) / det;
    } else {
      dir[0] = grad[0] / grad_norm;  // fallback: scaled ascent
      dir[1] = grad[1] / grad_norm;
    }
    double step = 1.0;
    bool improved = false;
    for (int half = 0; half < 60; ++half) {
      const std::array<double, 2> cand{theta[0] + step * dir[0], theta[1] + step * dir[1]};
      std::array<double, 2> g2;
      std::array<double, 3> h2;
      const double ll2 = obj(cand, &g2, &h2);
      // accept on a strict gain or, once gains shrink into rounding noise,
      // on a strict gradient-norm reduction within that noise band
      const bool noise_band = ll2 >= ll - 1e-11 * (1.0 + std::fabs(ll));
      const double g2_norm = std::max(std::fabs(g2[0]), std::fabs(g2[1]));
      if (std::isfinite(ll2) && (ll2 > ll || (noise_band && g2_norm < grad_norm))) {
        theta = cand;
        ll = ll2;
        grad = g2;
        hess = h2;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  grad_norm = std::max(std::fabs(grad[0]), std::fabs(grad[1]));
  return grad_norm < 1e-8;
}

}  // namespace detail

// Censored maximum likelihood for the lognormal / loglogistic baseline.
// Newton with step halving; a Nelder-Mead restart plus a second Newton pass
// covers the rare stall. Convergence means gradient inf-norm < 1e-8.
inline AftFit aft_fit(AftFamily family, const std::vector<SubjectRecord>& data) {
  std::vector<double> x;
  std::vector<std::uint8_t> event;
  x.reserve(data.size());
  event.reserve(data.size());
  int n_events = 0;
  for (const auto& s : data) {
    if (!(s.t0 > 0.0) || !(s.y1 > 0.0)) throw data_error("aft_fit: t0 and y1 must be positive");
    x.push_back(std::log(s.y1 / s.t0));
    event.push_back(static_cast<std::uint8_t>(s.delta1 != 0));
    n_events += (s.delta1 != 0);
  }
  if (n_events < 2) throw data_error("aft_fit: at least 2 events are required");

  // moments of the observed log ratios as starting values
  double mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (event[i]) mean += x[i];
  mean /= n_events;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (event[i]) ss += (x[i] - mean) * (x[i] - mean);
  double sd = std::sqrt(ss / n_events);
  if (!(sd > 1e-8)) sd = 0.1;

  const detail::AftObjective obj{family, x, event};
  std::array<double, 2> theta{mean, std::log(sd)};
  std::array<double, 2> grad{};
  double ll = 0.0;
  double grad_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool ok = detail::newton_climb(obj, theta, ll, grad, grad_norm, iterations, 200);
  if (!ok) {
    auto value_only = [&](const std::array<double, 2>& t) { return obj(t, nullptr, nullptr); };
    theta = detail::nelder_mead_2d(value_only, theta, 0.25, 500);
    ok = detail::newton_climb(obj, theta, ll, grad, grad_norm, iterations, 200);
    ll = obj(theta, &grad, nullptr);
  }

  AftFit fit;
  fit.family = family;
  fit.location = theta[0];
  fit.scale = std::exp(theta[1]);
  fit.loglik = ll;
  fit.grad_norm = grad_norm;
  fit.iterations = iterations;
  fit.converged = ok;
  return fit;
}

// Fitted survival of the ratio at threshold r.
inline double aft_survival(const AftFit& fit, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("aft_survival: threshold must be positive");
  const double u = (std::log(r) - fit.location) / fit.scale;
  return fit.family == AftFamily::lognormal ? norm_sf(u) : logistic_sf(u);
}

}  // namespace gmi
