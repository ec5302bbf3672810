#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace gmi {

// |(1/2) e^{-|u|/sqrt2} sin(|u|/sqrt2 + pi/4)| before normalization. Flatter
// than a Gaussian, so weights in the conditional Kaplan-Meier denominator do
// not underflow for moderately remote t0 values.
inline double silverman_kernel_raw(double u) {
  const double x = std::fabs(u) * 0.70710678118654752;
  return std::fabs(0.5 * std::exp(-x) * std::sin(x + 0.78539816339744831));
}

// Normalized modified Silverman kernel. The normalization constant is the
// integral of the raw kernel over the real line, computed once by quadrature.
struct KernelSpec {
  double normalization = 1.0;
  double operator()(double u) const { return silverman_kernel_raw(u) / normalization; }
};

namespace detail {

inline double adaptive_simpson_step(const std::function<double(double)>& f, double a,
                                    double b, double fa, double fm, double fb,
                                    double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_step(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace detail

// Normalization by adaptive quadrature over |u| <= 60, split at the zeros of
// the sine factor so every piece is smooth; the tail mass beyond 60 is below
// 1e-12. Absolute tolerance 1e-10.
inline KernelSpec make_silverman_kernel() {
  const double pi = 3.14159265358979324;
  const double sqrt2 = 1.41421356237309505;
  std::vector<double> cuts{0.0};
  for (int k = 1;; ++k) {
    const double z = sqrt2 * (k * pi - 0.25 * pi);
    if (z >= 60.0) break;
    cuts.push_back(z);
  }
  cuts.push_back(60.0);
  double half = 0.0;
  const std::function<double(double)> f = [](double u) { return silverman_kernel_raw(u); };
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    half += detail::adaptive_simpson(f, cuts[i], cuts[i + 1],
                                     1e-11 / static_cast<double>(cuts.size()));
  return KernelSpec{2.0 * half};
}

inline const KernelSpec& silverman_kernel_spec() {
  static const KernelSpec spec = make_silverman_kernel();
  return spec;
}

inline double silverman_kernel(double u) { return silverman_kernel_spec()(u); }

}  // namespace gmi
