// Copyright 2026 The gpwomble Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gpwomble/kernel.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "gpwomble/errors.hpp"

namespace gpwomble::kernel {

namespace {

// Below this distance the isotropic chain rule is replaced by its limit.
constexpr double kOriginRadius = 1e-12;

// An isotropic K(delta) = g(r) has derivatives expressible through the chain
// h1 = g'/r, h2 = h1'/r, h3 = h2'/r, h4 = h3'/r:
//   d_i K      = h1 D_i
//   d_ij K     = h1 d_ij + h2 D_i D_j
//   d_ijk K    = h2 (d_ij D_k + ...3) + h3 D_i D_j D_k
//   d_ijkl K   = h2 (d_ij d_kl + ...3) + h3 (d_ij D_k D_l + ...6) + h4 D_i D_j D_k D_l
// With D = r e the terms are stored pre-multiplied by the powers of r that
// keep them finite at the origin (h3 and h4 blow up there for the Matern forms).
struct Radial {
  double k = 0.0;
  double h1 = 0.0;
  double h2_r2 = 0.0;  // h2 r^2
  double h2 = 0.0;
  double h3_r3 = 0.0;  // h3 r^3
  double h3_r2 = 0.0;  // h3 r^2
  double h4_r4 = 0.0;  // h4 r^4
};

Radial radial_terms(double r, const KernelSpec& spec, int order) {
  Radial t;
  const double s = spec.sigma2;
  switch (spec.family) {
    case Family::matern32: {
      const double a = std::sqrt(3.0) * spec.phi;
      const double e = std::exp(-a * r);
      t.k = s * (1.0 + a * r) * e;
      t.h1 = -s * a * a * e;
      t.h2_r2 = s * a * a * a * r * e;
      break;
    }
    case Family::matern52: {
      const double a = std::sqrt(5.0) * spec.phi;
      const double a2 = a * a;
      const double e = std::exp(-a * r);
      t.k = s * (1.0 + a * r + a2 * r * r / 3.0) * e;
      t.h1 = -s * a2 * (1.0 + a * r) * e / 3.0;
      t.h2_r2 = s * a2 * a2 * r * r * e / 3.0;
      if (order >= 3) {
        const double a5 = a2 * a2 * a;
        t.h2 = s * a2 * a2 * e / 3.0;
        t.h3_r3 = -s * a5 * r * r * e / 3.0;
        t.h3_r2 = -s * a5 * r * e / 3.0;
        t.h4_r4 = s * a5 * r * (1.0 + a * r) * e / 3.0;
      }
      break;
    }
    case Family::gaussian: {
      const double b = spec.phi * spec.phi;
      const double r2 = r * r;
      const double e = std::exp(-b * r2);
      t.k = s * e;
      t.h1 = -2.0 * b * s * e;
      t.h2 = 4.0 * b * b * s * e;
      t.h2_r2 = t.h2 * r2;
      t.h3_r2 = -8.0 * b * b * b * s * r2 * e;
      t.h3_r3 = t.h3_r2 * r;
      t.h4_r4 = 16.0 * b * b * b * b * s * r2 * r2 * e;
      break;
    }
  }
  return t;
}

inline double kd(int i, int j) { return i == j ? 1.0 : 0.0; }

struct Evaluator {
  Radial t;
  double r = 0.0;
  std::array<double, 2> e{0.0, 0.0};

  double d1(int i) const { return t.h1 * r * e[i]; }
  double d2(int i, int j) const { return t.h1 * kd(i, j) + t.h2_r2 * e[i] * e[j]; }
  double d3(int i, int j, int k) const {
    return t.h2 * r * (kd(i, j) * e[k] + kd(i, k) * e[j] + kd(j, k) * e[i]) +
           t.h3_r3 * e[i] * e[j] * e[k];
  }
  double d4(int i, int j, int k, int l) const {
    const double pairs = kd(i, j) * kd(k, l) + kd(i, k) * kd(j, l) + kd(i, l) * kd(j, k);
    const double mixed = kd(i, j) * e[k] * e[l] + kd(i, k) * e[j] * e[l] +
                         kd(i, l) * e[j] * e[k] + kd(j, k) * e[i] * e[l] +
                         kd(j, l) * e[i] * e[k] + kd(k, l) * e[i] * e[j];
    return t.h2 * pairs + t.h3_r2 * mixed + t.h4_r4 * e[i] * e[j] * e[k] * e[l];
  }
  // Derivative over an arbitrary multi-index of length 0..4.
  double partial(const int* idx, int n) const {
    switch (n) {
      case 0: return t.k;
      case 1: return d1(idx[0]);
      case 2: return d2(idx[0], idx[1]);
      case 3: return d3(idx[0], idx[1], idx[2]);
      default: return d4(idx[0], idx[1], idx[2], idx[3]);
    }
  }
};

Evaluator make_evaluator(const Displacement& delta, const KernelSpec& spec, int order) {
  if (!std::isfinite(delta.x()) || !std::isfinite(delta.y())) {
    throw std::invalid_argument("kernel: displacement must be finite");
  }
  Evaluator ev;
  ev.r = delta.norm();
  if (ev.r >= kOriginRadius) {
    ev.e = {delta.x() / ev.r, delta.y() / ev.r};
  } else {
    ev.r = 0.0;
  }
  ev.t = radial_terms(ev.r, spec, order);
  return ev;
}

void check_order(Family family, int order) {
  if (order < 0 || order > 4) {
    throw std::invalid_argument("kernel: derivative order must be in [0, 4]");
  }
  if (order > max_derivative_order(family)) {
    throw UnsupportedSmoothness("kernel " + std::string(family_name(family)) +
                                " is not differentiable to order " + std::to_string(order) +
                                "; use matern2 or gaussian for curvature");
  }
}

// (i, j) pairs for the unique curvature order xx, xy, yy.
constexpr int kPair[3][2] = {{0, 0}, {0, 1}, {1, 1}};

}  // namespace

int max_derivative_order(Family family) noexcept {
  return family == Family::matern32 ? 2 : 4;
}

std::string_view family_name(Family family) noexcept {
  switch (family) {
    case Family::matern32: return "matern1";
    case Family::matern52: return "matern2";
    case Family::gaussian: return "gaussian";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "matern1" || name == "matern32") return Family::matern32;
  if (name == "matern2" || name == "matern52") return Family::matern52;
  if (name == "gaussian") return Family::gaussian;
  throw std::invalid_argument("unknown kernel '" + std::string(name) +
                              "' (expected matern1, matern2 or gaussian)");
}

double KernelSpec::nu() const noexcept {
  switch (family) {
    case Family::matern32: return 1.5;
    case Family::matern52: return 2.5;
    case Family::gaussian: return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

void validate(const KernelSpec& spec) {
  if (!(spec.sigma2 > 0.0) || !std::isfinite(spec.sigma2)) {
    throw std::invalid_argument("kernel: sigma2 must be positive and finite");
  }
  if (!(spec.phi > 0.0) || !std::isfinite(spec.phi)) {
    throw std::invalid_argument("kernel: phi must be positive and finite");
  }
}

double kernel_value(double d, const KernelSpec& spec) {
  if (!std::isfinite(d) || d < 0.0) {
    throw std::invalid_argument("kernel_value: distance must be finite and non-negative");
  }
  return radial_terms(d, spec, 0).k;
}

CrossCovBlocks cross_cov_blocks(const Displacement& delta, const KernelSpec& spec, int max_order) {
  check_order(spec.family, max_order);
  const Evaluator ev = make_evaluator(delta, spec, max_order);

  CrossCovBlocks b;
  b.order = max_order;
  b.k = ev.t.k;
  if (max_order >= 1) b.dk = {ev.d1(0), ev.d1(1)};
  if (max_order >= 2) {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) b.d2k_full(i, j) = ev.d2(i, j);
    b.d2k = {b.d2k_full(0, 0), b.d2k_full(0, 1), b.d2k_full(1, 1)};
  }
  if (max_order >= 3) {
    for (int p = 0; p < 3; ++p)
      for (int k = 0; k < 2; ++k) b.d3k(p, k) = ev.d3(kPair[p][0], kPair[p][1], k);
  }
  if (max_order >= 4) {
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q)
        b.d4k(p, q) = ev.d4(kPair[p][0], kPair[p][1], kPair[q][0], kPair[q][1]);
  }
  return b;
}

Eigen::MatrixXd lstar_covariance(const Displacement& delta, const KernelSpec& spec) {
  // Components of L*Y as multi-indices: value, d_x, d_y, d_xx, d_xy, d_yy.
  struct Index {
    int n;
    int idx[2];
  };
  static constexpr Index kComponents[6] = {
      {0, {0, 0}}, {1, {0, 0}}, {1, {1, 0}}, {2, {0, 0}}, {2, {0, 1}}, {2, {1, 1}}};

  const int order = max_derivative_order(spec.family);
  const int dim = order >= 4 ? 6 : 3;
  const Evaluator ev = make_evaluator(delta, spec, order);

  Eigen::MatrixXd cov(dim, dim);
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      int idx[4];
      int n = 0;
      for (int q = 0; q < kComponents[a].n; ++q) idx[n++] = kComponents[a].idx[q];
      for (int q = 0; q < kComponents[b].n; ++q) idx[n++] = kComponents[b].idx[q];
      // Derivatives taken with respect to s' enter with a minus sign each.
      const double sign = (kComponents[b].n % 2 == 0) ? 1.0 : -1.0;
      cov(a, b) = sign * ev.partial(idx, n);
    }
  }
  return cov;
}

Eigen::MatrixXd joint_cov_at_zero(const KernelSpec& spec, bool curvature) {
  check_order(spec.family, curvature ? 4 : 2);
  const CrossCovBlocks b = cross_cov_blocks(Displacement::Zero(), spec, curvature ? 4 : 2);
  if (!curvature) return -b.d2k_full;

  Eigen::MatrixXd j0 = Eigen::MatrixXd::Zero(5, 5);
  j0.topLeftCorner<2, 2>() = -b.d2k_full;
  j0.topRightCorner<2, 3>() = b.d3k.transpose();
  j0.bottomLeftCorner<3, 2>() = -b.d3k;
  j0.bottomRightCorner<3, 3>() = b.d4k;
  return j0;
}

}  // namespace gpwomble::kernel
