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

#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "gpwomble/kernel.hpp"
#include "gpwomble/linalg.hpp"
#include "gpwomble/model.hpp"
#include "gpwomble/womble.hpp"

namespace gpwomble::testing {

struct Conditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Textbook block conditioning of a zero-mean Gaussian: the first n_obs
// coordinates are observed at `obs`. Uses a pivoted LU rather than Cholesky.
inline Conditional condition_joint(const Eigen::MatrixXd& joint, Eigen::Index n_obs, const Eigen::VectorXd& obs) {
  const Eigen::Index r = joint.rows() - n_obs;
  const Eigen::MatrixXd s11 = joint.topLeftCorner(n_obs, n_obs);
  const Eigen::MatrixXd s21 = joint.bottomLeftCorner(r, n_obs);
  const Eigen::MatrixXd s22 = joint.bottomRightCorner(r, r);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(s11);
  return {s21 * lu.solve(obs), s22 - s21 * lu.solve(Eigen::MatrixXd(s21.transpose()))};
}

// Joint covariance of (Z(s_1..s_N), value-free derivative components at s0),
// built entry by entry from the L* operator covariance.
inline Eigen::MatrixXd rates_joint(const Point& s0, const Eigen::MatrixXd& coords, const kernel::KernelSpec& spec,
                                   bool curvature) {
  const Eigen::Index n = coords.rows();
  const int c = curvature ? 5 : 2;
  Eigen::MatrixXd j(n + c, n + c);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      j(a, b) = kernel::lstar_covariance(coords.row(a).transpose() - coords.row(b).transpose(), spec)(0, 0);
    }
    const Eigen::MatrixXd l = kernel::lstar_covariance(coords.row(a).transpose() - s0, spec);
    for (int k = 0; k < c; ++k) j(a, n + k) = j(n + k, a) = l(0, 1 + k);
  }
  j.bottomRightCorner(c, c) = kernel::lstar_covariance(Displacement::Zero(), spec).block(1, 1, c, c);
  return j;
}

// Joint of (Z(s_1..s_N), Gamma_1, Gamma_2) along one segment. The cross terms
// integrate the L* covariances with a fine Gauss-Legendre rule, so sites
// should keep clear of the segment; the segment block is the closed form.
inline Eigen::MatrixXd womble_joint(const womble::Segment& seg, const Eigen::MatrixXd& coords,
                                    const kernel::KernelSpec& spec, bool curvature, int nodes = 128) {
  const Eigen::Index n = coords.rows();
  const int m = curvature ? 2 : 1;
  const Eigen::Vector2d nrm = seg.u_perp;
  const Eigen::Vector3d a2(nrm(0) * nrm(0), 2 * nrm(0) * nrm(1), nrm(1) * nrm(1));
  Eigen::MatrixXd j(n + m, n + m);
  for (Eigen::Index a = 0; a < n; ++a) {
    const Point sa = coords.row(a).transpose();
    for (Eigen::Index b = 0; b < n; ++b) {
      j(a, b) = kernel::lstar_covariance(sa - coords.row(b).transpose(), spec)(0, 0);
    }
    auto cross = [&](int k) {
      return linalg::gauss_legendre(
          [&](double t) {
            const Eigen::MatrixXd l = kernel::lstar_covariance(sa - (seg.start + t * seg.u), spec);
            return k == 0 ? nrm.dot(l.row(0).segment<2>(1).transpose()) : a2.dot(l.row(0).segment<3>(3).transpose());
          },
          0.0, seg.length, nodes);
    };
    for (int k = 0; k < m; ++k) j(a, n + k) = j(n + k, a) = cross(k);
  }
  j.bottomRightCorner(m, m) = womble::k_gamma_closed(spec, seg.length, curvature);
  return j;
}

// The same joint with the engine's own cross-covariance, isolating the
// conditioning algebra from quadrature error.
inline Eigen::MatrixXd womble_joint_from_cross(const womble::Segment& seg, const Eigen::MatrixXd& coords,
                                               const kernel::KernelSpec& spec, bool curvature, int nodes) {
  const Eigen::Index n = coords.rows();
  const int m = curvature ? 2 : 1;
  Eigen::MatrixXd j(n + m, n + m);
  j.topLeftCorner(n, n) = spec.sigma2 * model::correlation_matrix(coords, spec.family, spec.phi);
  const Eigen::MatrixXd g = womble::gamma_cross(seg, coords, spec, curvature, nodes);
  j.topRightCorner(n, m) = g;
  j.bottomLeftCorner(m, n) = g.transpose();
  j.bottomRightCorner(m, m) = womble::k_gamma_closed(spec, seg.length, curvature);
  return j;
}

inline Eigen::MatrixXd uniform_coords(linalg::RngStream& rng, Eigen::Index n, double lo, double hi) {
  Eigen::MatrixXd c(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i, 0) = lo + (hi - lo) * rng.uniform();
    c(i, 1) = lo + (hi - lo) * rng.uniform();
  }
  return c;
}

// y = 20 sin|s| + N(0, 1) at n uniform sites on [-10, 10]^2.
inline model::SpatialDataset ring_dataset(std::uint64_t seed, Eigen::Index n = 100) {
  linalg::RngStream rng(seed);
  Eigen::MatrixXd coords = uniform_coords(rng, n, -10.0, 10.0);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = 20.0 * std::sin(coords.row(i).norm()) + rng.normal();
  return model::make_dataset(std::move(coords), std::move(y));
}

// Draw from the hierarchical model itself: y = beta0 + Z + eps.
inline model::SpatialDataset gp_dataset(std::uint64_t seed, Eigen::Index n, const model::ThetaDraw& theta,
                                        kernel::Family family, double extent = 10.0, double beta0 = 0.0) {
  linalg::RngStream rng(seed);
  Eigen::MatrixXd coords = uniform_coords(rng, n, 0.0, extent);
  const Eigen::MatrixXd cov = theta.sigma2 * model::correlation_matrix(coords, family, theta.phi);
  const Eigen::VectorXd z = linalg::mvn_sample(Eigen::VectorXd::Zero(n), cov, rng);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = beta0 + z(i) + std::sqrt(theta.tau2) * rng.normal();
  return model::make_dataset(std::move(coords), std::move(y));
}

// Closed-form derivatives of mu0(s) = 20 sin|s|: (dx, dy, dxx, dxy, dyy).
inline Eigen::Matrix<double, 5, 1> ring_truth(const Point& s) {
  const double r = s.norm();
  const Eigen::Vector2d e = s / r;
  const double f1 = 20.0 * std::cos(r), f2 = -20.0 * std::sin(r);
  const Eigen::Matrix2d h = f2 * e * e.transpose() + (f1 / r) * (Eigen::Matrix2d::Identity() - e * e.transpose());
  Eigen::Matrix<double, 5, 1> out;
  out << f1 * e(0), f1 * e(1), h(0, 0), h(0, 1), h(1, 1);
  return out;
}

// Line integrals of the true normal derivatives along a polyline, with the
// same normal convention as the engine.
inline std::array<double, 2> ring_wombling_truth(const std::vector<Point>& curve, int nodes = 64) {
  std::array<double, 2> total{0.0, 0.0};
  for (const womble::Segment& seg : womble::segmentize(curve)) {
    const Eigen::Vector2d n = seg.u_perp;
    total[0] += linalg::gauss_legendre(
        [&](double t) {
          const auto d = ring_truth(seg.start + t * seg.u);
          return n(0) * d(0) + n(1) * d(1);
        },
        0.0, seg.length, nodes);
    total[1] += linalg::gauss_legendre(
        [&](double t) {
          const auto d = ring_truth(seg.start + t * seg.u);
          return n(0) * n(0) * d(2) + 2 * n(0) * n(1) * d(3) + n(1) * n(1) * d(4);
        },
        0.0, seg.length, nodes);
  }
  return total;
}

}  // namespace gpwomble::testing
