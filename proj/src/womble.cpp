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

#include "gpwomble/womble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

#include "gpwomble/errors.hpp"

namespace gpwomble::womble {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_curvature(kernel::Family family, bool curvature) {
  if (curvature && !kernel::supports_curvature(family)) {
    throw UnsupportedSmoothness("womble: kernel " + std::string(kernel::family_name(family)) +
                                " supports gradient wombling only; use matern2 or gaussian for "
                                "curvature");
  }
}

void check_length(double t_star) {
  if (!(t_star > 0.0) || !std::isfinite(t_star)) {
    throw std::invalid_argument("womble: segment length must be positive and finite");
  }
}

// (n1^2, 2 n1 n2, n2^2): contracts unique second-order indices with n (x) n.
Eigen::Vector3d second_order_weights(const Eigen::Vector2d& n) {
  return {n.x() * n.x(), 2.0 * n.x() * n.y(), n.y() * n.y()};
}

// W_m(y) = y gamma(m+1, y) - gamma(m+2, y) = integral_0^y (y - x) x^m e^{-x} dx.
double lag_weighted(int m, double y) {
  if (y < 0.05) {
    // Series of the integral: sum_k (-1)^k y^{m+k+2} / (k! (m+k+1)(m+k+2)).
    double sum = 0.0;
    double pow_term = std::pow(y, m + 2);
    double fact = 1.0;
    for (int k = 0; k < 12; ++k) {
      if (k > 0) {
        fact *= k;
        pow_term *= y;
      }
      const double term = pow_term / (fact * (m + k + 1.0) * (m + k + 2.0));
      sum += (k % 2 == 0) ? term : -term;
    }
    return sum;
  }
  return y * linalg::gamma_lower(m + 1, y) - linalg::gamma_lower(m + 2, y);
}

// y (sqrt(pi)/2) erf(y) - (1 - e^{-y^2}) / 2 = integral_0^y (y - x) e^{-x^2} dx.
double gaussian_lag_weighted(double y) {
  if (y < 0.05) {
    const double y2 = y * y;
    return y2 / 2.0 * (1.0 - y2 / 6.0 + y2 * y2 / 30.0 - y2 * y2 * y2 / 168.0);
  }
  return y * 0.5 * std::sqrt(std::numbers::pi) * std::erf(y) + 0.5 * std::expm1(-y * y);
}

double decay_rate(const kernel::KernelSpec& spec) {
  switch (spec.family) {
    case kernel::Family::matern32: return std::sqrt(3.0) * spec.phi;
    case kernel::Family::matern52: return std::sqrt(5.0) * spec.phi;
    case kernel::Family::gaussian: return 2.0 * spec.phi;
  }
  return spec.phi;
}

}  // namespace

std::vector<Segment> segmentize(const std::vector<Point>& points) {
  std::vector<Point> pts;
  pts.reserve(points.size());
  for (const Point& p : points) {
    if (!p.allFinite()) throw std::invalid_argument("segmentize: non-finite curve vertex");
    if (pts.empty() || (p - pts.back()).norm() > 0.0) pts.push_back(p);
  }
  if (pts.size() < 2) throw std::invalid_argument("segmentize: curve needs at least 2 distinct points");
  std::vector<Segment> segs;
  segs.reserve(pts.size() - 1);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    Segment s;
    s.start = pts[i];
    const Eigen::Vector2d d = pts[i + 1] - pts[i];
    s.length = d.norm();
    s.u = d / s.length;
    s.u_perp = {s.u.y(), -s.u.x()};
    segs.push_back(s);
  }
  return segs;
}

double arc_length(const std::vector<Segment>& segments) {
  double total = 0.0;
  for (const Segment& s : segments) total += s.length;
  return total;
}

Eigen::MatrixXd k_gamma_closed(const kernel::KernelSpec& spec, double t_star, bool curvature) {
  kernel::validate(spec);
  check_curvature(spec.family, curvature);
  check_length(t_star);
  const double s2 = spec.sigma2;
  const double phi = spec.phi;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(measure_count(curvature), measure_count(curvature));
  switch (spec.family) {
    case kernel::Family::matern32: {
      k(0, 0) = 2.0 * s2 * lag_weighted(0, std::sqrt(3.0) * phi * t_star);
      break;
    }
    case kernel::Family::matern52: {
      const double y = std::sqrt(5.0) * phi * t_star;
      const double w0 = lag_weighted(0, y);
      k(0, 0) = 2.0 * s2 / 3.0 * (w0 + lag_weighted(1, y));
      if (curvature) k(1, 1) = 10.0 * s2 * phi * phi * w0;
      break;
    }
    case kernel::Family::gaussian: {
      k(0, 0) = 4.0 * s2 * gaussian_lag_weighted(phi * t_star);
      if (curvature) k(1, 1) = 6.0 * phi * phi * k(0, 0);
      break;
    }
  }
  return k;
}

Eigen::MatrixXd k_gamma_lag_uniform(const kernel::KernelSpec& spec, double t_star, bool curvature) {
  kernel::validate(spec);
  check_curvature(spec.family, curvature);
  check_length(t_star);
  const double s2 = spec.sigma2;
  const double phi = spec.phi;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(measure_count(curvature), measure_count(curvature));
  switch (spec.family) {
    case kernel::Family::matern32: {
      const double y = std::sqrt(3.0) * phi * t_star;
      k(0, 0) = 2.0 * s2 * y * linalg::gamma_lower(1, y);
      break;
    }
    case kernel::Family::matern52: {
      const double y = std::sqrt(5.0) * phi * t_star;
      k(0, 0) = 2.0 * s2 / 3.0 * y * (linalg::gamma_lower(1, y) + linalg::gamma_lower(2, y));
      if (curvature) k(1, 1) = 10.0 * s2 * phi * phi * y * linalg::gamma_lower(1, y);
      break;
    }
    case kernel::Family::gaussian: {
      const double y = phi * t_star;
      k(0, 0) = 2.0 * s2 * std::sqrt(std::numbers::pi) * y *
                (2.0 * linalg::std_normal_cdf(std::sqrt(2.0) * y) - 1.0);
      if (curvature) k(1, 1) = 6.0 * phi * phi * k(0, 0);
      break;
    }
  }
  return k;
}

Eigen::Matrix2d k_gamma_quadrature(const kernel::KernelSpec& spec, const Segment& segment,
                                   int nodes) {
  kernel::validate(spec);
  check_length(segment.length);
  const bool curvature = kernel::supports_curvature(spec.family);
  const int order = curvature ? 4 : 2;
  const Eigen::Vector2d n = segment.u_perp;
  const Eigen::Vector3d a2 = second_order_weights(n);
  const double t_star = segment.length;

  // Integrand at Delta = s(t1) - s(t2) = (t1 - t2) u.
  auto integrand = [&](double t1, double t2) {
    const kernel::CrossCovBlocks b = kernel::cross_cov_blocks((t1 - t2) * segment.u, spec, order);
    Eigen::Matrix2d f = Eigen::Matrix2d::Zero();
    f(0, 0) = -n.dot(b.d2k_full * n);
    if (curvature) {
      const double third = a2.dot(b.d3k * n);
      f(0, 1) = third;
      f(1, 0) = -third;
      f(1, 1) = a2.dot(b.d4k * a2);
    }
    return f;
  };

  const int panels = std::max(1, static_cast<int>(std::ceil(decay_rate(spec) * t_star / 2.0)));
  const double h = t_star / panels;
  const linalg::GaussLegendreRule& rule = linalg::gauss_legendre_rule(nodes);

  // Composite rule over [a, b] with panels no wider than h.
  auto integrate = [&](double a, double b, auto&& f) {
    Eigen::Matrix2d sum = Eigen::Matrix2d::Zero();
    if (b <= a) return sum;
    const int p = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-12)));
    const double w = (b - a) / p;
    for (int k = 0; k < p; ++k) {
      const double lo = a + k * w;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        sum += (0.5 * w * rule.weights[i]) * f(lo + 0.5 * w * (1.0 + rule.nodes[i]));
      }
    }
    return sum;
  };

  return integrate(0.0, t_star, [&](double t1) {
    auto inner = [&](double t2) { return integrand(t1, t2); };
    return Eigen::Matrix2d(integrate(0.0, t1, inner) + integrate(t1, t_star, inner));
  });
}

Eigen::MatrixXd gamma_cross(const Segment& segment, const Eigen::MatrixXd& coords,
                            const kernel::KernelSpec& spec, bool curvature, int nodes) {
  check_curvature(spec.family, curvature);
  check_length(segment.length);
  const int order = curvature ? 2 : 1;
  const Eigen::Vector2d n = segment.u_perp;
  const Eigen::Vector3d a2 = second_order_weights(n);
  const linalg::GaussLegendreRule& rule = linalg::gauss_legendre_rule(nodes);
  const double half = 0.5 * segment.length;

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(coords.rows(), measure_count(curvature));
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double t = half * (1.0 + rule.nodes[q]);
    const double w = half * rule.weights[q];
    const Point s = segment.start + t * segment.u;
    for (Eigen::Index j = 0; j < coords.rows(); ++j) {
      const kernel::CrossCovBlocks b =
          kernel::cross_cov_blocks(s - coords.row(j).transpose(), spec, order);
      g(j, 0) += w * n.dot(b.dk);
      if (curvature) g(j, 1) += w * a2.dot(b.d2k);
    }
  }
  if (!g.allFinite()) throw std::domain_error("gamma_cross: non-finite integrand");
  return g;
}

SegmentMoments womble_moments(const Segment& segment, const Eigen::VectorXd& z,
                              const model::ThetaDraw& theta, const Eigen::MatrixXd& coords,
                              kernel::Family family, bool curvature, int nodes) {
  check_curvature(family, curvature);
  if (z.size() != coords.rows()) throw std::invalid_argument("womble: z size mismatch");
  const kernel::KernelSpec spec{family, theta.sigma2, theta.phi};
  const linalg::CholeskyFactor chol(theta.sigma2 * model::correlation_matrix(coords, family, theta.phi));
  const Eigen::MatrixXd w = chol.solve_lower(gamma_cross(segment, coords, spec, curvature, nodes));
  const Eigen::VectorXd wz = chol.solve_lower(z);
  SegmentMoments m;
  m.prior_cov = k_gamma_closed(spec, segment.length, curvature);
  m.mean = w.transpose() * wz;
  m.cov = linalg::clamp_psd(m.prior_cov - w.transpose() * w);
  return m;
}

Eigen::VectorXd womble_segment(const Segment& segment, const Eigen::VectorXd& z,
                               const model::ThetaDraw& theta, const Eigen::MatrixXd& coords,
                               kernel::Family family, bool curvature, linalg::RngStream& rng,
                               int nodes) {
  const SegmentMoments m = womble_moments(segment, z, theta, coords, family, curvature, nodes);
  return linalg::mvn_sample_psd(m.mean, m.cov, rng);
}

WomblingResult spwombling(const std::vector<Point>& curve, const Eigen::MatrixXd& coords,
                          const model::PosteriorDraws& draws, kernel::Family family,
                          const linalg::RngStream& rng, bool curvature, int nodes) {
  check_curvature(family, curvature);
  if (draws.size() == 0) throw std::invalid_argument("spwombling: no posterior draws");
  if (!draws.has_latent() || draws.z.cols() != coords.rows()) {
    throw std::invalid_argument("spwombling: posterior draws carry no latent field for these sites");
  }

  WomblingResult out;
  out.segments = segmentize(curve);
  out.measures = measure_count(curvature);
  out.num_draws = draws.size();
  out.arc_length = arc_length(out.segments);
  const Eigen::Index s_count = out.num_segments();
  const Eigen::Index m_count = draws.size();
  const int d = out.measures;
  out.draws.assign(static_cast<std::size_t>(m_count * s_count * d), kNaN);
  std::vector<char> failed(static_cast<std::size_t>(s_count), 0);

#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index m = 0; m < m_count; ++m) {
    const model::ThetaDraw& th = draws.theta[m];
    const kernel::KernelSpec spec{family, th.sigma2, th.phi};
    linalg::RngStream local = rng.child(4, static_cast<std::uint64_t>(m));
    try {
      const linalg::CholeskyFactor chol(th.sigma2 * model::correlation_matrix(coords, family, th.phi));
      Eigen::MatrixXd cross(coords.rows(), s_count * d);
      for (Eigen::Index s = 0; s < s_count; ++s) {
        cross.middleCols(s * d, d) = gamma_cross(out.segments[s], coords, spec, curvature, nodes);
      }
      const Eigen::MatrixXd w = chol.solve_lower(cross);
      const Eigen::VectorXd wz = chol.solve_lower(Eigen::VectorXd(draws.z.row(m).transpose()));
      for (Eigen::Index s = 0; s < s_count; ++s) {
        const auto ws = w.middleCols(s * d, d);
        const Eigen::MatrixXd k = k_gamma_closed(spec, out.segments[s].length, curvature);
        const Eigen::VectorXd mean = ws.transpose() * wz;
        const Eigen::VectorXd x = linalg::mvn_sample_psd(mean, linalg::clamp_psd(k - ws.transpose() * ws), local);
        if (!x.allFinite()) {
#pragma omp critical(gpwomble_womble_failed)
          failed[s] = 1;
          continue;
        }
        for (int c = 0; c < d; ++c) out.draws[(m * s_count + s) * d + c] = x[c];
      }
    } catch (const std::exception& e) {
#pragma omp critical(gpwomble_womble_failed)
      {
        spdlog::warn("spwombling: draw {} failed: {}", m, e.what());
        std::fill(failed.begin(), failed.end(), 1);
      }
    }
  }

  out.failed.assign(failed.begin(), failed.end());
  out.summary.resize(static_cast<std::size_t>(s_count * d));
  out.sig.assign(static_cast<std::size_t>(s_count * d), 0);
  std::vector<double> column(static_cast<std::size_t>(m_count));
  for (int c = 0; c < d; ++c) out.totals[c] = {0.0, 0.0, 0.0};
  for (Eigen::Index s = 0; s < s_count; ++s) {
    for (int c = 0; c < d; ++c) {
      const std::size_t k = static_cast<std::size_t>(s * d + c);
      if (out.failed[s]) {
        out.summary[k] = {kNaN, kNaN, kNaN};
      } else {
        for (Eigen::Index m = 0; m < m_count; ++m) column[m] = out.draw(m, s, c);
        out.summary[k] = stats::summarize(column);
        out.sig[k] = stats::significance(out.summary[k]);
      }
      out.totals[c].lo += out.summary[k].lo;
      out.totals[c].median += out.summary[k].median;
      out.totals[c].hi += out.summary[k].hi;
    }
  }
  for (int c = 0; c < d; ++c) {
    out.averages[c] = {out.totals[c].lo / out.arc_length, out.totals[c].median / out.arc_length,
                       out.totals[c].hi / out.arc_length};
  }
  return out;
}

}  // namespace gpwomble::womble
