// Constant-velocity Kalman filter on box geometry.
// State: (cx, cy, w, h, vcx, vcy); measurement: (cx, cy, w, h).
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include "svs/core.hpp"

namespace svs {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector4d = Eigen::Vector4d;

struct KalmanParams {
  double q_pos = 1.0;    // process noise on cx, cy, w, h (px^2)
  double q_vel = 0.01;   // process noise on velocities
  double r = 1.0;        // measurement noise (px^2)
  double p0_pos = 1.0;   // initial variance of measured components
  double p0_vel = 100.0; // initial velocity variance

  void validate() const {
    if (q_pos < 0 || q_vel < 0 || r < 0 || p0_pos < 0 || p0_vel < 0)
      throw ValidationError("kalman noise scales must be >= 0");
  }
};

struct KalmanState {
  Vector6d mean = Vector6d::Zero();
  Matrix6d cov = Matrix6d::Identity();
  std::int64_t frame_of_last_update = 0;
};

inline Vector4d box_to_measurement(const BoundingBox& b) {
  return {0.5 * (b.x0 + b.x1), 0.5 * (b.y0 + b.y1), static_cast<double>(b.width()),
          static_cast<double>(b.height())};
}

/// Nearest inclusive box for a (cx, cy, w, h) estimate, with w, h clamped >= 1.
inline BoundingBox measurement_to_box(double cx, double cy, double w, double h) {
  w = std::max(w, 1.0);
  h = std::max(h, 1.0);
  auto rnd = [](double v) { return static_cast<int>(std::floor(v + 0.5)); };
  const int x0 = rnd(cx - 0.5 * (w - 1.0));
  const int y0 = rnd(cy - 0.5 * (h - 1.0));
  return {x0, y0, x0 + std::max(0, rnd(w) - 1), y0 + std::max(0, rnd(h) - 1)};
}

inline BoundingBox state_box(const KalmanState& ks) {
  return measurement_to_box(ks.mean(0), ks.mean(1), ks.mean(2), ks.mean(3));
}

inline KalmanState kf_init(const BoundingBox& box, const KalmanParams& p = {},
                           std::int64_t frame = 0) {
  KalmanState ks;
  ks.mean.head<4>() = box_to_measurement(box);
  ks.cov.setZero();
  ks.cov.diagonal() << p.p0_pos, p.p0_pos, p.p0_pos, p.p0_pos, p.p0_vel, p.p0_vel;
  ks.frame_of_last_update = frame;
  return ks;
}

namespace detail {

inline Matrix6d transition() {
  Matrix6d F = Matrix6d::Identity();
  F(0, 4) = 1.0;
  F(1, 5) = 1.0;
  return F;
}

inline Eigen::Matrix<double, 4, 6> observation() {
  Eigen::Matrix<double, 4, 6> H = Eigen::Matrix<double, 4, 6>::Zero();
  H.leftCols<4>().setIdentity();
  return H;
}

inline void symmetrize(Matrix6d& P) { P = 0.5 * (P + P.transpose()).eval(); }

}  // namespace detail

inline std::pair<KalmanState, BoundingBox> kf_predict(const KalmanState& ks,
                                                      const KalmanParams& p = {}) {
  const Matrix6d F = detail::transition();
  Matrix6d Q = Matrix6d::Zero();
  Q.diagonal() << p.q_pos, p.q_pos, p.q_pos, p.q_pos, p.q_vel, p.q_vel;
  KalmanState out = ks;
  out.mean = F * ks.mean;
  out.cov = F * ks.cov * F.transpose() + Q;
  detail::symmetrize(out.cov);
  return {out, state_box(out)};
}

/// Joseph-form update. A singular innovation covariance (zero noise on an
/// already exact component) is handled through its pseudo-inverse.
inline KalmanState kf_update(const KalmanState& ks, const BoundingBox& z, const KalmanParams& p = {},
                             std::int64_t frame = 0) {
  const auto H = detail::observation();
  const Eigen::Matrix4d R = Eigen::Matrix4d::Identity() * p.r;
  const Vector4d innovation = box_to_measurement(z) - H * ks.mean;
  const Eigen::Matrix4d S = H * ks.cov * H.transpose() + R;
  const Eigen::Matrix4d S_inv = S.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::Matrix<double, 6, 4> K = ks.cov * H.transpose() * S_inv;

  KalmanState out = ks;
  out.mean = ks.mean + K * innovation;
  const Matrix6d I_KH = Matrix6d::Identity() - K * H;
  out.cov = I_KH * ks.cov * I_KH.transpose() + K * R * K.transpose();
  detail::symmetrize(out.cov);
  out.frame_of_last_update = frame;
  return out;
}

}  // namespace svs
