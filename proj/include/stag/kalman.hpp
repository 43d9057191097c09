#pragma once

// Constant-velocity Kalman filter over (cx, cy, aspect, height) box measurements.
// State layout: [cx, cy, a, h, vcx, vcy, va, vh].

#include "stag/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace stag {

template <typename Scalar>
using Vector4 = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar>
using Vector8 = Eigen::Matrix<Scalar, 8, 1>;
template <typename Scalar>
using Matrix8 = Eigen::Matrix<Scalar, 8, 8>;

template <typename Scalar = double>
struct MotionState {
  Vector8<Scalar> mean = Vector8<Scalar>::Zero();
  Matrix8<Scalar> covariance = Matrix8<Scalar>::Identity();

  auto position() { return mean.template head<4>(); }
  auto position() const { return mean.template head<4>(); }
  auto velocity() { return mean.template tail<4>(); }
  auto velocity() const { return mean.template tail<4>(); }
};

/// Scale-relative noise model. Standard deviations for cx, cy and h are
/// proportional to the current box height; the aspect ratio gets fixed ones.
/// `process_scale` / `measurement_scale` multiply Q and R (0 gives a noiseless filter).
template <typename Scalar = double>
struct KalmanNoise {
  Scalar std_weight_position = Scalar(1) / Scalar(20);
  Scalar std_weight_velocity = Scalar(1) / Scalar(160);
  Scalar aspect_position_std = Scalar(1e-2);
  Scalar aspect_velocity_std = Scalar(1e-5);
  Scalar aspect_measurement_std = Scalar(1e-1);
  Scalar process_scale = Scalar(1);
  Scalar measurement_scale = Scalar(1);
};

/// (cx, cy, w/h, h). Throws when the height is not positive.
template <typename Scalar>
Vector4<Scalar> to_measurement(const BoxT<Scalar>& box) {
  if (!(box.height > Scalar(0)) || !box.valid())
    throw Error("kalman measurement needs a finite box with positive height");
  return {box.center_x(), box.center_y(), box.width / box.height, box.height};
}

template <typename Derived>
BoxT<typename Derived::Scalar> measurement_to_box(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  const Scalar h = z(3);
  const Scalar w = z(2) * h;
  return {z(0) - w / Scalar(2), z(1) - h / Scalar(2), w, h};
}

template <typename Scalar>
BoxT<Scalar> state_box(const MotionState<Scalar>& state) {
  return measurement_to_box(state.mean.template head<4>());
}

template <typename Scalar>
Matrix8<Scalar> transition_matrix() {
  Matrix8<Scalar> f = Matrix8<Scalar>::Identity();
  f.template topRightCorner<4, 4>().setIdentity();
  return f;
}

template <typename Scalar>
MotionState<Scalar> kalman_initiate(const BoxT<Scalar>& box,
                                    const KalmanNoise<Scalar>& noise = {}) {
  const Vector4<Scalar> z = to_measurement(box);
  MotionState<Scalar> state;
  state.mean << z, Vector4<Scalar>::Zero();
  const Scalar h = z(3);
  Vector8<Scalar> std;
  std << 2 * noise.std_weight_position * h, 2 * noise.std_weight_position * h,
      noise.aspect_position_std, 2 * noise.std_weight_position * h,
      10 * noise.std_weight_velocity * h, 10 * noise.std_weight_velocity * h,
      noise.aspect_velocity_std, 10 * noise.std_weight_velocity * h;
  state.covariance = std.array().square().matrix().asDiagonal();
  return state;
}

template <typename Scalar>
MotionState<Scalar> kalman_predict(const MotionState<Scalar>& state,
                                   const KalmanNoise<Scalar>& noise = {}) {
  const Scalar h = state.mean(3);
  Vector8<Scalar> std;
  std << noise.std_weight_position * h, noise.std_weight_position * h,
      noise.aspect_position_std, noise.std_weight_position * h,
      noise.std_weight_velocity * h, noise.std_weight_velocity * h,
      noise.aspect_velocity_std, noise.std_weight_velocity * h;
  const Matrix8<Scalar> q =
      (noise.process_scale * std.array().square()).matrix().asDiagonal();
  const Matrix8<Scalar> f = transition_matrix<Scalar>();

  MotionState<Scalar> out;
  out.mean = f * state.mean;
  out.covariance = f * state.covariance * f.transpose() + q;
  out.covariance = Scalar(0.5) * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

/// Measurement residual z - Hx.
template <typename Scalar>
Vector4<Scalar> kalman_innovation(const MotionState<Scalar>& state, const BoxT<Scalar>& box) {
  return to_measurement(box) - state.mean.template head<4>();
}

template <typename Scalar>
MotionState<Scalar> kalman_update(const MotionState<Scalar>& state, const BoxT<Scalar>& box,
                                  const KalmanNoise<Scalar>& noise = {}) {
  using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;
  using Matrix48 = Eigen::Matrix<Scalar, 4, 8>;
  const Vector4<Scalar> z = to_measurement(box);
  const Scalar h = state.mean(3);
  Vector4<Scalar> std;
  std << noise.std_weight_position * h, noise.std_weight_position * h,
      noise.aspect_measurement_std, noise.std_weight_position * h;
  const Matrix4 r = (noise.measurement_scale * std.array().square()).matrix().asDiagonal();

  Matrix48 proj = Matrix48::Zero();
  proj.template leftCols<4>().setIdentity();

  const Matrix4 s = proj * state.covariance * proj.transpose() + r;
  // LDLT zeroes the inverse of null pivots, so a singular S (noiseless filter
  // that has already converged) yields a zero gain instead of NaNs.
  const Eigen::Matrix<Scalar, 8, 4> gain =
      s.ldlt().solve(proj * state.covariance.transpose()).transpose();

  MotionState<Scalar> out;
  out.mean = state.mean + gain * (z - proj * state.mean);
  // Joseph form keeps the posterior PSD under rounding.
  const Matrix8<Scalar> ikh = Matrix8<Scalar>::Identity() - gain * proj;
  out.covariance = ikh * state.covariance * ikh.transpose() + gain * r * gain.transpose();
  out.covariance = Scalar(0.5) * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

}  // namespace stag
