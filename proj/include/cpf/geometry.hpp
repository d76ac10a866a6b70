#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>

namespace cpf {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;

template <typename Scalar>
inline constexpr Scalar kPi = std::numbers::pi_v<Scalar>;

/// Wraps an angle to (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar angle) {
  using std::remainder;
  Scalar r = remainder(angle, Scalar(2) * kPi<Scalar>);
  if (r <= -kPi<Scalar>) r += Scalar(2) * kPi<Scalar>;
  return r;
}

template <typename Scalar>
Matrix2<Scalar> rotation(Scalar angle) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(angle);
  const Scalar s = sin(angle);
  Matrix2<Scalar> r;
  r << c, -s, s, c;
  return r;
}

/// Planar configuration of a rigid body in the world frame.
template <typename Scalar>
struct PoseT {
  Vector2<Scalar> position = Vector2<Scalar>::Zero();
  Scalar heading = Scalar(0);

  PoseT() = default;
  PoseT(Scalar x, Scalar y, Scalar theta)
      : position(x, y), heading(wrap_angle(theta)) {}
  PoseT(const Vector2<Scalar>& p, Scalar theta)
      : position(p), heading(wrap_angle(theta)) {}

  Scalar x() const { return position.x(); }
  Scalar y() const { return position.y(); }

  /// Unit vector along the body's longitudinal axis.
  Vector2<Scalar> tangent() const {
    using std::cos;
    using std::sin;
    return {cos(heading), sin(heading)};
  }
  /// Unit vector along the body's lateral (left) axis.
  Vector2<Scalar> normal() const {
    using std::cos;
    using std::sin;
    return {-sin(heading), cos(heading)};
  }
};

/// Body-frame twist: longitudinal, lateral and yaw rate.
template <typename Scalar>
struct BodyVelocityT {
  Scalar longitudinal = Scalar(0);
  Scalar lateral = Scalar(0);
  Scalar yaw_rate = Scalar(0);

  Vector2<Scalar> translation() const { return {longitudinal, lateral}; }
  bool operator==(const BodyVelocityT&) const = default;
};

using Pose = PoseT<double>;
using BodyVelocity = BodyVelocityT<double>;

/// Applies a rigid motion (rotate by `angle` about the origin, then translate).
template <typename Scalar>
PoseT<Scalar> transform(const PoseT<Scalar>& pose, const Vector2<Scalar>& shift,
                        Scalar angle) {
  return {rotation(angle) * pose.position + shift, pose.heading + angle};
}

}  // namespace cpf
