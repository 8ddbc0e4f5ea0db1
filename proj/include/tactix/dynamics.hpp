#pragma once

#include "tactix/errors.hpp"
#include "tactix/geometry.hpp"
#include "tactix/zone_map.hpp"

namespace tactix {

template <typename Scalar>
struct PoseT {
    Vec2T<Scalar> p = Vec2T<Scalar>::Zero();
    Scalar theta_rad = 0;

    bool operator==(const PoseT&) const = default;
};

/// Planar point robot that can move and be moved.
template <typename Scalar>
struct RobotStateT {
    PoseT<Scalar> pose;
    Vec2T<Scalar> v = Vec2T<Scalar>::Zero(); // mm/s
    Scalar omega_rad_s = 0;
    bool grasped = false;

    bool operator==(const RobotStateT&) const = default;
};

template <typename Scalar>
struct DynamicsParamsT {
    Scalar mass_eq = Scalar(0.01); // force * s^2 / mm
    Scalar damping = Scalar(0.08); // force * s / mm
    Scalar v_max = Scalar(185);    // mm/s
    Scalar dt_s = Scalar(0.01);    // 100 Hz

    void validate() const
    {
        if (!(mass_eq > 0) || !(damping > 0) || !(v_max > 0) || !(dt_s > 0))
            throw ValidationError("dynamics parameters must be strictly positive");
    }

    bool operator==(const DynamicsParamsT&) const = default;
};

using Pose = PoseT<double>;
using RobotState = RobotStateT<double>;
using DynamicsParams = DynamicsParamsT<double>;

/// One semi-implicit Euler step of the damped point mass.
///
/// The net force is integrated into velocity first, the speed is capped at
/// v_max, then position advances with the new velocity and is clamped to the
/// rectangle [0, width] x [0, height]. A velocity component pushing into a
/// wall is zeroed when the position is clamped.
template <typename Scalar>
RobotStateT<Scalar> step(const RobotStateT<Scalar>& state, const Vec2T<Scalar>& f_user, const Vec2T<Scalar>& f_haptic,
                         const DynamicsParamsT<Scalar>& params, Scalar width_mm, Scalar height_mm)
{
    RobotStateT<Scalar> next = state;
    const Vec2T<Scalar> accel = (f_user + f_haptic - params.damping * state.v) / params.mass_eq;
    next.v = clamp_norm(state.v + params.dt_s * accel, params.v_max);

    Vec2T<Scalar> p = state.pose.p + params.dt_s * next.v;
    const Scalar bounds[2] = {width_mm, height_mm};
    for (int axis = 0; axis < 2; ++axis) {
        if (p[axis] < Scalar(0)) {
            p[axis] = Scalar(0);
            if (next.v[axis] < Scalar(0)) next.v[axis] = Scalar(0);
        } else if (p[axis] > bounds[axis]) {
            p[axis] = bounds[axis];
            if (next.v[axis] > Scalar(0)) next.v[axis] = Scalar(0);
        }
    }
    next.pose.p = p;
    next.pose.theta_rad = state.pose.theta_rad + params.dt_s * state.omega_rad_s;
    return next;
}

inline RobotState step(const RobotState& state, const Vec2& f_user, const Vec2& f_haptic, const DynamicsParams& params,
                       const ZoneMap& map)
{
    return step<double>(state, f_user, f_haptic, params, map.width_mm(), map.height_mm());
}

template <typename Scalar>
Scalar kinetic_energy(const RobotStateT<Scalar>& s, const DynamicsParamsT<Scalar>& params)
{
    return Scalar(0.5) * params.mass_eq * s.v.squaredNorm();
}

} // namespace tactix
