#pragma once

#include "tactix/dynamics.hpp"
#include "tactix/geometry.hpp"
#include "tactix/zone_map.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

namespace tactix {

/// Session-wide haptic mode. The two haptic modes are mutually exclusive.
enum class HapticMode { co_location, consensus, none };

std::string_view to_string(HapticMode mode);
/// Throws ParseError on unknown names.
HapticMode parse_haptic_mode(std::string_view name);

template <typename Scalar>
struct CouplingParamsT {
    Scalar k = Scalar(0.05);         // force / mm
    Scalar deadzone_mm = Scalar(10);
    Scalar f_max = Scalar(2.0);
    std::int64_t stale_ms = 500;
    std::int64_t decay_ms = 250;
    // false: a grasped robot is not pulled, only the free one follows
    bool pull_grasped = true;

    void validate() const
    {
        if (!(k >= 0) || !(deadzone_mm >= 0) || !(f_max > 0) || stale_ms < 0 || decay_ms < 0)
            throw ValidationError("coupling parameters out of range");
    }

    bool operator==(const CouplingParamsT&) const = default;
};

template <typename Scalar>
struct VibrationParamsT {
    Scalar amplitude = Scalar(0.3);
    Scalar freq_hz = Scalar(15);

    void validate() const
    {
        if (!(amplitude >= 0) || !(freq_hz > 0)) throw ValidationError("vibration parameters out of range");
    }

    bool operator==(const VibrationParamsT&) const = default;
};

using CouplingParams = CouplingParamsT<double>;
using VibrationParams = VibrationParamsT<double>;

/// Last known snapshot of the partner robot, stamped with the session clock.
struct PartnerView {
    Pose pose;
    std::string zone_id;
    std::int64_t received_t_ms = 0;
};

/// Linear attenuation once a snapshot is older than stale_ms, reaching zero
/// decay_ms later.
template <typename Scalar>
Scalar staleness_scale(std::int64_t age_ms, const CouplingParamsT<Scalar>& cp)
{
    if (age_ms <= cp.stale_ms) return Scalar(1);
    if (cp.decay_ms <= 0) return Scalar(0);
    const Scalar s = Scalar(1) - Scalar(age_ms - cp.stale_ms) / Scalar(cp.decay_ms);
    return s > Scalar(0) ? s : Scalar(0);
}

/// Elastic-band pull toward the partner: zero inside the dead zone, then a
/// linear spring on the excess separation, capped at f_max.
template <typename Scalar>
Vec2T<Scalar> colocation_force(const Vec2T<Scalar>& self_p, const Vec2T<Scalar>& partner_p, std::int64_t age_ms,
                               const CouplingParamsT<Scalar>& cp)
{
    const Vec2T<Scalar> delta = partner_p - self_p;
    const Scalar d = delta.norm();
    if (!(d > cp.deadzone_mm)) return Vec2T<Scalar>::Zero();
    Scalar magnitude = cp.k * (d - cp.deadzone_mm);
    if (magnitude > cp.f_max) magnitude = cp.f_max;
    magnitude *= staleness_scale(age_ms, cp);
    Vec2T<Scalar> f = delta * (magnitude / d);
    trim_to_norm(f, cp.f_max);
    return f;
}

inline Vec2 colocation_force(const Vec2& self_p, const PartnerView& partner, std::int64_t now_ms, const CouplingParams& cp)
{
    return colocation_force<double>(self_p, partner.pose.p, now_ms - partner.received_t_ms, cp);
}

/// True iff both robots sit on the same organelle. The background never counts.
bool consensus_state(std::string_view self_zone, std::string_view partner_zone, const ZoneMap& map);

/// Planar buzz: amplitude * sin(2 pi f t) on the x axis during even
/// half-periods and on the y axis during odd ones.
template <typename Scalar>
Vec2T<Scalar> vibration_force(bool active, std::int64_t t_ms, const VibrationParamsT<Scalar>& vp)
{
    if (!active) return Vec2T<Scalar>::Zero();
    const Scalar cycles = vp.freq_hz * Scalar(t_ms) / Scalar(1000);
    const Scalar value = vp.amplitude * std::sin(Scalar(2) * std::numbers::pi_v<Scalar> * cycles);
    const auto half_period = static_cast<std::int64_t>(std::floor(Scalar(2) * cycles));
    return (half_period % 2 == 0) ? Vec2T<Scalar>(value, 0) : Vec2T<Scalar>(0, value);
}

enum class ConsensusEdge { none, entered, exited };

std::string_view to_string(ConsensusEdge edge);

struct HapticOutput {
    Vec2 force = Vec2::Zero();
    ConsensusEdge consensus_edge = ConsensusEdge::none;
};

/// Per-robot dispatch over the session's haptic mode, with consensus edge
/// detection across ticks. One instance per robot; mode is fixed at construction.
class HapticPipeline {
public:
    HapticPipeline(HapticMode mode, CouplingParams coupling, VibrationParams vibration);

    /// partner is empty until the first snapshot arrives; no force is produced
    /// without one. A snapshot older than stale_ms + decay_ms no longer counts
    /// toward consensus.
    HapticOutput update(const RobotState& self, const std::optional<PartnerView>& partner, std::int64_t now_ms,
                        const ZoneMap& map);

    HapticMode mode() const { return mode_; }
    bool in_consensus() const { return in_consensus_; }

private:
    HapticMode mode_;
    CouplingParams coupling_;
    VibrationParams vibration_;
    bool in_consensus_ = false;
};

} // namespace tactix
