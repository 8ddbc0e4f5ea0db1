#include "tactix/haptics.hpp"

#include "tactix/errors.hpp"

namespace tactix {

std::string_view to_string(HapticMode mode)
{
    switch (mode) {
    case HapticMode::co_location: return "co_location";
    case HapticMode::consensus: return "consensus";
    case HapticMode::none: return "none";
    }
    return "none";
}

HapticMode parse_haptic_mode(std::string_view name)
{
    if (name == "co_location") return HapticMode::co_location;
    if (name == "consensus") return HapticMode::consensus;
    if (name == "none") return HapticMode::none;
    throw ParseError("unknown haptic mode '" + std::string(name) + "'");
}

std::string_view to_string(ConsensusEdge edge)
{
    switch (edge) {
    case ConsensusEdge::entered: return "entered";
    case ConsensusEdge::exited: return "exited";
    case ConsensusEdge::none: return "none";
    }
    return "none";
}

bool consensus_state(std::string_view self_zone, std::string_view partner_zone, const ZoneMap& map)
{
    const Zone& self = map.zone(self_zone);
    map.zone(partner_zone); // validates the id
    return self_zone == partner_zone && self.kind == ZoneKind::organelle;
}

HapticPipeline::HapticPipeline(HapticMode mode, CouplingParams coupling, VibrationParams vibration)
    : mode_(mode), coupling_(coupling), vibration_(vibration)
{
    coupling_.validate();
    vibration_.validate();
}

HapticOutput HapticPipeline::update(const RobotState& self, const std::optional<PartnerView>& partner,
                                    std::int64_t now_ms, const ZoneMap& map)
{
    HapticOutput out;
    switch (mode_) {
    case HapticMode::none:
        return out;
    case HapticMode::co_location:
        if (partner && (coupling_.pull_grasped || !self.grasped))
            out.force = colocation_force(self.pose.p, *partner, now_ms, coupling_);
        return out;
    case HapticMode::consensus: {
        bool now_in = false;
        if (partner && now_ms - partner->received_t_ms <= coupling_.stale_ms + coupling_.decay_ms)
            now_in = consensus_state(map.locate(map.clamp_to_bounds(self.pose.p)), partner->zone_id, map);
        if (now_in != in_consensus_) out.consensus_edge = now_in ? ConsensusEdge::entered : ConsensusEdge::exited;
        in_consensus_ = now_in;
        out.force = vibration_force(now_in, now_ms, vibration_);
        return out;
    }
    }
    return out;
}

} // namespace tactix
