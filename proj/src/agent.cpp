#include "tactix/agent.hpp"

#include "tactix/errors.hpp"

namespace tactix {

using nlohmann::json;

json to_json(const AgentScript& s)
{
    return {{"itinerary", s.itinerary},   {"dwell_ms", s.dwell_ms},         {"drag_gain", s.drag_gain},
            {"noise_std_mm", s.noise_std_mm}, {"seed", s.seed},               {"quiz_policy", s.quiz_policy},
            {"disagree_first", s.disagree_first}, {"settle_ms", s.settle_ms}, {"revote_ms", s.revote_ms}};
}

AgentScript agent_script_from_json(const json& j)
{
    try {
        AgentScript s;
        s.itinerary = j.at("itinerary").get<std::vector<std::string>>();
        s.dwell_ms = j.value("dwell_ms", s.dwell_ms);
        s.drag_gain = j.value("drag_gain", s.drag_gain);
        s.noise_std_mm = j.value("noise_std_mm", s.noise_std_mm);
        s.seed = j.value("seed", s.seed);
        s.quiz_policy = j.value("quiz_policy", s.quiz_policy);
        s.disagree_first = j.value("disagree_first", s.disagree_first);
        s.settle_ms = j.value("settle_ms", s.settle_ms);
        s.revote_ms = j.value("revote_ms", s.revote_ms);
        return s;
    } catch (const json::exception& e) {
        throw ParseError(std::string("agent script: ") + e.what());
    }
}

Agent::Agent(AgentScript script, const ZoneMap& map, double force_cap)
    : script_(std::move(script)), map_(&map), force_cap_(force_cap), rng_(script_.seed)
{
    for (const auto& z : script_.itinerary)
        if (!map.has_zone(z)) throw ValidationError("agent itinerary: unknown zone '" + z + "'");
    if (!(script_.drag_gain > 0) || script_.dwell_ms < 0 || script_.noise_std_mm < 0)
        throw ValidationError("agent script parameters out of range");
    if (!script_.itinerary.empty()) begin_stop();
}

void Agent::begin_stop()
{
    target_zone_ = script_.itinerary[stop_];
    const Vec2 jitter(rng_.normal(), rng_.normal());
    target_ = map_->clamp_to_bounds(map_->anchor_point(target_zone_) + script_.noise_std_mm * jitter);
    inside_since_.reset();
}

void Agent::retarget(const std::string& zone_id)
{
    if (free_target_ && zone_id == target_zone_) return;
    target_zone_ = zone_id;
    const Vec2 jitter(rng_.normal(), rng_.normal());
    target_ = map_->clamp_to_bounds(map_->anchor_point(zone_id) + script_.noise_std_mm * jitter);
    inside_since_.reset();
    free_target_ = true;
}

std::int64_t Agent::time_in_target(std::int64_t now_ms) const
{
    return inside_since_ ? now_ms - *inside_since_ : 0;
}

std::vector<std::string> Agent::take_completed_stops()
{
    std::vector<std::string> out;
    out.swap(completed_);
    return out;
}

Vec2 Agent::agent_tick(const RobotState& state, std::int64_t now_ms)
{
    if (!target_zone_.empty()) {
        const std::string& here = map_->locate(map_->clamp_to_bounds(state.pose.p));
        if (here == target_zone_) {
            if (!inside_since_) inside_since_ = now_ms;
            if (!free_target_ && !itinerary_done() && now_ms - *inside_since_ >= script_.dwell_ms) {
                completed_.push_back(target_zone_);
                ++stop_;
                if (!itinerary_done()) begin_stop();
            }
        } else {
            inside_since_.reset();
        }
    }
    if (target_zone_.empty()) return Vec2::Zero();
    return clamp_norm(script_.drag_gain * (target_ - state.pose.p), force_cap_);
}

SimClient::SimClient(AgentScript script, const ZoneMap& map, const Activity& activity, std::string map_hash, Vec2 start,
                     std::int64_t hello_at_ms)
    : map_(&map),
      activity_(&activity),
      map_hash_(std::move(map_hash)),
      agent_(std::move(script), map, 2 * CouplingParams{}.f_max),
      hello_at_ms_(hello_at_ms)
{
    state_.pose.p = map.clamp_to_bounds(start);
    state_.grasped = true;
}

Envelope SimClient::outgoing(Envelope e, std::int64_t session_ms)
{
    e.seq = ++seq_;
    e.t_ms = session_ms;
    e.from = role_.value_or(Party::A);
    ++stats_.sent;
    return e;
}

std::string SimClient::policy_zone(const std::string& q_id) const
{
    if (const auto it = agent_.script().quiz_policy.find(q_id); it != agent_.script().quiz_policy.end()) return it->second;
    for (const auto& q : activity_->questions)
        if (q.q_id == q_id) return q.answer_zone_id;
    throw DomainError("no policy for question '" + q_id + "'");
}

std::string SimClient::wrong_zone(const std::string& right) const
{
    const auto& zones = map_->zones();
    for (std::size_t i = 0; i < zones.size(); ++i)
        if (zones[i].id == right) return zones[(i + 1) % zones.size()].id;
    return zones.front().id;
}

void SimClient::on_receive(const Envelope& e, std::int64_t local_ms)
{
    ++stats_.received;
    switch (e.type) {
    case MessageType::session_start: {
        config_ = session_config_from_json(e.payload);
        role_ = parse_party(e.payload.at("role").get<std::string>());
        // the agent cap follows the session's coupling clamp
        agent_ = Agent(agent_.script(), *map_, 2 * config_->coupling.f_max);
        haptics_.emplace(config_->mode, config_->coupling, config_->vibration);
        start_local_ms_ = local_ms - e.t_ms;
        break;
    }
    case MessageType::pose: {
        if (e.from == Party::server || (role_ && e.from == *role_)) break;
        if (e.seq <= stats_.last_partner_pose_seq) ++stats_.out_of_order;
        stats_.last_partner_pose_seq = e.seq;
        ++stats_.partner_poses;
        PartnerView view = partner_.value_or(PartnerView{});
        view.pose.p = Vec2(e.payload.at("x_mm").get<double>(), e.payload.at("y_mm").get<double>());
        view.pose.theta_rad = e.payload.at("theta_rad").get<double>();
        if (!partner_) view.zone_id = map_->locate(map_->clamp_to_bounds(view.pose.p));
        view.received_t_ms = std::max(view.received_t_ms, e.t_ms);
        partner_ = view;
        break;
    }
    case MessageType::zone:
        if (e.from != Party::server && partner_) partner_->zone_id = e.payload.at("zone_id").get<std::string>();
        break;
    case MessageType::task_tick:
        ticked_tasks_.insert(e.payload.at("task_id").get<std::string>());
        break;
    case MessageType::quiz_nav: {
        if (e.from != Party::server) break;
        quiz_started_seen_ = true;
        const auto q = e.payload.at("q_id").get<std::string>();
        if (current_q_ != q) {
            current_q_ = q;
            last_vote_ms_.reset();
            const std::string right = policy_zone(q);
            const bool lead_astray = agent_.script().disagree_first && !disagreed_.contains(q);
            agent_.retarget(lead_astray ? wrong_zone(right) : right);
        }
        phase_ = Phase::quiz;
        break;
    }
    case MessageType::submit_result: {
        const auto q = e.payload.at("q_id").get<std::string>();
        if (!e.payload.at("accepted").get<bool>()) {
            ++stats_.rejections;
            const auto reason = e.payload.value("reason", std::string{});
            if (agent_.script().disagree_first && !disagreed_.contains(q) && current_q_ == q) {
                disagreed_.insert(q);
                agent_.retarget(policy_zone(q));
                last_vote_ms_.reset();
            }
            break;
        }
        if (e.payload.value("answered", 0) >= e.payload.value("total", 1)) {
            phase_ = Phase::done;
            quiz_done_ = true;
        }
        break;
    }
    case MessageType::bye:
        if (e.from == Party::server) stats_.server_byes.push_back(e.payload.value("reason", std::string{}));
        break;
    default:
        break;
    }
}

Envelope SimClient::leave(std::string_view reason, std::int64_t local_ms)
{
    return outgoing(msg::bye(reason), local_ms - start_local_ms_);
}

std::vector<Envelope> SimClient::tick(std::int64_t local_ms)
{
    std::vector<Envelope> out;
    if (!hello_sent_) {
        if (local_ms < hello_at_ms_) return out;
        hello_sent_ = true;
        out.push_back(outgoing(msg::hello(map_hash_), 0));
        return out;
    }
    if (!config_) return out;

    const std::int64_t now = local_ms - start_local_ms_;
    const HapticOutput haptic = haptics_->update(state_, partner_, now, *map_);
    if (!is_finite(haptic.force)) stats_.all_forces_finite = false;
    stats_.max_haptic_force = std::max(stats_.max_haptic_force, haptic.force.norm());
    if (haptic.consensus_edge != ConsensusEdge::none)
        out.push_back(outgoing(msg::consensus_edge(haptic.consensus_edge == ConsensusEdge::entered), now));

    const Vec2 f_user = state_.grasped ? agent_.agent_tick(state_, now) : Vec2::Zero();
    state_ = step(state_, f_user, haptic.force, config_->dynamics, *map_);

    const std::string& zone = map_->locate(state_.pose.p);
    if (zone != last_zone_sent_) {
        last_zone_sent_ = zone;
        out.push_back(outgoing(msg::zone(zone), now));
    }
    const int decimation = config_->sim_rate_hz / config_->pose_rate_hz;
    if (ticks_++ % decimation == 0)
        out.push_back(outgoing(msg::pose(state_.pose.p.x(), state_.pose.p.y(), state_.pose.theta_rad), now));

    for (const auto& stop : agent_.take_completed_stops()) {
        for (const auto& task : activity_->tasks) {
            if (task.zone_hint != stop || ticked_tasks_.contains(task.id)) continue;
            ticked_tasks_.insert(task.id);
            out.push_back(outgoing(msg::task_tick(task.id), now));
        }
    }

    switch (phase_) {
    case Phase::exploring:
        if (agent_.itinerary_done()) {
            phase_ = Phase::waiting_quiz;
            if (!quiz_started_seen_ && !activity_->questions.empty())
                out.push_back(outgoing(msg::quiz_nav(activity_->questions.front().q_id), now));
        }
        break;
    case Phase::quiz: {
        if (!current_q_) break;
        const bool settled = zone == agent_.target_zone() && agent_.time_in_target(now) >= agent_.script().settle_ms;
        const bool due = !last_vote_ms_ || now - *last_vote_ms_ >= agent_.script().revote_ms;
        if (settled && due) {
            out.push_back(outgoing(msg::propose(*current_q_, zone), now));
            out.push_back(outgoing(msg::agree(*current_q_, zone), now));
            last_vote_ms_ = now;
        }
        break;
    }
    case Phase::waiting_quiz:
    case Phase::done:
        break;
    }
    return out;
}

} // namespace tactix
