#include "tactix/experiment.hpp"

#include "tactix/digest.hpp"
#include "tactix/errors.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace tactix {

using nlohmann::json;
namespace fs = std::filesystem;

PairResult run_pair(const AgentScript& script_a, const AgentScript& script_b, const SessionConfig& config,
                    const LatencyProfile& latency, double duration_s, const ZoneMap& map, const Activity& activity,
                    const PairOptions& options)
{
    MemoryTrace sink;
    Session session(config, map, activity, &sink);

    // B joins after A's hello has certainly landed so roles follow script order.
    const std::int64_t stagger = latency.base_delay_ms + latency.jitter_ms + 10;
    std::array<SimClient, 2> clients{SimClient(script_a, map, activity, config.map_hash, options.start_a, 0),
                                     SimClient(script_b, map, activity, config.map_hash, options.start_b, stagger)};
    std::array<DuplexLink, 2> links{simulated_transport(latency, 0), simulated_transport(latency, 1)};
    std::array<bool, 2> closed{false, false};

    const std::int64_t dt_ms = 1000 / config.sim_rate_hz;
    const auto duration_ms = static_cast<std::int64_t>(std::llround(duration_s * 1000.0));
    std::optional<std::int64_t> finished_at;

    auto dispatch = [&](const std::vector<Action>& actions, std::int64_t now) {
        for (const Action& a : actions) {
            const std::size_t i = a.conn - 1;
            if (closed[i]) continue;
            links[i].to_client->send(now, encode(a.envelope));
            if (a.close_after) closed[i] = true;
        }
    };

    const auto wall_start = std::chrono::steady_clock::now();
    std::int64_t t = 0;
    for (; t < duration_ms; t += dt_ms) {
        if (options.realtime) std::this_thread::sleep_until(wall_start + std::chrono::milliseconds(t));
        for (std::size_t i = 0; i < 2; ++i)
            for (const auto& frame : links[i].to_server->poll(t))
                if (!closed[i]) dispatch(session.on_frame(i + 1, frame, t), t);
        dispatch(session.on_timer(t), t);
        for (std::size_t i = 0; i < 2; ++i)
            for (const auto& frame : links[i].to_client->poll(t)) clients[i].on_receive(decode(frame), t);
        for (std::size_t i = 0; i < 2; ++i) {
            if (closed[i]) continue;
            for (const auto& e : clients[i].tick(t)) links[i].to_server->send(t, encode(e));
        }
        if (!finished_at && session.activity().state().quiz_finished()) finished_at = t;
        if (options.stop_when_finished && finished_at && t >= *finished_at + options.tail_ms) break;
    }

    // Deliver what the server already sent; clients only count it.
    const std::int64_t drain_ms = t + latency.base_delay_ms + latency.jitter_ms + dt_ms;
    for (std::size_t i = 0; i < 2; ++i)
        for (const auto& frame : links[i].to_client->poll(drain_ms)) clients[i].on_receive(decode(frame), drain_ms);

    PairResult r;
    r.trace = std::move(sink.trace);
    r.trace.config_digest = config_digest(config);
    r.events = std::move(sink.events);
    r.final_activity_state = session.activity().state().to_json();
    r.session_stats = session.stats();
    r.client_a = clients[0].stats();
    r.client_b = clients[1].stats();
    r.quiz_finished = session.activity().state().quiz_finished();
    r.end_ms = t;
    return r;
}

AgentScript make_agent_script(std::uint64_t seed, const ZoneMap& map, const AgentDefaults& d)
{
    AgentScript s;
    s.seed = seed;
    s.dwell_ms = d.dwell_ms;
    s.drag_gain = d.drag_gain;
    s.noise_std_mm = d.noise_std_mm;
    s.disagree_first = d.disagree_first;
    Rng rng(Rng::derive(seed, 0x17));
    const auto& zones = map.zones();
    std::string prev;
    for (int i = 0; i < d.itinerary_length; ++i) {
        std::string next;
        do {
            next = zones[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(zones.size()) - 1))].id;
        } while (next == prev);
        s.itinerary.push_back(next);
        prev = next;
    }
    return s;
}

Vec2 start_position(std::uint64_t seed, const ZoneMap& map)
{
    Rng rng(Rng::derive(seed, 0x5a));
    const double margin = 20.0;
    return {margin + rng.uniform01() * (map.width_mm() - 2 * margin),
            margin + rng.uniform01() * (map.height_mm() - 2 * margin)};
}

std::pair<AgentScript, AgentScript> scripts_for_seed(std::uint64_t seed, const ZoneMap& map, const AgentDefaults& d)
{
    AgentScript a = make_agent_script(2 * seed - 1, map, d);
    AgentScript b = make_agent_script(2 * seed, map, d);
    b.disagree_first = false; // only one participant is contrary
    return {std::move(a), std::move(b)};
}

PairResult run_demo(HapticMode mode, std::uint64_t seed, const std::string& map_hash, const ZoneMap& map,
                    const Activity& activity, const AgentDefaults& defaults)
{
    const AgentScript a = make_agent_script(2 * seed - 1, map, defaults);
    AgentScript b = a;
    b.seed = 2 * seed;
    SessionConfig config;
    config.session_id = "demo-" + std::string(to_string(mode)) + "-" + std::to_string(seed);
    config.mode = mode;
    config.map_hash = map_hash;
    PairOptions opts;
    opts.start_a = start_position(a.seed, map);
    opts.start_b = start_position(b.seed, map);
    return run_pair(a, b, config, {}, 600, map, activity, opts);
}

SeedRun run_seed(const RunManifest& manifest, HapticMode mode, std::uint64_t seed, const ZoneMap& map,
                 const Activity& activity)
{
    SessionConfig config = manifest.config;
    config.mode = mode;
    config.session_id = std::string(to_string(mode)) + "-" + std::to_string(seed);
    LatencyProfile latency = manifest.latency;
    latency.seed = Rng::derive(manifest.latency.seed, seed);
    const auto [a, b] = scripts_for_seed(seed, map, manifest.agents);
    PairOptions opts;
    opts.start_a = start_position(a.seed, map);
    opts.start_b = start_position(b.seed, map);
    opts.realtime = manifest.realtime;

    SeedRun run{mode, seed, run_pair(a, b, config, latency, manifest.duration_s, map, activity, opts), {}};
    SummaryOptions analysis = manifest.analysis;
    analysis.seed = Rng::derive(manifest.analysis.seed, seed);
    run.summary = session_summary(run.result.trace, run.result.events, analysis);
    return run;
}

json RunManifest::to_json() const
{
    json m = json::array();
    for (auto mode : modes) m.push_back(std::string(to_string(mode)));
    return {{"modes", m},
            {"seeds", seeds},
            {"latency", {{"base_delay_ms", latency.base_delay_ms}, {"jitter_ms", latency.jitter_ms}, {"seed", latency.seed}}},
            {"config", tactix::to_json(config)},
            {"agents",
             {{"itinerary_length", agents.itinerary_length},
              {"dwell_ms", agents.dwell_ms},
              {"drag_gain", agents.drag_gain},
              {"noise_std_mm", agents.noise_std_mm},
              {"disagree_first", agents.disagree_first}}},
            {"duration_s", duration_s},
            {"analysis", {{"hz", analysis.hz}, {"n_perm", analysis.n_perm}, {"seed", analysis.seed}}},
            {"map_path", map_path},
            {"activity_path", activity_path},
            {"out_dir", out_dir},
            {"realtime", realtime}};
}

RunManifest RunManifest::from_json(const json& j)
{
    try {
        RunManifest m;
        m.modes.clear();
        for (const auto& mode : j.at("modes")) m.modes.push_back(parse_haptic_mode(mode.get<std::string>()));
        m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        const auto& l = j.at("latency");
        m.latency = {l.value("base_delay_ms", std::int64_t{0}), l.value("jitter_ms", std::int64_t{0}),
                     l.value("seed", std::uint64_t{0})};
        m.config = session_config_from_json(j.at("config"));
        if (j.contains("agents")) {
            const auto& a = j.at("agents");
            m.agents.itinerary_length = a.value("itinerary_length", m.agents.itinerary_length);
            m.agents.dwell_ms = a.value("dwell_ms", m.agents.dwell_ms);
            m.agents.drag_gain = a.value("drag_gain", m.agents.drag_gain);
            m.agents.noise_std_mm = a.value("noise_std_mm", m.agents.noise_std_mm);
            m.agents.disagree_first = a.value("disagree_first", m.agents.disagree_first);
        }
        m.duration_s = j.value("duration_s", m.duration_s);
        if (j.contains("analysis")) {
            const auto& a = j.at("analysis");
            m.analysis.hz = a.value("hz", m.analysis.hz);
            m.analysis.n_perm = a.value("n_perm", m.analysis.n_perm);
            m.analysis.seed = a.value("seed", m.analysis.seed);
        }
        m.map_path = j.value("map_path", std::string{});
        m.activity_path = j.value("activity_path", std::string{});
        m.out_dir = j.value("out_dir", std::string{});
        m.realtime = j.value("realtime", false);
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
}

namespace {

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

double mean_xy_r(const SessionSummary& s)
{
    if (!s.correlation) return std::numeric_limits<double>::quiet_NaN();
    return (s.correlation->r(0, 2) + s.correlation->r(1, 3)) / 2.0;
}

} // namespace

void write_session_outputs(const fs::path& dir, const PairResult& result, const SessionSummary& summary, const json& extra)
{
    fs::create_directories(dir);
    std::ostringstream csv, events;
    write_trace_csv(csv, result.trace);
    write_events_jsonl(events, result.events);
    write_text(dir / "trace.csv", csv.str());
    write_text(dir / "events.jsonl", events.str());
    json report = summary.to_json();
    for (const auto& [k, v] : extra.items()) report[k] = v;
    report["quiz_state"] = result.final_activity_state;
    report["protocol_errors"] = result.session_stats.protocol_errors;
    write_text(dir / "report.json", report.dump(2) + "\n");
    write_text(dir / "A_xy.csv", plot_csv(result.trace, Party::A));
    write_text(dir / "B_xy.csv", plot_csv(result.trace, Party::B));
}

json run_experiment(const RunManifest& manifest, const ZoneMap& map, const Activity& activity, std::vector<SeedRun>* runs)
{
    if (manifest.seeds.empty()) throw ValidationError("empty seed list");
    if (manifest.modes.empty()) throw ValidationError("no modes selected");
    const bool write = !manifest.out_dir.empty();
    if (write) {
        fs::create_directories(manifest.out_dir);
        write_text(fs::path(manifest.out_dir) / "manifest.json", manifest.to_json().dump(2) + "\n");
    }

    json per_mode = json::object();
    std::map<HapticMode, std::map<std::uint64_t, std::pair<double, double>>> key; // mean r, tandem
    for (HapticMode mode : manifest.modes) {
        json rows = json::array();
        double sum_r = 0, sum_tandem = 0, sum_dist = 0;
        int n = 0, perfect = 0;
        for (std::uint64_t seed : manifest.seeds) {
            SeedRun run = run_seed(manifest, mode, seed, map, activity);
            const double r = mean_xy_r(run.summary);
            const double tandem = run.summary.tandem_fraction.value_or(std::numeric_limits<double>::quiet_NaN());
            json row = {{"seed", seed},
                        {"r_x1_x2", run.summary.correlation ? json(run.summary.correlation->r(0, 2)) : json(nullptr)},
                        {"r_y1_y2", run.summary.correlation ? json(run.summary.correlation->r(1, 3)) : json(nullptr)},
                        {"mean_r", std::isfinite(r) ? json(r) : json(nullptr)},
                        {"tandem_fraction", std::isfinite(tandem) ? json(tandem) : json(nullptr)},
                        {"mean_distance_mm", run.summary.mean_distance_mm ? json(*run.summary.mean_distance_mm) : json(nullptr)},
                        {"score", run.summary.score ? json(*run.summary.score) : json(nullptr)},
                        {"quiz_duration_s", run.summary.quiz_duration_s ? json(*run.summary.quiz_duration_s) : json(nullptr)},
                        {"protocol_errors", run.result.session_stats.protocol_errors}};
            rows.push_back(std::move(row));
            if (std::isfinite(r)) {
                sum_r += r;
                sum_tandem += tandem;
                sum_dist += run.summary.mean_distance_mm.value_or(0);
                ++n;
            }
            if (run.summary.score && run.summary.total && *run.summary.score == *run.summary.total) ++perfect;
            key[mode][seed] = {r, tandem};
            if (write)
                write_session_outputs(fs::path(manifest.out_dir) / std::string(to_string(mode)) / ("seed_" + std::to_string(seed)),
                                      run.result, run.summary, {{"mode", std::string(to_string(mode))}, {"seed", seed}});
            if (runs) runs->push_back(std::move(run));
        }
        per_mode[std::string(to_string(mode))] = {{"runs", rows},
                                                  {"mean_r", n ? json(sum_r / n) : json(nullptr)},
                                                  {"mean_tandem_fraction", n ? json(sum_tandem / n) : json(nullptr)},
                                                  {"mean_distance_mm", n ? json(sum_dist / n) : json(nullptr)},
                                                  {"perfect_scores", perfect}};
    }

    json aggregate = {{"modes", per_mode}};
    if (key.contains(HapticMode::co_location) && key.contains(HapticMode::consensus)) {
        double gap = 0;
        int wins = 0, n = 0;
        for (std::uint64_t seed : manifest.seeds) {
            const auto [rc, tc] = key[HapticMode::co_location][seed];
            const auto [rs, ts] = key[HapticMode::consensus][seed];
            if (!std::isfinite(rc) || !std::isfinite(rs)) continue;
            gap += rc - rs;
            wins += tc > ts ? 1 : 0;
            ++n;
        }
        aggregate["comparison"] = {{"mean_r_gap", n ? json(gap / n) : json(nullptr)},
                                   {"tandem_wins", wins},
                                   {"seeds_compared", n}};
    }
    if (write) write_text(fs::path(manifest.out_dir) / "aggregate.json", aggregate.dump(2) + "\n");
    return aggregate;
}

} // namespace tactix
