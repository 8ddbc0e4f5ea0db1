// tactix: session server, scripted experiments and trace analysis.

#include "tactix/activity.hpp"
#include "tactix/analytics.hpp"
#include "tactix/digest.hpp"
#include "tactix/errors.hpp"
#include "tactix/experiment.hpp"
#include "tactix/remote_agent.hpp"
#include "tactix/server.hpp"
#include "tactix/trace.hpp"
#include "tactix/zone_map.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include <pthread.h>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tactix;

namespace {

enum Exit { ok = 0, usage = 1, validation = 2, runtime = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#ifndef TACTIX_DATA_DIR
#define TACTIX_DATA_DIR "data"
#endif

const std::string default_map = std::string(TACTIX_DATA_DIR) + "/cell_a4.map.json";
const std::string default_activity = std::string(TACTIX_DATA_DIR) + "/cell_activity.json";

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

HapticMode mode_flag(const std::string& s)
{
    try {
        return parse_haptic_mode(s);
    } catch (const std::exception&) {
        throw UsageError("--mode: unknown mode '" + s + "' (expected co_location, consensus or none)");
    }
}

/// "1..20", "3", "1,4,9" or combinations like "1..3,7".
std::vector<std::uint64_t> parse_seeds(const std::string& text)
{
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string part;
    try {
        while (std::getline(ss, part, ',')) {
            if (part.empty()) continue;
            if (const auto dots = part.find(".."); dots != std::string::npos) {
                const auto lo = std::stoull(part.substr(0, dots));
                const auto hi = std::stoull(part.substr(dots + 2));
                for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
            } else {
                seeds.push_back(std::stoull(part));
            }
        }
    } catch (const std::logic_error&) {
        throw UsageError("--seeds: cannot parse '" + text + "'");
    }
    if (seeds.empty()) throw UsageError("--seeds: empty seed list");
    return seeds;
}

/// "base:jitter" in milliseconds.
LatencyProfile parse_latency(const std::string& text)
{
    const auto colon = text.find(':');
    try {
        LatencyProfile p;
        p.base_delay_ms = std::stoll(text.substr(0, colon));
        p.jitter_ms = colon == std::string::npos ? 0 : std::stoll(text.substr(colon + 1));
        if (p.base_delay_ms < 0 || p.jitter_ms < 0) throw std::invalid_argument("negative");
        return p;
    } catch (const std::logic_error&) {
        throw UsageError("--latency: expected base_ms:jitter_ms, got '" + text + "'");
    }
}

int cmd_validate(const std::string& map_path, const std::string& activity_path)
{
    const ZoneMap map = load_map_file(map_path);
    std::cout << "map ok: " << map.zones().size() << " zones\n";
    if (activity_path.empty()) return ok;
    const Activity activity = load_activity_file(activity_path);
    const auto problems = validate_activity(activity, map);
    for (const auto& p : problems) std::cerr << "error: " << p << "\n";
    if (!problems.empty()) return validation;
    std::cout << "activity ok: " << activity.tasks.size() << " tasks, " << activity.questions.size() << " questions\n";
    return ok;
}

struct Loaded {
    ZoneMap map;
    Activity activity;
    std::string map_hash;
};

Loaded load_inputs(const std::string& map_path, const std::string& activity_path)
{
    Loaded l;
    const std::string bytes = read_file(map_path);
    l.map = load_map(bytes);
    l.map_hash = sha256_hex(bytes);
    l.activity = load_activity_file(activity_path);
    const auto problems = validate_activity(l.activity, l.map);
    if (!problems.empty()) throw ValidationError(problems.front());
    return l;
}

struct ServeFlags {
    std::string map = default_map;
    std::string activity = default_activity;
    std::string mode = "co_location";
    std::string address = "127.0.0.1";
    int port = default_port;
    std::string out;
    std::string session_id;
    bool realtime = false;
    double duration_s = 0;
};

std::string random_session_id()
{
    std::random_device rd;
    std::ostringstream os;
    os << std::hex << rd() << rd();
    return os.str().substr(0, 8);
}

int cmd_serve(const ServeFlags& f, bool port_given)
{
    const HapticMode mode = mode_flag(f.mode);
    const Loaded in = load_inputs(f.map, f.activity);

    SessionConfig config;
    config.session_id = f.session_id.empty() ? random_session_id() : f.session_id;
    config.mode = mode;
    config.map_hash = in.map_hash;
    config.validate();

    ServerOptions opts;
    opts.address = f.address;
    opts.port = f.port;
    if (!port_given)
        if (const char* env = std::getenv("TACTIX_PORT")) {
            try {
                opts.port = std::stoi(env);
            } catch (const std::logic_error&) {
                throw UsageError(std::string("TACTIX_PORT: not a port number: ") + env);
            }
        }
    opts.assets = {{fs::path(f.map).filename().string(), f.map},
                   {fs::path(f.activity).filename().string(), f.activity},
                   {"map.json", f.map},
                   {"activity.json", f.activity}};

    std::ofstream csv, events;
    std::unique_ptr<TraceRecorder> recorder;
    if (!f.out.empty()) {
        fs::create_directories(f.out);
        csv.open(fs::path(f.out) / "trace.csv", std::ios::binary);
        events.open(fs::path(f.out) / "events.jsonl", std::ios::binary);
        if (!csv || !events) throw std::runtime_error("cannot write to '" + f.out + "'");
        write_file(fs::path(f.out) / "session_config.json", to_json(config).dump(2) + "\n");
        recorder = std::make_unique<TraceRecorder>(csv, events, config_digest(config));
        opts.sink = recorder.get();
    }

    // Signals are taken synchronously by a watcher thread.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    Server server(config, in.map, in.activity, opts);
    std::cout << "tactix serve: session " << config.session_id << ", mode " << to_string(mode) << ", listening on "
              << f.address << ":" << server.port() << " (tcp, ws /ws/session/" << config.session_id << ", http /assets/)"
              << std::endl;

    std::thread watcher([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    std::thread timer;
    if (f.duration_s > 0)
        timer = std::thread([&] {
            std::this_thread::sleep_for(std::chrono::duration<double>(f.duration_s));
            pthread_kill(watcher.native_handle(), SIGTERM);
        });
    server.run();
    if (timer.joinable()) timer.join();
    else pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
    if (recorder) recorder->flush();
    const auto stats = server.stats();
    std::cout << "tactix serve: stopped (" << stats.relayed << " relayed, " << stats.protocol_errors
              << " protocol errors)" << std::endl;
    return ok;
}

struct ExperimentFlags {
    std::string map = default_map;
    std::string activity = default_activity;
    std::vector<std::string> modes{"co_location", "consensus"};
    std::string seeds = "1";
    std::string latency = "0:0";
    std::uint64_t latency_seed = 7;
    double duration_s = 300;
    int n_perm = 10000;
    double hz = 10;
    bool disagree_first = false;
    std::string out;
    std::string manifest;
    bool realtime = false;
};

int cmd_experiment(const ExperimentFlags& f)
{
    RunManifest m;
    if (!f.manifest.empty()) {
        m = RunManifest::from_json(json::parse(read_file(f.manifest)));
        if (!f.out.empty()) m.out_dir = f.out;
        if (m.map_path.empty()) m.map_path = f.map;
        if (m.activity_path.empty()) m.activity_path = f.activity;
    } else {
        m.modes.clear();
        for (const auto& s : f.modes) m.modes.push_back(mode_flag(s));
        m.seeds = parse_seeds(f.seeds);
        m.latency = parse_latency(f.latency);
        m.latency.seed = f.latency_seed;
        m.duration_s = f.duration_s;
        m.analysis.n_perm = f.n_perm;
        m.analysis.hz = f.hz;
        m.agents.disagree_first = f.disagree_first;
        m.map_path = f.map;
        m.activity_path = f.activity;
        m.out_dir = f.out;
    }
    if (m.seeds.empty()) throw UsageError("manifest: empty seed list");
    if (m.modes.empty()) throw UsageError("manifest: no modes");
    if (!(m.analysis.hz > 0)) throw UsageError("--hz must be positive");
    if (f.realtime) m.realtime = true;

    const Loaded in = load_inputs(m.map_path, m.activity_path);
    m.config.map_hash = in.map_hash;
    m.config.validate();
    const json aggregate = run_experiment(m, in.map, in.activity);
    std::cout << aggregate.dump(2) << "\n";
    return ok;
}

struct AnalyzeFlags {
    std::string trace;
    std::string events;
    double hz = 10;
    int n_perm = 10000;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_analyze(const AnalyzeFlags& f)
{
    if (!(f.hz > 0)) throw UsageError("--hz must be positive");
    if (f.n_perm < 1) throw UsageError("--n-perm must be at least 1");
    const Trace trace = load_trace_csv_file(f.trace);
    if (!trace.has_robot(Party::A) || !trace.has_robot(Party::B)) throw AnalysisError("both robots required");
    std::vector<Envelope> events;
    if (!f.events.empty()) events = load_events_jsonl_file(f.events);
    const SessionSummary summary = session_summary(trace, events, {f.hz, f.n_perm, f.seed});
    const std::string report = summary.to_json().dump(2) + "\n";
    if (f.out.empty()) {
        std::cout << report;
    } else {
        fs::create_directories(f.out);
        write_file(fs::path(f.out) / "report.json", report);
        write_file(fs::path(f.out) / "A_xy.csv", plot_csv(trace, Party::A));
        write_file(fs::path(f.out) / "B_xy.csv", plot_csv(trace, Party::B));
        std::cout << "wrote " << (fs::path(f.out) / "report.json").string() << "\n";
    }
    for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
    return ok;
}

int cmd_replay(const std::string& events_path, const std::string& map_path, const std::string& activity_path)
{
    const Loaded in = load_inputs(map_path, activity_path);
    const auto events = load_events_jsonl_file(events_path);
    std::cout << replay_activity(events, in.activity, in.map).to_json().dump(2) << "\n";
    return ok;
}

int cmd_demo(const std::string& mode_name, std::uint64_t seed, const std::string& out, const std::string& map_path,
             const std::string& activity_path)
{
    const HapticMode mode = mode_flag(mode_name);
    const Loaded in = load_inputs(map_path, activity_path);
    const PairResult result = run_demo(mode, seed, in.map_hash, in.map, in.activity);
    const SessionSummary summary = session_summary(result.trace, result.events, {10, 10000, seed});
    write_session_outputs(out, result, summary, {{"mode", std::string(to_string(mode))}, {"seed", seed}});
    std::cout << summary.to_json().dump(2) << "\n";
    return ok;
}

struct AgentFlags {
    std::string map = default_map;
    std::string activity = default_activity;
    std::string script;
    std::string host = "127.0.0.1";
    int port = default_port;
    double start_x = 40, start_y = 105;
    double timeout_s = 600;
};

int cmd_agent(const AgentFlags& f, bool port_given)
{
    const Loaded in = load_inputs(f.map, f.activity);
    const AgentScript script = agent_script_from_json(json::parse(read_file(f.script)));
    RemoteAgentOptions opts;
    opts.host = f.host;
    opts.port = f.port;
    if (!port_given)
        if (const char* env = std::getenv("TACTIX_PORT")) opts.port = std::atoi(env);
    opts.start = {f.start_x, f.start_y};
    opts.timeout_ms = static_cast<std::int64_t>(f.timeout_s * 1000);
    const auto r = run_remote_agent(script, in.map, in.activity, in.map_hash, opts);
    json out = {{"role", r.role ? json(std::string(to_string(*r.role))) : json(nullptr)},
                {"quiz_done", r.quiz_done},
                {"sent", r.stats.sent},
                {"received", r.stats.received},
                {"rejections", r.stats.rejections},
                {"server_byes", r.stats.server_byes}};
    std::cout << out.dump(2) << "\n";
    return r.quiz_done ? ok : runtime;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"tactix: paired haptic robots session server and analysis tools"};
    app.require_subcommand(1);

    ServeFlags serve;
    auto* s = app.add_subcommand("serve", "Run a session server (TCP, WebSocket and asset HTTP on one port)");
    s->add_option("--map", serve.map, "Zone map JSON")->capture_default_str();
    s->add_option("--activity", serve.activity, "Activity JSON")->capture_default_str();
    s->add_option("--mode", serve.mode, "co_location | consensus | none")->capture_default_str();
    s->add_option("--address", serve.address, "Listen address")->capture_default_str();
    auto* serve_port = s->add_option("--port", serve.port, "Listen port (env TACTIX_PORT)")->capture_default_str();
    s->add_option("--out", serve.out, "Directory for trace.csv and events.jsonl");
    s->add_option("--session-id", serve.session_id, "Session id (random when omitted)");
    s->add_flag("--realtime", serve.realtime, "Wall-clock session (the server always runs on the wall clock)");
    s->add_option("--duration", serve.duration_s, "Stop after this many seconds (0: until signalled)");

    ExperimentFlags exp;
    auto* e = app.add_subcommand("experiment", "Run seeded two-agent sessions over simulated links");
    e->add_option("--map", exp.map, "Zone map JSON")->capture_default_str();
    e->add_option("--activity", exp.activity, "Activity JSON")->capture_default_str();
    e->add_option("--mode", exp.modes, "Haptic modes to compare")->delimiter(',')->capture_default_str();
    e->add_option("--seeds", exp.seeds, "Seeds, e.g. 1..20 or 1,5,9")->capture_default_str();
    e->add_option("--latency", exp.latency, "base_ms:jitter_ms")->capture_default_str();
    e->add_option("--latency-seed", exp.latency_seed, "Base seed of the link delays")->capture_default_str();
    e->add_option("--duration", exp.duration_s, "Session length cap in seconds")->capture_default_str();
    e->add_option("--n-perm", exp.n_perm, "Permutations per p-value")->capture_default_str();
    e->add_option("--hz", exp.hz, "Resampling rate")->capture_default_str();
    e->add_flag("--disagree-first", exp.disagree_first, "Agent A votes for a wrong zone first");
    e->add_option("--out", exp.out, "Output directory");
    e->add_option("--manifest", exp.manifest, "Re-run a manifest.json");
    e->add_flag("--realtime", exp.realtime, "Pace the simulation to the wall clock");

    AnalyzeFlags an;
    auto* a = app.add_subcommand("analyze", "Correlation and session report for a recorded trace");
    a->add_option("--trace", an.trace, "Trace CSV")->required();
    a->add_option("--events", an.events, "Events JSONL");
    a->add_option("--hz", an.hz, "Resampling rate")->capture_default_str();
    a->add_option("--n-perm", an.n_perm, "Permutations per p-value")->capture_default_str();
    a->add_option("--seed", an.seed, "Permutation seed")->capture_default_str();
    a->add_option("--out", an.out, "Directory for report.json and plot CSVs");

    std::string v_map, v_activity;
    auto* v = app.add_subcommand("validate", "Check a map and an activity");
    v->add_option("--map", v_map, "Zone map JSON")->required();
    v->add_option("--activity", v_activity, "Activity JSON");

    std::string r_events, r_map = default_map, r_activity = default_activity;
    auto* r = app.add_subcommand("replay", "Rebuild the final quiz state from an events log");
    r->add_option("--events", r_events, "Events JSONL")->required();
    r->add_option("--map", r_map, "Zone map JSON")->capture_default_str();
    r->add_option("--activity", r_activity, "Activity JSON")->capture_default_str();

    std::string d_mode = "co_location", d_out, d_map = default_map, d_activity = default_activity;
    std::uint64_t d_seed = 1;
    auto* d = app.add_subcommand("demo", "Two agents sharing one itinerary; writes a full session record");
    d->add_option("--mode", d_mode, "co_location | consensus | none")->capture_default_str();
    d->add_option("--seed", d_seed, "Seed")->capture_default_str();
    d->add_option("--out", d_out, "Output directory")->required();
    d->add_option("--map", d_map, "Zone map JSON")->capture_default_str();
    d->add_option("--activity", d_activity, "Activity JSON")->capture_default_str();

    AgentFlags ag;
    auto* g = app.add_subcommand("agent", "Run one scripted participant against a live server");
    g->add_option("--script", ag.script, "Agent script JSON")->required();
    g->add_option("--map", ag.map, "Zone map JSON")->capture_default_str();
    g->add_option("--activity", ag.activity, "Activity JSON")->capture_default_str();
    g->add_option("--host", ag.host, "Server host")->capture_default_str();
    auto* agent_port = g->add_option("--port", ag.port, "Server port (env TACTIX_PORT)")->capture_default_str();
    g->add_option("--start-x", ag.start_x, "Start x (mm)")->capture_default_str();
    g->add_option("--start-y", ag.start_y, "Start y (mm)")->capture_default_str();
    g->add_option("--timeout", ag.timeout_s, "Give up after seconds")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? ok : usage;
    }

    try {
        if (*s) return cmd_serve(serve, serve_port->count() > 0);
        if (*e) return cmd_experiment(exp);
        if (*a) return cmd_analyze(an);
        if (*v) return cmd_validate(v_map, v_activity);
        if (*r) return cmd_replay(r_events, r_map, r_activity);
        if (*d) return cmd_demo(d_mode, d_seed, d_out, d_map, d_activity);
        if (*g) return cmd_agent(ag, agent_port->count() > 0);
    } catch (const UsageError& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return usage;
    } catch (const ParseError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return validation;
    } catch (const ValidationError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return validation;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return runtime;
    }
    return usage;
}
