#pragma once

#include "tactix/protocol.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tactix {

/// One logged pose of one robot, server-stamped.
struct TraceSample {
    std::int64_t t_ms = 0;
    Party robot_id = Party::A;
    double x_mm = 0;
    double y_mm = 0;
    double theta_rad = 0;
    std::string zone_id;

    bool operator==(const TraceSample&) const = default;
};

struct Trace {
    std::vector<TraceSample> samples;
    std::string config_digest; // empty when the header carried none

    bool has_robot(Party robot) const;
};

inline constexpr std::string_view trace_csv_header = "t_ms,robot_id,x_mm,y_mm,theta_rad,zone_id";

/// Rounds to the 3 decimal places used on disk, so written values reload exactly.
double quantize_mm(double value);

/// CSV row without the line terminator, e.g. "1500,A,102.300,88.000,0.000,nucleus".
std::string format_sample(const TraceSample& sample);

/// Receives everything a session records.
class TraceSink {
public:
    virtual ~TraceSink() = default;
    /// Throws AnalysisError("non-monotone timestamp") if t_ms regresses for a robot.
    virtual void sample(const TraceSample& s) = 0;
    virtual void event(const Envelope& e) = 0;
    virtual void flush() {}
};

/// Rejects per-robot timestamp regressions.
class MonotoneGuard {
public:
    void check(const TraceSample& s);

private:
    std::map<Party, std::int64_t> last_;
};

/// Keeps the quantized trace and the event log in memory.
class MemoryTrace final : public TraceSink {
public:
    void sample(const TraceSample& s) override;
    void event(const Envelope& e) override;

    Trace trace;
    std::vector<Envelope> events;

private:
    MonotoneGuard guard_;
};

/// Streams the trace CSV and the events JSONL. The CSV starts with a comment
/// line carrying the session config digest, then the column header.
class TraceRecorder final : public TraceSink {
public:
    TraceRecorder(std::ostream& csv, std::ostream& events_jsonl, std::string_view config_digest);

    void sample(const TraceSample& s) override;
    void event(const Envelope& e) override;
    void flush() override;

private:
    std::ostream& csv_;
    std::ostream& events_;
    MonotoneGuard guard_;
};

/// Parses a trace CSV (comment lines starting with '#' carry metadata).
/// Throws ParseError on malformed rows.
Trace load_trace_csv(std::istream& in);
Trace load_trace_csv_file(const std::string& path);

std::vector<Envelope> load_events_jsonl(std::istream& in);
std::vector<Envelope> load_events_jsonl_file(const std::string& path);

void write_trace_csv(std::ostream& out, const Trace& trace);
void write_events_jsonl(std::ostream& out, const std::vector<Envelope>& events);

} // namespace tactix
