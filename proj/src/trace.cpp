#include "tactix/trace.hpp"

#include "tactix/digest.hpp"
#include "tactix/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace tactix {

bool Trace::has_robot(Party robot) const
{
    for (const auto& s : samples)
        if (s.robot_id == robot) return true;
    return false;
}

double quantize_mm(double value)
{
    const double q = std::round(value * 1000.0) / 1000.0;
    return q == 0.0 ? 0.0 : q; // no "-0.000"
}

std::string format_sample(const TraceSample& s)
{
    char buf[160];
    const int n = std::snprintf(buf, sizeof buf, "%lld,%s,%.3f,%.3f,%.3f,", static_cast<long long>(s.t_ms),
                                s.robot_id == Party::A ? "A" : "B", quantize_mm(s.x_mm), quantize_mm(s.y_mm),
                                quantize_mm(s.theta_rad));
    return std::string(buf, static_cast<std::size_t>(n)) + s.zone_id;
}

void MonotoneGuard::check(const TraceSample& s)
{
    const auto it = last_.find(s.robot_id);
    if (it != last_.end() && s.t_ms < it->second) throw AnalysisError("non-monotone timestamp");
    last_[s.robot_id] = s.t_ms;
}

namespace {

TraceSample quantized(const TraceSample& s)
{
    TraceSample q = s;
    q.x_mm = quantize_mm(s.x_mm);
    q.y_mm = quantize_mm(s.y_mm);
    q.theta_rad = quantize_mm(s.theta_rad);
    return q;
}

} // namespace

void MemoryTrace::sample(const TraceSample& s)
{
    guard_.check(s);
    trace.samples.push_back(quantized(s));
}

void MemoryTrace::event(const Envelope& e) { events.push_back(e); }

TraceRecorder::TraceRecorder(std::ostream& csv, std::ostream& events_jsonl, std::string_view config_digest)
    : csv_(csv), events_(events_jsonl)
{
    if (!config_digest.empty()) csv_ << "# session_config_sha256=" << config_digest << '\n';
    csv_ << trace_csv_header << '\n';
}

void TraceRecorder::sample(const TraceSample& s)
{
    guard_.check(s);
    csv_ << format_sample(s) << '\n';
    if (!csv_) throw std::runtime_error("trace write failed");
}

void TraceRecorder::event(const Envelope& e)
{
    events_ << encode(e);
    if (!events_) throw std::runtime_error("event log write failed");
}

void TraceRecorder::flush()
{
    csv_.flush();
    events_.flush();
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no)
{
    T value{};
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end)
        throw ParseError("trace line " + std::to_string(line_no) + ": bad number '" + std::string(field) + "'");
    return value;
}

} // namespace

Trace load_trace_csv(std::istream& in)
{
    Trace trace;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            constexpr std::string_view key = "# session_config_sha256=";
            if (line.starts_with(key)) trace.config_digest = line.substr(key.size());
            continue;
        }
        if (!header_seen) {
            if (line != trace_csv_header) throw ParseError("trace: unexpected header '" + line + "'");
            header_seen = true;
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 6) throw ParseError("trace line " + std::to_string(line_no) + ": expected 6 fields");
        TraceSample s;
        s.t_ms = parse_number<std::int64_t>(f[0], line_no);
        if (f[1] == "A")
            s.robot_id = Party::A;
        else if (f[1] == "B")
            s.robot_id = Party::B;
        else
            throw ParseError("trace line " + std::to_string(line_no) + ": robot_id must be A or B");
        s.x_mm = parse_number<double>(f[2], line_no);
        s.y_mm = parse_number<double>(f[3], line_no);
        s.theta_rad = parse_number<double>(f[4], line_no);
        s.zone_id = std::string(f[5]);
        trace.samples.push_back(std::move(s));
    }
    if (!header_seen) throw ParseError("trace: missing header");
    return trace;
}

Trace load_trace_csv_file(const std::string& path)
{
    std::istringstream in(read_file(path));
    return load_trace_csv(in);
}

std::vector<Envelope> load_events_jsonl(std::istream& in)
{
    std::vector<Envelope> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        out.push_back(decode(line));
    }
    return out;
}

std::vector<Envelope> load_events_jsonl_file(const std::string& path)
{
    std::istringstream in(read_file(path));
    return load_events_jsonl(in);
}

void write_trace_csv(std::ostream& out, const Trace& trace)
{
    if (!trace.config_digest.empty()) out << "# session_config_sha256=" << trace.config_digest << '\n';
    out << trace_csv_header << '\n';
    for (const auto& s : trace.samples) out << format_sample(s) << '\n';
}

void write_events_jsonl(std::ostream& out, const std::vector<Envelope>& events)
{
    for (const auto& e : events) out << encode(e);
}

} // namespace tactix
