#include "tactix/analytics.hpp"

#include "tactix/rng.hpp"

#include <cstdio>
#include <numeric>

namespace tactix {

using nlohmann::json;

namespace {

struct RobotSeries {
    std::vector<double> t, x, y;
    std::vector<const std::string*> zone;
};

RobotSeries split_robot(const Trace& trace, Party robot)
{
    RobotSeries s;
    for (const auto& smp : trace.samples) {
        if (smp.robot_id != robot) continue;
        s.t.push_back(static_cast<double>(smp.t_ms));
        s.x.push_back(smp.x_mm);
        s.y.push_back(smp.y_mm);
        s.zone.push_back(&smp.zone_id);
    }
    return s;
}

/// Walks one robot's samples forward along an increasing grid.
class Interpolator {
public:
    explicit Interpolator(const RobotSeries& s) : s_(s) {}

    void at(double t, double& x, double& y, const std::string*& zone)
    {
        while (i_ + 1 < s_.t.size() && s_.t[i_ + 1] <= t) ++i_;
        zone = s_.zone[i_];
        if (i_ + 1 >= s_.t.size() || s_.t[i_] == t) {
            x = s_.x[i_];
            y = s_.y[i_];
            return;
        }
        const double w = (t - s_.t[i_]) / (s_.t[i_ + 1] - s_.t[i_]);
        x = s_.x[i_] + w * (s_.x[i_ + 1] - s_.x[i_]);
        y = s_.y[i_] + w * (s_.y[i_ + 1] - s_.y[i_]);
    }

private:
    const RobotSeries& s_;
    std::size_t i_ = 0;
};

} // namespace

AlignedSeries resample(const Trace& trace, double hz)
{
    if (!(hz > 0) || !std::isfinite(hz)) throw AnalysisError("resample: hz must be positive");
    if (trace.samples.empty()) throw AnalysisError("no overlap: trace is empty");
    const RobotSeries a = split_robot(trace, Party::A);
    const RobotSeries b = split_robot(trace, Party::B);
    if (a.t.empty() || b.t.empty()) throw AnalysisError("both robots required");
    if (a.t.size() < 2 || b.t.size() < 2) throw AnalysisError("no overlap: each robot needs at least 2 samples");
    const double start = std::max(a.t.front(), b.t.front());
    const double end = std::min(a.t.back(), b.t.back());
    if (end < start) throw AnalysisError("no overlap: robot time spans are disjoint");

    const double step = 1000.0 / hz;
    const auto n = static_cast<Eigen::Index>(std::floor((end - start) / step + 1e-9)) + 1;
    AlignedSeries out;
    out.hz = hz;
    out.x1.resize(n);
    out.y1.resize(n);
    out.x2.resize(n);
    out.y2.resize(n);
    out.t_ms.reserve(static_cast<std::size_t>(n));
    out.zone1.reserve(static_cast<std::size_t>(n));
    out.zone2.reserve(static_cast<std::size_t>(n));
    Interpolator ia(a), ib(b);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double t = start + static_cast<double>(k) * step;
        const std::string* za = nullptr;
        const std::string* zb = nullptr;
        ia.at(t, out.x1[k], out.y1[k], za);
        ib.at(t, out.x2[k], out.y2[k], zb);
        out.t_ms.push_back(static_cast<std::int64_t>(std::llround(t)));
        out.zone1.push_back(*za);
        out.zone2.push_back(*zb);
    }
    return out;
}

double perm_pvalue_at(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                      double threshold, int n_perm, std::uint64_t seed)
{
    if (n_perm < 1) throw AnalysisError("need at least one permutation");
    if (a.size() != b.size()) throw AnalysisError("pearson: series lengths differ");
    if (a.size() < 2) throw AnalysisError("pearson: need at least two samples");
    const Eigen::VectorXd ca = a.array() - a.mean();
    Eigen::VectorXd cb = b.array() - b.mean();
    const double denom = ca.norm() * cb.norm();
    if (!(denom > 0)) throw AnalysisError("pearson: zero variance, correlation undefined");

    constexpr double tie_eps = 1e-12;
    Rng rng(seed);
    const Eigen::Index n = cb.size();
    long exceed = 0;
    for (int k = 0; k < n_perm; ++k) {
        for (Eigen::Index i = n - 1; i > 0; --i) std::swap(cb[i], cb[rng.uniform_int(0, i)]);
        const double r = ca.dot(cb) / denom;
        if (std::abs(r) >= threshold - tie_eps) ++exceed;
    }
    return static_cast<double>(1 + exceed) / static_cast<double>(n_perm + 1);
}

double perm_pvalue(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b, int n_perm,
                   std::uint64_t seed)
{
    if (n_perm < 1) throw AnalysisError("need at least one permutation");
    return perm_pvalue_at(a, b, std::abs(pearson(a, b)), n_perm, seed);
}

json CorrelationReport::to_json() const
{
    auto matrix = [](const Eigen::Matrix4d& m) {
        json rows = json::array();
        for (int i = 0; i < 4; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2), m(i, 3)});
        return rows;
    };
    return {{"dims", dims},           {"r", matrix(r)},       {"p", matrix(p)},
            {"n_samples", n_samples}, {"resample_hz", resample_hz}, {"n_perm", n_perm},
            {"seed", seed}};
}

CorrelationReport correlation_matrix(const AlignedSeries& series, int n_perm, std::uint64_t seed)
{
    if (n_perm < 1) throw AnalysisError("need at least one permutation");
    const std::array<const Eigen::VectorXd*, 4> cols{&series.x1, &series.y1, &series.x2, &series.y2};
    CorrelationReport rep;
    rep.n_samples = series.size();
    rep.resample_hz = series.hz;
    rep.n_perm = n_perm;
    rep.seed = seed;
    std::uint64_t pair = 0;
    for (int i = 0; i < 4; ++i) {
        rep.r(i, i) = 1.0;
        rep.p(i, i) = 1.0 / static_cast<double>(n_perm + 1);
        for (int j = i + 1; j < 4; ++j, ++pair) {
            const double r = pearson(*cols[i], *cols[j]);
            const double p = perm_pvalue_at(*cols[i], *cols[j], std::abs(r), n_perm, Rng::derive(seed, pair));
            rep.r(i, j) = rep.r(j, i) = r;
            rep.p(i, j) = rep.p(j, i) = p;
        }
    }
    return rep;
}

CorrelationReport correlation_matrix(const Trace& trace, double hz, int n_perm, std::uint64_t seed)
{
    return correlation_matrix(resample(trace, hz), n_perm, seed);
}

double tandem_fraction(const AlignedSeries& series)
{
    if (series.zone1.empty()) throw AnalysisError("no overlap");
    std::size_t same = 0;
    for (std::size_t k = 0; k < series.zone1.size(); ++k) same += series.zone1[k] == series.zone2[k] ? 1 : 0;
    return static_cast<double>(same) / static_cast<double>(series.zone1.size());
}

double tandem_fraction(const Trace& trace, double hz) { return tandem_fraction(resample(trace, hz)); }

std::map<Party, std::map<std::string, double>> zone_dwell_s(const Trace& trace)
{
    std::map<Party, std::map<std::string, double>> out;
    std::map<Party, const TraceSample*> prev;
    for (const auto& s : trace.samples) {
        auto& last = prev[s.robot_id];
        if (last) out[s.robot_id][last->zone_id] += static_cast<double>(s.t_ms - last->t_ms) / 1000.0;
        else out[s.robot_id][s.zone_id] += 0.0;
        last = &s;
    }
    return out;
}

double mean_distance_mm(const AlignedSeries& series)
{
    if (series.size() == 0) throw AnalysisError("no overlap");
    const Eigen::ArrayXd dx = series.x1 - series.x2;
    const Eigen::ArrayXd dy = series.y1 - series.y2;
    return (dx.square() + dy.square()).sqrt().mean();
}

SessionSummary session_summary(const Trace& trace, std::span<const Envelope> events, const SummaryOptions& options)
{
    SessionSummary s;
    s.dwell_s = zone_dwell_s(trace);
    try {
        const AlignedSeries series = resample(trace, options.hz);
        s.tandem_fraction = tandem_fraction(series);
        s.mean_distance_mm = mean_distance_mm(series);
        s.correlation = correlation_matrix(series, options.n_perm, options.seed);
    } catch (const AnalysisError& e) {
        s.warnings.push_back(std::string("correlation omitted: ") + e.what());
    }

    std::optional<std::int64_t> started, finished;
    int score = 0;
    for (const auto& e : events) {
        if (e.from != Party::server) continue;
        if (e.type == MessageType::quiz_nav && !started) started = e.t_ms;
        if (e.type != MessageType::submit_result || !e.payload.value("accepted", false)) continue;
        const auto& correct = e.payload.contains("correct") ? e.payload.at("correct") : json();
        if (correct.is_boolean() && correct.get<bool>()) ++score;
        const int answered = e.payload.value("answered", 0);
        const int total = e.payload.value("total", -1);
        s.total = total;
        if (total > 0 && answered == total) finished = e.t_ms;
    }
    if (started && finished) {
        s.quiz_duration_s = static_cast<double>(*finished - *started) / 1000.0;
        s.score = score;
    } else {
        s.warnings.push_back("quiz not finished: quiz_duration omitted");
        if (s.total) s.score = score;
    }
    return s;
}

json SessionSummary::to_json() const
{
    json dwell = json::object();
    for (const auto& [who, zones] : dwell_s) dwell[std::string(to_string(who))] = zones;
    json j = {{"dwell_s", dwell}, {"warnings", warnings}};
    if (quiz_duration_s) j["quiz_duration_s"] = *quiz_duration_s;
    if (score) j["score"] = *score;
    if (total) j["total"] = *total;
    if (tandem_fraction) j["tandem_fraction"] = *tandem_fraction;
    if (mean_distance_mm) j["mean_distance_mm"] = *mean_distance_mm;
    if (correlation) j["correlation"] = correlation->to_json();
    return j;
}

std::string plot_csv(const Trace& trace, Party robot)
{
    std::string out = "t_ms,x_mm,y_mm\n";
    char buf[96];
    for (const auto& s : trace.samples) {
        if (s.robot_id != robot) continue;
        std::snprintf(buf, sizeof buf, "%lld,%.3f,%.3f\n", static_cast<long long>(s.t_ms), s.x_mm, s.y_mm);
        out += buf;
    }
    return out;
}

} // namespace tactix
