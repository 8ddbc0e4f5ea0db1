#pragma once

#include "tactix/errors.hpp"
#include "tactix/protocol.hpp"
#include "tactix/trace.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tactix {

/// Both robots' x/y on a shared uniform time grid, plus the zone each robot
/// occupied at every grid point (last sample at or before it).
struct AlignedSeries {
    std::vector<std::int64_t> t_ms;
    Eigen::VectorXd x1, y1, x2, y2;
    std::vector<std::string> zone1, zone2;
    double hz = 0;

    Eigen::Index size() const { return x1.size(); }
};

/// Linear interpolation of each robot's x and y onto a grid at hz over the
/// overlap of the two robots' time spans. Throws AnalysisError when a robot is
/// missing, has fewer than 2 samples, or the spans do not overlap.
AlignedSeries resample(const Trace& trace, double hz);

/// Pearson product-moment coefficient. Throws AnalysisError for mismatched
/// lengths, fewer than two samples, or a zero-variance series.
template <typename DerivedA, typename DerivedB>
double pearson(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b)
{
    if (a.size() != b.size()) throw AnalysisError("pearson: series lengths differ");
    if (a.size() < 2) throw AnalysisError("pearson: need at least two samples");
    const Eigen::ArrayXd ca = a.derived().template cast<double>().array() - a.derived().template cast<double>().mean();
    const Eigen::ArrayXd cb = b.derived().template cast<double>().array() - b.derived().template cast<double>().mean();
    const double saa = ca.square().sum();
    const double sbb = cb.square().sum();
    if (!(saa > 0) || !(sbb > 0)) throw AnalysisError("pearson: zero variance, correlation undefined");
    const double r = (ca * cb).sum() / std::sqrt(saa * sbb);
    return std::clamp(r, -1.0, 1.0);
}

/// Two-sided permutation p-value of |r| against n_perm seeded shuffles of b:
/// (1 + #{|r_perm| >= threshold}) / (n_perm + 1).
double perm_pvalue_at(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                      double threshold, int n_perm, std::uint64_t seed);

/// perm_pvalue_at with threshold = |pearson(a, b)|. Throws AnalysisError for
/// n_perm < 1 and for the pearson preconditions.
double perm_pvalue(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                   int n_perm = 10000, std::uint64_t seed = 0);

struct CorrelationReport {
    std::array<std::string, 4> dims{"x1", "y1", "x2", "y2"};
    Eigen::Matrix4d r = Eigen::Matrix4d::Identity();
    Eigen::Matrix4d p = Eigen::Matrix4d::Ones();
    Eigen::Index n_samples = 0;
    double resample_hz = 0;
    int n_perm = 0;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

/// Pearson r and permutation p for every pair of x1, y1, x2, y2.
CorrelationReport correlation_matrix(const Trace& trace, double hz = 10, int n_perm = 10000, std::uint64_t seed = 0);
CorrelationReport correlation_matrix(const AlignedSeries& series, int n_perm = 10000, std::uint64_t seed = 0);

/// Fraction of grid points where both robots occupy the same zone.
double tandem_fraction(const Trace& trace, double hz = 10);
double tandem_fraction(const AlignedSeries& series);

/// Seconds each robot spent per zone, attributing each inter-sample interval
/// to the zone of its opening sample.
std::map<Party, std::map<std::string, double>> zone_dwell_s(const Trace& trace);

struct SummaryOptions {
    double hz = 10;
    int n_perm = 10000;
    std::uint64_t seed = 0;
};

struct SessionSummary {
    std::optional<double> quiz_duration_s;
    std::optional<int> score;
    std::optional<int> total;
    std::map<Party, std::map<std::string, double>> dwell_s;
    std::optional<double> tandem_fraction;
    std::optional<CorrelationReport> correlation;
    std::optional<double> mean_distance_mm;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

/// Evaluation report for one session. Missing pieces degrade to warnings.
SessionSummary session_summary(const Trace& trace, std::span<const Envelope> events, const SummaryOptions& options = {});

/// Mean inter-robot distance over the aligned grid.
double mean_distance_mm(const AlignedSeries& series);

/// Plot-ready "t_ms,x_mm,y_mm" rows for one robot.
std::string plot_csv(const Trace& trace, Party robot);

} // namespace tactix
