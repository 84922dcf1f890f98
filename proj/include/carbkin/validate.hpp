#pragma once

// Comparison of simulated batch trajectories with experimental time series.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <future>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "batch.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "json_io.hpp"

namespace carbkin {

struct ExperimentRow {
    double t = 0.0;
    std::optional<double> ph;
    std::optional<double> ca_molality;
};

struct ExperimentSeries {
    std::string label;
    std::string source;
    std::vector<ExperimentRow> rows;
    bool has_ph = false;
    bool has_ca = false;
};

/// CSV with a `t_s` column and at least one of `ph`, `ca_molal`. Other
/// columns are ignored; blank cells are missing observations.
inline ExperimentSeries parse_experiment_csv(const std::string& text, const std::string& source)
{
    ExperimentSeries exp;
    exp.source = source;
    exp.label = std::filesystem::path(source).stem().string();

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    int col_t = -1;
    int col_ph = -1;
    int col_ca = -1;
    std::size_t n_columns = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = csv::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') {
            continue;
        }
        const auto cells = csv::split(trimmed);
        if (!header_seen) {
            header_seen = true;
            n_columns = cells.size();
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (cells[i] == "t_s") {
                    col_t = static_cast<int>(i);
                }
                else if (cells[i] == "ph") {
                    col_ph = static_cast<int>(i);
                }
                else if (cells[i] == "ca_molal") {
                    col_ca = static_cast<int>(i);
                }
            }
            if (col_t < 0) {
                throw ParseError(source + ": header has no 't_s' column");
            }
            if (col_ph < 0 && col_ca < 0) {
                throw ParseError(source + ": no observable column (expected 'ph' and/or 'ca_molal')");
            }
            exp.has_ph = col_ph >= 0;
            exp.has_ca = col_ca >= 0;
            continue;
        }
        const std::string where = source + ":" + std::to_string(line_no);
        if (cells.size() != n_columns) {
            throw ParseError(where + ": expected " + std::to_string(n_columns) + " cells, found "
                             + std::to_string(cells.size()));
        }
        auto number = [&](int col, const char* name) -> std::optional<double> {
            if (col < 0 || cells[col].empty()) {
                return std::nullopt;
            }
            const auto v = csv::parse_number(cells[col]);
            if (!v || !std::isfinite(*v)) {
                throw ParseError(where + ": malformed number '" + std::string(cells[col]) + "' in column "
                                 + name);
            }
            return v;
        };
        ExperimentRow row;
        const auto t = number(col_t, "t_s");
        if (!t) {
            throw ParseError(where + ": missing time");
        }
        row.t = *t;
        row.ph = number(col_ph, "ph");
        row.ca_molality = number(col_ca, "ca_molal");
        if (!exp.rows.empty() && !(row.t > exp.rows.back().t)) {
            throw ParseError(where + ": time " + std::string(cells[col_t])
                             + " is not greater than the previous row's");
        }
        exp.rows.push_back(row);
    }
    if (!header_seen) {
        throw ParseError(source + ": empty file");
    }
    return exp;
}

inline ExperimentSeries load_experiment_csv(const std::filesystem::path& path)
{
    return parse_experiment_csv(json_io::read_text_file(path), path.string());
}

enum class Observable { Ph, CaMolal };

constexpr const char* to_string(Observable o)
{
    return o == Observable::Ph ? "ph" : "ca_molal";
}

inline double observable_of(const TimeSeriesRow& row, Observable o)
{
    return o == Observable::Ph ? row.ph : row.ca_molality;
}

inline std::optional<double> observable_of(const ExperimentRow& row, Observable o)
{
    return o == Observable::Ph ? row.ph : row.ca_molality;
}

/// Linear interpolation of a simulated observable at time t.
inline double interpolate(const TimeSeries& sim, double t, Observable o)
{
    const auto& rows = sim.rows;
    if (rows.empty() || t < rows.front().t || t > rows.back().t) {
        throw RangeError("interpolate: time " + csv::format_number(t) + " outside the simulated range");
    }
    const auto it = std::lower_bound(rows.begin(), rows.end(), t,
                                     [](const TimeSeriesRow& r, double x) { return r.t < x; });
    if (it->t == t || it == rows.begin()) {
        return observable_of(*it, o);
    }
    const auto& b = *it;
    const auto& a = *(it - 1);
    const double w = (t - a.t) / (b.t - a.t);
    return observable_of(a, o) + w * (observable_of(b, o) - observable_of(a, o));
}

struct AlignedPoint {
    double t = 0.0;
    double simulated = 0.0;
    double observed = 0.0;

    double residual() const { return simulated - observed; }
};

/// Simulated values at the experimental times that carry an observation.
inline std::vector<AlignedPoint> align(const TimeSeries& sim, const ExperimentSeries& exp, Observable o)
{
    if (sim.rows.empty()) {
        throw RangeError("align: empty simulation");
    }
    std::vector<double> outside;
    for (const auto& row : exp.rows) {
        if (observable_of(row, o) && (row.t < sim.rows.front().t || row.t > sim.rows.back().t)) {
            outside.push_back(row.t);
        }
    }
    if (!outside.empty()) {
        std::string list;
        for (double t : outside) {
            list += (list.empty() ? "" : ", ") + csv::format_number(t);
        }
        throw RangeError("experimental times outside the simulated range ["
                         + csv::format_number(sim.rows.front().t) + ", " + csv::format_number(sim.rows.back().t)
                         + "]: " + list);
    }
    std::vector<AlignedPoint> points;
    for (const auto& row : exp.rows) {
        if (const auto obs = observable_of(row, o)) {
            points.push_back({row.t, interpolate(sim, row.t, o), *obs});
        }
    }
    return points;
}

/// RMSE of the linearly interpolated simulation against the non-missing
/// observations of one column.
inline double aligned_rmse(const TimeSeries& sim, const ExperimentSeries& exp, Observable o)
{
    const auto points = align(sim, exp, o);
    if (points.empty()) {
        throw DomainError(std::string("aligned_rmse: no observations in column ") + to_string(o));
    }
    double sum = 0.0;
    for (const auto& p : points) {
        sum += p.residual() * p.residual();
    }
    return std::sqrt(sum / static_cast<double>(points.size()));
}

/// Saturation time read off the experimental calcium plateau: when the
/// last 10% of the Ca observations lie within 1% of the maximum, the first
/// time Ca reaches 99% of that maximum. nullopt without a plateau.
inline std::optional<double> experiment_saturation_time(const ExperimentSeries& exp)
{
    std::vector<const ExperimentRow*> ca_rows;
    for (const auto& row : exp.rows) {
        if (row.ca_molality) {
            ca_rows.push_back(&row);
        }
    }
    if (ca_rows.size() < 2) {
        return std::nullopt;
    }
    double max_ca = 0.0;
    for (const auto* r : ca_rows) {
        max_ca = std::max(max_ca, *r->ca_molality);
    }
    if (!(max_ca > 0.0)) {
        return std::nullopt;
    }
    const std::size_t tail = std::max<std::size_t>(1, (ca_rows.size() + 9) / 10);
    for (std::size_t i = ca_rows.size() - tail; i < ca_rows.size(); ++i) {
        if (*ca_rows[i]->ca_molality < 0.99 * max_ca) {
            return std::nullopt;
        }
    }
    for (const auto* r : ca_rows) {
        if (*r->ca_molality >= 0.99 * max_ca) {
            return r->t;
        }
    }
    return std::nullopt;
}

struct LegReport {
    CarbonateBasis basis = CarbonateBasis::CarbonicAcidActivity;
    TimeSeries series;
    std::optional<double> rmse_ph;
    std::optional<double> rmse_ca;
    double time_to_saturation = 0.0; // s
    std::vector<AlignedPoint> aligned_ph;
    std::vector<AlignedPoint> aligned_ca;
};

struct ComparisonReport {
    LegReport reference; // numerator leg of the ratio (h2co3_activity in compare_conventions)
    LegReport other;     // denominator leg (p_co2)
    double timescale_ratio = 0.0; // t_sat(reference) / t_sat(other)
    std::optional<double> experiment_saturation_time;

    /// Every populated metric is finite and the ratio positive.
    bool complete() const
    {
        auto finite = [](const std::optional<double>& v) { return !v || std::isfinite(*v); };
        for (const LegReport* leg : {&reference, &other}) {
            if (!finite(leg->rmse_ph) || !finite(leg->rmse_ca) || !std::isfinite(leg->time_to_saturation)) {
                return false;
            }
            if ((leg->rmse_ph && *leg->rmse_ph < 0.0) || (leg->rmse_ca && *leg->rmse_ca < 0.0)) {
                return false;
            }
        }
        return std::isfinite(timescale_ratio) && timescale_ratio > 0.0 && finite(experiment_saturation_time);
    }
};

namespace detail {

inline LegReport run_leg(BatchConfig config, CarbonateBasis basis, const ExperimentSeries& exp)
{
    config.convention_override = basis;
    LegReport leg;
    leg.basis = basis;
    leg.series = integrate_batch(config);
    leg.time_to_saturation = time_to_saturation(leg.series);
    if (exp.has_ph) {
        leg.aligned_ph = align(leg.series, exp, Observable::Ph);
        if (!leg.aligned_ph.empty()) {
            leg.rmse_ph = aligned_rmse(leg.series, exp, Observable::Ph);
        }
    }
    if (exp.has_ca) {
        leg.aligned_ca = align(leg.series, exp, Observable::CaMolal);
        if (!leg.aligned_ca.empty()) {
            leg.rmse_ca = aligned_rmse(leg.series, exp, Observable::CaMolal);
        }
    }
    return leg;
}

} // namespace detail

/// Runs the config under two carbonate bases (everything else identical)
/// and compares both against the experiment. The legs run concurrently.
inline ComparisonReport compare_bases(const BatchConfig& config, const ExperimentSeries& exp,
                                      CarbonateBasis reference, CarbonateBasis other)
{
    auto other_leg = std::async(std::launch::async, [&] { return detail::run_leg(config, other, exp); });
    ComparisonReport report;
    report.reference = detail::run_leg(config, reference, exp);
    report.other = other_leg.get();
    report.timescale_ratio = report.reference.time_to_saturation / report.other.time_to_saturation;
    report.experiment_saturation_time = experiment_saturation_time(exp);
    if (!report.complete()) {
        throw DomainError("compare_conventions: report has non-finite or missing metrics");
    }
    return report;
}

/// Corrected (a_H2CO3*) basis against the P(CO2) basis; the ratio is
/// t_sat(h2co3_activity) / t_sat(p_co2).
inline ComparisonReport compare_conventions(const BatchConfig& config, const ExperimentSeries& exp)
{
    return compare_bases(config, exp, CarbonateBasis::CarbonicAcidActivity, CarbonateBasis::PartialPressureCO2);
}

inline void write_report_csv(const ComparisonReport& report, std::ostream& out)
{
    out << "metric,value\n";
    auto line = [&out](const std::string& name, const std::optional<double>& v) {
        if (v) {
            out << name << ',' << csv::format_number(*v) << '\n';
        }
    };
    for (const LegReport* leg : {&report.reference, &report.other}) {
        const std::string suffix = "_" + std::string(to_string(leg->basis));
        line("rmse_ph" + suffix, leg->rmse_ph);
        line("rmse_ca" + suffix, leg->rmse_ca);
        line("t_sat_s" + suffix, leg->time_to_saturation);
    }
    line("timescale_ratio", report.timescale_ratio);
    line("t_sat_s_experiment", report.experiment_saturation_time);
    if (report.experiment_saturation_time) {
        for (const LegReport* leg : {&report.reference, &report.other}) {
            line("ratio_experiment_over_sim_" + std::string(to_string(leg->basis)),
                 *report.experiment_saturation_time / leg->time_to_saturation);
        }
    }
}

inline constexpr const char* kAlignedCsvHeader = "t_s,sim_ph,exp_ph,sim_ca,exp_ca";

/// One row per experimental time; cells without an observation stay blank.
inline void write_aligned_csv(const LegReport& leg, const ExperimentSeries& exp, std::ostream& out)
{
    out << kAlignedCsvHeader << '\n';
    for (const auto& row : exp.rows) {
        out << csv::format_number(row.t) << ',';
        if (row.ph) {
            out << csv::format_number(interpolate(leg.series, row.t, Observable::Ph)) << ','
                << csv::format_number(*row.ph);
        }
        else {
            out << ',';
        }
        out << ',';
        if (row.ca_molality) {
            out << csv::format_number(interpolate(leg.series, row.t, Observable::CaMolal)) << ','
                << csv::format_number(*row.ca_molality);
        }
        else {
            out << ',';
        }
        out << '\n';
    }
}

} // namespace carbkin
