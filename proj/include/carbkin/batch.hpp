#pragma once

// Batch calcite-dissolution reactor: the mineral reaction is the only
// kinetic process, the aqueous phase is re-speciated at every right-hand
// side evaluation (instantaneous equilibrium).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "chem.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "json_io.hpp"
#include "kinetics.hpp"
#include "ode.hpp"
#include "ratedb.hpp"

namespace carbkin {

enum class RateModel { Palandri, PWP };
enum class SystemMode { OpenFixedPCO2, Closed };
enum class AreaModel { Constant, TwoThirdsPower };

struct BatchConfig {
    AqueousModel model;
    std::string mineral_name = "calcite";
    MineralEntry mineral;
    RateModel rate_model = RateModel::Palandri;
    std::optional<CarbonateBasis> convention_override;
    double temperature = kReferenceTemperature; // K
    double p_co2 = 0.97;                        // atm
    SystemMode system = SystemMode::OpenFixedPCO2;
    double water_mass = 1.0;            // kg
    double initial_mineral_moles = 0.0; // mol
    double surface_area_m2 = 0.0;       // A0
    AreaModel area_model = AreaModel::Constant;
    double initial_ca_molal = 0.0;
    /// Closed mode only; defaults to the carbon of the open-system solution
    /// at p_co2 and initial_ca_molal.
    std::optional<double> initial_carbon_molal;
    double t_end = 0.0;           // s
    double output_interval = 0.0; // s
    double rtol = 1e-8;
    double atol = 1e-12;

    CarbonateBasis effective_basis() const
    {
        return convention_override.value_or(mineral.palandri.carbonate_basis);
    }

    /// Aqueous model with the mineral's own solubility product.
    AqueousModel effective_model() const
    {
        AqueousModel m = model;
        m.log_ksp = mineral.log_ksp;
        return m;
    }

    void validate() const
    {
        model.validate();
        mineral.palandri.validate();
        if (std::abs(temperature - model.temperature) > 1e-9) {
            throw DomainError("BatchConfig: temperature differs from the aqueous model temperature; "
                              "supply a model file for that temperature");
        }
        if (!(p_co2 > 0.0)) {
            throw DomainError("BatchConfig: p_co2 must be positive");
        }
        if (!(water_mass > 0.0)) {
            throw DomainError("BatchConfig: water_mass must be positive");
        }
        if (!(initial_mineral_moles >= 0.0)) {
            throw DomainError("BatchConfig: initial_mineral_moles must be non-negative");
        }
        if (!(surface_area_m2 >= 0.0)) {
            throw DomainError("BatchConfig: surface_area_m2 must be non-negative");
        }
        if (!(initial_ca_molal >= 0.0) || (initial_carbon_molal && !(*initial_carbon_molal >= 0.0))) {
            throw DomainError("BatchConfig: initial solute totals must be non-negative");
        }
        if (!(t_end > 0.0) || !(output_interval > 0.0)) {
            throw DomainError("BatchConfig: t_end and output_interval must be positive");
        }
        if (!(rtol > 0.0) || !(atol > 0.0)) {
            throw DomainError("BatchConfig: ODE tolerances must be positive");
        }
        if (rate_model == RateModel::PWP && !mineral.pwp) {
            throw DomainError("BatchConfig: PWP rate model needs 'pwp' coefficients for " + mineral_name);
        }
    }
};

/// Reactive surface area at the current mineral amount.
inline double surface_area(const BatchConfig& config, double mineral_moles)
{
    if (!(mineral_moles >= 0.0)) {
        throw DomainError("surface_area: mineral_moles must be non-negative");
    }
    if (mineral_moles == 0.0) {
        return 0.0;
    }
    switch (config.area_model) {
    case AreaModel::Constant:
        return config.surface_area_m2;
    case AreaModel::TwoThirdsPower:
        if (config.initial_mineral_moles == 0.0) {
            return 0.0;
        }
        return config.surface_area_m2 * std::cbrt(std::pow(mineral_moles / config.initial_mineral_moles, 2.0));
    }
    return 0.0;
}

/// Dissolved calcium and carbon, mol/kg water. In open mode carbon is set
/// by the gas and `carbon` is not a state variable.
struct SoluteTotals {
    double ca = 0.0;
    double carbon = 0.0;
};

struct RhsEvaluation {
    double dmineral_dt = 0.0; // mol/s
    double dca_dt = 0.0;      // mol/kg/s
    double dcarbon_dt = 0.0;  // mol/kg/s, closed mode only
    double rate = 0.0;        // mol/s, negative while dissolving
    double area = 0.0;        // m2
    double p_co2 = 0.0;       // atm, the basis value used for P(CO2)
    PalandriTerms terms;      // Palandri model only, mol m-2 s-1
    SpeciationState state;
};

/// Config with the per-run constants (k4 closure, rate parameters)
/// evaluated once.
class BatchSystem {
public:
    explicit BatchSystem(BatchConfig config)
        : config_(std::move(config))
    {
        config_.validate();
        model_ = config_.effective_model();
        params_ = config_.mineral.palandri;
        params_.carbonate_basis = config_.effective_basis();
        if (config_.rate_model == RateModel::PWP) {
            pwp_ = pwp_rate_constants(model_, *config_.mineral.pwp, config_.p_co2);
        }
    }

    const BatchConfig& config() const noexcept { return config_; }
    const AqueousModel& model() const noexcept { return model_; }
    const RateParameterSet& rate_parameters() const noexcept { return params_; }
    const PwpRateConstants& pwp_constants() const noexcept { return pwp_; }

    SpeciationState speciate(const SoluteTotals& totals) const
    {
        if (config_.system == SystemMode::OpenFixedPCO2) {
            return speciate_open(model_, config_.p_co2, totals.ca);
        }
        return speciate_closed(model_, totals.carbon, totals.ca);
    }

    /// Solute totals at t = 0.
    SoluteTotals initial_totals() const
    {
        SoluteTotals totals{config_.initial_ca_molal, 0.0};
        if (config_.system == SystemMode::Closed) {
            totals.carbon = config_.initial_carbon_molal.value_or(
                speciate_open(model_, config_.p_co2, config_.initial_ca_molal).carbon_total());
        }
        else {
            totals.carbon = speciate_open(model_, config_.p_co2, config_.initial_ca_molal).carbon_total();
        }
        return totals;
    }

    RhsEvaluation rhs(double mineral_moles, const SoluteTotals& totals) const
    {
        RhsEvaluation out;
        out.state = speciate(totals);
        out.area = surface_area(config_, std::max(mineral_moles, 0.0));
        out.p_co2 = config_.system == SystemMode::OpenFixedPCO2
                        ? config_.p_co2
                        : out.state.activities[Species::H2CO3] / std::pow(10.0, model_.log_kh);
        if (config_.rate_model == RateModel::Palandri) {
            out.terms = palandri_terms(params_, out.state, out.p_co2, config_.temperature);
            out.rate = -out.area * out.terms.sum();
        }
        else {
            out.rate = -out.area * pwp_net_rate(pwp_, out.state);
        }
        if (out.rate == 0.0) {
            out.rate = 0.0; // no negative zero in the output
        }
        out.dmineral_dt = out.rate;
        out.dca_dt = -out.rate / config_.water_mass;
        out.dcarbon_dt = config_.system == SystemMode::Closed ? -out.rate / config_.water_mass : 0.0;
        return out;
    }

private:
    BatchConfig config_;
    AqueousModel model_;
    RateParameterSet params_;
    PwpRateConstants pwp_;
};

/// Time derivatives of (mineral moles, solute totals) at one state.
inline RhsEvaluation step_rhs(const BatchConfig& config, double mineral_moles, const SoluteTotals& totals)
{
    if (!(mineral_moles >= 0.0)) {
        throw DomainError("step_rhs: mineral_moles must be non-negative");
    }
    return BatchSystem(config).rhs(mineral_moles, totals);
}

struct TimeSeriesRow {
    double t = 0.0;             // s
    double mineral_moles = 0.0; // mol
    double ca_molality = 0.0;   // mol/kg
    double ph = 0.0;
    double a_h2co3 = 0.0;
    double omega = 0.0;
    double rate = 0.0;           // mol/s
    double carbon_total = 0.0;   // mol/kg, dissolved
    double charge_residual = 0.0; // mol/kg
};

struct TimeSeries {
    std::vector<TimeSeriesRow> rows;
    /// True when integration stopped because |1 - Omega| < 1e-6 held for
    /// 10 accepted steps; later output rows repeat that final state.
    bool equilibrated = false;
    double stop_time = 0.0;
};

inline constexpr double kEquilibriumBand = 1e-6;
inline constexpr int kEquilibriumSteps = 10;

inline TimeSeries integrate_batch(const BatchConfig& config)
{
    const BatchSystem system(config);
    const SoluteTotals start = system.initial_totals();

    // State: mineral moles, calcium total, carbon total (constant in open mode).
    using Y = ode::State<3>;
    auto totals_of = [&](const Y& y) {
        SoluteTotals s{y[1], y[2]};
        if (config.system == SystemMode::OpenFixedPCO2) {
            s.carbon = 0.0;
        }
        return s;
    };
    auto evaluate = [&](const Y& y) { return system.rhs(std::max(y[0], 0.0), totals_of(y)); };

    auto rhs = [&](double, const Y& y) -> Y {
        try {
            const RhsEvaluation e = evaluate(y);
            return {e.dmineral_dt, e.dca_dt, e.dcarbon_dt};
        }
        catch (const ConvergenceError& e) {
            throw ode::RhsFailure(e.what());
        }
        catch (const DomainError& e) {
            throw ode::RhsFailure(e.what());
        }
    };

    TimeSeries series;
    auto make_row = [&](double t, const Y& y) {
        const RhsEvaluation e = evaluate(y);
        TimeSeriesRow row;
        row.t = t;
        row.mineral_moles = std::max(y[0], 0.0);
        row.ca_molality = y[1];
        row.ph = e.state.ph;
        row.a_h2co3 = e.state.activities[Species::H2CO3];
        row.omega = e.state.omega;
        row.rate = e.rate;
        row.carbon_total = e.state.carbon_total();
        row.charge_residual = e.state.charge_residual();
        return row;
    };

    // Output grid: multiples of output_interval, plus t_end if off-grid.
    std::vector<double> grid;
    const auto count = static_cast<long>(std::floor(config.t_end / config.output_interval + 1e-9));
    for (long k = 0; k <= count; ++k) {
        grid.push_back(std::min(static_cast<double>(k) * config.output_interval, config.t_end));
    }
    if (config.t_end - grid.back() > 1e-9 * config.t_end) {
        grid.push_back(config.t_end);
    }

    const Y y0{config.initial_mineral_moles, start.ca, start.carbon};
    series.rows.push_back(make_row(0.0, y0));
    std::size_t next = 1;

    Y y_last = y0;
    double t_last = 0.0;
    int steps_in_band = 0;

    ode::Options opt;
    opt.rtol = config.rtol;
    opt.atol = config.atol;
    opt.max_step = config.output_interval * 50.0;

    auto observer = [&](ode::Step<3>& step) {
        if (step.y_new[0] < 0.0) {
            // Mineral exhausted inside the step: bisect the interpolant for
            // the crossing and end the step there.
            double lo = step.t_old;
            double hi = step.t_new;
            for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++i) {
                const double mid = 0.5 * (lo + hi);
                (step.at(mid)[0] > 0.0 ? lo : hi) = mid;
            }
            Y y_event = step.at(hi);
            y_event[0] = 0.0;
            step.truncate(hi, y_event);
        }
        while (next < grid.size() && grid[next] <= step.t_new) {
            Y y = grid[next] == step.t_new ? step.y_new : step.at(grid[next]);
            series.rows.push_back(make_row(grid[next], y));
            ++next;
        }
        t_last = step.t_new;
        y_last = step.y_new;
        const double omega = evaluate(step.y_new).state.omega;
        steps_in_band = std::abs(1.0 - omega) < kEquilibriumBand ? steps_in_band + 1 : 0;
        return steps_in_band < kEquilibriumSteps;
    };

    try {
        ode::integrate<3>(rhs, 0.0, y0, config.t_end, opt, observer);
    }
    catch (const ode::IntegrationError<3>& e) {
        throw ode::IntegrationError<3>(std::string("integrate_batch: ") + e.what(), e.last_time(),
                                       e.last_state());
    }

    series.stop_time = t_last;
    if (next < grid.size()) {
        series.equilibrated = true;
        for (; next < grid.size(); ++next) {
            series.rows.push_back(make_row(grid[next], y_last));
        }
    }
    return series;
}

/// Signals that Omega never reached the threshold.
class NotReachedError : public Error {
public:
    NotReachedError(double threshold, double max_omega)
        : Error("saturation threshold " + std::to_string(threshold) + " not reached (max Omega "
                + std::to_string(max_omega) + ")")
        , max_omega_(max_omega)
    {}

    double max_omega() const noexcept { return max_omega_; }

private:
    double max_omega_;
};

inline constexpr double kSaturationThreshold = 0.99;

/// First time Omega >= threshold, interpolated linearly between rows.
inline double time_to_saturation(const TimeSeries& series, double threshold = kSaturationThreshold)
{
    if (series.rows.empty()) {
        throw DomainError("time_to_saturation: empty series");
    }
    const auto& rows = series.rows;
    if (rows.front().omega >= threshold) {
        return rows.front().t;
    }
    double max_omega = rows.front().omega;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        max_omega = std::max(max_omega, rows[i].omega);
        if (rows[i].omega >= threshold) {
            const auto& a = rows[i - 1];
            const auto& b = rows[i];
            return a.t + (threshold - a.omega) / (b.omega - a.omega) * (b.t - a.t);
        }
    }
    throw NotReachedError(threshold, max_omega);
}

inline constexpr const char* kSeriesCsvHeader = "t_s,mineral_mol,ca_molal,ph,a_h2co3,omega,rate_mol_s";

inline void write_series_csv(const TimeSeries& series, std::ostream& out)
{
    out << kSeriesCsvHeader << '\n';
    for (const auto& r : series.rows) {
        out << csv::format_number(r.t) << ',' << csv::format_number(r.mineral_moles) << ','
            << csv::format_number(r.ca_molality) << ',' << csv::format_number(r.ph) << ','
            << csv::format_number(r.a_h2co3) << ',' << csv::format_number(r.omega) << ','
            << csv::format_number(r.rate) << '\n';
    }
}

/// Batch-config schema (JSON, comments allowed). Keys mirror BatchConfig:
///
///   mineral                 name in the kinetics database (default "calcite")
///   model | model_file      inline aqueous-model object or path (relative
///                           to the config file); default: built-in 25 degC
///   rate_model              "palandri" | "pwp"
///   carbonate_basis_override  optional "h2co3_activity" | "p_co2"
///   temperature_K, p_co2_atm
///   system                  "open_fixed_pco2" | "closed"
///   water_mass_kg, initial_mineral_mol, surface_area_m2
///   area_model              "constant" | "two_thirds_power"
///   initial_ca_molal, initial_carbon_molal (closed only)
///   t_end_s, output_interval_s, rtol, atol
inline BatchConfig batch_config_from_json(const json_io::Json& json, const std::string& where,
                                          const KineticsDatabase& db,
                                          const std::filesystem::path& base_dir = {})
{
    json_io::ObjectReader r(json, where);
    r.expect_only({"mineral", "model", "model_file", "rate_model", "carbonate_basis_override",
                   "temperature_K", "p_co2_atm", "system", "water_mass_kg", "initial_mineral_mol",
                   "surface_area_m2", "area_model", "initial_ca_molal", "initial_carbon_molal", "t_end_s",
                   "output_interval_s", "rtol", "atol"});
    BatchConfig c;
    if (r.has("model") && r.has("model_file")) {
        throw ParseError(where + ": give either 'model' or 'model_file', not both");
    }
    if (r.has("model")) {
        c.model = model_from_json(r.raw("model"), where + ".model");
    }
    else if (r.has("model_file")) {
        c.model = load_model_file(base_dir / r.string("model_file"));
    }
    c.mineral_name = r.string_or("mineral", "calcite");
    c.mineral = db.at(c.mineral_name);

    const std::string rate_model = r.string_or("rate_model", "palandri");
    if (rate_model == "palandri") {
        c.rate_model = RateModel::Palandri;
    }
    else if (rate_model == "pwp") {
        c.rate_model = RateModel::PWP;
    }
    else {
        throw ParseError(where + ".rate_model: expected 'palandri' or 'pwp', got '" + rate_model + "'");
    }
    if (r.has("carbonate_basis_override")) {
        const std::string text = r.string("carbonate_basis_override");
        c.convention_override = parse_carbonate_basis(text);
        if (!c.convention_override) {
            throw ParseError(where + ".carbonate_basis_override: unknown basis '" + text + "'");
        }
    }
    c.temperature = r.number_or("temperature_K", c.model.temperature);
    c.p_co2 = r.number("p_co2_atm");
    const std::string system = r.string_or("system", "open_fixed_pco2");
    if (system == "open_fixed_pco2") {
        c.system = SystemMode::OpenFixedPCO2;
    }
    else if (system == "closed") {
        c.system = SystemMode::Closed;
    }
    else {
        throw ParseError(where + ".system: expected 'open_fixed_pco2' or 'closed', got '" + system + "'");
    }
    c.water_mass = r.number("water_mass_kg");
    c.initial_mineral_moles = r.number("initial_mineral_mol");
    c.surface_area_m2 = r.number("surface_area_m2");
    const std::string area = r.string_or("area_model", "constant");
    if (area == "constant") {
        c.area_model = AreaModel::Constant;
    }
    else if (area == "two_thirds_power") {
        c.area_model = AreaModel::TwoThirdsPower;
    }
    else {
        throw ParseError(where + ".area_model: expected 'constant' or 'two_thirds_power', got '" + area + "'");
    }
    c.initial_ca_molal = r.number_or("initial_ca_molal", 0.0);
    c.initial_carbon_molal = r.optional_number("initial_carbon_molal");
    c.t_end = r.number("t_end_s");
    c.output_interval = r.number("output_interval_s");
    c.rtol = r.number_or("rtol", c.rtol);
    c.atol = r.number_or("atol", c.atol);
    try {
        c.validate();
    }
    catch (const DomainError& e) {
        throw ParseError(where + ": " + e.what());
    }
    return c;
}

inline BatchConfig load_batch_config(const std::filesystem::path& path, const KineticsDatabase& db)
{
    return batch_config_from_json(json_io::parse_file(path), path.string(), db, path.parent_path());
}

} // namespace carbkin
