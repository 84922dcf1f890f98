#pragma once

// Aqueous chemistry of the CO2-H2O-CaCO3 system: Davies activity model,
// charge-balance speciation (open, closed, calcite-saturated) and the
// calcite saturation index.

#include <array>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>

#include "errors.hpp"
#include "json_io.hpp"

namespace carbkin {

inline constexpr double kLn10 = 2.302585092994045684;
inline constexpr double kReferenceTemperature = 298.15; // K

enum class Species : std::size_t { H, OH, H2CO3, HCO3, CO3, Ca };

inline constexpr std::size_t kSpeciesCount = 6;

inline constexpr std::array<Species, kSpeciesCount> kAllSpecies{
    Species::H, Species::OH, Species::H2CO3, Species::HCO3, Species::CO3, Species::Ca};

constexpr int charge(Species s)
{
    switch (s) {
    case Species::H: return 1;
    case Species::OH: return -1;
    case Species::H2CO3: return 0;
    case Species::HCO3: return -1;
    case Species::CO3: return -2;
    case Species::Ca: return 2;
    }
    return 0;
}

constexpr std::string_view species_name(Species s)
{
    switch (s) {
    case Species::H: return "H+";
    case Species::OH: return "OH-";
    case Species::H2CO3: return "H2CO3*";
    case Species::HCO3: return "HCO3-";
    case Species::CO3: return "CO3-2";
    case Species::Ca: return "Ca+2";
    }
    return "?";
}

/// Per-species quantity (molality, activity or activity coefficient),
/// indexed by Species.
class SpeciesArray {
public:
    constexpr SpeciesArray() = default;

    constexpr double& operator[](Species s) { return values_[static_cast<std::size_t>(s)]; }
    constexpr double operator[](Species s) const { return values_[static_cast<std::size_t>(s)]; }

    static constexpr SpeciesArray filled(double value)
    {
        SpeciesArray out;
        out.values_.fill(value);
        return out;
    }

    friend constexpr bool operator==(const SpeciesArray&, const SpeciesArray&) = default;

private:
    std::array<double, kSpeciesCount> values_{};
};

/// Equilibrium constants and Davies parameter at one temperature.
struct AqueousModel {
    double temperature = kReferenceTemperature; // K
    double log_k1 = -6.35;   // H2CO3* = H+ + HCO3-
    double log_k2 = -10.33;  // HCO3- = H+ + CO3-2
    double log_kw = -14.00;  // H2O = H+ + OH-
    double log_kh = -1.47;   // a_H2CO3* = KH * P(CO2), P in atm
    double log_ksp = -8.48;  // CaCO3 = Ca+2 + CO3-2
    double debye_a = 0.5092; // (kg/mol)^0.5

    /// Throws DomainError when an invariant is violated.
    void validate() const
    {
        if (!(temperature > 0.0) || !std::isfinite(temperature)) {
            throw DomainError("AqueousModel: temperature must be positive");
        }
        for (double v : {log_k1, log_k2, log_kw, log_kh, log_ksp, debye_a}) {
            if (!std::isfinite(v)) {
                throw DomainError("AqueousModel: constants must be finite");
            }
        }
        if (!(log_k2 < log_k1)) {
            throw DomainError("AqueousModel: log_k2 must be smaller than log_k1");
        }
        if (debye_a < 0.0) {
            throw DomainError("AqueousModel: debye_a must be non-negative");
        }
    }

    friend bool operator==(const AqueousModel&, const AqueousModel&) = default;
};

/// Model-file schema: a JSON object with any of the keys below; absent keys
/// keep the built-in 25 degC defaults.
///
///     { "temperature_K": 298.15, "log_k1": -6.35, "log_k2": -10.33,
///       "log_kw": -14.0, "log_kh": -1.47, "log_ksp": -8.48, "debye_a": 0.5092 }
///
/// A temperature other than 298.15 K requires every log K to be given
/// explicitly: no temperature correlations are built in.
inline AqueousModel model_from_json(const json_io::Json& json, const std::string& where)
{
    json_io::ObjectReader r(json, where);
    r.expect_only({"temperature_K", "log_k1", "log_k2", "log_kw", "log_kh", "log_ksp", "debye_a"});
    AqueousModel m;
    m.temperature = r.number_or("temperature_K", m.temperature);
    if (std::abs(m.temperature - kReferenceTemperature) > 1e-9) {
        for (const char* key : {"log_k1", "log_k2", "log_kw", "log_kh", "log_ksp", "debye_a"}) {
            if (!r.has(key)) {
                throw ParseError(where + ": temperature differs from 298.15 K, so '" + key
                                 + "' must be given explicitly");
            }
        }
    }
    m.log_k1 = r.number_or("log_k1", m.log_k1);
    m.log_k2 = r.number_or("log_k2", m.log_k2);
    m.log_kw = r.number_or("log_kw", m.log_kw);
    m.log_kh = r.number_or("log_kh", m.log_kh);
    m.log_ksp = r.number_or("log_ksp", m.log_ksp);
    m.debye_a = r.number_or("debye_a", m.debye_a);
    try {
        m.validate();
    }
    catch (const DomainError& e) {
        throw ParseError(where + ": " + e.what());
    }
    return m;
}

inline AqueousModel load_model_file(const std::filesystem::path& path)
{
    return model_from_json(json_io::parse_file(path), path.string());
}

inline json_io::Json model_to_json(const AqueousModel& m)
{
    return json_io::Json{{"temperature_K", m.temperature}, {"log_k1", m.log_k1}, {"log_k2", m.log_k2},
                         {"log_kw", m.log_kw},             {"log_kh", m.log_kh}, {"log_ksp", m.log_ksp},
                         {"debye_a", m.debye_a}};
}

/// Davies activity coefficient,
/// log10 gamma = -A z^2 (sqrt(I)/(1+sqrt(I)) - 0.3 I). Neutral species get 1.
inline double activity_coefficient(int charge_number, double ionic_strength, double debye_a)
{
    if (!(ionic_strength >= 0.0)) {
        throw DomainError("activity_coefficient: ionic strength must be non-negative");
    }
    if (charge_number == 0) {
        return 1.0;
    }
    const double s = std::sqrt(ionic_strength);
    const double z2 = static_cast<double>(charge_number * charge_number);
    return std::pow(10.0, -debye_a * z2 * (s / (1.0 + s) - 0.3 * ionic_strength));
}

/// I = 1/2 sum z^2 m over the charged species.
inline double ionic_strength(const SpeciesArray& molalities)
{
    double sum = 0.0;
    for (Species s : kAllSpecies) {
        const double m = molalities[s];
        if (!(m >= 0.0)) {
            throw DomainError("ionic_strength: molality of " + std::string(species_name(s))
                              + " is negative");
        }
        const int z = charge(s);
        sum += z * z * m;
    }
    return 0.5 * sum;
}

/// Omega = a_Ca * a_CO3 / Ksp.
inline double saturation_index(double a_ca, double a_co3, double log_ksp)
{
    if (!(a_ca >= 0.0) || !(a_co3 >= 0.0)) {
        throw DomainError("saturation_index: activities must be non-negative");
    }
    return a_ca * a_co3 / std::pow(10.0, log_ksp);
}

inline double charge_residual(const SpeciesArray& molalities)
{
    double sum = 0.0;
    for (Species s : kAllSpecies) {
        sum += charge(s) * molalities[s];
    }
    return sum;
}

struct SpeciationState {
    SpeciesArray molalities;
    SpeciesArray activities;
    SpeciesArray gammas;
    double ionic_strength = 0.0;
    double ph = 7.0;
    double omega = 0.0;

    double carbon_total() const
    {
        return molalities[Species::H2CO3] + molalities[Species::HCO3] + molalities[Species::CO3];
    }

    double charge_residual() const { return carbkin::charge_residual(molalities); }
};

namespace detail {

inline SpeciesArray davies_gammas(double ionic_strength, double debye_a)
{
    SpeciesArray g;
    for (Species s : kAllSpecies) {
        g[s] = activity_coefficient(charge(s), ionic_strength, debye_a);
    }
    return g;
}

/// Composition at a trial log10 a_H+ for fixed gammas, with the derivative
/// of the charge residual with respect to log10 a_H+.
struct Trial {
    SpeciesArray molalities;
    SpeciesArray activities;
    double residual = 0.0;
    double slope = 0.0;
};

inline constexpr double kChargeTolerance = 1e-12; // mol/kg
inline constexpr double kGammaTolerance = 1e-10;
inline constexpr int kMaxIterations = 100;

/// Solves charge balance for log10 a_H+ with gammas frozen. The residual is
/// strictly increasing in log10 a_H+ for every constraint used here, so a
/// Newton step is kept inside a shrinking sign-change bracket and replaced
/// by bisection whenever it would leave it.
template <class Compose>
Trial newton_on_log_ah(Compose&& compose, double& log_ah)
{
    double lo = -20.0;
    double hi = 2.0;
    Trial t_lo = compose(lo);
    Trial t_hi = compose(hi);
    for (int expand = 0; t_lo.residual > 0.0 && expand < 20; ++expand) {
        lo -= 10.0;
        t_lo = compose(lo);
    }
    for (int expand = 0; t_hi.residual < 0.0 && expand < 20; ++expand) {
        hi += 10.0;
        t_hi = compose(hi);
    }
    if (t_lo.residual > 0.0 || t_hi.residual < 0.0) {
        throw ConvergenceError("speciation: could not bracket the charge balance",
                               std::min(std::abs(t_lo.residual), std::abs(t_hi.residual)));
    }

    double x = (log_ah > lo && log_ah < hi) ? log_ah : 0.5 * (lo + hi);
    Trial t = compose(x);
    for (int iter = 0; iter < 4 * kMaxIterations; ++iter) {
        if (std::abs(t.residual) < kChargeTolerance) {
            log_ah = x;
            return t;
        }
        if (t.residual > 0.0) {
            hi = x;
        }
        else {
            lo = x;
        }
        double next = x - t.residual / t.slope;
        if (!(t.slope > 0.0) || !(next > lo && next < hi) || !std::isfinite(next)) {
            next = 0.5 * (lo + hi);
        }
        if (hi - lo < 1e-15 || next == x) {
            // Bracket collapsed to round-off; the residual here is the best
            // this precision allows.
            log_ah = x;
            return t;
        }
        x = next;
        t = compose(x);
    }
    throw ConvergenceError("speciation: Newton iteration did not converge", t.residual);
}

/// Outer fixed point on the activity coefficients around the inner Newton
/// solve. `make_compose(gammas)` returns the composition callable for
/// frozen gammas.
template <class MakeCompose>
SpeciationState solve_with_gamma_iteration(const AqueousModel& model, MakeCompose&& make_compose,
                                           double log_ah_guess)
{
    model.validate();
    SpeciesArray gammas = SpeciesArray::filled(1.0);
    double log_ah = log_ah_guess;
    double last_residual = std::numeric_limits<double>::quiet_NaN();
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        auto compose = make_compose(gammas);
        Trial t = newton_on_log_ah(compose, log_ah);
        last_residual = t.residual;
        const double is = ionic_strength(t.molalities);
        const SpeciesArray next = davies_gammas(is, model.debye_a);
        double change = 0.0;
        for (Species s : kAllSpecies) {
            change = std::max(change, std::abs(next[s] - gammas[s]));
        }
        if (change < kGammaTolerance) {
            if (std::abs(t.residual) >= kChargeTolerance) {
                throw ConvergenceError("speciation: charge balance not met", t.residual);
            }
            SpeciationState state;
            state.molalities = t.molalities;
            state.activities = t.activities;
            state.gammas = gammas;
            state.ionic_strength = is;
            state.ph = -log_ah;
            state.omega = saturation_index(t.activities[Species::Ca], t.activities[Species::CO3],
                                           model.log_ksp);
            return state;
        }
        gammas = next;
    }
    throw ConvergenceError("speciation: activity-coefficient iteration did not converge", last_residual);
}

/// Fills molalities from activities and gammas and sums the residual.
inline void finish_trial(Trial& t, const SpeciesArray& gammas)
{
    for (Species s : kAllSpecies) {
        t.molalities[s] = t.activities[s] / gammas[s];
    }
    t.residual = charge_residual(t.molalities);
}

inline constexpr double kDefaultLogAhGuess = -7.0;

} // namespace detail

/// Open system: a_H2CO3* fixed by Henry's law at the given P(CO2), calcium
/// fixed at ca_total, pH from charge balance.
inline SpeciationState speciate_open(const AqueousModel& model, double p_co2, double ca_total,
                                     double log_ah_guess = detail::kDefaultLogAhGuess)
{
    if (!(p_co2 > 0.0) || !std::isfinite(p_co2)) {
        throw DomainError("speciate_open: p_co2 must be positive");
    }
    if (!(ca_total >= 0.0)) {
        throw DomainError("speciate_open: ca_total must be non-negative");
    }
    const double k1 = std::pow(10.0, model.log_k1);
    const double k2 = std::pow(10.0, model.log_k2);
    const double kw = std::pow(10.0, model.log_kw);
    const double a_h2co3 = std::pow(10.0, model.log_kh) * p_co2;

    auto make_compose = [&](const SpeciesArray& g) {
        return [&, g](double log_ah) {
            detail::Trial t;
            const double ah = std::pow(10.0, log_ah);
            t.activities[Species::H] = ah;
            t.activities[Species::OH] = kw / ah;
            t.activities[Species::H2CO3] = a_h2co3;
            t.activities[Species::HCO3] = k1 * a_h2co3 / ah;
            t.activities[Species::CO3] = k2 * t.activities[Species::HCO3] / ah;
            t.activities[Species::Ca] = ca_total * g[Species::Ca];
            detail::finish_trial(t, g);
            t.molalities[Species::Ca] = ca_total;
            t.residual = charge_residual(t.molalities);
            const auto& m = t.molalities;
            t.slope = kLn10
                      * (m[Species::H] + m[Species::OH] + m[Species::HCO3] + 4.0 * m[Species::CO3]);
            return t;
        };
    };
    return detail::solve_with_gamma_iteration(model, make_compose, log_ah_guess);
}

/// Closed system: total dissolved carbon and calcium are fixed. a_H2CO3* is
/// eliminated from the carbon balance for given a_H+, so the Newton solve
/// stays one-dimensional and carbon_total = 0 needs no special case.
inline SpeciationState speciate_closed(const AqueousModel& model, double carbon_total, double ca_total,
                                       double log_ah_guess = detail::kDefaultLogAhGuess)
{
    if (!(carbon_total >= 0.0) || !(ca_total >= 0.0)) {
        throw DomainError("speciate_closed: totals must be non-negative");
    }
    const double k1 = std::pow(10.0, model.log_k1);
    const double k2 = std::pow(10.0, model.log_k2);
    const double kw = std::pow(10.0, model.log_kw);

    auto make_compose = [&](const SpeciesArray& g) {
        return [&, g](double log_ah) {
            detail::Trial t;
            const double ah = std::pow(10.0, log_ah);
            // Molality per unit a_H2CO3* of each carbon species.
            const double u0 = 1.0 / g[Species::H2CO3];
            const double u1 = k1 / (ah * g[Species::HCO3]);
            const double u2 = k1 * k2 / (ah * ah * g[Species::CO3]);
            const double d = u0 + u1 + u2;
            const double a_h2co3 = carbon_total / d;
            t.activities[Species::H] = ah;
            t.activities[Species::OH] = kw / ah;
            t.activities[Species::H2CO3] = a_h2co3;
            t.activities[Species::HCO3] = k1 * a_h2co3 / ah;
            t.activities[Species::CO3] = k2 * t.activities[Species::HCO3] / ah;
            t.activities[Species::Ca] = ca_total * g[Species::Ca];
            detail::finish_trial(t, g);
            // Carbon species from the fractions directly, so the three sum
            // to carbon_total up to one rounding.
            t.molalities[Species::H2CO3] = carbon_total * (u0 / d);
            t.molalities[Species::HCO3] = carbon_total * (u1 / d);
            t.molalities[Species::CO3] = carbon_total * (u2 / d);
            t.molalities[Species::Ca] = ca_total;
            t.residual = charge_residual(t.molalities);
            const auto& m = t.molalities;
            const double q1 = u1 + 2.0 * u2;
            const double dq = carbon_total * ((q1 * q1) - (u1 + 4.0 * u2) * d) / (d * d);
            t.slope = kLn10 * (m[Species::H] + m[Species::OH] - dq);
            return t;
        };
    };
    return detail::solve_with_gamma_iteration(model, make_compose, log_ah_guess);
}

/// Open system in equilibrium with calcite (Omega = 1): P(CO2) fixes
/// a_H2CO3*, Ksp fixes a_Ca from a_CO3, and charge balance closes pH.
inline SpeciationState speciate_calcite_equilibrium(const AqueousModel& model, double p_co2,
                                                    double log_ah_guess = -6.0)
{
    if (!(p_co2 > 0.0) || !std::isfinite(p_co2)) {
        throw DomainError("speciate_calcite_equilibrium: p_co2 must be positive");
    }
    const double k1 = std::pow(10.0, model.log_k1);
    const double k2 = std::pow(10.0, model.log_k2);
    const double kw = std::pow(10.0, model.log_kw);
    const double ksp = std::pow(10.0, model.log_ksp);
    const double a_h2co3 = std::pow(10.0, model.log_kh) * p_co2;

    auto make_compose = [&](const SpeciesArray& g) {
        return [&, g](double log_ah) {
            detail::Trial t;
            const double ah = std::pow(10.0, log_ah);
            t.activities[Species::H] = ah;
            t.activities[Species::OH] = kw / ah;
            t.activities[Species::H2CO3] = a_h2co3;
            t.activities[Species::HCO3] = k1 * a_h2co3 / ah;
            t.activities[Species::CO3] = k2 * t.activities[Species::HCO3] / ah;
            t.activities[Species::Ca] = ksp / t.activities[Species::CO3];
            detail::finish_trial(t, g);
            const auto& m = t.molalities;
            t.slope = kLn10
                      * (m[Species::H] + m[Species::OH] + m[Species::HCO3] + 4.0 * m[Species::CO3]
                         + 4.0 * m[Species::Ca]);
            return t;
        };
    };
    return detail::solve_with_gamma_iteration(model, make_compose, log_ah_guess);
}

} // namespace carbkin
