#pragma once

// Calcite rate laws: the three-mechanism Plummer-Wigley-Parkhurst (PWP)
// forward/backward rates with a detailed-balance k4, and the
// Palandri-Kharaka semi-empirical rate with a switchable activity basis
// for the carbonate mechanism.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "chem.hpp"
#include "errors.hpp"

namespace carbkin {

inline constexpr double kGasConstant = 8.314462618; // J/(mol K)

/// Which quantity the carbonate mechanism's reaction order refers to.
enum class CarbonateBasis {
    CarbonicAcidActivity, // a_H2CO3*
    PartialPressureCO2,   // P(CO2) in atm
};

constexpr std::string_view to_string(CarbonateBasis b)
{
    return b == CarbonateBasis::CarbonicAcidActivity ? "h2co3_activity" : "p_co2";
}

inline std::optional<CarbonateBasis> parse_carbonate_basis(std::string_view text)
{
    if (text == "h2co3_activity") {
        return CarbonateBasis::CarbonicAcidActivity;
    }
    if (text == "p_co2") {
        return CarbonateBasis::PartialPressureCO2;
    }
    return std::nullopt;
}

/// The three parallel dissolution pathways, always addressed by name.
enum class Mechanism { Acid, Carbonate, Neutral };

inline constexpr std::array<Mechanism, 3> kAllMechanisms{Mechanism::Acid, Mechanism::Carbonate,
                                                         Mechanism::Neutral};

constexpr std::string_view to_string(Mechanism m)
{
    switch (m) {
    case Mechanism::Acid: return "acid";
    case Mechanism::Carbonate: return "carbonate";
    case Mechanism::Neutral: return "neutral";
    }
    return "?";
}

enum class RateUnit {
    MolPerM2PerS,   // mol m-2 s-1
    MmolPerCm2PerS, // mmol cm-2 s-1
};

constexpr std::string_view to_string(RateUnit u)
{
    return u == RateUnit::MolPerM2PerS ? "mol_m2_s" : "mmol_cm2_s";
}

inline std::optional<RateUnit> parse_rate_unit(std::string_view text)
{
    if (text == "mol_m2_s") {
        return RateUnit::MolPerM2PerS;
    }
    if (text == "mmol_cm2_s") {
        return RateUnit::MmolPerCm2PerS;
    }
    return std::nullopt;
}

/// log10 k from the PWP temperature fit log k = a / T + b.
inline double pwp_log_rate_constant(double a, double b, double temperature)
{
    if (!(temperature > 0.0)) {
        throw DomainError("pwp_log_rate_constant: temperature must be positive");
    }
    return a / temperature + b;
}

/// mmol cm-2 s-1 -> mol m-2 s-1 in log10 space: 1e-3 mol/mmol times
/// 1e4 cm2/m2, i.e. +1.
inline double convert_log_rate_units(double log_k_mmol_cm2)
{
    return log_k_mmol_cm2 + 1.0;
}

inline double to_mol_m2_s(double log_k, RateUnit unit)
{
    return unit == RateUnit::MmolPerCm2PerS ? convert_log_rate_units(log_k) : log_k;
}

/// Fit coefficients (a_i in K, b_i dimensionless) for each PWP mechanism.
struct PWPParameters {
    struct Coefficients {
        double a = 0.0;
        double b = 0.0;
        friend bool operator==(const Coefficients&, const Coefficients&) = default;
    };

    Coefficients acid;      // k1
    Coefficients carbonate; // k2
    Coefficients neutral;   // k3
    RateUnit unit = RateUnit::MmolPerCm2PerS;

    const Coefficients& operator[](Mechanism m) const
    {
        switch (m) {
        case Mechanism::Acid: return acid;
        case Mechanism::Carbonate: return carbonate;
        case Mechanism::Neutral: return neutral;
        }
        return acid;
    }

    /// log10 k_i at `temperature`, in mol m-2 s-1.
    double log_k_mol_m2_s(Mechanism m, double temperature) const
    {
        const auto& c = (*this)[m];
        return to_mol_m2_s(pwp_log_rate_constant(c.a, c.b, temperature), unit);
    }

    /// Calcite fit of Plummer, Wigley and Parkhurst (1978), mmol cm-2 s-1.
    static PWPParameters calcite()
    {
        return {{-444.0, 0.198}, {-2177.0, 2.84}, {-317.0, -5.86}, RateUnit::MmolPerCm2PerS};
    }

    friend bool operator==(const PWPParameters&, const PWPParameters&) = default;
};

/// PWP rate constants in mol m-2 s-1; k4 multiplies a_Ca * a_HCO3.
struct PwpRateConstants {
    double k1 = 0.0;
    double k2 = 0.0;
    double k3 = 0.0;
    double k4 = 0.0;
};

/// R_f = k1 a_H+ + k2 a_H2CO3* + k3.
inline double forward_rate(double k1, double k2, double k3, double a_h, double a_h2co3)
{
    if (!(k1 >= 0.0 && k2 >= 0.0 && k3 >= 0.0)) {
        throw DomainError("forward_rate: rate constants must be non-negative");
    }
    if (!(a_h >= 0.0 && a_h2co3 >= 0.0)) {
        throw DomainError("forward_rate: activities must be non-negative");
    }
    return k1 * a_h + k2 * a_h2co3 + k3;
}

/// R_f - R_b with R_b = k4 a_Ca a_HCO3; positive means net dissolution.
inline double pwp_net_rate(const PwpRateConstants& k, const SpeciationState& state)
{
    const auto& a = state.activities;
    return forward_rate(k.k1, k.k2, k.k3, a[Species::H], a[Species::H2CO3])
           - k.k4 * a[Species::Ca] * a[Species::HCO3];
}

/// k4 closed by detailed balance: the forward rate at the calcite-saturated
/// open-system state for (T, P(CO2)) divided by a_Ca * a_HCO3 there, so the
/// net PWP rate vanishes at that state.
inline double derive_k4(const AqueousModel& model, const PWPParameters& pwp, double p_co2)
{
    const SpeciationState eq = speciate_calcite_equilibrium(model, p_co2);
    const double t = model.temperature;
    const double k1 = std::pow(10.0, pwp.log_k_mol_m2_s(Mechanism::Acid, t));
    const double k2 = std::pow(10.0, pwp.log_k_mol_m2_s(Mechanism::Carbonate, t));
    const double k3 = std::pow(10.0, pwp.log_k_mol_m2_s(Mechanism::Neutral, t));
    const auto& a = eq.activities;
    return forward_rate(k1, k2, k3, a[Species::H], a[Species::H2CO3])
           / (a[Species::Ca] * a[Species::HCO3]);
}

/// k1..k3 at the model temperature plus the detailed-balance k4.
inline PwpRateConstants pwp_rate_constants(const AqueousModel& model, const PWPParameters& pwp,
                                           double p_co2)
{
    const double t = model.temperature;
    PwpRateConstants k;
    k.k1 = std::pow(10.0, pwp.log_k_mol_m2_s(Mechanism::Acid, t));
    k.k2 = std::pow(10.0, pwp.log_k_mol_m2_s(Mechanism::Carbonate, t));
    k.k3 = std::pow(10.0, pwp.log_k_mol_m2_s(Mechanism::Neutral, t));
    k.k4 = derive_k4(model, pwp, p_co2);
    return k;
}

struct MechanismParams {
    double log_k_298 = 0.0;         // log10 k at 298.15 K, mol m-2 s-1
    double activation_energy = 0.0; // J/mol
    double n = 1.0;
    double p = 1.0;
    double q = 1.0;

    void validate(std::string_view name) const
    {
        if (!std::isfinite(log_k_298) || !std::isfinite(n)) {
            throw DomainError(std::string(name) + ": log_k298 and n must be finite");
        }
        if (!(p > 0.0) || !(q > 0.0)) {
            throw DomainError(std::string(name) + ": p and q must be positive");
        }
        if (!(activation_energy >= 0.0)) {
            throw DomainError(std::string(name) + ": activation energy must be non-negative");
        }
    }

    friend bool operator==(const MechanismParams&, const MechanismParams&) = default;
};

struct RateParameterSet {
    MechanismParams acid;
    MechanismParams neutral;
    MechanismParams carbonate;
    CarbonateBasis carbonate_basis = CarbonateBasis::CarbonicAcidActivity;

    const MechanismParams& operator[](Mechanism m) const
    {
        switch (m) {
        case Mechanism::Acid: return acid;
        case Mechanism::Carbonate: return carbonate;
        case Mechanism::Neutral: return neutral;
        }
        return acid;
    }

    MechanismParams& operator[](Mechanism m)
    {
        return const_cast<MechanismParams&>(std::as_const(*this)[m]);
    }

    void validate() const
    {
        for (Mechanism m : kAllMechanisms) {
            (*this)[m].validate(to_string(m));
        }
    }

    friend bool operator==(const RateParameterSet&, const RateParameterSet&) = default;
};

/// Palandri-form parameters whose rate constants are the PWP k1..k3 at
/// `temperature` (E = 0, n = p = q = 1, a_H2CO3* basis).
inline RateParameterSet palandri_from_pwp(const PWPParameters& pwp, double temperature)
{
    RateParameterSet set;
    set.acid.log_k_298 = pwp.log_k_mol_m2_s(Mechanism::Acid, temperature);
    set.carbonate.log_k_298 = pwp.log_k_mol_m2_s(Mechanism::Carbonate, temperature);
    set.neutral.log_k_298 = pwp.log_k_mol_m2_s(Mechanism::Neutral, temperature);
    set.carbonate_basis = CarbonateBasis::CarbonicAcidActivity;
    return set;
}

/// Per-mechanism contributions to the Palandri rate, in mol m-2 s-1 and
/// with the dissolution-positive sign (palandri_rate applies -A).
struct PalandriTerms {
    double acid = 0.0;
    double neutral = 0.0;
    double carbonate = 0.0;

    double sum() const { return acid + neutral + carbonate; }
};

namespace detail {

inline double arrhenius(double activation_energy, double temperature)
{
    return std::exp(-activation_energy / kGasConstant * (1.0 / temperature - 1.0 / kReferenceTemperature));
}

/// (1 - Omega^p)^q evaluated as sign(1 - Omega^p) |1 - Omega^p|^q.
/// Omega is only known to a few ulps, so a base at rounding level counts as
/// zero; otherwise q < 1 would turn that noise into a finite rate.
inline double affinity_factor(double omega, double p, double q)
{
    const double omega_p = std::pow(omega, p);
    if (!std::isfinite(omega_p)) {
        throw RangeError("palandri_rate: Omega^p overflows");
    }
    const double base = 1.0 - omega_p;
    if (std::abs(base) <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, p)) {
        return 0.0;
    }
    const double magnitude = std::pow(std::abs(base), q);
    return base > 0.0 ? magnitude : -magnitude;
}

} // namespace detail

/// Activity-like quantity the carbonate term is raised to: a_H2CO3* or
/// P(CO2) depending on the basis.
inline double carbonate_basis_value(CarbonateBasis basis, const SpeciationState& state, double p_co2)
{
    return basis == CarbonateBasis::CarbonicAcidActivity ? state.activities[Species::H2CO3] : p_co2;
}

inline PalandriTerms palandri_terms(const RateParameterSet& params, const SpeciationState& state,
                                    double p_co2, double temperature)
{
    if (!(temperature > 0.0)) {
        throw DomainError("palandri_rate: temperature must be positive");
    }
    if (!(state.omega >= 0.0)) {
        throw DomainError("palandri_rate: saturation index must be non-negative");
    }
    auto term = [&](const MechanismParams& mp, double activity_factor) {
        return std::pow(10.0, mp.log_k_298) * detail::arrhenius(mp.activation_energy, temperature)
               * activity_factor * detail::affinity_factor(state.omega, mp.p, mp.q);
    };
    const double basis = carbonate_basis_value(params.carbonate_basis, state, p_co2);
    PalandriTerms t;
    t.acid = term(params.acid, std::pow(state.activities[Species::H], params.acid.n));
    t.neutral = term(params.neutral, 1.0);
    t.carbonate = term(params.carbonate, std::pow(basis, params.carbonate.n));
    return t;
}

/// Mineral-mole rate in mol/s, negative while the mineral dissolves:
/// R = -A sum_i k_i exp(-E_i/R (1/T - 1/298.15)) (activity)^n_i (1 - Omega^p_i)^q_i.
/// The neutral term carries no activity factor; the carbonate term uses
/// a_H2CO3* or P(CO2) according to params.carbonate_basis.
inline double palandri_rate(const RateParameterSet& params, const SpeciationState& state, double p_co2,
                            double area, double temperature)
{
    if (!(area >= 0.0)) {
        throw DomainError("palandri_rate: area must be non-negative");
    }
    return -area * palandri_terms(params, state, p_co2, temperature).sum();
}

} // namespace carbkin
