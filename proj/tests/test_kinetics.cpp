#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <carbkin/kinetics.hpp>

#include "test_support.hpp"

using namespace carbkin;
using testing_support::rel_diff;

namespace {

const AqueousModel kDefault{};

/// Hand-built state with the given activities; omega from Ksp.
SpeciationState state_with(double a_h, double a_h2co3, double a_ca, double a_hco3, double a_co3)
{
    SpeciationState s;
    s.activities[Species::H] = a_h;
    s.activities[Species::H2CO3] = a_h2co3;
    s.activities[Species::Ca] = a_ca;
    s.activities[Species::HCO3] = a_hco3;
    s.activities[Species::CO3] = a_co3;
    s.omega = saturation_index(a_ca, a_co3, kDefault.log_ksp);
    return s;
}

SpeciationState state_with_omega(double omega, double a_h = 1e-6, double a_h2co3 = 0.0329)
{
    SpeciationState s;
    s.activities[Species::H] = a_h;
    s.activities[Species::H2CO3] = a_h2co3;
    s.omega = omega;
    return s;
}

RateParameterSet simple_set(double log_acid, double log_neutral, double log_carbonate, CarbonateBasis basis)
{
    RateParameterSet set;
    set.acid.log_k_298 = log_acid;
    set.neutral.log_k_298 = log_neutral;
    set.carbonate.log_k_298 = log_carbonate;
    set.carbonate_basis = basis;
    return set;
}

} // namespace

TEST(PwpLogRateConstant, CalciteValuesAt25C)
{
    EXPECT_NEAR(pwp_log_rate_constant(-444.0, 0.198, 298.15), -1.3, 0.01);
    EXPECT_NEAR(pwp_log_rate_constant(-444.0, 0.198, 298.15), -1.291, 0.005);
    EXPECT_NEAR(pwp_log_rate_constant(-2177.0, 2.84, 298.15), -4.461, 0.005);
    EXPECT_NEAR(pwp_log_rate_constant(-317.0, -5.86, 298.15), -6.923, 0.005);
    // Oracle values (tests/oracles/derive_goldens.py), after the +1 unit shift.
    EXPECT_NEAR(pwp_log_rate_constant(-444.0, 0.198, 298.15) + 1.0, -0.2911832969981554, 1e-12);
    EXPECT_NEAR(pwp_log_rate_constant(-2177.0, 2.84, 298.15) + 1.0, -3.461693778299514, 1e-12);
    EXPECT_NEAR(pwp_log_rate_constant(-317.0, -5.86, 298.15) + 1.0, -5.923223209793728, 1e-12);
}

TEST(PwpLogRateConstant, ZeroSlopeIsIntercept)
{
    for (double t : {273.15, 298.15, 350.0}) {
        EXPECT_EQ(pwp_log_rate_constant(0.0, -5.0, t), -5.0);
    }
}

TEST(PwpLogRateConstant, NonPositiveTemperatureIsDomainError)
{
    EXPECT_THROW(pwp_log_rate_constant(-444.0, 0.198, 0.0), DomainError);
    EXPECT_THROW(pwp_log_rate_constant(-444.0, 0.198, -1.0), DomainError);
}

TEST(ConvertLogRateUnits, AddsExactlyOne)
{
    EXPECT_NEAR(convert_log_rate_units(-1.3), -0.3, 1e-15);
    EXPECT_NEAR(convert_log_rate_units(-4.46), -3.46, 1e-15);
    EXPECT_EQ(convert_log_rate_units(0.0), 1.0);
    // 10^-1.3 mmol cm-2 s-1 in mol m-2 s-1 by explicit factors.
    EXPECT_NEAR(std::pow(10.0, convert_log_rate_units(-1.3)), std::pow(10.0, -1.3) * 1e-3 * 1e4, 1e-15);
}

TEST(ForwardRate, Examples)
{
    EXPECT_EQ(forward_rate(0.5, 1e-3, 1e-6, 0.0, 0.0), 1e-6);
    EXPECT_DOUBLE_EQ(forward_rate(std::pow(10.0, -0.3), 0.0, 0.0, 1.0, 0.0), std::pow(10.0, -0.3));
    const double r = forward_rate(std::pow(10.0, -0.3), std::pow(10.0, -3.46), std::pow(10.0, -5.92), 1e-6, 0.0329);
    // Term-by-term oracle sum (tests/oracles/derive_goldens.py).
    EXPECT_NEAR(r, 1.3111094048132978e-05, 1e-18);
    EXPECT_THROW(forward_rate(-1.0, 0.0, 0.0, 0.0, 0.0), DomainError);
    EXPECT_THROW(forward_rate(1.0, 0.0, 0.0, -1.0, 0.0), DomainError);
}

TEST(ForwardRate, StrictlyPositiveWithNeutralTerm)
{
    EXPECT_GT(forward_rate(0.0, 0.0, 1e-9, 0.0, 0.0), 0.0);
}

TEST(DeriveK4, NetRateVanishesAtClosureState)
{
    const auto pwp = PWPParameters::calcite();
    for (double p : {0.01, 0.1, 0.97, 1.0}) {
        const PwpRateConstants k = pwp_rate_constants(kDefault, pwp, p);
        const auto eq = speciate_calcite_equilibrium(kDefault, p);
        EXPECT_LT(std::abs(pwp_net_rate(k, eq)), 1e-18) << "p=" << p;
        EXPECT_GT(k.k4, 0.0);
    }
}

TEST(DeriveK4, RegressionGoldens)
{
    // Independent bisection oracle (tests/oracles/derive_goldens.py). Note
    // k4 is not monotone in P(CO2): it dips between 0.1 and 1 atm.
    const auto pwp = PWPParameters::calcite();
    EXPECT_LT(rel_diff(derive_k4(kDefault, pwp, 0.01), 0.372944679516902), 1e-6);
    EXPECT_LT(rel_diff(derive_k4(kDefault, pwp, 0.1), 0.1542695463163857), 1e-6);
    EXPECT_LT(rel_diff(derive_k4(kDefault, pwp, 1.0), 0.1883119463768566), 1e-6);
    EXPECT_LT(rel_diff(derive_k4(kDefault, pwp, 0.97), 0.18686857581265806), 1e-6);
}

TEST(DeriveK4, RejectsNonPositivePressure)
{
    EXPECT_THROW(derive_k4(kDefault, PWPParameters::calcite(), 0.0), DomainError);
}

TEST(PwpNetRate, PureForwardWithoutProducts)
{
    const PwpRateConstants k{0.5, 3e-4, 1e-6, 0.2};
    const auto s = state_with(1e-5, 0.0329, 0.0, 0.0, 0.0);
    EXPECT_DOUBLE_EQ(pwp_net_rate(k, s), forward_rate(k.k1, k.k2, k.k3, 1e-5, 0.0329));
}

TEST(PwpNetRate, FarFromEquilibriumMatchesTermSum)
{
    const PwpRateConstants k = pwp_rate_constants(kDefault, PWPParameters::calcite(), 0.97);
    const double a_h = 1e-4;
    const double a0 = std::pow(10.0, -1.47) * 0.97;
    const double a_hco3 = std::pow(10.0, -6.35) * a0 / a_h;
    const double a_co3 = std::pow(10.0, -10.33) * a_hco3 / a_h;
    const double a_ca = 1e-4;
    const auto s = state_with(a_h, a0, a_ca, a_hco3, a_co3);
    const double oracle = k.k1 * a_h + k.k2 * a0 + k.k3 - k.k4 * a_ca * a_hco3;
    EXPECT_LT(rel_diff(pwp_net_rate(k, s), oracle), 1e-12);
    EXPECT_GT(pwp_net_rate(k, s), 0.0);
}

TEST(PalandriRate, ZeroAtEquilibriumForBothBases)
{
    const auto db = testing_support::default_db();
    for (auto basis : {CarbonateBasis::CarbonicAcidActivity, CarbonateBasis::PartialPressureCO2}) {
        RateParameterSet set = db.at("calcite").palandri;
        set.carbonate_basis = basis;
        EXPECT_EQ(palandri_rate(set, state_with_omega(1.0), 0.97, 1.0, 298.15), 0.0);
        EXPECT_EQ(palandri_rate(set, state_with_omega(1.0), 0.97, 1.0, 330.0), 0.0);
    }
}

TEST(PalandriRate, ReducesToForwardRateAt25C)
{
    // Omega = 0, p = q = n = 1: -A * R_f with the converted PWP constants.
    const auto pwp = PWPParameters::calcite();
    const RateParameterSet set = palandri_from_pwp(pwp, 298.15);
    const double a_h = 3e-5;
    const double a0 = 0.0329;
    const double area = 0.7;
    const double r = palandri_rate(set, state_with_omega(0.0, a_h, a0), 0.97, area, 298.15);
    const double k1 = std::pow(10.0, pwp.log_k_mol_m2_s(Mechanism::Acid, 298.15));
    const double k2 = std::pow(10.0, pwp.log_k_mol_m2_s(Mechanism::Carbonate, 298.15));
    const double k3 = std::pow(10.0, pwp.log_k_mol_m2_s(Mechanism::Neutral, 298.15));
    EXPECT_LT(rel_diff(r / -area, forward_rate(k1, k2, k3, a_h, a0)), 1e-12);
}

TEST(PalandriRate, PublishedTableAgreesWithPwpWithinPointOneFiveLog)
{
    const auto db = testing_support::default_db();
    const RateParameterSet table = db.at("calcite").palandri;
    const RateParameterSet pwp = palandri_from_pwp(PWPParameters::calcite(), 298.15);
    for (Mechanism m : kAllMechanisms) {
        EXPECT_LT(std::abs(table[m].log_k_298 - pwp[m].log_k_298), 0.15) << to_string(m);
    }
    const auto s = state_with_omega(0.0, 1e-6, 0.0329);
    const double r_table = palandri_rate(table, s, 0.97, 1.0, 298.15);
    const double r_pwp = palandri_rate(pwp, s, 0.97, 1.0, 298.15);
    EXPECT_LT(std::abs(std::log10(r_table / r_pwp)), 0.15);
}

TEST(PalandriRate, ConventionFactorAtPointNineSevenAtm)
{
    RateParameterSet set = simple_set(-0.30, -5.81, -3.48, CarbonateBasis::PartialPressureCO2);
    const double a0 = std::pow(10.0, -1.47) * 0.97;
    const auto s = state_with_omega(0.0, 1e-6, a0);
    const double by_pressure = palandri_terms(set, s, 0.97, 298.15).carbonate;
    set.carbonate_basis = CarbonateBasis::CarbonicAcidActivity;
    const double by_activity = palandri_terms(set, s, 0.97, 298.15).carbonate;
    EXPECT_NEAR(by_pressure / by_activity, 29.512092266663856, 1e-9);
    EXPECT_NEAR(by_pressure / by_activity, 29.5, 0.295);
}

TEST(PalandriRate, SignFollowsAffinityForSingleMechanism)
{
    const RateParameterSet set = simple_set(-0.3, -40.0, -40.0, CarbonateBasis::CarbonicAcidActivity);
    for (double omega : {0.0, 0.2, 0.9, 0.999}) {
        EXPECT_LT(palandri_rate(set, state_with_omega(omega), 0.97, 1.0, 298.15), 0.0) << omega;
    }
    for (double omega : {1.001, 1.5, 10.0}) {
        EXPECT_GT(palandri_rate(set, state_with_omega(omega), 0.97, 1.0, 298.15), 0.0) << omega;
    }
}

TEST(PalandriRate, SignedMagnitudeForFractionalQ)
{
    RateParameterSet set = simple_set(0.0, -40.0, -40.0, CarbonateBasis::CarbonicAcidActivity);
    set.acid.q = 0.5;
    set.acid.n = 0.0;
    const double r = palandri_rate(set, state_with_omega(4.0), 0.97, 1.0, 298.15);
    // (1 - 4)^0.5 -> -sqrt(3); R = -A k * (-sqrt 3) = +sqrt 3 (k = 1).
    EXPECT_NEAR(r, std::sqrt(3.0), 1e-12);
    EXPECT_TRUE(std::isfinite(r));
}

TEST(PalandriRate, RoundingLevelAffinityIsZero)
{
    RateParameterSet set = simple_set(0.0, 0.0, 0.0, CarbonateBasis::CarbonicAcidActivity);
    for (Mechanism m : kAllMechanisms) {
        set[m].p = 2.0;
        set[m].q = 0.3;
    }
    for (double omega : {std::nextafter(1.0, 2.0), std::nextafter(1.0, 0.0)}) {
        EXPECT_EQ(palandri_rate(set, state_with_omega(omega), 0.97, 1.0, 298.15), 0.0);
    }
    EXPECT_LT(palandri_rate(set, state_with_omega(1.0 - 1e-12), 0.97, 1.0, 298.15), 0.0);
}

TEST(PalandriRate, OmegaPowerOverflowIsRangeError)
{
    RateParameterSet set = simple_set(0.0, 0.0, 0.0, CarbonateBasis::CarbonicAcidActivity);
    set.neutral.p = 400.0;
    EXPECT_THROW(palandri_rate(set, state_with_omega(1e3), 0.97, 1.0, 298.15), RangeError);
}

TEST(PalandriRate, PreconditionsAreChecked)
{
    const RateParameterSet set = simple_set(-0.3, -5.81, -3.48, CarbonateBasis::CarbonicAcidActivity);
    EXPECT_THROW(palandri_rate(set, state_with_omega(0.5), 0.97, -1.0, 298.15), DomainError);
    EXPECT_THROW(palandri_rate(set, state_with_omega(0.5), 0.97, 1.0, 0.0), DomainError);
    EXPECT_THROW(palandri_rate(set, state_with_omega(-0.5), 0.97, 1.0, 298.15), DomainError);
}

TEST(PalandriRate, ArrheniusFactorIsUnityAt25CAndGrowsAbove)
{
    RateParameterSet set = simple_set(-0.3, -5.81, -3.48, CarbonateBasis::CarbonicAcidActivity);
    const auto s = state_with_omega(0.0);
    const double no_e = palandri_rate(set, s, 0.97, 1.0, 298.15);
    set.acid.activation_energy = 14400.0;
    set.neutral.activation_energy = 23500.0;
    set.carbonate.activation_energy = 35400.0;
    EXPECT_EQ(palandri_rate(set, s, 0.97, 1.0, 298.15), no_e);
    EXPECT_LT(palandri_rate(set, s, 0.97, 1.0, 318.15), no_e);

    // Single-term Arrhenius check against the closed form.
    RateParameterSet acid_only = simple_set(-0.3, -60.0, -60.0, CarbonateBasis::CarbonicAcidActivity);
    acid_only.acid.activation_energy = 14400.0;
    const double ratio = palandri_rate(acid_only, s, 0.97, 1.0, 318.15) / palandri_rate(acid_only, s, 0.97, 1.0, 298.15);
    EXPECT_NEAR(ratio, std::exp(-14400.0 / 8.314462618 * (1.0 / 318.15 - 1.0 / 298.15)), 1e-12);
}

TEST(PalandriRate, MagnitudeMonotoneInActivities)
{
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> log_k(-7.0, 0.0);
    std::uniform_real_distribution<double> omega(0.0, 0.99);
    std::uniform_real_distribution<double> log_a(-9.0, -1.0);
    for (int i = 0; i < 200; ++i) {
        const auto basis = i % 2 ? CarbonateBasis::CarbonicAcidActivity : CarbonateBasis::PartialPressureCO2;
        const RateParameterSet set = simple_set(log_k(rng), log_k(rng), log_k(rng), basis);
        const double w = omega(rng);
        const double a_h = std::pow(10.0, log_a(rng));
        const double a0 = std::pow(10.0, log_a(rng));
        const double p = a0 / std::pow(10.0, -1.47);
        const double base = std::abs(palandri_rate(set, state_with_omega(w, a_h, a0), p, 1.0, 298.15));
        EXPECT_GE(std::abs(palandri_rate(set, state_with_omega(w, 2 * a_h, a0), p, 1.0, 298.15)), base);
        const double more_basis = basis == CarbonateBasis::CarbonicAcidActivity
                                      ? std::abs(palandri_rate(set, state_with_omega(w, a_h, 2 * a0), p, 1.0, 298.15))
                                      : std::abs(palandri_rate(set, state_with_omega(w, a_h, a0), 2 * p, 1.0, 298.15));
        EXPECT_GE(more_basis, base);
    }
}

TEST(PalandriRate, ConventionsCoincideWhenPressureEqualsActivity)
{
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> log_k(-7.0, 0.0);
    std::uniform_real_distribution<double> n3(0.3, 2.0);
    std::uniform_real_distribution<double> omega(0.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        RateParameterSet set = simple_set(log_k(rng), log_k(rng), log_k(rng), CarbonateBasis::CarbonicAcidActivity);
        set.carbonate.n = n3(rng);
        const auto s = state_with_omega(omega(rng), 1e-6, 0.0329);
        const double by_activity = palandri_rate(set, s, 0.97, 2.0, 298.15);
        set.carbonate_basis = CarbonateBasis::PartialPressureCO2;
        EXPECT_EQ(palandri_rate(set, s, s.activities[Species::H2CO3], 2.0, 298.15), by_activity);
    }
}

TEST(Serialization, BasisAndUnitNames)
{
    EXPECT_EQ(to_string(CarbonateBasis::CarbonicAcidActivity), "h2co3_activity");
    EXPECT_EQ(to_string(CarbonateBasis::PartialPressureCO2), "p_co2");
    EXPECT_EQ(parse_carbonate_basis("p_co2"), CarbonateBasis::PartialPressureCO2);
    EXPECT_EQ(parse_carbonate_basis("P_CO2"), std::nullopt);
    EXPECT_EQ(parse_rate_unit("mmol_cm2_s"), RateUnit::MmolPerCm2PerS);
    EXPECT_EQ(parse_rate_unit("mol/m2/s"), std::nullopt);
}

TEST(MechanismParams, InvariantsAreChecked)
{
    MechanismParams mp;
    mp.p = 0.0;
    EXPECT_THROW(mp.validate("acid"), DomainError);
    mp = {};
    mp.activation_energy = -1.0;
    EXPECT_THROW(mp.validate("acid"), DomainError);
}
