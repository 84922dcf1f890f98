#pragma once

// Mineral kinetics database: parsing, validation, serialization, linting of
// the carbonate-mechanism activity basis, and mechanical basis rewriting.
//
// File schema (JSON, comments allowed):
//
//     {
//       "format_version": 1,
//       "minerals": {
//         "calcite": {
//           "formula": "CaCO3",
//           "molar_mass_kg_mol": 0.1000869,
//           "log_ksp": -8.48,
//           "carbonate_basis": "h2co3_activity",        // or "p_co2"
//           "mechanisms": {
//             "acid":      { "log_k298": -0.30, "unit": "mol_m2_s",
//                            "E_J_mol": 14400, "n": 1, "p": 1, "q": 1 },
//             "neutral":   { ... },
//             "carbonate": { ... }
//           },
//           "pwp": {                                      // optional
//             "unit": "mmol_cm2_s",
//             "acid": { "a": -444.0, "b": 0.198 }, "carbonate": {...}, "neutral": {...}
//           }
//         }
//       }
//     }
//
// `unit` is "mol_m2_s" or "mmol_cm2_s"; values are normalized to mol m-2 s-1
// on load. E_J_mol defaults to 0 and n, p, q to 1. A legacy positional
// "mechanisms" array is read in the published table order (acid, neutral,
// carbonate) and flagged for the linter.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chem.hpp"
#include "errors.hpp"
#include "json_io.hpp"
#include "kinetics.hpp"

namespace carbkin {

inline constexpr int kDatabaseFormatVersion = 1;

struct MineralEntry {
    std::string formula;
    double molar_mass = 0.0; // kg/mol
    double log_ksp = 0.0;
    RateParameterSet palandri;
    std::optional<PWPParameters> pwp;
    /// Set when the source file gave the mechanisms as a positional array.
    bool positional_source = false;

    bool is_carbonate() const { return formula.find("CO3") != std::string::npos; }

    friend bool operator==(const MineralEntry&, const MineralEntry&) = default;
};

struct KineticsDatabase {
    int format_version = kDatabaseFormatVersion;
    std::map<std::string, MineralEntry> minerals;

    const MineralEntry& at(const std::string& name) const
    {
        const auto it = minerals.find(name);
        if (it == minerals.end()) {
            throw ParseError("kinetics database: no mineral named '" + name + "'");
        }
        return it->second;
    }

    friend bool operator==(const KineticsDatabase&, const KineticsDatabase&) = default;
};

namespace detail {

inline MechanismParams parse_mechanism(const json_io::Json& json, const std::string& where)
{
    json_io::ObjectReader r(json, where);
    r.expect_only({"log_k298", "unit", "E_J_mol", "n", "p", "q"});
    const std::string unit_text = r.string("unit");
    const auto unit = parse_rate_unit(unit_text);
    if (!unit) {
        throw ParseError(where + ".unit: unknown unit tag '" + unit_text
                         + "' (expected mol_m2_s or mmol_cm2_s)");
    }
    MechanismParams mp;
    mp.log_k_298 = to_mol_m2_s(r.number("log_k298"), *unit);
    mp.activation_energy = r.number_or("E_J_mol", 0.0);
    mp.n = r.number_or("n", 1.0);
    mp.p = r.number_or("p", 1.0);
    mp.q = r.number_or("q", 1.0);
    try {
        mp.validate(where);
    }
    catch (const DomainError& e) {
        throw ParseError(e.what());
    }
    return mp;
}

inline PWPParameters parse_pwp(const json_io::Json& json, const std::string& where)
{
    json_io::ObjectReader r(json, where);
    r.expect_only({"unit", "acid", "carbonate", "neutral"});
    const std::string unit_text = r.string("unit");
    const auto unit = parse_rate_unit(unit_text);
    if (!unit) {
        throw ParseError(where + ".unit: unknown unit tag '" + unit_text + "'");
    }
    auto coefficients = [&](const char* name) {
        const std::string sub = where + "." + name;
        json_io::ObjectReader c(r.raw(name), sub);
        c.expect_only({"a", "b"});
        return PWPParameters::Coefficients{c.number("a"), c.number("b")};
    };
    PWPParameters pwp;
    pwp.unit = *unit;
    pwp.acid = coefficients("acid");
    pwp.carbonate = coefficients("carbonate");
    pwp.neutral = coefficients("neutral");
    return pwp;
}

inline MineralEntry parse_mineral(const json_io::Json& json, const std::string& where)
{
    json_io::ObjectReader r(json, where);
    r.expect_only({"formula", "molar_mass_kg_mol", "log_ksp", "carbonate_basis", "mechanisms", "pwp"});
    MineralEntry entry;
    entry.formula = r.string("formula");
    entry.molar_mass = r.number("molar_mass_kg_mol");
    if (!(entry.molar_mass > 0.0)) {
        throw ParseError(where + ".molar_mass_kg_mol: must be positive");
    }
    entry.log_ksp = r.number("log_ksp");

    if (!r.has("carbonate_basis")) {
        throw ParseError(where + ": missing required field 'carbonate_basis' (h2co3_activity or p_co2)");
    }
    const std::string basis_text = r.string("carbonate_basis");
    const auto basis = parse_carbonate_basis(basis_text);
    if (!basis) {
        throw ParseError(where + ".carbonate_basis: unknown basis '" + basis_text
                         + "' (expected h2co3_activity or p_co2)");
    }
    entry.palandri.carbonate_basis = *basis;

    const json_io::Json& mechanisms = r.raw("mechanisms");
    const std::string mech_where = where + ".mechanisms";
    if (mechanisms.is_array()) {
        constexpr std::array<Mechanism, 3> table_order{Mechanism::Acid, Mechanism::Neutral,
                                                       Mechanism::Carbonate};
        if (mechanisms.size() != table_order.size()) {
            throw ParseError(mech_where + ": positional array must have exactly 3 entries");
        }
        for (std::size_t i = 0; i < table_order.size(); ++i) {
            entry.palandri[table_order[i]] =
                parse_mechanism(mechanisms[i], mech_where + "[" + std::to_string(i) + "]");
        }
        entry.positional_source = true;
    }
    else {
        json_io::ObjectReader m(mechanisms, mech_where);
        m.expect_only({"acid", "neutral", "carbonate"});
        for (Mechanism mech : kAllMechanisms) {
            const std::string name(to_string(mech));
            if (!m.has(name)) {
                throw ParseError(mech_where + ": missing mechanism '" + name + "'");
            }
            entry.palandri[mech] = parse_mechanism(m.raw(name), mech_where + "." + name);
        }
    }

    if (r.has("pwp")) {
        entry.pwp = parse_pwp(r.raw("pwp"), where + ".pwp");
    }
    return entry;
}

} // namespace detail

inline KineticsDatabase parse_db_text(const std::string& text, const std::string& source)
{
    const json_io::Json root = json_io::parse_text(text, source);
    json_io::ObjectReader r(root, source);
    r.expect_only({"format_version", "minerals"});
    KineticsDatabase db;
    const double version = r.number("format_version");
    if (version != kDatabaseFormatVersion) {
        throw ParseError(source + ".format_version: unsupported version "
                         + std::to_string(static_cast<long long>(version)));
    }
    db.format_version = kDatabaseFormatVersion;
    const json_io::Json& minerals = r.raw("minerals");
    json_io::ObjectReader m(minerals, source + ".minerals");
    for (const auto& item : minerals.items()) {
        const std::string& name = item.key();
        for (char c : name) {
            if (c >= 'A' && c <= 'Z') {
                throw ParseError(source + ".minerals: mineral name '" + name + "' must be lowercase");
            }
        }
        db.minerals.emplace(name, detail::parse_mineral(item.value(), source + ".minerals." + name));
    }
    return db;
}

inline KineticsDatabase parse_db(const std::filesystem::path& path)
{
    return parse_db_text(json_io::read_text_file(path), path.string());
}

/// Canonical name-keyed form; every rate constant written in mol_m2_s.
inline std::string serialize_db(const KineticsDatabase& db)
{
    using json_io::Json;
    Json minerals = Json::object();
    for (const auto& [name, entry] : db.minerals) {
        Json mechanisms = Json::object();
        for (Mechanism mech : kAllMechanisms) {
            const MechanismParams& mp = entry.palandri[mech];
            mechanisms[std::string(to_string(mech))] = Json{{"log_k298", mp.log_k_298},
                                                             {"unit", to_string(RateUnit::MolPerM2PerS)},
                                                             {"E_J_mol", mp.activation_energy},
                                                             {"n", mp.n},
                                                             {"p", mp.p},
                                                             {"q", mp.q}};
        }
        Json mineral{{"formula", entry.formula},
                     {"molar_mass_kg_mol", entry.molar_mass},
                     {"log_ksp", entry.log_ksp},
                     {"carbonate_basis", to_string(entry.palandri.carbonate_basis)},
                     {"mechanisms", mechanisms}};
        if (entry.pwp) {
            Json pwp{{"unit", to_string(entry.pwp->unit)}};
            for (Mechanism mech : kAllMechanisms) {
                const auto& c = (*entry.pwp)[mech];
                pwp[std::string(to_string(mech))] = Json{{"a", c.a}, {"b", c.b}};
            }
            mineral["pwp"] = pwp;
        }
        minerals[name] = mineral;
    }
    Json root{{"format_version", db.format_version}, {"minerals", minerals}};
    return root.dump(2) + "\n";
}

enum class Severity { Warning, Error };

struct Finding {
    Severity severity = Severity::Warning;
    std::string mineral;
    std::string code;
    std::string message;
};

inline constexpr const char* kPco2BasisCode = "PCO2_BASIS";
inline constexpr const char* kPositionalRiskCode = "POSITIONAL_RISK";

inline std::vector<Finding> lint_db(const KineticsDatabase& db)
{
    std::vector<Finding> findings;
    for (const auto& [name, entry] : db.minerals) {
        if (entry.is_carbonate()
            && entry.palandri.carbonate_basis == CarbonateBasis::PartialPressureCO2) {
            findings.push_back({Severity::Warning, name, kPco2BasisCode,
                                "carbonate mechanism order n3 is reported against p_co2; "
                                "re-express order n3 against a_H2CO3* (divide basis by KH·γ)"});
        }
        if (entry.positional_source) {
            findings.push_back({Severity::Warning, name, kPositionalRiskCode,
                                "mechanisms given as a positional array (read as acid, neutral, "
                                "carbonate); neutral and carbonate indices are easily swapped, "
                                "use name-keyed mechanisms"});
        }
    }
    return findings;
}

inline std::string format_finding(const Finding& f)
{
    return std::string(f.severity == Severity::Warning ? "WARN" : "ERROR") + " " + f.mineral + " "
           + f.code + " " + f.message;
}

struct RewriteResult {
    MineralEntry entry;
    bool changed = false; // false when the entry already had the target basis
};

/// Re-expresses the carbonate rate constant against another basis. With
/// a_H2CO3* = KH P(CO2) the power law k P^n equals (k KH^-n) a^n, so
/// log k shifts by -n log KH going to h2co3_activity and +n log KH back.
inline RewriteResult rewrite_entry(const MineralEntry& entry, CarbonateBasis target,
                                   const AqueousModel& model, double reference_p_co2)
{
    if (!(reference_p_co2 > 0.0)) {
        throw DomainError("rewrite_entry: reference p_co2 must be positive");
    }
    model.validate();
    if (entry.palandri.carbonate_basis == target) {
        return {entry, false};
    }
    RewriteResult out{entry, true};
    MechanismParams& carbonate = out.entry.palandri.carbonate;
    const double shift = carbonate.n * model.log_kh;
    carbonate.log_k_298 += (target == CarbonateBasis::CarbonicAcidActivity) ? -shift : shift;
    out.entry.palandri.carbonate_basis = target;
    return out;
}

} // namespace carbkin
