// carbkin: command-line front end for speciation, batch simulation,
// validation against experiments and kinetics-database linting.
//
// Exit codes: 0 success (lintdb: clean), 1 lintdb findings, 2 usage,
// parse, solver or integration errors.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <carbkin/carbkin.hpp>

namespace fs = std::filesystem;
using namespace carbkin;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFindings = 1;
constexpr int kExitError = 2;

fs::path default_db_path()
{
    if (const char* env = std::getenv("CARBKIN_DB"); env != nullptr && *env != '\0') {
        return env;
    }
    return fs::path(CARBKIN_DATA_DIR) / "calcite.default";
}

fs::path resolve_db(const std::string& flag)
{
    return flag.empty() ? default_db_path() : fs::path(flag);
}

AqueousModel resolve_model(const std::string& flag)
{
    return flag.empty() ? AqueousModel{} : load_model_file(flag);
}

std::optional<CarbonateBasis> parse_basis_flag(const std::string& text)
{
    if (text == "from-db") {
        return std::nullopt;
    }
    if (auto basis = parse_carbonate_basis(text)) {
        return basis;
    }
    throw ParseError("--basis: expected h2co3_activity, p_co2 or from-db, got '" + text + "'");
}

void write_file(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) {
        throw Error("cannot write " + path.string());
    }
}

std::string series_csv(const TimeSeries& series)
{
    std::ostringstream out;
    write_series_csv(series, out);
    return out.str();
}

/// Record of one CLI invocation, written next to the outputs.
struct RunManifest {
    std::string subcommand;
    std::vector<std::string> configs;
    std::string database;
    std::string output_dir;
    std::vector<std::string> outputs;
    int exit_status = kExitOk;

    std::string to_json() const
    {
        const json_io::Json j{{"subcommand", subcommand}, {"configs", configs},       {"database", database},
                              {"output_dir", output_dir}, {"outputs", outputs},       {"exit_status", exit_status}};
        return j.dump(2) + "\n";
    }
};

std::string saturation_summary(const TimeSeries& series)
{
    try {
        return "t_sat_s=" + csv::format_number(time_to_saturation(series));
    }
    catch (const NotReachedError& e) {
        return "t_sat_s=not_reached max_omega=" + csv::format_number(e.max_omega());
    }
}

// ---------------------------------------------------------------- speciate

struct SpeciateArgs {
    std::optional<double> p_co2;
    std::optional<double> carbon_total;
    double ca_total = 0.0;
    std::string model;
};

int cmd_speciate(const SpeciateArgs& args, const std::string& usage)
{
    if (args.p_co2.has_value() == args.carbon_total.has_value()) {
        std::cerr << "speciate: give exactly one of --p-co2 or --carbon-total\n" << usage;
        return kExitError;
    }
    const AqueousModel model = resolve_model(args.model);
    SpeciationState s;
    try {
        s = args.p_co2 ? speciate_open(model, *args.p_co2, args.ca_total)
                       : speciate_closed(model, *args.carbon_total, args.ca_total);
    }
    catch (const ConvergenceError& e) {
        std::cerr << "speciate: " << e.what() << "\nresidual=" << csv::format_number(e.residual()) << '\n';
        return kExitError;
    }
    std::cout << "species,molality_mol_kg,activity,gamma\n";
    for (Species sp : kAllSpecies) {
        std::cout << species_name(sp) << ',' << csv::format_number(s.molalities[sp]) << ','
                  << csv::format_number(s.activities[sp]) << ',' << csv::format_number(s.gammas[sp]) << '\n';
    }
    std::cout << "ionic_strength=" << csv::format_number(s.ionic_strength) << '\n'
              << "ph=" << csv::format_number(s.ph) << '\n'
              << "omega=" << csv::format_number(s.omega) << '\n';
    return kExitOk;
}

// ------------------------------------------------------------------- batch

struct BatchArgs {
    std::string config;
    std::string db;
    std::string basis = "from-db";
    std::string out;
};

BatchConfig load_config(const std::string& config_path, const fs::path& db_path, const std::string& basis)
{
    const KineticsDatabase db = parse_db(db_path);
    BatchConfig config = load_batch_config(config_path, db);
    if (auto override_basis = parse_basis_flag(basis)) {
        config.convention_override = override_basis;
    }
    return config;
}

int cmd_batch(const BatchArgs& args)
{
    const BatchConfig config = load_config(args.config, resolve_db(args.db), args.basis);
    const TimeSeries series = integrate_batch(config);
    write_file(args.out, series_csv(series));
    std::cout << saturation_summary(series) << '\n';
    if (series.equilibrated) {
        std::cout << "equilibrated_at_s=" << csv::format_number(series.stop_time) << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
    std::string config;
    std::string db;
    std::string experiment;
    std::string out_dir;
};

int cmd_validate(const ValidateArgs& args)
{
    RunManifest manifest{"validate", {args.config}, resolve_db(args.db).string(), args.out_dir, {}, kExitOk};
    const BatchConfig config = load_config(args.config, resolve_db(args.db), "from-db");
    const ExperimentSeries exp = load_experiment_csv(args.experiment);
    const ComparisonReport report = compare_conventions(config, exp);

    const fs::path dir(args.out_dir);
    fs::create_directories(dir);
    auto emit = [&](const std::string& name, const std::string& content) {
        write_file(dir / name, content);
        manifest.outputs.push_back(name);
    };
    std::ostringstream report_csv;
    write_report_csv(report, report_csv);
    emit("report.csv", report_csv.str());
    for (const LegReport* leg : {&report.reference, &report.other}) {
        const std::string basis(to_string(leg->basis));
        std::ostringstream aligned;
        write_aligned_csv(*leg, exp, aligned);
        emit("aligned_" + basis + ".csv", aligned.str());
        emit("series_" + basis + ".csv", series_csv(leg->series));
    }
    write_file(dir / "manifest.json", manifest.to_json());

    std::cout << "timescale_ratio=" << csv::format_number(report.timescale_ratio) << '\n';
    return kExitOk;
}

// ------------------------------------------------------------------ lintdb

struct LintArgs {
    std::string db;
    bool fix = false;
    std::string out;
    std::string model;
    double reference_p_co2 = 0.97;
};

int cmd_lintdb(const LintArgs& args)
{
    if (args.fix && args.out.empty()) {
        throw ParseError("lintdb: --fix needs --out <file>");
    }
    const KineticsDatabase db = parse_db(resolve_db(args.db));
    const auto findings = lint_db(db);
    for (const auto& f : findings) {
        std::cout << format_finding(f) << '\n';
    }
    if (args.fix) {
        const AqueousModel model = resolve_model(args.model);
        KineticsDatabase fixed = db;
        for (auto& [name, entry] : fixed.minerals) {
            if (entry.is_carbonate()) {
                entry = rewrite_entry(entry, CarbonateBasis::CarbonicAcidActivity, model, args.reference_p_co2).entry;
            }
            entry.positional_source = false;
        }
        write_file(args.out, serialize_db(fixed));
    }
    return findings.empty() ? kExitOk : kExitFindings;
}

// ------------------------------------------------------------------- sweep

struct SweepArgs {
    std::vector<std::string> configs;
    std::string db;
    std::string basis = "from-db";
    std::string out_dir;
    int jobs = 1;
};

int cmd_sweep(const SweepArgs& args)
{
    const fs::path db_path = resolve_db(args.db);
    RunManifest manifest{"sweep", args.configs, db_path.string(), args.out_dir, {}, kExitOk};
    std::vector<BatchConfig> configs;
    for (const auto& path : args.configs) {
        configs.push_back(load_config(path, db_path, args.basis));
    }
    std::vector<TimeSeries> results(configs.size());
    const std::size_t jobs = static_cast<std::size_t>(std::max(1, args.jobs));
    for (std::size_t first = 0; first < configs.size(); first += jobs) {
        std::vector<std::future<TimeSeries>> running;
        for (std::size_t i = first; i < std::min(configs.size(), first + jobs); ++i) {
            running.push_back(std::async(std::launch::async, [&configs, i] { return integrate_batch(configs[i]); }));
        }
        for (std::size_t k = 0; k < running.size(); ++k) {
            results[first + k] = running[k].get();
        }
    }
    const fs::path dir(args.out_dir);
    fs::create_directories(dir);
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const std::string name = fs::path(args.configs[i]).stem().string() + ".csv";
        write_file(dir / name, series_csv(results[i]));
        manifest.outputs.push_back(name);
        std::cout << name << ' ' << saturation_summary(results[i]) << '\n';
    }
    write_file(dir / "manifest.json", manifest.to_json());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Carbonate dissolution kinetics: speciation, batch simulation, validation, database lint"};
    app.require_subcommand(1);

    SpeciateArgs speciate;
    auto* sp = app.add_subcommand("speciate", "Equilibrium speciation of the CO2-H2O-CaCO3 system");
    sp->add_option("--p-co2", speciate.p_co2, "CO2 partial pressure (atm), open system");
    sp->add_option("--carbon-total", speciate.carbon_total, "Total dissolved carbon (mol/kg), closed system");
    sp->add_option("--ca-total", speciate.ca_total, "Total calcium (mol/kg)");
    sp->add_option("--model", speciate.model, "Aqueous model file");

    BatchArgs batch;
    auto* bt = app.add_subcommand("batch", "Integrate a batch dissolution experiment");
    bt->add_option("--config", batch.config, "Batch config file")->required();
    bt->add_option("--db", batch.db, "Kinetics database (default: $CARBKIN_DB or calcite.default)");
    bt->add_option("--basis", batch.basis, "Carbonate basis: h2co3_activity, p_co2 or from-db");
    bt->add_option("--out", batch.out, "Output CSV")->required();

    ValidateArgs validate;
    auto* vd = app.add_subcommand("validate", "Compare both carbonate bases against an experiment");
    vd->add_option("--config", validate.config, "Batch config file")->required();
    vd->add_option("--db", validate.db, "Kinetics database");
    vd->add_option("--experiment", validate.experiment, "Experiment CSV (t_s, ph, ca_molal)")->required();
    vd->add_option("--out-dir", validate.out_dir, "Output directory")->required();

    LintArgs lint;
    auto* ld = app.add_subcommand("lintdb", "Check a kinetics database for P(CO2)-basis carbonate terms");
    ld->add_option("--db", lint.db, "Kinetics database");
    ld->add_flag("--fix", lint.fix, "Write a copy rewritten to the h2co3_activity basis");
    ld->add_option("--out", lint.out, "Output database for --fix");
    ld->add_option("--model", lint.model, "Aqueous model file used for the rewrite (Henry constant)");
    ld->add_option("--reference-p-co2", lint.reference_p_co2, "Reference P(CO2) in atm for the rewrite");

    SweepArgs sweep;
    auto* sw = app.add_subcommand("sweep", "Run several batch configs, optionally in parallel");
    sw->add_option("--config", sweep.configs, "Batch config files")->required();
    sw->add_option("--db", sweep.db, "Kinetics database");
    sw->add_option("--basis", sweep.basis, "Carbonate basis: h2co3_activity, p_co2 or from-db");
    sw->add_option("--out-dir", sweep.out_dir, "Output directory")->required();
    sw->add_option("--jobs", sweep.jobs, "Concurrent runs");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        if (app.got_subcommand(sp)) {
            return cmd_speciate(speciate, sp->help());
        }
        if (app.got_subcommand(bt)) {
            return cmd_batch(batch);
        }
        if (app.got_subcommand(vd)) {
            return cmd_validate(validate);
        }
        if (app.got_subcommand(ld)) {
            return cmd_lintdb(lint);
        }
        if (app.got_subcommand(sw)) {
            return cmd_sweep(sweep);
        }
    }
    catch (const std::exception& e) {
        std::cerr << "carbkin: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
