// Command-line front end: ingest, calendar, run, evaluate, density.
// Exit codes: 0 success, 2 run finished with gap records, 1 fatal error.

#include "nowcast/nowcast.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace nowcast;

namespace {

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    return out;
}

std::vector<ReleaseRule> load_rules(const std::string& schedule) {
    auto rules = table2_rules();
    if (schedule.empty()) return rules;
    std::ifstream in(schedule);
    if (!in) throw NotFoundError("cannot open schedule '" + schedule + "'");
    return apply_schedule_overrides(std::move(rules), in, schedule);
}

std::string rules_hash(const std::string& schedule) {
    return detail::sha256_hex(schedule.empty() ? std::string("default") : detail::read_file_bytes(schedule));
}

std::vector<ArchiveRow> read_archives(const std::vector<std::string>& paths, std::string& bytes) {
    std::vector<ArchiveRow> rows;
    for (const auto& path : paths) {
        const auto text = detail::read_file_bytes(path);
        bytes += text;
        std::istringstream in(text);
        auto part = read_archive_csv(in, path);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
}

template <class T>
std::string join(const std::set<T>& items) {
    std::ostringstream out;
    for (const auto& x : items) out << (out.tellp() > 0 ? ", " : "") << x;
    return out.str();
}

int cmd_ingest(const std::string& manifest, const std::string& out_dir) {
    const auto data = ingest(manifest);
    const auto hash = detail::sha256_hex(detail::read_file_bytes(manifest));
    write_store(data, out_dir, output_comment(hash));
    std::cout << "store " << out_dir << ": " << data.variables().size() << " variables, " << data.entities().size()
              << " entities\n";
    return 0;
}

int cmd_calendar(int year, const std::string& schedule, const std::string& out_path) {
    const auto rules = load_rules(schedule);
    std::ostringstream text;
    text << "# " << output_comment(rules_hash(schedule)) << '\n';
    print_calendar(text, rules, year);
    if (out_path.empty()) {
        std::cout << text.str();
    } else {
        open_output(out_path) << text.str();
    }
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& data_dir, const std::string& out_dir,
            const std::string& specs, const std::string& schedule) {
    auto config = load_run_config(config_path);
    if (!data_dir.empty()) {
        config.data_dir = data_dir;
    } else if (fs::path(config.data_dir).is_relative()) {
        config.data_dir = (fs::path(config_path).parent_path() / config.data_dir).lexically_normal().string();
    }
    if (config.data_dir.empty()) throw ConfigError("data_dir: no data directory given");
    if (!specs.empty()) set_config_value(config, "specs", specs);
    config.validate();
    const auto data = load_store(config.data_dir);
    const auto archive = run_out_of_sample(data, load_rules(schedule), config);
    const auto comment = output_comment(detail::sha256_hex(canonical_text(config) + rules_hash(schedule)));
    for (const auto& spec : config.specs) {
        std::vector<ArchiveRow> rows;
        for (const auto& r : archive.rows) {
            if (r.spec == spec.name()) rows.push_back(r);
        }
        auto out = open_output(fs::path(out_dir) / ("archive_" + spec.name() + ".csv"));
        write_archive_csv(out, rows, comment);
    }
    auto gaps = open_output(fs::path(out_dir) / "gaps.csv");
    write_gaps_csv(gaps, archive.gaps, comment);
    std::cout << archive.rows.size() << " archive rows, " << archive.gaps.size() << " gap records in " << out_dir
              << '\n';
    return archive.gaps.empty() ? 0 : 2;
}

int cmd_evaluate(const std::vector<std::string>& archives, const std::string& metric, const std::string& relative_to,
                 double tau, const std::string& out_dir) {
    std::string bytes;
    const auto rows = read_archives(archives, bytes);
    ScoreRequest req;
    req.metric = parse_metric(metric);
    req.relative_to = relative_to;
    if (req.metric == Metric::QS) {
        req.taus = {tau};
    } else if (req.metric == Metric::CRPS) {
        std::set<double> levels;
        for (const auto& r : rows) {
            double v = 0.0;
            if (r.variable == vars::kCO2 && is_quantile_key(r.key) && detail::parse_double(r.key, v)) levels.insert(v);
        }
        if (levels.empty()) {
            throw ScoringError("CRPS requires quantile predictions, but the archive holds only point predictions");
        }
        req.taus.assign(levels.begin(), levels.end());
    }
    const auto table = score_table(rows, req);
    const auto comment = output_comment(detail::sha256_hex(metric + "|" + relative_to + "|" +
                                                           detail::format_double(tau) + "|" + bytes));
    std::set<std::string> specs;
    for (const auto& r : table) specs.insert(r.spec);
    for (const auto& spec : specs) {
        auto out = open_output(fs::path(out_dir) / ("scores_" + metric + "_" + spec + ".csv"));
        write_score_table_csv(out, table, spec, comment);
    }
    std::cout << "wrote " << specs.size() << " " << metric << " tables relative to " << relative_to << " in "
              << out_dir << '\n';
    return 0;
}

int cmd_density(const std::vector<std::string>& archives, const std::string& spec, const std::string& entity,
                int year, const std::vector<int>& weeks, int points, const std::string& out_dir) {
    std::string bytes;
    const auto rows = read_archives(archives, bytes);
    std::set<std::string> entities;
    std::set<int> years;
    for (const auto& r : rows) {
        if (r.spec == spec && r.variable == vars::kCO2) {
            entities.insert(r.entity);
            years.insert(r.target_year);
        }
    }
    if (entities.empty()) throw NotFoundError("no CO2 rows for spec '" + spec + "' in the archive");
    if (!entities.contains(entity)) {
        throw NotFoundError("entity '" + entity + "' not found; available: " + join(entities));
    }
    if (!years.contains(year)) {
        throw NotFoundError("target year " + std::to_string(year) + " not found; available: " + join(years));
    }
    const auto comment = output_comment(detail::sha256_hex(spec + "|" + entity + "|" + std::to_string(year) + "|" + bytes));
    for (int week : weeks) {
        std::map<std::string, double> params;
        double realized = std::nan("");
        std::set<int> available_weeks;
        for (const auto& r : rows) {
            if (r.spec != spec || r.variable != vars::kCO2 || r.entity != entity || r.target_year != year) continue;
            if (r.key == archive_keys::kMu) available_weeks.insert(r.week);
            if (r.week != week) continue;
            params[r.key] = r.prediction;
            realized = r.realized;
        }
        SkewTParams p;
        for (const auto& [key, slot] : {std::pair{archive_keys::kMu, &p.mu}, std::pair{archive_keys::kSigma, &p.sigma},
                                        std::pair{archive_keys::kAlpha, &p.alpha}, std::pair{archive_keys::kNu, &p.nu}}) {
            const auto it = params.find(key);
            if (it == params.end()) {
                throw NotFoundError("no density parameters for (" + entity + ", " + std::to_string(year) + ", week " +
                                    std::to_string(week) + "); weeks with densities: " + join(available_weeks));
            }
            *slot = it->second;
        }
        auto out = open_output(fs::path(out_dir) / ("density_" + spec + "_" + entity + "_" + std::to_string(year) +
                                                    "_W" + std::to_string(week) + ".csv"));
        out << "# " << comment << "\nx,pdf,realized\n";
        for (const auto& pt : density_grid(p, points)) {
            out << detail::format_double(pt.x) << ',' << detail::format_double(pt.pdf) << ','
                << detail::format_double(realized) << '\n';
        }
    }
    std::cout << "wrote " << weeks.size() << " density grids in " << out_dir << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Panel MIDAS and quantile-bridge nowcasting of energy use and CO2 emissions"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    std::string manifest;
    std::string out;
    auto* ingest_cmd = app.add_subcommand("ingest", "Validate raw CSVs listed in a manifest and write a store");
    ingest_cmd->add_option("--manifest", manifest, "Manifest CSV: variable,file,frequency,transform,population")
        ->required();
    ingest_cmd->add_option("--out", out, "Store directory")->required();

    int year = 0;
    std::string schedule;
    auto* calendar_cmd = app.add_subcommand("calendar", "Release calendar utilities");
    calendar_cmd->require_subcommand(1);
    auto* print_cmd = calendar_cmd->add_subcommand("print", "Print the 48-week information calendar of a year");
    print_cmd->add_option("--year", year, "Calendar year")->required();
    print_cmd->add_option("--schedule", schedule, "Schedule override CSV")->check(CLI::ExistingFile);
    print_cmd->add_option("--out", out, "Output file (default stdout)");

    std::string config_path;
    std::string data_dir;
    std::string specs;
    auto* run_cmd = app.add_subcommand("run", "Expanding-window pseudo-out-of-sample run");
    run_cmd->add_option("--config", config_path, "Run config (key=value)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--data-dir", data_dir, "Store directory, overriding data_dir");
    run_cmd->add_option("--out", out, "Output directory")->required();
    run_cmd->add_option("--specs", specs, "Comma-separated model specs, overriding specs");
    run_cmd->add_option("--schedule", schedule, "Schedule override CSV")->check(CLI::ExistingFile);

    std::vector<std::string> archives;
    std::string metric = "rmsfe";
    std::string relative_to = "HistMean";
    double tau = 0.5;
    auto* eval_cmd = app.add_subcommand("evaluate", "Relative score tables from archives");
    eval_cmd->add_option("--archive", archives, "Archive CSV (repeatable)")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--metric", metric, "rmsfe, qs or crps")->check(CLI::IsMember({"rmsfe", "qs", "crps"}));
    eval_cmd->add_option("--relative-to", relative_to, "Reference spec");
    eval_cmd->add_option("--tau", tau, "Quantile level for qs");
    eval_cmd->add_option("--out", out, "Output directory")->required();

    std::string entity;
    std::string density_spec = "AR-W-M-Q";
    std::vector<int> weeks;
    int points = 401;
    auto* density_cmd = app.add_subcommand("density", "Skew-t density grids from archived parameters");
    density_cmd->add_option("--archive", archives, "Archive CSV (repeatable)")->required()->check(CLI::ExistingFile);
    density_cmd->add_option("--spec", density_spec, "Model spec");
    density_cmd->add_option("--entity", entity, "Entity")->required();
    density_cmd->add_option("--year", year, "Target year")->required();
    density_cmd->add_option("--weeks", weeks, "Prediction weeks")->required()->delimiter(',')->check(CLI::Range(1, 48));
    density_cmd->add_option("--points", points, "Grid points")->check(CLI::Range(2, 100000));
    density_cmd->add_option("--out", out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*ingest_cmd) return cmd_ingest(manifest, out);
        if (*print_cmd) return cmd_calendar(year, schedule, out);
        if (*run_cmd) return cmd_run(config_path, data_dir, out, specs, schedule);
        if (*eval_cmd) return cmd_evaluate(archives, metric, relative_to, tau, out);
        if (*density_cmd) return cmd_density(archives, density_spec, entity, year, weeks, points, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
