#include "spr/cli.hpp"

#include <chrono>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "spr/config.hpp"
#include "spr/error.hpp"
#include "spr/inference.hpp"
#include "spr/io.hpp"
#include "spr/resilience.hpp"
#include "spr/simharness.hpp"

namespace spr::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

inline constexpr int kSchemaVersion = 1;

/// Flags shared by every verb; unset ones leave the config file value alone.
struct CommonFlags {
    std::string config_path;
    std::string study_a;
    std::string study_b;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> draws;
    std::optional<double> alpha;
    std::optional<std::size_t> bootstrap;
    std::optional<std::string> scope;
    std::optional<std::string> mode;
    std::string settings;
    std::optional<std::size_t> replications;
    std::optional<std::size_t> oracle_replications;
    bool no_misspecified = false;
};

AnalysisConfig resolve_config(const CommonFlags& f) {
    AnalysisConfig c = f.config_path.empty() ? AnalysisConfig{} : load_config(f.config_path);
    if (f.seed) c.seed = f.seed;
    if (f.workers) c.workers = *f.workers;
    if (f.draws) c.estimate.draws = *f.draws;
    if (f.alpha) c.estimate.alpha = *f.alpha;
    if (f.bootstrap) c.bootstrap.replicates = *f.bootstrap;
    if (f.scope) {
        c.bootstrap.scope = parse_resample_scope(*f.scope);
        c.simulation_scope = c.bootstrap.scope;
    }
    if (f.mode) c.set.mode = parse_set_mode(*f.mode);
    if (f.replications) c.replications = *f.replications;
    if (f.oracle_replications) c.oracle_replications = *f.oracle_replications;
    if (f.no_misspecified) c.misspecified = false;
    if (!f.settings.empty()) {
        c.settings.clear();
        if (f.settings == "all") {
            c.settings = sim::setting_ids();
        } else {
            std::stringstream in(f.settings);
            std::string item;
            while (std::getline(in, item, ',')) {
                try {
                    c.settings.push_back(std::stoi(item));
                } catch (const std::exception&) {
                    throw ConfigError("--settings expects a comma-separated list of ids or 'all'");
                }
            }
        }
    }
    if (!f.out_dir.empty()) c.output_dir = f.out_dir;
    if (c.output_dir.empty()) c.output_dir = ".";
    c.estimate.workers = c.workers;
    c.bootstrap.workers = c.workers;
    c.set.workers = c.workers;
    c.set.alpha = c.estimate.alpha;
    validate(c);
    c.master_seed();
    return c;
}

struct Inputs {
    StudyAData study_a;
    StudyBData study_b;
    json digests;
};

Inputs load_inputs(const CommonFlags& f) {
    if (f.study_a.empty() || f.study_b.empty()) throw ConfigError("--study-a and --study-b are required");
    Inputs in;
    in.study_a = io::load_study_a(f.study_a);
    in.study_b = io::load_study_b(f.study_b);
    in.digests = {
        {"study_a", {{"sha256", io::sha256_file(f.study_a)},
                     {"n", {in.study_a.arms[0].surrogates.size(), in.study_a.arms[1].surrogates.size()}}}},
        {"study_b", {{"sha256", io::sha256_file(f.study_b)},
                     {"n", {in.study_b.surrogates[0].size(), in.study_b.surrogates[1].size()}}}},
    };
    return in;
}

struct Manifest {
    json body;
    std::string digest;
};

Manifest make_manifest(const std::string& command, const AnalysisConfig& c, const json& inputs,
                       const std::vector<std::string>& warnings) {
    Manifest m;
    m.body = {{"command", command},
              {"software", {{"name", "spr"}, {"version", SPR_VERSION}}},
              {"config", echo(c)},
              {"inputs", inputs},
              {"warnings", warnings}};
    m.digest = io::sha256_hex(m.body.dump());
    return m;
}

fs::path prepare_output(const AnalysisConfig& c) {
    fs::path dir(c.output_dir);
    fs::create_directories(dir);
    return dir;
}

void write_json(const fs::path& path, const json& doc) {
    io::write_text(path, doc.dump(2) + "\n");
}

void write_manifest(const fs::path& dir, const Manifest& m) {
    json doc = m.body;
    doc["sha256"] = m.digest;
    write_json(dir / "manifest.json", doc);
}

json class_json(const PerturbationClass& cls) {
    json j;
    j["family"] = to_string(family_of(cls));
    if (const auto* gp = std::get_if<GaussianProcessClass>(&cls)) {
        j["sigma2"] = {gp->arms[0].sigma2, gp->arms[1].sigma2};
        j["theta"] = {gp->arms[0].theta, gp->arms[1].theta};
    } else if (const auto* poly = std::get_if<PolynomialClass>(&cls)) {
        j["sigma_diag"] = poly->sigma_diag;
        j["center"] = poly->center;
        j["scale"] = poly->scale;
    } else {
        const auto& f = std::get<FourierClass>(cls);
        j["sigma_diag"] = f.sigma_diag;
        j["offset"] = f.offset;
        j["periods"] = f.periods;
    }
    return j;
}

std::vector<std::string> collect_warnings(const PreconditionReport& pre, const AnalysisContext* ctx) {
    auto warnings = pre.warnings;
    if (ctx && ctx->extrapolated_count() > 0)
        warnings.push_back(std::to_string(ctx->extrapolated_count()) +
                           " Study B points had an empty kernel window and used the smoother fallback");
    return warnings;
}

json preconditions_json(const PreconditionReport& pre) {
    return {{"delta_sb_hat", pre.delta_sb_hat},
            {"study_a_nonempty", pre.study_a_nonempty},
            {"study_b_nonempty", pre.study_b_nonempty},
            {"extrapolation_fraction", pre.extrapolation_fraction},
            {"warnings", pre.warnings}};
}

int cmd_analyze(const CommonFlags& f, std::ostream& out) {
    const auto c = resolve_config(f);
    const auto in = load_inputs(f);
    const auto pre = check_preconditions(in.study_a, in.study_b);
    const auto ctx = make_context(in.study_a, in.study_b, c.smoother);
    const auto cls = realize(c.class_spec, in.study_a);
    const Seed master = c.master_seed();
    const auto result = estimate(ctx, cls, c.estimate, point_estimate_seed(master));
    const auto curves = sample_curves(ctx, cls, point_estimate_seed(master),
                                      std::min(c.curve_draws, c.estimate.draws), c.curve_grid);
    std::optional<BootstrapResult> boot;
    if (c.bootstrap.replicates > 0)
        boot = bootstrap(in.study_a, in.study_b, c.class_spec, c.smoother, c.estimate, c.bootstrap, master);

    const auto manifest = make_manifest("analyze", c, in.digests, collect_warnings(pre, &ctx));
    const auto dir = prepare_output(c);
    const auto& r = result.report;
    json report = {
        {"schema_version", kSchemaVersion},
        {"software", {{"name", "spr"}, {"version", SPR_VERSION}}},
        {"manifest_sha256", manifest.digest},
        {"manifest", manifest.body},
        {"class", class_json(cls)},
        {"estimate",
         {{"draws", result.distribution.size()},
          {"alpha", r.alpha},
          {"p_hat", r.p_hat},
          {"q_alpha_hat", r.q_alpha_hat},
          {"delta_hat", r.closed_form.mu_b},
          {"closed_form", {{"mu_b", r.closed_form.mu_b}, {"sigma_b2", r.closed_form.sigma_b2}}},
          {"p_closed", r.p_closed},
          {"q_closed", r.q_closed}}},
        {"bootstrap", boot ? json{{"replicates", boot->replicate_count},
                                  {"scope", to_string(boot->scope)},
                                  {"common_random_numbers", c.bootstrap.common_random_numbers},
                                  {"se_p", boot->se_p},
                                  {"se_q", boot->se_q}}
                           : json(nullptr)},
        {"smoother",
         {{"kernel", "epanechnikov"},
          {"bandwidth", {ctx.fits[0].bandwidth(), ctx.fits[1].bandwidth()}},
          {"extrapolated_points", ctx.extrapolated_count()}}},
        {"preconditions", preconditions_json(pre)},
        {"warnings", manifest.body["warnings"]},
    };
    write_json(dir / "report.json", report);
    write_manifest(dir, manifest);

    io::CsvTable deltas(manifest.digest, {"draw", "delta"});
    for (std::size_t j = 0; j < result.distribution.deltas.size(); ++j)
        deltas.row().cell(j + 1).cell(result.distribution.deltas[j]);
    deltas.write(dir / "deltas.csv");

    std::vector<std::string> header{"arm", "s", "fitted"};
    const std::size_t n_curves = curves[0].draws.size();
    for (std::size_t j = 0; j < n_curves; ++j) header.push_back("draw_" + std::to_string(j + 1));
    io::CsvTable table(manifest.digest, header);
    for (int g : kArms) {
        for (std::size_t k = 0; k < curves[g].grid.size(); ++k) {
            table.row().cell(g).cell(curves[g].grid[k]).cell(curves[g].fitted[k]);
            for (std::size_t j = 0; j < n_curves; ++j) table.cell(curves[g].draws[j][k]);
        }
    }
    table.write(dir / "curves.csv");

    out << "p_hat " << io::format_number(r.p_hat) << "\nq_alpha_hat " << io::format_number(r.q_alpha_hat) << "\n";
    if (boot) out << "se_p " << io::format_number(boot->se_p) << "\nse_q " << io::format_number(boot->se_q) << "\n";
    for (const auto& w : manifest.body["warnings"]) out << "warning: " << w.get<std::string>() << "\n";
    return kExitOk;
}

int cmd_resilience_set(const CommonFlags& f, std::ostream& out) {
    const auto c = resolve_config(f);
    if (!c.grid) throw ConfigError("resilience-set needs grid ranges (grid_x_min, grid_x_max, grid_y_min, grid_y_max)");
    const auto in = load_inputs(f);
    const auto pre = check_preconditions(in.study_a, in.study_b);
    const auto ctx = make_context(in.study_a, in.study_b, c.smoother);
    const auto base = realize(c.class_spec, in.study_a);
    const auto set = resilience_set(ctx, base, *c.grid, c.set, c.master_seed().child(stream_tag::draws));

    const auto manifest = make_manifest("resilience-set", c, in.digests, collect_warnings(pre, &ctx));
    const auto dir = prepare_output(c);
    write_manifest(dir, manifest);
    const auto names = axis_names(set.family);
    io::CsvTable grid(manifest.digest, {names[0], names[1], "q_alpha", "member"});
    std::size_t members = 0;
    for (const auto& p : set.grid) {
        grid.row().cell(p.x).cell(p.y).cell(p.q_alpha).cell(p.member ? 1 : 0);
        members += p.member ? 1 : 0;
    }
    grid.write(dir / "grid.csv");
    io::CsvTable boundary(manifest.digest, {names[0], names[1]});
    for (const auto& b : set.boundary) boundary.row().cell(b.x).cell(b.y);
    boundary.write(dir / "boundary.csv");
    out << "grid points " << set.grid.size() << ", members " << members << ", boundary points "
        << set.boundary.size() << "\n";
    return kExitOk;
}

int cmd_bootstrap(const CommonFlags& f, std::ostream& out) {
    const auto c = resolve_config(f);
    if (c.bootstrap.replicates < 2) throw ConfigError("bootstrap needs B >= 2");
    const auto in = load_inputs(f);
    const auto pre = check_preconditions(in.study_a, in.study_b);
    const auto boot =
        bootstrap(in.study_a, in.study_b, c.class_spec, c.smoother, c.estimate, c.bootstrap, c.master_seed());
    const auto manifest = make_manifest("bootstrap", c, in.digests, collect_warnings(pre, nullptr));
    const auto dir = prepare_output(c);
    write_manifest(dir, manifest);
    io::CsvTable table(manifest.digest, {"replicate", "p_hat", "q_alpha_hat"});
    for (std::size_t b = 0; b < boot.replicates.size(); ++b)
        table.row().cell(b + 1).cell(boot.replicates[b].p_hat).cell(boot.replicates[b].q_alpha_hat);
    table.write(dir / "bootstrap.csv");
    write_json(dir / "bootstrap.json", {{"schema_version", kSchemaVersion},
                                        {"manifest_sha256", manifest.digest},
                                        {"replicates", boot.replicate_count},
                                        {"scope", to_string(boot.scope)},
                                        {"se_p", boot.se_p},
                                        {"se_q", boot.se_q}});
    out << "se_p " << io::format_number(boot.se_p) << "\nse_q " << io::format_number(boot.se_q) << "\n";
    return kExitOk;
}

int cmd_check(const CommonFlags& f, std::ostream& out) {
    const auto in = load_inputs(f);
    const auto pre = check_preconditions(in.study_a, in.study_b);
    json doc = preconditions_json(pre);
    doc["inputs"] = in.digests;
    out << doc.dump(2) << "\n";
    if (!f.out_dir.empty()) {
        fs::create_directories(f.out_dir);
        write_json(fs::path(f.out_dir) / "check.json", doc);
    }
    return kExitOk;
}

json column_json(const sim::SummaryColumn& s) {
    return {{"truth", s.truth},         {"published_truth", s.published_truth}, {"mean", s.mean},
            {"published_estimate", s.published_estimate}, {"truth_minus_estimate", s.truth_minus_estimate},
            {"ese", s.ese},             {"published_ese", s.published_ese},   {"ase", s.ase},
            {"published_ase", s.published_ase}, {"lower_2_5", s.lower},       {"upper_97_5", s.upper}};
}

int cmd_simulate(const CommonFlags& f, std::ostream& out) {
    auto c = resolve_config(f);
    if (c.settings.empty()) c.settings = sim::setting_ids();
    for (int id : c.settings) sim::setting(id);

    sim::HarnessConfig h;
    h.replications = c.replications;
    h.oracle_replications = c.oracle_replications;
    h.generation.n_a = c.n_a;
    h.generation.n_b = c.n_b;
    h.generation.study_a_structure = c.study_a_structure;
    h.generation.smoother = c.calibrated_smoother
                                ? SmootherConfig{c.smoother.bandwidth, calibrated_simulation_bandwidth(), {}}
                                : c.smoother;
    h.estimate = c.estimate;
    h.bootstrap = c.bootstrap;
    h.bootstrap.scope = c.simulation_scope;
    h.workers = c.workers;
    const auto report = sim::run_study(sim::standard_runs(c.settings, c.misspecified), h, c.master_seed());

    const auto manifest = make_manifest("simulate", c, json::object(), {});
    const auto dir = prepare_output(c);
    write_manifest(dir, manifest);

    const std::vector<std::string> table_header{
        "setting", "description", "algorithm", "measure", "truth", "published_truth", "estimate", "published_estimate",
        "truth_minus_estimate", "estimate_minus_truth", "ese", "published_ese", "ase", "published_ase", "failures",
        "replications"};
    io::CsvTable table2(manifest.digest, table_header);
    io::CsvTable table_a1(manifest.digest, table_header);
    io::CsvTable figure4(manifest.digest,
                         {"setting", "algorithm", "misspecified", "measure", "truth", "mean", "lower_2_5",
                          "upper_97_5", "truth_in_interval"});
    io::CsvTable estimates(manifest.digest, {"setting", "algorithm", "misspecified", "replication", "failed",
                                             "p_hat", "q_alpha_hat", "p_closed", "q_closed", "se_p", "se_q"});
    json rows = json::array();
    for (const auto& row : report.rows) {
        auto& table = row.misspecified ? table_a1 : table2;
        for (const auto* measure : {"p", "q"}) {
            const auto& s = measure[0] == 'p' ? row.p : row.q;
            table.row()
                .cell(row.setting_id)
                .cell(row.description)
                .cell(to_string(row.algorithm))
                .cell(std::string(measure))
                .cell(s.truth)
                .cell(s.published_truth)
                .cell(s.mean)
                .cell(s.published_estimate)
                .cell(s.truth_minus_estimate)
                .cell(-s.truth_minus_estimate)
                .cell(s.ese)
                .cell(s.published_ese)
                .cell(s.ase)
                .cell(s.published_ase)
                .cell(row.failures)
                .cell(report.replications);
            figure4.row()
                .cell(row.setting_id)
                .cell(to_string(row.algorithm))
                .cell(row.misspecified ? 1 : 0)
                .cell(std::string(measure))
                .cell(s.truth)
                .cell(s.mean)
                .cell(s.lower)
                .cell(s.upper)
                .cell(s.lower <= s.truth && s.truth <= s.upper ? 1 : 0);
        }
        for (std::size_t r = 0; r < row.replications.size(); ++r) {
            const auto& rep = row.replications[r];
            estimates.row()
                .cell(row.setting_id)
                .cell(to_string(row.algorithm))
                .cell(row.misspecified ? 1 : 0)
                .cell(r + 1)
                .cell(rep.failed ? 1 : 0)
                .cell(rep.p_hat)
                .cell(rep.q_alpha_hat)
                .cell(rep.p_closed)
                .cell(rep.q_closed)
                .cell(rep.se_p)
                .cell(rep.se_q);
        }
        rows.push_back({{"setting", row.setting_id},
                        {"description", row.description},
                        {"algorithm", to_string(row.algorithm)},
                        {"misspecified", row.misspecified},
                        {"failures", row.failures},
                        {"p", column_json(row.p)},
                        {"q", column_json(row.q)},
                        {"mean_p_closed", row.mean_p_closed},
                        {"oracle_mean_p_closed", row.oracle_mean_p_closed},
                        {"oracle_mc_se", row.oracle_mc_se}});
    }
    table2.write(dir / "table2.csv");
    table_a1.write(dir / "tableA1.csv");
    figure4.write(dir / "figure4.csv");
    estimates.write(dir / "estimates.csv");
    write_json(dir / "simulation.json", {{"schema_version", kSchemaVersion},
                                         {"manifest_sha256", manifest.digest},
                                         {"manifest", manifest.body},
                                         {"replications", report.replications},
                                         {"oracle_replications", report.oracle_replications},
                                         {"rows", rows}});
    out << "simulated " << report.rows.size() << " runs x " << report.replications << " replications\n";
    return kExitOk;
}

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_data) {
    cmd->add_option("--config", f.config_path, "flat JSON configuration file")->check(CLI::ExistingFile);
    if (needs_data) {
        cmd->add_option("--study-a", f.study_a, "Study A CSV (group,s,y)");
        cmd->add_option("--study-b", f.study_b, "Study B CSV (group,s)");
    }
    cmd->add_option("--out", f.out_dir, "output directory");
    cmd->add_option("--seed", f.seed, "master seed (required here or in the config)");
    cmd->add_option("--workers", f.workers, "worker threads; outputs do not depend on it");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sign-flip risk of a surrogate-based treatment effect", "spr"};
    app.set_version_flag("--version", SPR_VERSION);
    app.require_subcommand(1);
    CommonFlags f;

    auto* analyze = app.add_subcommand("analyze", "estimate p-hat, q-hat, bootstrap SEs and plot payloads");
    add_common(analyze, f, true);
    analyze->add_option("--draws", f.draws, "Monte Carlo draws J");
    analyze->add_option("--alpha", f.alpha, "quantile level of the resilience bound");
    analyze->add_option("--bootstrap", f.bootstrap, "bootstrap replicates B (0 skips)");
    analyze->add_option("--scope", f.scope, "study_b_only or both_studies");

    auto* set = app.add_subcommand("resilience-set", "grid classification and boundary of the resilience set");
    add_common(set, f, true);
    set->add_option("--alpha", f.alpha, "quantile level");
    set->add_option("--mode", f.mode, "closed_form or monte_carlo");

    auto* boot = app.add_subcommand("bootstrap", "bootstrap standard errors only");
    add_common(boot, f, true);
    boot->add_option("--draws", f.draws, "Monte Carlo draws J");
    boot->add_option("--alpha", f.alpha, "quantile level");
    boot->add_option("--bootstrap", f.bootstrap, "bootstrap replicates B");
    boot->add_option("--scope", f.scope, "study_b_only or both_studies");

    auto* check = app.add_subcommand("check", "data checks only");
    check->add_option("--study-a", f.study_a, "Study A CSV")->required();
    check->add_option("--study-b", f.study_b, "Study B CSV")->required();
    check->add_option("--out", f.out_dir, "optional directory for check.json");

    auto* simulate = app.add_subcommand("simulate", "simulation study over settings 1-9");
    add_common(simulate, f, false);
    simulate->add_option("--settings", f.settings, "comma-separated setting ids or 'all'");
    simulate->add_option("--R", f.replications, "replications per setting");
    simulate->add_option("--oracle-R", f.oracle_replications, "truth oracle replications");
    simulate->add_option("--B", f.bootstrap, "bootstrap replicates per replication (0 skips)");
    simulate->add_option("--draws", f.draws, "Monte Carlo draws J");
    simulate->add_option("--alpha", f.alpha, "quantile level");
    simulate->add_option("--scope", f.scope, "bootstrap scope");
    simulate->add_flag("--no-misspecified", f.no_misspecified, "skip the misspecification runs");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << SPR_VERSION << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        int code = kExitOk;
        if (analyze->parsed()) code = cmd_analyze(f, out);
        else if (set->parsed()) code = cmd_resilience_set(f, out);
        else if (boot->parsed()) code = cmd_bootstrap(f, out);
        else if (check->parsed()) code = cmd_check(f, out);
        else if (simulate->parsed()) code = cmd_simulate(f, out);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        err << "finished in " << seconds << " s\n";
        return code;
    } catch (const SchemaError& e) {
        err << "schema error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace spr::cli
