#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qlab/config.hpp"
#include "qlab/csv.hpp"
#include "qlab/kernels.hpp"
#include "qlab/lab.hpp"
#include "qlab/rng.hpp"
#include "qlab/version.hpp"

namespace fs = std::filesystem;
using qlab::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitAudit = 3;

[[noreturn]] void die_config(const std::string& field, const std::string& message) {
    std::cerr << "ERR:" << kExitConfig << ":" << field << " " << message << "\n";
    std::exit(kExitConfig);
}

[[noreturn]] void die_audit(const std::string& assumption, const std::string& message) {
    std::cerr << "ERR:" << kExitAudit << ":" << assumption << " " << message << "\n";
    std::exit(kExitAudit);
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed_override;
    std::string scale = "full";
    int threads = 1;
    bool allow_audit_failure = false;
};

nlohmann::json load_scaled_document(const CommonArgs& args) {
    nlohmann::json doc;
    try {
        doc = qlab::load_config_document(args.config_path);
    } catch (const qlab::ConfigError& e) {
        die_config(e.field(), e.what());
    }
    if (args.scale == "smoke") qlab::apply_smoke_scale(doc);
    if (args.seed_override) doc["seed"] = *args.seed_override;
    return doc;
}

qlab::LabConfig parse_or_die(const nlohmann::json& doc) {
    try {
        return qlab::parse_config(doc);
    } catch (const qlab::ConfigError& e) {
        die_config(e.field(), e.what());
    } catch (const std::invalid_argument& e) {
        die_config("config", e.what());
    }
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) die_config("out", "cannot create output directory " + dir);
}

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) die_config("out", "cannot write " + path.string());
    out << body;
}

void write_manifest(const CommonArgs& args, const nlohmann::json& doc,
                    const qlab::LabConfig& cfg, const std::string& output_name) {
    ordered_json manifest;
    manifest["tool"] = "qclab";
    manifest["version"] = qlab::kVersion;
    manifest["config_hash"] = qlab::fmt_uint(qlab::config_hash(doc));
    manifest["seed"] = cfg.seed;
    manifest["scale"] = args.scale;
    manifest["threads"] = args.threads;
    manifest["kernel_backend"] = qlab::kernels::backend_name();
    manifest["output"] = output_name;
    manifest["resolved_config"] = doc;
    write_text(fs::path(args.out_dir) / "manifest.json", manifest.dump(2) + "\n");
}

std::string rows_to_csv(const std::vector<qlab::ExperimentRow>& rows) {
    std::string csv =
        "scenario,n,replication,seed,eps,tau,mass_outside,log_R2n,log_R1n_outside,runtime_ms\n";
    for (const auto& r : rows) {
        csv += r.scenario;
        csv += ',';
        csv += qlab::fmt_int(r.n);
        csv += ',';
        csv += qlab::fmt_int(r.replication);
        csv += ',';
        csv += qlab::fmt_uint(r.seed);
        csv += ',';
        csv += qlab::fmt_double(r.eps);
        csv += ',';
        csv += qlab::fmt_double(r.tau);
        csv += ',';
        csv += qlab::fmt_double(r.mass_outside);
        csv += ',';
        csv += qlab::fmt_double(r.log_r2n);
        csv += ',';
        csv += qlab::fmt_double(r.log_r1n_outside);
        csv += ',';
        csv += qlab::fmt_int(r.runtime_ms);
        csv += '\n';
    }
    return csv;
}

qlab::AuditReport audit_of(const qlab::LabConfig& cfg) {
    if (cfg.scenario == "iid") {
        qlab::IidExperiment exp(cfg.iid_spec());
        return qlab::run_assumption_audit(exp);
    }
    qlab::InidExperiment exp(cfg.inid_spec());
    return qlab::run_assumption_audit(exp);
}

int cmd_simulate(const CommonArgs& args) {
    const auto doc = load_scaled_document(args);
    const auto cfg = parse_or_die(doc);
    ensure_out_dir(args.out_dir);

    try {
        qlab::AuditReport audit;
        std::vector<qlab::ExperimentRow> rows;
        if (cfg.scenario == "iid") {
            qlab::IidExperiment exp(cfg.iid_spec());
            audit = qlab::run_assumption_audit(exp);
            if (!audit.all_pass() && !args.allow_audit_failure) {
                const auto failed = audit.failures();
                die_audit(failed.front(), "audit refused the run: assumption " + failed.front() +
                                              " failed; rerun with --allow-audit-failure to "
                                              "study the failure mode");
            }
            rows = exp.run(cfg.seed, args.threads);
        } else {
            qlab::InidExperiment exp(cfg.inid_spec());
            audit = qlab::run_assumption_audit(exp);
            if (!audit.all_pass() && !args.allow_audit_failure) {
                const auto failed = audit.failures();
                die_audit(failed.front(), "audit refused the run: assumption " + failed.front() +
                                              " failed; rerun with --allow-audit-failure to "
                                              "study the failure mode");
            }
            rows = exp.run(cfg.seed, args.threads);
        }
        write_text(fs::path(args.out_dir) / "experiment.csv", rows_to_csv(rows));
        write_text(fs::path(args.out_dir) / "audit.json", audit.to_json().dump(2) + "\n");
        write_manifest(args, doc, cfg, "experiment.csv");

        const auto trend = qlab::trend_of(rows);
        std::cout << "wrote " << (fs::path(args.out_dir) / "experiment.csv").string() << " ("
                  << rows.size() << " rows); final median mass_outside = "
                  << qlab::fmt_double(trend.final_median) << "\n";
        return 0;
    } catch (const qlab::ConfigError& e) {
        die_config(e.field(), e.what());
    } catch (const std::invalid_argument& e) {
        die_config("config", e.what());
    }
}

int cmd_audit(const CommonArgs& args) {
    const auto doc = load_scaled_document(args);
    const auto cfg = parse_or_die(doc);
    ensure_out_dir(args.out_dir);
    try {
        const auto report = audit_of(cfg);
        write_text(fs::path(args.out_dir) / "audit.json", report.to_json().dump(2) + "\n");
        write_manifest(args, doc, cfg, "audit.json");
        std::cout << "wrote " << (fs::path(args.out_dir) / "audit.json").string()
                  << (report.all_pass() ? " (all assumptions pass)" : " (failures present)")
                  << "\n";
        return 0;
    } catch (const qlab::ConfigError& e) {
        die_config(e.field(), e.what());
    } catch (const std::invalid_argument& e) {
        die_config("config", e.what());
    }
}

int cmd_bounds(const CommonArgs& args, const std::string& which) {
    const auto doc = load_scaled_document(args);
    const auto cfg = parse_or_die(doc);
    ensure_out_dir(args.out_dir);
    if (cfg.scenario != "iid")
        die_config("scenario", "bounds diagnostics require an iid config");

    try {
        qlab::IidExperiment exp(cfg.iid_spec());
        const auto& spec = exp.spec();
        const double theta_star = exp.theta_star();
        const auto& diag = cfg.diagnostics;

        if (which == "prop1") {
            std::int64_t n_max = 0;
            for (auto n : diag.growth_n_grid) n_max = std::max(n_max, n);
            qlab::Rng rng(qlab::derive_stream(cfg.seed, 0, 0x70726f7031ULL));
            std::vector<double> y(static_cast<std::size_t>(n_max));
            for (auto& v : y) v = spec.truth.sample(rng);
            const auto rows = qlab::denominator_growth_diag(y, spec.prior, theta_star, spec.tau,
                                                            diag.beta_rate, diag.growth_n_grid);
            std::string csv = "n,log_R2n,log_R2n_plus_n_beta\n";
            for (const auto& r : rows)
                csv += qlab::fmt_int(r.n) + "," + qlab::fmt_double(r.log_r2n) + "," +
                       qlab::fmt_double(r.value) + "\n";
            write_text(fs::path(args.out_dir) / "bounds_prop1.csv", csv);
        } else if (which == "prop2") {
            const double delta = qlab::delta_lower_bound(spec.truth, theta_star, spec.eps);
            const double t1 = diag.t1 ? *diag.t1 : theta_star + 2.0 * spec.eps;
            const double alpha =
                qlab::find_decay_alpha(spec.truth, t1, theta_star, spec.tau, delta);
            const auto nu =
                qlab::restrict_to_affinity_ball(spec.prior, spec.truth, t1, spec.tau, delta);
            const auto rows = qlab::numerator_decay_diag(
                spec.truth, t1, theta_star, spec.tau, nu, alpha, delta, diag.decay_n_grid,
                diag.decay_replications, qlab::derive_stream(cfg.seed, 0, 0x70726f7032ULL));
            std::string csv = "n,empirical_mean,std_error,bound,quadrature_check\n";
            for (const auto& r : rows)
                csv += qlab::fmt_int(r.n) + "," + qlab::fmt_double(r.empirical_mean) + "," +
                       qlab::fmt_double(r.std_error) + "," + qlab::fmt_double(r.bound) + "," +
                       qlab::fmt_double(r.quadrature_check) + "\n";
            write_text(fs::path(args.out_dir) / "bounds_prop2.csv", csv);
        } else if (which == "corollary1") {
            const auto rep = qlab::run_tail_split(exp, diag.boundary);
            write_text(fs::path(args.out_dir) / "bounds_corollary1.json",
                       rep.to_json().dump(2) + "\n");
        } else { // galpha
            const double t = diag.g_t ? *diag.g_t : theta_star + 1.0;
            const double tp = diag.g_t_prime ? *diag.g_t_prime : theta_star;
            const double gap = qlab::kl_gap(spec.truth, t, tp, spec.tau);
            std::string csv = "alpha,g_alpha,kl_gap\n";
            for (double a : qlab::kAlphaGrid)
                csv += qlab::fmt_double(a) + "," +
                       qlab::fmt_double(qlab::g_alpha(spec.truth, t, tp, a, spec.tau)) + "," +
                       qlab::fmt_double(gap) + "\n";
            write_text(fs::path(args.out_dir) / "bounds_galpha.csv", csv);
        }
        write_manifest(args, doc, cfg, "bounds_" + which);
        std::cout << "wrote bounds_" << which << " to " << args.out_dir << "\n";
        return 0;
    } catch (const qlab::ConfigError& e) {
        die_config(e.field(), e.what());
    } catch (const std::invalid_argument& e) {
        die_config("config", e.what());
    } catch (const std::runtime_error& e) {
        die_config("diagnostics", e.what());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Posterior-concentration laboratory for quantile working models"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string which = "galpha";

    auto add_common = [&](CLI::App* cmd, bool with_seed = true) {
        cmd->add_option("config", args.config_path, "configuration JSON (or manifest)")
            ->required();
        cmd->add_option("--out", args.out_dir, "output directory");
        if (with_seed) {
            cmd->add_option_function<std::uint64_t>(
                "--seed", [&](const std::uint64_t& s) { args.seed_override = s; },
                "override the config seed");
        }
        cmd->add_option("--scale", args.scale, "run scale")
            ->check(CLI::IsMember({"smoke", "full"}));
        cmd->add_option("--threads", args.threads, "worker threads for replications")
            ->check(CLI::PositiveNumber);
    };

    auto* sim = app.add_subcommand("simulate", "run a consistency experiment");
    add_common(sim);
    sim->add_flag("--allow-audit-failure", args.allow_audit_failure,
                  "run even when the assumption audit fails");

    auto* aud = app.add_subcommand("audit", "run the assumption audit only");
    add_common(aud);

    auto* bnd = app.add_subcommand("bounds", "emit bound diagnostic tables");
    add_common(bnd);
    bnd->add_option("--which", which, "diagnostic to emit")
        ->required()
        ->check(CLI::IsMember({"prop1", "prop2", "corollary1", "galpha"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::cerr << "ERR:" << kExitConfig << ":cli " << e.what() << "\n";
        return kExitConfig;
    }

    if (sim->parsed()) return cmd_simulate(args);
    if (aud->parsed()) return cmd_audit(args);
    return cmd_bounds(args, which);
}
