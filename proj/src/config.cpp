#include "qlab/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace qlab {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(path, path + " must be a JSON object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ConfigError(path + "." + key, "unknown key '" + key + "' in " + path);
}

double need_number(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) throw ConfigError(path + "." + key, "missing field " + key);
    if (!obj[key].is_number()) throw ConfigError(path + "." + key, key + " must be a number");
    return obj[key].get<double>();
}

double number_or(const json& obj, const std::string& path, const std::string& key,
                 double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError(path + "." + key, key + " must be a number");
    return obj[key].get<double>();
}

std::int64_t need_integer(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) throw ConfigError(path + "." + key, "missing field " + key);
    if (!obj[key].is_number_integer())
        throw ConfigError(path + "." + key, key + " must be an integer");
    return obj[key].get<std::int64_t>();
}

std::string need_string(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) throw ConfigError(path + "." + key, "missing field " + key);
    if (!obj[key].is_string()) throw ConfigError(path + "." + key, key + " must be a string");
    return obj[key].get<std::string>();
}

TrueDensity parse_density(const json& obj, const std::string& path) {
    const std::string kind = need_string(obj, path, "kind");
    if (kind == "gaussian") {
        check_keys(obj, path, {"kind", "mean", "sd"});
        return TrueDensity::gaussian(need_number(obj, path, "mean"),
                                     need_number(obj, path, "sd"));
    }
    if (kind == "student_t") {
        check_keys(obj, path, {"kind", "nu", "center", "scale"});
        return TrueDensity::student_t(need_number(obj, path, "nu"),
                                      number_or(obj, path, "center", 0.0),
                                      number_or(obj, path, "scale", 1.0));
    }
    if (kind == "mixture") {
        check_keys(obj, path, {"kind", "weight", "mean1", "sd1", "mean2", "sd2"});
        return TrueDensity::mixture(need_number(obj, path, "weight"),
                                    need_number(obj, path, "mean1"),
                                    need_number(obj, path, "sd1"),
                                    need_number(obj, path, "mean2"),
                                    need_number(obj, path, "sd2"));
    }
    if (kind == "skewed") {
        check_keys(obj, path, {"kind", "mode", "sd_left", "sd_right"});
        return TrueDensity::skewed(need_number(obj, path, "mode"),
                                   need_number(obj, path, "sd_left"),
                                   need_number(obj, path, "sd_right"));
    }
    throw ConfigError(path + ".kind", "unknown density kind '" + kind + "'");
}

std::vector<std::pair<double, double>> parse_intervals(const json& arr, const std::string& path) {
    if (!arr.is_array() || arr.empty())
        throw ConfigError(path, path + " must be a nonempty array of [lo, hi] pairs");
    std::vector<std::pair<double, double>> out;
    for (const auto& e : arr) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw ConfigError(path, path + " entries must be [lo, hi] number pairs");
        out.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    return out;
}

GridPrior parse_prior_1d(const json& obj, const std::string& path) {
    const std::string kind = need_string(obj, path, "kind");
    try {
        if (kind == "uniform") {
            check_keys(obj, path, {"kind", "lo", "hi", "points"});
            return GridPrior::uniform(need_number(obj, path, "lo"), need_number(obj, path, "hi"),
                                      static_cast<int>(need_integer(obj, path, "points")));
        }
        if (kind == "truncated_gaussian") {
            check_keys(obj, path, {"kind", "mean", "sd", "lo", "hi", "points"});
            return GridPrior::truncated_gaussian(
                need_number(obj, path, "mean"), need_number(obj, path, "sd"),
                need_number(obj, path, "lo"), need_number(obj, path, "hi"),
                static_cast<int>(need_integer(obj, path, "points")));
        }
        if (kind == "atoms") {
            check_keys(obj, path, {"kind", "points", "weights"});
            if (!obj["points"].is_array() || !obj["weights"].is_array())
                throw ConfigError(path, "atoms prior needs points and weights arrays");
            return GridPrior::atoms(obj["points"].get<std::vector<double>>(),
                                    obj["weights"].get<std::vector<double>>());
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
    throw ConfigError(path + ".kind", "unknown prior kind '" + kind + "'");
}

} // namespace

IidExperimentSpec LabConfig::iid_spec() const {
    if (!truth || !prior1d) throw ConfigError("true_model", "iid config incomplete");
    IidExperimentSpec s{*truth, tau_level(), *prior1d, eps, n_grid, replications, seed};
    return s;
}

InidExperimentSpec LabConfig::inid_spec() const {
    if (!family || !design || !noise || !prior_nd)
        throw ConfigError("family", "inid config incomplete");
    InidExperimentSpec s{*family,
                         *design,
                         *noise,
                         beta_star,
                         scale_profile,
                         tau_level(),
                         *prior_nd,
                         eps,
                         n_grid,
                         replications,
                         seed,
                         sup_grid_resolution,
                         theta_table_cap_mb << 20};
    return s;
}

LabConfig parse_config(const json& doc) {
    check_keys(doc, "config",
               {"scenario", "tau", "eps", "n_grid", "replications", "seed", "true_model",
                "prior", "family", "design", "knobs", "diagnostics"});
    LabConfig cfg;

    cfg.scenario = need_string(doc, "config", "scenario");
    if (cfg.scenario != "iid" && cfg.scenario != "inid")
        throw ConfigError("config.scenario", "scenario must be 'iid' or 'inid'");

    cfg.tau = need_number(doc, "config", "tau");
    if (!(cfg.tau > 0.0 && cfg.tau < 1.0))
        throw ConfigError("config.tau", "tau must lie in (0,1)");

    cfg.eps = need_number(doc, "config", "eps");
    if (!(cfg.eps > 0.0)) throw ConfigError("config.eps", "eps must be positive");

    if (!doc.contains("n_grid") || !doc["n_grid"].is_array() || doc["n_grid"].empty())
        throw ConfigError("config.n_grid", "n_grid must be a nonempty integer array");
    for (const auto& e : doc["n_grid"]) {
        if (!e.is_number_integer())
            throw ConfigError("config.n_grid", "n_grid entries must be integers");
        cfg.n_grid.push_back(e.get<std::int64_t>());
    }
    for (std::size_t i = 0; i + 1 < cfg.n_grid.size(); ++i)
        if (!(cfg.n_grid[i] < cfg.n_grid[i + 1]))
            throw ConfigError("config.n_grid", "n_grid must be strictly increasing");
    if (cfg.n_grid.front() < 0)
        throw ConfigError("config.n_grid", "n_grid entries must be nonnegative");

    const std::int64_t reps = need_integer(doc, "config", "replications");
    if (reps < 1) throw ConfigError("config.replications", "replications must be >= 1");
    cfg.replications = static_cast<int>(reps);

    if (!doc.contains("seed") || !doc["seed"].is_number_integer())
        throw ConfigError("config.seed", "seed must be an integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();

    if (doc.contains("knobs")) {
        check_keys(doc["knobs"], "config.knobs",
                   {"sup_grid_resolution", "theta_table_cap_mb"});
        const std::int64_t res =
            static_cast<std::int64_t>(number_or(doc["knobs"], "config.knobs",
                                                "sup_grid_resolution", 512.0));
        if (res < 2) throw ConfigError("config.knobs.sup_grid_resolution", "must be >= 2");
        cfg.sup_grid_resolution = static_cast<int>(res);
        const double cap = number_or(doc["knobs"], "config.knobs", "theta_table_cap_mb", 512.0);
        if (!(cap > 0)) throw ConfigError("config.knobs.theta_table_cap_mb", "must be positive");
        cfg.theta_table_cap_mb = static_cast<std::size_t>(cap);
    }

    if (!doc.contains("true_model"))
        throw ConfigError("config.true_model", "missing true_model");
    if (!doc.contains("prior")) throw ConfigError("config.prior", "missing prior");

    if (cfg.scenario == "iid") {
        for (const char* k : {"family", "design"})
            if (doc.contains(k))
                throw ConfigError(std::string("config.") + k,
                                  std::string(k) + " is only valid for the inid scenario");
        cfg.truth = parse_density(doc["true_model"], "config.true_model");
        cfg.prior1d = parse_prior_1d(doc["prior"], "config.prior");
    } else {
        if (!doc.contains("family")) throw ConfigError("config.family", "missing family");
        if (!doc.contains("design")) throw ConfigError("config.design", "missing design");

        const auto& fam = doc["family"];
        check_keys(fam, "config.family",
                   {"kind", "space_bounds", "norm", "parameter_box", "bound"});
        const std::string fkind = need_string(fam, "config.family", "kind");
        if (fkind != "affine" && fkind != "sine")
            throw ConfigError("config.family.kind", "family kind must be 'affine' or 'sine'");
        if (!fam.contains("space_bounds"))
            throw ConfigError("config.family.space_bounds", "missing space_bounds");
        auto space_bounds = parse_intervals(fam["space_bounds"], "config.family.space_bounds");
        CovariateSpace::Norm norm = CovariateSpace::Norm::euclidean;
        if (fam.contains("norm")) {
            const std::string ns = need_string(fam, "config.family", "norm");
            if (ns == "euclidean")
                norm = CovariateSpace::Norm::euclidean;
            else if (ns == "max")
                norm = CovariateSpace::Norm::max;
            else
                throw ConfigError("config.family.norm", "norm must be 'euclidean' or 'max'");
        }
        if (!fam.contains("parameter_box"))
            throw ConfigError("config.family.parameter_box", "missing parameter_box");
        auto box = parse_intervals(fam["parameter_box"], "config.family.parameter_box");
        const double bound = need_number(fam, "config.family", "bound");
        CovariateSpace space(space_bounds, norm);
        try {
            cfg.family = ThetaFamily(fkind == "affine" ? ThetaFamily::Kind::affine
                                                       : ThetaFamily::Kind::sine,
                                     space, box, bound);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("config.family", e.what());
        }

        const auto& des = doc["design"];
        check_keys(des, "config.design", {"kind", "points_per_dim", "seed", "points"});
        const std::string dkind = need_string(des, "config.design", "kind");
        try {
            if (dkind == "cyclic_grid") {
                cfg.design = CovariateDesign::cyclic_grid(
                    space, static_cast<int>(need_integer(des, "config.design", "points_per_dim")));
            } else if (dkind == "frozen_uniform") {
                cfg.design = CovariateDesign::frozen_uniform(
                    space, static_cast<std::uint64_t>(need_integer(des, "config.design", "seed")));
            } else if (dkind == "list") {
                if (!des.contains("points") || !des["points"].is_array())
                    throw ConfigError("config.design.points", "list design needs points");
                std::vector<Point> pts;
                for (const auto& p : des["points"]) pts.push_back(p.get<Point>());
                cfg.design = CovariateDesign::fixed_list(space, std::move(pts));
            } else {
                throw ConfigError("config.design.kind", "unknown design kind '" + dkind + "'");
            }
        } catch (const std::invalid_argument& e) {
            throw ConfigError("config.design", e.what());
        }

        const auto& tm = doc["true_model"];
        check_keys(tm, "config.true_model", {"kind", "noise", "center_beta", "scale"});
        if (need_string(tm, "config.true_model", "kind") != "quantile_shift")
            throw ConfigError("config.true_model.kind",
                              "inid true_model kind must be 'quantile_shift'");
        if (!tm.contains("noise"))
            throw ConfigError("config.true_model.noise", "missing noise density");
        cfg.noise = parse_density(tm["noise"], "config.true_model.noise");
        if (!tm.contains("center_beta") || !tm["center_beta"].is_array())
            throw ConfigError("config.true_model.center_beta", "missing center_beta array");
        cfg.beta_star = tm["center_beta"].get<std::vector<double>>();
        if (!cfg.family->in_box(cfg.beta_star))
            throw ConfigError("config.true_model.center_beta",
                              "center_beta outside the parameter box");
        if (tm.contains("scale")) {
            const auto sc = tm["scale"].get<std::vector<double>>();
            if (sc.size() != 2)
                throw ConfigError("config.true_model.scale", "scale must be [a, b]");
            cfg.scale_profile = {sc[0], sc[1]};
            for (const auto& [xlo, xhi] : space.bounds) {
                if (sc[0] + sc[1] * xlo <= 0.0 || sc[0] + sc[1] * xhi <= 0.0)
                    throw ConfigError("config.true_model.scale",
                                      "scale profile must stay positive on the space");
                break; // profile depends on the first coordinate only
            }
        }

        const auto& pr = doc["prior"];
        check_keys(pr, "config.prior", {"kind", "points_per_dim"});
        if (need_string(pr, "config.prior", "kind") != "uniform_box")
            throw ConfigError("config.prior.kind", "inid prior kind must be 'uniform_box'");
        const int ppd = static_cast<int>(need_integer(pr, "config.prior", "points_per_dim"));
        if (ppd < 1) throw ConfigError("config.prior.points_per_dim", "must be >= 1");
        cfg.prior_nd = BoxGridPrior::uniform(cfg.family->parameter_box(), ppd);
    }

    if (doc.contains("diagnostics")) {
        const auto& dg = doc["diagnostics"];
        check_keys(dg, "config.diagnostics",
                   {"t1", "beta_rate", "growth_n_grid", "decay_n_grid", "decay_replications",
                    "boundary", "galpha_t", "galpha_t_prime"});
        if (dg.contains("t1")) cfg.diagnostics.t1 = need_number(dg, "config.diagnostics", "t1");
        cfg.diagnostics.beta_rate = number_or(dg, "config.diagnostics", "beta_rate", 0.01);
        if (!(cfg.diagnostics.beta_rate > 0.0))
            throw ConfigError("config.diagnostics.beta_rate", "beta_rate must be positive");
        if (dg.contains("growth_n_grid"))
            cfg.diagnostics.growth_n_grid = dg["growth_n_grid"].get<std::vector<std::int64_t>>();
        if (dg.contains("decay_n_grid"))
            cfg.diagnostics.decay_n_grid = dg["decay_n_grid"].get<std::vector<std::int64_t>>();
        if (dg.contains("decay_replications")) {
            cfg.diagnostics.decay_replications =
                static_cast<int>(need_integer(dg, "config.diagnostics", "decay_replications"));
            if (cfg.diagnostics.decay_replications < 2)
                throw ConfigError("config.diagnostics.decay_replications", "must be >= 2");
        }
        if (dg.contains("boundary"))
            cfg.diagnostics.boundary = need_number(dg, "config.diagnostics", "boundary");
        if (dg.contains("galpha_t"))
            cfg.diagnostics.g_t = need_number(dg, "config.diagnostics", "galpha_t");
        if (dg.contains("galpha_t_prime"))
            cfg.diagnostics.g_t_prime = need_number(dg, "config.diagnostics", "galpha_t_prime");
    }

    return cfg;
}

nlohmann::json load_config_document(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "config file unreadable: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ConfigError("json", std::string("config is not valid JSON: ") + e.what());
    }
    if (doc.is_object() && doc.contains("resolved_config")) return doc["resolved_config"];
    return doc;
}

LabConfig parse_config_file(const std::string& path) {
    return parse_config(load_config_document(path));
}

void apply_smoke_scale(nlohmann::json& doc) {
    if (!doc.is_object()) return;
    if (doc.contains("n_grid") && doc["n_grid"].is_array()) {
        std::vector<std::int64_t> kept;
        for (const auto& e : doc["n_grid"])
            if (e.is_number_integer() && e.get<std::int64_t>() <= 200)
                kept.push_back(e.get<std::int64_t>());
        if (kept.empty()) kept = {50, 200};
        doc["n_grid"] = kept;
    }
    if (doc.contains("replications") && doc["replications"].is_number_integer())
        doc["replications"] = std::min<std::int64_t>(doc["replications"].get<std::int64_t>(), 5);
    if (doc.contains("prior") && doc["prior"].is_object()) {
        auto& prior = doc["prior"];
        if (prior.contains("points") && prior["points"].is_number_integer())
            prior["points"] = std::min<std::int64_t>(prior["points"].get<std::int64_t>(), 512);
        if (prior.contains("points_per_dim") && prior["points_per_dim"].is_number_integer()) {
            std::int64_t cap = 33;
            if (doc.contains("family") && doc["family"].is_object() &&
                doc["family"].contains("parameter_box") &&
                doc["family"]["parameter_box"].is_array() &&
                doc["family"]["parameter_box"].size() >= 3)
                cap = 17;
            prior["points_per_dim"] =
                std::min<std::int64_t>(prior["points_per_dim"].get<std::int64_t>(), cap);
        }
    }
    nlohmann::json knobs =
        doc.contains("knobs") && doc["knobs"].is_object() ? doc["knobs"] : nlohmann::json::object();
    std::int64_t res = 128;
    if (knobs.contains("sup_grid_resolution") && knobs["sup_grid_resolution"].is_number_integer())
        res = std::min<std::int64_t>(knobs["sup_grid_resolution"].get<std::int64_t>(), 128);
    knobs["sup_grid_resolution"] = res;
    doc["knobs"] = knobs;
    if (doc.contains("diagnostics") && doc["diagnostics"].is_object()) {
        auto& dg = doc["diagnostics"];
        if (dg.contains("decay_replications") && dg["decay_replications"].is_number_integer())
            dg["decay_replications"] =
                std::min<std::int64_t>(dg["decay_replications"].get<std::int64_t>(), 50);
    }
}

std::uint64_t config_hash(const nlohmann::json& doc) {
    const std::string dump = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace qlab
