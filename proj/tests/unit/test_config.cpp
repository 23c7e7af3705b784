#include <doctest.h>

#include <json.hpp>

#include "qlab/config.hpp"

using namespace qlab;
using nlohmann::json;

namespace {

json base_iid() {
    return json::parse(R"({
        "scenario": "iid",
        "tau": 0.5,
        "eps": 0.25,
        "n_grid": [50, 200],
        "replications": 4,
        "seed": 11,
        "true_model": {"kind": "gaussian", "mean": 0.0, "sd": 1.0},
        "prior": {"kind": "uniform", "lo": -5.0, "hi": 5.0, "points": 64}
    })");
}

json base_inid() {
    return json::parse(R"({
        "scenario": "inid",
        "tau": 0.5,
        "eps": 0.3,
        "n_grid": [50, 200],
        "replications": 4,
        "seed": 11,
        "family": {
            "kind": "affine",
            "space_bounds": [[0.0, 1.0]],
            "parameter_box": [[-2.0, 2.0], [-2.0, 2.0]],
            "bound": 4.0
        },
        "design": {"kind": "cyclic_grid", "points_per_dim": 10},
        "true_model": {
            "kind": "quantile_shift",
            "noise": {"kind": "gaussian", "mean": 0.0, "sd": 1.0},
            "center_beta": [0.5, 1.0]
        },
        "prior": {"kind": "uniform_box", "points_per_dim": 9}
    })");
}

std::string field_of_failure(const json& doc) {
    try {
        parse_config(doc);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

} // namespace

TEST_CASE("valid configs parse into specs") {
    const auto iid = parse_config(base_iid());
    CHECK(iid.scenario == "iid");
    const auto spec = iid.iid_spec();
    CHECK(spec.prior.size() == 64);
    CHECK(spec.n_grid.size() == 2);

    const auto inid = parse_config(base_inid());
    const auto ispec = inid.inid_spec();
    CHECK(ispec.prior.size() == 81);
    CHECK(ispec.beta_star.size() == 2);
    REQUIRE(inid.design.has_value());
    CHECK(inid.design->period().has_value());
}

TEST_CASE("unknown keys are rejected wherever they appear") {
    auto doc = base_iid();
    doc["surprise"] = 1;
    CHECK(field_of_failure(doc) == "config.surprise");

    doc = base_iid();
    doc["true_model"]["skew"] = 2.0;
    CHECK(field_of_failure(doc) == "config.true_model.skew");

    doc = base_inid();
    doc["design"]["stride"] = 3;
    CHECK(field_of_failure(doc) == "config.design.stride");
}

TEST_CASE("range violations carry their field") {
    auto doc = base_iid();
    doc["tau"] = 1.2;
    CHECK(field_of_failure(doc) == "config.tau");

    doc = base_iid();
    doc["eps"] = -0.1;
    CHECK(field_of_failure(doc) == "config.eps");

    doc = base_iid();
    doc["n_grid"] = {200, 50};
    CHECK(field_of_failure(doc) == "config.n_grid");

    doc = base_iid();
    doc["replications"] = 0;
    CHECK(field_of_failure(doc) == "config.replications");

    doc = base_iid();
    doc["prior"]["points"] = 0;
    CHECK(field_of_failure(doc) == "config.prior");

    doc = base_inid();
    doc["true_model"]["center_beta"] = {5.0, 0.0};
    CHECK(field_of_failure(doc) == "config.true_model.center_beta");

    doc = base_inid();
    doc["true_model"]["scale"] = {0.1, -0.5};
    CHECK(field_of_failure(doc) == "config.true_model.scale");

    doc = base_inid();
    doc["family"]["bound"] = 1.0; // the box reaches |theta| = 4
    CHECK(field_of_failure(doc) == "config.family");
}

TEST_CASE("scenario cross-contamination is rejected") {
    auto doc = base_iid();
    doc["family"] = base_inid()["family"];
    CHECK(field_of_failure(doc) == "config.family");
}

TEST_CASE("file loading and manifest unwrapping") {
    CHECK_THROWS_AS(parse_config_file("/nonexistent/qclab.json"), ConfigError);

    const auto dir = std::filesystem::temp_directory_path() / "qlab_config_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream bad(dir / "bad.json");
        bad << "{ not json";
    }
    CHECK_THROWS_AS(parse_config_file((dir / "bad.json").string()), ConfigError);

    {
        std::ofstream good(dir / "good.json");
        good << base_iid().dump();
    }
    CHECK(parse_config_file((dir / "good.json").string()).scenario == "iid");

    {
        json manifest;
        manifest["tool"] = "qclab";
        manifest["resolved_config"] = base_iid();
        std::ofstream m(dir / "manifest.json");
        m << manifest.dump();
    }
    CHECK(parse_config_file((dir / "manifest.json").string()).scenario == "iid");
}

TEST_CASE("smoke scaling caps the expensive knobs") {
    auto doc = base_iid();
    doc["n_grid"] = {50, 200, 800, 3200};
    doc["replications"] = 20;
    doc["prior"]["points"] = 2048;
    apply_smoke_scale(doc);
    CHECK(doc["n_grid"] == json({50, 200}));
    CHECK(doc["replications"] == 5);
    CHECK(doc["prior"]["points"] == 512);
    CHECK(doc["knobs"]["sup_grid_resolution"] == 128);

    auto nd = base_inid();
    nd["prior"]["points_per_dim"] = 129;
    apply_smoke_scale(nd);
    CHECK(nd["prior"]["points_per_dim"] == 33);

    auto all_large = base_iid();
    all_large["n_grid"] = {800, 3200};
    apply_smoke_scale(all_large);
    CHECK(all_large["n_grid"] == json({50, 200}));
}

TEST_CASE("config hash tracks content") {
    const auto a = config_hash(base_iid());
    CHECK(a == config_hash(base_iid()));
    auto doc = base_iid();
    doc["seed"] = 12;
    CHECK(a != config_hash(doc));
}
