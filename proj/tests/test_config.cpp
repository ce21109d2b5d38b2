#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "bifield/config.hpp"
#include "bifield/errors.hpp"
#include "bifield/model.hpp"

using namespace bifield;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::io_error;  // sentinel: nothing was thrown
}

bool message_mentions(const std::function<void()>& fn, const std::string& needle) {
    try {
        fn();
    } catch (const Error& e) {
        return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults resolve to the reference model") {
    ExperimentConfig cfg = parse_config_text("{}");
    CHECK(cfg.model.dimension == 1);
    CHECK(compute_gap(cfg.model) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(cfg.model.split_rates == std::vector<double>{0.3});
    CHECK(cfg.sim.record_times == std::vector<double>{1.0});  // resolved
    CHECK(cfg.sim.replicates == 10000);
    CHECK(cfg.hierarchy.max_order == 4);
    CHECK(cfg.cumulants.tol == 1e-8);
    CHECK(cfg.oracle.torus_side == 3);
    CHECK(cfg.oracle.cap == 4);
    CHECK(cfg.output_dir == "out");
    CHECK(cfg.seed == 1);
}

TEST_CASE("minimal explicit config computes the gap") {
    const char* text = R"({
        "model": {
            "dimension": 1,
            "jump_rate": 1.0,
            "jump_law": "simple",
            "death_rate": 1.0,
            "split_rates": {"2": 0.3},
            "offspring_law": "simple",
            "immigration_rate": 0.1
        }
    })";
    ExperimentConfig cfg = parse_config_text(text);
    CHECK(compute_gap(cfg.model) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK_NOTHROW(validate(cfg.model));
}

TEST_CASE("unknown keys are rejected by name") {
    CHECK(kind_of([] { parse_config_text(R"({"model": {"betta": 0.3}})"); }) ==
          ErrorKind::parse_error);
    CHECK(message_mentions([] { parse_config_text(R"({"model": {"betta": 0.3}})"); },
                           "betta"));
    CHECK(message_mentions([] { parse_config_text(R"({"simulation": {}})"); },
                           "simulation"));
    CHECK(message_mentions(
        [] {
            parse_config_text(
                R"({"model": {"jump_law": [{"step": [1], "wieght": 0.5}]}})");
        },
        "wieght"));
}

TEST_CASE("subcriticality is enforced at parse time") {
    CHECK(kind_of([] {
              parse_config_text(R"({"model": {"death_rate": 0.2}})");
          }) == ErrorKind::not_subcritical);
}

TEST_CASE("overrides win over the file") {
    std::vector<std::string> overrides = {
        "model.death_rate=1.5", "model.split_rates.2=0.25",
        "sim.replicates=42", "sim.record_times=[0.5,1.0]", "seed=99"};
    ExperimentConfig cfg =
        parse_config_text(R"({"model": {"death_rate": 2.0}, "seed": 7})", overrides);
    CHECK(cfg.model.death_rate == 1.5);
    CHECK(cfg.model.split_rates == std::vector<double>{0.25});
    CHECK(compute_gap(cfg.model) == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(cfg.sim.replicates == 42);
    CHECK(cfg.sim.record_times == std::vector<double>{0.5, 1.0});
    CHECK(cfg.seed == 99);
}

TEST_CASE("override grammar is validated") {
    CHECK(kind_of([] { parse_config_text("{}", {"noequals"}); }) ==
          ErrorKind::usage_error);
    CHECK(kind_of([] { parse_config_text("{}", {"=5"}); }) == ErrorKind::usage_error);
    CHECK(kind_of([] { parse_config_text("{}", {"model.mu=1.2"}); }) ==
          ErrorKind::parse_error);
    CHECK(message_mentions([] { parse_config_text("{}", {"model.mu=1.2"}); }, "mu"));
    CHECK(kind_of([] { parse_config_text("{}", {"model.death_rate=fast"}); }) ==
          ErrorKind::parse_error);
    // Values parse as JSON when they can, so a bare number cannot land in a
    // string field, while non-literal text stays a string.
    CHECK(kind_of([] { parse_config_text("{}", {"output_dir=123"}); }) ==
          ErrorKind::parse_error);
    ExperimentConfig cfg = parse_config_text("{}", {"output_dir=run/a1"});
    CHECK(cfg.output_dir == "run/a1");
}

TEST_CASE("cross block consistency is enforced") {
    CHECK(kind_of([] { parse_config_text(R"({"sim": {"t_max": 5.0}})"); }) ==
          ErrorKind::validation_error);
    CHECK_NOTHROW(parse_config_text(R"({"sim": {"t_max": 5.0}})", {"hierarchy.t_max=5"}));
    CHECK(kind_of([] {
              parse_config_text(R"({"sim": {"t_max": 1.0, "record_times": [2.0]}})");
          }) == ErrorKind::validation_error);
    CHECK(kind_of([] { parse_config_text(R"({"hierarchy": {"steps": 0}})"); }) ==
          ErrorKind::validation_error);
    CHECK(kind_of([] { parse_config_text(R"({"cumulants": {"tol": 0.0}})"); }) ==
          ErrorKind::validation_error);
}

TEST_CASE("split rates use the object form") {
    ExperimentConfig cfg =
        parse_config_text(R"({"model": {"split_rates": {"2": 0.2, "4": 0.05}}})");
    CHECK(cfg.model.split_rates == std::vector<double>{0.2, 0.0, 0.05});
    CHECK(kind_of([] {
              parse_config_text(R"({"model": {"split_rates": {"1": 0.2}}})");
          }) == ErrorKind::parse_error);
    CHECK(kind_of([] {
              parse_config_text(R"({"model": {"split_rates": {"x": 0.2}}})");
          }) == ErrorKind::parse_error);
    CHECK(kind_of([] {
              parse_config_text(R"({"model": {"split_rates": [0.2]}})");
          }) == ErrorKind::parse_error);
}

TEST_CASE("dimension switch refreshes the default laws") {
    ExperimentConfig cfg = parse_config_text(R"({"model": {"dimension": 2}})");
    CHECK(cfg.model.jump_law.entries.size() == 4);
    CHECK(cfg.model.offspring_law.entries.size() == 4);
    CHECK_NOTHROW(validate(cfg.model));
    // An explicit law with the wrong arity is caught while decoding.
    CHECK(kind_of([] {
              parse_config_text(
                  R"({"model": {"dimension": 2,
                                "jump_law": [{"step": [1], "weight": 0.5}]}})");
          }) == ErrorKind::parse_error);
}

TEST_CASE("law entries need both step and weight") {
    CHECK(kind_of([] {
              parse_config_text(R"({"model": {"jump_law": [{"step": [1]}]}})");
          }) == ErrorKind::parse_error);
    CHECK(kind_of([] {
              parse_config_text(
                  R"({"model": {"jump_law": [{"step": [1], "weight": "w"}]}})");
          }) == ErrorKind::parse_error);
    CHECK(kind_of([] {
              parse_config_text(R"({"model": {"jump_law": "fancy"}})");
          }) == ErrorKind::parse_error);
}

TEST_CASE("malformed json is a parse error") {
    CHECK(kind_of([] { parse_config_text("{"); }) == ErrorKind::parse_error);
    CHECK(kind_of([] { parse_config_text("[]"); }) == ErrorKind::parse_error);
    CHECK(kind_of([] { parse_config_text(R"({"seed": -4})"); }) ==
          ErrorKind::parse_error);
}

TEST_CASE("echo of the resolved config round trips byte for byte") {
    ExperimentConfig cfg = parse_config_text(
        R"({"model": {"split_rates": {"2": 0.2, "3": 0.1}, "tail_ratio": 0.7}})",
        {"sim.record_times=[0.25,1.0]", "seed=1234"});
    std::string echo = config_to_json(cfg);
    ExperimentConfig again = parse_config_text(echo);
    CHECK(config_to_json(again) == echo);
    CHECK(again.model.split_rates == cfg.model.split_rates);
    CHECK(again.seed == 1234);
}

TEST_CASE("config files load from disk") {
    const char* path = "/tmp/bifield_config_test.json";
    {
        std::ofstream out(path);
        out << R"({"model": {"immigration_rate": 0.2}})";
    }
    ExperimentConfig cfg = parse_config(path);
    CHECK(cfg.model.immigration_rate == 0.2);
    std::remove(path);
    CHECK(kind_of([&] { parse_config(path); }) == ErrorKind::usage_error);
}

}
