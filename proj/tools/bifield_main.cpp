// Command line entry point.  One verb per run, a JSON config file, and any
// number of dotted-path overrides:
//
//   bifield simulate -c experiment.json --model.death_rate=1.2 --seed=7
//
// Without -c the documented defaults apply.  Exit codes: 0 success, 2 usage,
// 3 parse or validation error, 4 numerical failure, 5 failed verify-all check.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bifield/commands.hpp"
#include "bifield/config.hpp"
#include "bifield/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"subcritical branching random walk laboratory"};
    app.allow_extras();  // extras become dotted-path overrides

    std::string verb;
    app.add_option("verb", verb,
                   "validate | kernel | simulate | moments | cumulants | "
                   "bounds | oracle | verify-all")
        ->required();
    std::string config_path;
    app.add_option("-c,--config", config_path, "JSON experiment description");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::vector<std::string> overrides;
    for (std::string extra : app.remaining()) {
        while (!extra.empty() && extra.front() == '-') extra.erase(0, 1);
        if (extra.empty() || extra.find('=') == std::string::npos) {
            std::cerr << "override must look like --path.to.field=value, got '"
                      << extra << "'\n";
            return 2;
        }
        overrides.push_back(extra);
    }

    try {
        bifield::ExperimentConfig config =
            config_path.empty()
                ? bifield::parse_config_text("{}", overrides)
                : bifield::parse_config(config_path, overrides);
        return bifield::run_command(verb, config);
    } catch (const bifield::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return bifield::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
