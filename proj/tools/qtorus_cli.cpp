#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "qtorus/errors.hpp"
#include "qtorus/run_config.hpp"
#include "qtorus/runner.hpp"

using namespace qtorus;

int main(int argc, char** argv) {
    CLI::App app{"qtorus: spectral statistics of flat tori and horocycle equidistribution experiments"};
    app.set_version_flag("--version", kVersion);

    std::string subcommand;
    std::string config_path;
    bool list_keys = false;
    app.add_option("subcommand", subcommand,
                   "spectrum | paircorr | theta-check | equidist | dioph | degeneracy | convergence-study | run");
    app.add_option("--config", config_path, "configuration file (key = value)");
    app.add_flag("--list-keys", list_keys, "print every configuration key with its default");

    std::map<std::string, CLI::Option*> opts;
    for (const auto& key : config_keys()) {
        if (key.name == "subcommand") continue;
        CLI::Option* o = app.add_option("--" + key.name)->description(key.doc + " [" + key.default_text + "]");
        if (key.type == ValueType::boolean) o->expected(0, 1);
        opts[key.name] = o;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (list_keys) {
        for (const auto& key : config_keys())
            std::cout << key.name << " = " << key.default_text << "    # " << key.doc << "\n";
        return 0;
    }

    // Column of a command-line override is the argument's position in argv.
    auto arg_index = [&](const std::string& name) {
        int found = 1;
        for (int i = 1; i < argc; ++i) {
            const std::string a = argv[i];
            if (a == "--" + name || a.rfind("--" + name + "=", 0) == 0) found = i;
        }
        return found;
    };

    RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = RunConfig::from_file(config_path);
        if (!subcommand.empty() && subcommand != "run") {
            int col = 1;
            for (int i = 1; i < argc; ++i)
                if (argv[i] == subcommand) col = i;
            cfg.set("subcommand", subcommand, "<command line>", 1, col);
        }
        for (const auto& key : config_keys()) {
            auto it = opts.find(key.name);
            if (it == opts.end() || it->second->count() == 0) continue;
            const auto& res = it->second->results();
            std::string value = (res.empty() || res.back().empty()) ? "true" : res.back();
            cfg.set(key.name, value, "<command line>", 1, arg_index(key.name));
        }
    } catch (const std::exception& e) {
        std::cerr << error_record_json(e) << "\n";
        return exit_code_for(e);
    }
    return run_main(cfg, std::cout, std::cerr);
}
