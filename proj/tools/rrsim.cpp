// Scenario-driven front end: validate configs and run them to reproducible
// artifact directories.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rr/rr.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw rr::Error("cannot open config file " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void print_error_json(const std::string& type, const std::vector<std::string>& messages) {
    rr::json err{{"error", {{"type", type}, {"messages", messages}}}};
    std::cerr << err.dump(2) << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"radiation-reaction dynamics engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed_override = 0;
    bool trace = false;
    bool deterministic_reduce = false;
    unsigned threads = 0;

    auto* run = app.add_subcommand("run", "run a scenario config");
    run->add_option("config", config_path, "scenario JSON file")->required();
    run->add_option("--out", out_dir, "output directory");
    auto* seed_opt = run->add_option("--seed", seed_override, "override the RNG seed");
    run->add_flag("--trace", trace, "emit per-step trace CSV");
    run->add_flag("--deterministic-reduce", deterministic_reduce,
                  "single worker, fixed-shape reductions");
    run->add_option("--threads", threads, "worker count (0 = hardware)");

    auto* validate = app.add_subcommand("validate", "validate a scenario config");
    validate->add_option("config", config_path, "scenario JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        rr::Scenario scenario = rr::parse_scenario(read_file(config_path));
        if (app.got_subcommand(validate)) {
            std::cout << "ok: " << scenario.name << " (" << rr::to_string(scenario.mode)
                      << ")\n";
            return 0;
        }
        if (seed_opt->count() > 0) {
            scenario.seed = seed_override;
            scenario.seed_given = true;
        }
        if (trace) scenario.trace = true;
        if (deterministic_reduce) scenario.deterministic_reduce = true;
        if (threads > 0) scenario.threads = threads;

        const rr::json manifest = rr::run_to_directory(scenario, out_dir);
        std::cout << manifest.dump(2) << "\n";
        return 0;
    } catch (const rr::ValidationError& e) {
        print_error_json("ValidationError", e.issues);
        return 1;
    } catch (const rr::ParseError& e) {
        print_error_json("ParseError", {e.what()});
        return 1;
    } catch (const std::exception& e) {
        print_error_json("Error", {e.what()});
        return 1;
    }
}
