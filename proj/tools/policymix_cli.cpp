#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "policymix/dataset.hpp"
#include "policymix/error.hpp"
#include "policymix/lattice.hpp"
#include "policymix/matching.hpp"
#include "policymix/pipeline.hpp"
#include "policymix/synthetic.hpp"

namespace {

using policymix::pipeline::RunConfig;

// Options shared by `run` and `validate`: a JSON config file plus flag
// overrides applied on top of it.
struct ConfigOptions {
    std::string config_path;
    std::string input;
    std::string scenario;
    std::string output_dir;
    std::vector<int> contrasts;
    std::vector<std::string> algorithms;
    std::string kernel;
    double bandwidth = 0.0;
    int k = 0;
    double radius = 0.0;
    bool no_common_support = false;
    double support_trim = 0.0;
    int replicates = 0;
    std::uint64_t seed = 0;
    int threads = 0;
    bool no_bootstrap = false;
    bool subgroups = true;
    std::string format;
    std::vector<std::string> log1p;

    CLI::Option* input_opt = nullptr;
    CLI::Option* scenario_opt = nullptr;
    CLI::Option* output_dir_opt = nullptr;
    CLI::Option* contrasts_opt = nullptr;
    CLI::Option* algorithms_opt = nullptr;
    CLI::Option* kernel_opt = nullptr;
    CLI::Option* bandwidth_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* radius_opt = nullptr;
    CLI::Option* no_common_support_opt = nullptr;
    CLI::Option* support_trim_opt = nullptr;
    CLI::Option* replicates_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
    CLI::Option* no_bootstrap_opt = nullptr;
    CLI::Option* subgroups_opt = nullptr;
    CLI::Option* format_opt = nullptr;
    CLI::Option* log1p_opt = nullptr;

    void attach(CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "JSON run configuration file");
        input_opt = cmd->add_option("--input", input, "survey CSV file");
        scenario_opt = cmd->add_option(
            "--scenario", scenario, "synthetic scenario: builtin name or JSON file");
        output_dir_opt = cmd->add_option("-o,--output-dir", output_dir, "artifact directory");
        contrasts_opt = cmd->add_option("--contrasts", contrasts, "contrast ids (1..10)")
                            ->delimiter(',');
        algorithms_opt =
            cmd->add_option("--algorithms", algorithms,
                            "matching algorithms: kernel, nearest_neighbour, radius")
                ->delimiter(',');
        kernel_opt = cmd->add_option("--kernel", kernel, "kernel: epanechnikov or gaussian");
        bandwidth_opt = cmd->add_option("--bandwidth", bandwidth, "kernel bandwidth");
        k_opt = cmd->add_option("--neighbours", k, "nearest-neighbour count");
        radius_opt = cmd->add_option("--radius", radius, "radius caliper");
        no_common_support_opt =
            cmd->add_flag("--no-common-support", no_common_support, "skip the support trim");
        support_trim_opt = cmd->add_option("--support-trim", support_trim,
                                           "percentile trim of the support interval");
        replicates_opt = cmd->add_option("--replicates", replicates, "bootstrap replicates");
        seed_opt = cmd->add_option("--seed", seed, "bootstrap master seed");
        threads_opt = cmd->add_option("--threads", threads, "bootstrap worker threads");
        no_bootstrap_opt =
            cmd->add_flag("--no-bootstrap", no_bootstrap, "point estimates only");
        subgroups_opt = cmd->add_flag("--subgroups,!--no-subgroups", subgroups,
                                      "also estimate the farm-size subsamples");
        format_opt = cmd->add_option("--format", format, "text, delimited, or both")
                         ->check(CLI::IsMember({"text", "delimited", "both"}));
        log1p_opt = cmd->add_option("--log1p", log1p, "covariates to log1p-transform")
                        ->delimiter(',');
    }

    RunConfig build() const {
        RunConfig config;
        if (!config_path.empty()) config = policymix::pipeline::load_run_config(config_path);
        if (input_opt->count()) {
            config.input_path = input;
            if (!scenario_opt->count()) config.scenario.clear();
        }
        if (scenario_opt->count()) {
            config.scenario = scenario;
            if (!input_opt->count()) config.input_path.clear();
        }
        if (output_dir_opt->count()) config.output_dir = output_dir;
        if (contrasts_opt->count()) config.contrast_ids = contrasts;
        if (algorithms_opt->count()) {
            config.specs.clear();
            for (const auto& name : algorithms) {
                policymix::matching::MatchSpec spec;
                spec.algorithm = policymix::matching::algorithm_from_string(name);
                config.specs.push_back(spec);
            }
        }
        for (auto& spec : config.specs) {
            if (kernel_opt->count()) {
                spec.kernel_kind = policymix::matching::kernel_from_string(kernel);
            }
            if (bandwidth_opt->count()) spec.bandwidth = bandwidth;
            if (k_opt->count()) spec.k = k;
            if (radius_opt->count()) spec.radius = radius;
            if (no_common_support_opt->count()) spec.common_support = false;
            if (support_trim_opt->count()) spec.support_trim_percentile = support_trim;
        }
        if (no_bootstrap_opt->count()) {
            config.bootstrap.reset();
        } else if (replicates_opt->count() || seed_opt->count() || threads_opt->count()) {
            if (!config.bootstrap) config.bootstrap.emplace();
            if (replicates_opt->count()) config.bootstrap->replicates = replicates;
            if (seed_opt->count()) config.bootstrap->seed = seed;
            if (threads_opt->count()) config.bootstrap->threads = threads;
        }
        if (subgroups_opt->count()) config.subgroup_split = subgroups;
        if (format_opt->count()) {
            config.write_text = format != "delimited";
            config.write_delimited = format != "text";
        }
        if (log1p_opt->count()) config.log1p_covariates = log1p;
        return config;
    }
};

int do_run(const ConfigOptions& opts) {
    const RunConfig config = opts.build();
    policymix::pipeline::run(config);
    std::cout << "artifacts written to " << config.output_dir << '\n';
    return 0;
}

int do_validate(const ConfigOptions& opts) {
    const RunConfig config = opts.build();
    const auto findings = policymix::pipeline::validate(config);
    for (const auto& finding : findings) std::cout << "finding: " << finding << '\n';
    if (findings.empty()) {
        std::cout << "configuration OK" << '\n';
        return 0;
    }
    return 1;
}

struct GenerateOptions {
    std::string scenario;
    std::string out_path;
    std::string truth_path;
    std::string scenario_out;
    long n = 0;
    std::uint64_t seed = 0;

    CLI::Option* n_opt = nullptr;
    CLI::Option* seed_opt = nullptr;

    void attach(CLI::App* cmd) {
        cmd->add_option("--scenario", scenario, "builtin name or JSON file")->required();
        cmd->add_option("--out", out_path, "output CSV path")->required();
        cmd->add_option("--truth", truth_path, "write true effects and cell counts as JSON");
        cmd->add_option("--scenario-out", scenario_out, "write the effective scenario as JSON");
        n_opt = cmd->add_option("--n", n, "override the record count");
        seed_opt = cmd->add_option("--seed", seed, "override the scenario seed");
    }
};

int do_generate(const GenerateOptions& opts) {
    auto scenario = policymix::synthetic::resolve_scenario(opts.scenario);
    if (opts.n_opt->count()) scenario.n = opts.n;
    if (opts.seed_opt->count()) scenario.seed = opts.seed;
    scenario.validate();
    const auto generated = policymix::synthetic::generate(scenario);
    policymix::dataset::write_records_csv_file(generated.records, opts.out_path);
    for (const auto& warning : generated.warnings) {
        std::cerr << "warning: " << warning << '\n';
    }
    if (!opts.truth_path.empty()) {
        nlohmann::json j;
        j["truth"] = nlohmann::json::object();
        for (const auto& [id, att] : generated.truth) j["truth"][std::to_string(id)] = att;
        j["cells"] = nlohmann::json::array();
        for (int c = 0; c < policymix::lattice::kNumCells; ++c) {
            nlohmann::json cell;
            cell["cell"] = policymix::lattice::to_string(
                static_cast<policymix::lattice::TreatmentCell>(c));
            cell["expected"] = generated.expected_cell_counts[c];
            cell["realized"] = generated.realized_cell_counts[c];
            j["cells"].push_back(std::move(cell));
        }
        j["warnings"] = generated.warnings;
        std::ofstream truth_file(opts.truth_path, std::ios::binary | std::ios::trunc);
        if (!truth_file) throw policymix::IoError("cannot write '" + opts.truth_path + "'");
        truth_file << j.dump(2) << '\n';
    }
    if (!opts.scenario_out.empty()) {
        std::ofstream scenario_file(opts.scenario_out, std::ios::binary | std::ios::trunc);
        if (!scenario_file) throw policymix::IoError("cannot write '" + opts.scenario_out + "'");
        scenario_file << policymix::synthetic::scenario_to_json(scenario).dump(2) << '\n';
    }
    std::cout << "generated " << generated.records.size() << " records -> " << opts.out_path
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"policy-mix evaluation of family-farm output commercialisation"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "run the pipeline and write artifacts");
    ConfigOptions run_opts;
    run_opts.attach(run_cmd);

    auto* validate_cmd =
        app.add_subcommand("validate", "check a configuration and report findings");
    ConfigOptions validate_opts;
    validate_opts.attach(validate_cmd);

    auto* generate_cmd =
        app.add_subcommand("generate-synthetic", "write a synthetic dataset with known effects");
    GenerateOptions generate_opts;
    generate_opts.attach(generate_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run_cmd->parsed()) return do_run(run_opts);
        if (validate_cmd->parsed()) return do_validate(validate_opts);
        if (generate_cmd->parsed()) return do_generate(generate_opts);
    } catch (const policymix::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const policymix::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const policymix::EstimationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const policymix::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
