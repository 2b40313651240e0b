#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "policymix/dataset.hpp"
#include "policymix/inference.hpp"
#include "policymix/matching.hpp"

namespace policymix::pipeline {

// Full pipeline configuration. Input is either a survey CSV (with schema and
// filter) or a synthetic scenario ("builtin:<name>" or a JSON file path).
struct RunConfig {
    std::string input_path;
    std::string scenario;
    dataset::SchemaMap schema;
    dataset::FilterConfig filter;
    std::vector<int> contrast_ids = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<matching::MatchSpec> specs;  // default: kernel, NN k=3, radius 0.10
    std::optional<inference::BootstrapConfig> bootstrap;
    bool subgroup_split = true;
    std::string output_dir;
    bool write_text = true;
    bool write_delimited = true;
    // covariate columns replaced by log1p(x) in the design matrix
    std::vector<std::string> log1p_covariates;

    RunConfig();
};

std::vector<matching::MatchSpec> default_match_specs();

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::string& path);

// Configuration findings without running any estimation; empty means clean.
std::vector<std::string> validate(const RunConfig& config);

// Full pipeline: ingest or generate, filter, estimate, bootstrap, and write
// all artifacts into output_dir. Throws on fatal errors after leaving an
// ERROR.txt marker next to any partial artifacts.
void run(const RunConfig& config);

}  // namespace policymix::pipeline
