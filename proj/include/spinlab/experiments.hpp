#pragma once

#include "spinlab/funineq.hpp"
#include "spinlab/sampler.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace spinlab {

// JSON <-> domain objects.  Unknown keys are rejected everywhere.
PerturbationSpec perturbation_from_json(const nlohmann::json& j);
ChainConfig chain_from_json(const nlohmann::json& j, std::uint64_t default_seed);
GridSpec grid_from_json(const nlohmann::json& j);

struct RunResult {
    std::vector<std::string> outputs; // filenames written (relative to out dir)
    nlohmann::json summary;
};

// Dispatch on config["experiment"]: gap | lsi | covdecay | onespin | luyau |
// kawasaki | paths | betalimit | uniformity_sweep.  Writes CSV/JSON outputs
// atomically into out_dir plus a manifest echoing the resolved config.
// seed_override/threads <= 0 mean "use config/default".
RunResult run_experiment(nlohmann::json config, const std::filesystem::path& out_dir,
                         long long seed_override = -1, int threads = 0);

} // namespace spinlab
