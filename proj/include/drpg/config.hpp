#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drpg/codec.hpp"
#include "drpg/flow.hpp"
#include "drpg/model.hpp"
#include "drpg/trainer.hpp"

namespace drpg {

struct InputSpec {
    std::string path;
    std::string format = "auto";  // auto | yuv | y4m
    std::optional<int> width;
    std::optional<int> height;
};

/// Everything a pipeline run needs. Parsed from JSON; unknown keys are errors.
struct RunConfig {
    InputSpec input;
    ExtractionConfig extraction;
    ModelConfig model;
    TrainConfig train;
    SweepConfig sweep;
    std::vector<int> q_set{8, 16, 32, 64};
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    int threads = 0;  // 0: leave the DRPG_THREADS default

    /// Pushes `seed` into the model initializer and the shuffle RNG.
    void apply_seed(std::uint64_t s);
    void validate() const;
};

RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string dump_run_config(const RunConfig& cfg);

}  // namespace drpg
