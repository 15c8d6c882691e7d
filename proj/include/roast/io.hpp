#pragma once

#include "roast/dataset.hpp"
#include "roast/model.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace roast {

struct ExperimentConfig;

using Json = nlohmann::ordered_json;

// One {"tokens": [int], "label": int|null} object per line. Errors carry the
// 1-based line number. Labels on an anomaly split are dropped with a warning
// on stderr.
Split ingest_jsonl_dataset(const std::filesystem::path& path, SplitTag tag, std::string name, std::size_t vocab_size);
void export_jsonl_dataset(const Split& split, const std::filesystem::path& path);

Json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const Json& j, ModelSpec base = {});

// {spec, seed, parameters: {name: {shape, data}}}
Json checkpoint_json(const Model& model, std::uint64_t seed);
void save_checkpoint(const Model& model, std::uint64_t seed, const std::filesystem::path& path);
struct Checkpoint {
  Model model;
  std::uint64_t seed = 0;
};
Checkpoint checkpoint_from_json(const Json& j);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Every field of the experiment config; missing keys keep their defaults,
// unknown keys are rejected.
Json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const Json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace roast
