#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "affect/datamodel.hpp"
#include "affect/pipeline.hpp"

namespace affect
{

// A recording directory holds meta.json, <modality>.csv per visual modality,
// speech.csv and annotations.jsonl. A dataset directory holds recording
// directories. A model directory holds classifier_<modality>.json and
// intensity_<modality>.json.

/// Writes content to a sibling temp file and renames it over path.
void atomic_write(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

void save_recording(const Recording& recording, const std::filesystem::path& dir);
Recording load_recording(const std::filesystem::path& dir, const PipelineConfig& config = {});

bool is_recording_dir(const std::filesystem::path& dir);

/// A recording directory loads as a one-element dataset; otherwise every
/// recording sub-directory is loaded in name order.
std::vector<Recording> load_dataset(const std::filesystem::path& path, const PipelineConfig& config = {});

void save_models(const ModelSet& models, const std::filesystem::path& dir);
ModelSet load_models(const std::filesystem::path& dir);

} // namespace affect
