#pragma once

#include <map>
#include <optional>
#include <vector>

#include "affect/classify.hpp"
#include "affect/datamodel.hpp"
#include "affect/intensity.hpp"

namespace affect
{

struct ModelSet
{
    std::map<Modality, LinearClassifier> classifiers;
    std::map<Modality, VisualIntensityModel> visual;
    std::optional<SpeechIntensityModel> speech;

    bool empty() const { return classifiers.empty() && visual.empty() && !speech; }
};

struct PipelineConfig
{
    std::map<Modality, ModalityConfig> modalities{{Modality::face, default_config(Modality::face)},
                                                  {Modality::body, default_config(Modality::body)},
                                                  {Modality::hand, default_config(Modality::hand)}};
    double fusion_window_s = 1.0;
    // Feed the anger vote fraction across modalities to the visual models
    // instead of each modality's own classifier confidence.
    bool fused_confidence = false;

    const ModalityConfig& config_for(Modality m) const;
};

struct PipelineResult
{
    std::vector<IntensityEstimate> per_modality; // ordered by timestamp, then modality
    std::vector<IntensityEstimate> fused;
};

/// Per-window features, classification and intensity for every modality
/// present, then fusion over consecutive windows of fusion_window_s seconds
/// starting at the recording's first timestamp.
PipelineResult run_pipeline(const Recording& recording, const ModelSet& models, const PipelineConfig& config = {});

} // namespace affect
