#include "affect/pipeline.hpp"

#include <algorithm>
#include <limits>

namespace affect
{

const ModalityConfig& PipelineConfig::config_for(Modality m) const
{
    auto it = modalities.find(m);
    if (it == modalities.end())
        throw DomainError("no configuration for modality " + std::string(to_string(m)));
    return it->second;
}

namespace
{

struct WindowPrediction
{
    Modality modality;
    std::int64_t window;
    Prediction prediction;
};

const LinearClassifier& classifier_for(const ModelSet& models, Modality m)
{
    auto it = models.classifiers.find(m);
    if (it == models.classifiers.end())
        throw DomainError("missing classifier for present modality " + std::string(to_string(m)));
    return it->second;
}

} // namespace

PipelineResult run_pipeline(const Recording& recording, const ModelSet& models, const PipelineConfig& config)
{
    PipelineResult result;

    // Validate before doing any work.
    for (const auto& [m, stream] : recording.streams)
    {
        classifier_for(models, m);
        if (!models.visual.count(m))
            throw DomainError("missing intensity model for present modality " + std::string(to_string(m)));
    }
    if (!recording.speech.empty())
    {
        classifier_for(models, Modality::speech);
        if (!models.speech)
            throw DomainError("missing intensity model for present modality speech");
    }

    std::map<Modality, std::vector<VisualFeatureVector>> features;
    std::vector<WindowPrediction> predictions;
    for (const auto& [m, stream] : recording.streams)
    {
        const auto& clf = classifier_for(models, m);
        features[m] = extract_features(stream, config.config_for(m));
        const auto& fvs = features[m];
        for (std::size_t k = 0; k < fvs.size(); ++k)
            predictions.push_back({m, static_cast<std::int64_t>(k), predict(clf, fvs[k].flatten())});
    }
    for (const auto& row : recording.speech)
        predictions.push_back(
            {Modality::speech, row.window_index, predict(classifier_for(models, Modality::speech), row.features)});

    std::map<std::int64_t, std::pair<int, int>> votes; // window -> (anger, total)
    std::map<std::pair<Modality, std::int64_t>, double> own_confidence;
    for (const auto& p : predictions)
    {
        own_confidence[{p.modality, p.window}] = p.prediction.confidence;
        auto& v = votes[p.window];
        v.first += p.prediction.label == Label::anger ? 1 : 0;
        v.second += 1;
    }
    auto confidence_for = [&](Modality m, std::int64_t window) {
        if (config.fused_confidence)
        {
            const auto [anger, total] = votes.at(window);
            return static_cast<double>(anger) / total;
        }
        return own_confidence.at({m, window});
    };

    for (const auto& [m, fvs] : features)
    {
        const auto& model = models.visual.at(m);
        for (std::size_t k = 0; k < fvs.size(); ++k)
            result.per_modality.push_back(
                estimate_visual(model, confidence_for(m, static_cast<std::int64_t>(k)), aggregate_window(fvs[k])));
    }
    for (const auto& row : recording.speech)
        result.per_modality.push_back(estimate_speech(*models.speech, row));

    std::stable_sort(result.per_modality.begin(), result.per_modality.end(), [](const auto& a, const auto& b) {
        if (a.timestamp_s != b.timestamp_s)
            return a.timestamp_s < b.timestamp_s;
        return *a.modality < *b.modality;
    });
    if (result.per_modality.empty())
        return result;

    double origin = std::numeric_limits<double>::infinity();
    for (const auto& [m, stream] : recording.streams)
        if (!stream.frames.empty())
            origin = std::min(origin, stream.frames.front().timestamp_s);
    if (!std::isfinite(origin))
        origin = std::min(0.0, result.per_modality.front().timestamp_s);

    FusionBuffer buffer(origin, config.fusion_window_s);
    for (const auto& e : result.per_modality)
    {
        if (!buffer.contains(e.timestamp_s))
        {
            if (auto fused = fuse_multimodal(buffer))
                result.fused.push_back(*fused);
            buffer.advance_to(e.timestamp_s);
        }
        buffer.add(e);
    }
    if (auto fused = fuse_multimodal(buffer))
        result.fused.push_back(*fused);
    return result;
}

} // namespace affect
