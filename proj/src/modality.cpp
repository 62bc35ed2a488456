#include "affect/modality.hpp"

#include <set>

namespace affect
{

std::string_view to_string(Modality m)
{
    switch (m)
    {
    case Modality::face: return "face";
    case Modality::body: return "body";
    case Modality::hand: return "hand";
    case Modality::speech: return "speech";
    }
    return "unknown";
}

Modality modality_from_string(std::string_view name)
{
    for (Modality m : kAllModalities)
        if (to_string(m) == name)
            return m;
    throw DomainError("unknown modality '" + std::string(name) + "'");
}

void require_visual(Modality m)
{
    if (!is_visual(m))
        throw DomainError("operation requires a visual modality (face, body, hand), got speech");
}

void require_speech(Modality m)
{
    if (m != Modality::speech)
        throw DomainError("operation requires the speech modality, got " + std::string(to_string(m)));
}

std::vector<PointPair> all_pairs(int point_count)
{
    std::vector<PointPair> pairs;
    for (int i = 0; i < point_count; ++i)
        for (int j = i + 1; j < point_count; ++j)
            pairs.emplace_back(i, j);
    return pairs;
}

std::vector<PointPair> chain_pairs(int point_count)
{
    std::vector<PointPair> pairs;
    for (int i = 0; i + 1 < point_count; ++i)
        pairs.emplace_back(i, i + 1);
    return pairs;
}

ModalityConfig default_config(Modality m)
{
    ModalityConfig c;
    c.modality = m;
    switch (m)
    {
    case Modality::face:
        c.point_count = kFacePoints;
        c.angle_pairs = chain_pairs(kFacePoints);
        c.reference_pair = PointPair{0, 1};
        break;
    case Modality::body:
        c.point_count = kBodyPoints;
        c.angle_pairs = all_pairs(kBodyPoints);
        c.reference_pair = PointPair{1, 2};
        break;
    case Modality::hand:
        c.point_count = kHandPoints;
        c.angle_pairs = all_pairs(kHandPoints);
        c.reference_pair = PointPair{0, 1};
        break;
    case Modality::speech:
        break;
    }
    return c;
}

void validate(const ModalityConfig& config)
{
    if (config.window_frames < 2)
        throw DomainError("window_frames must be >= 2, got " + std::to_string(config.window_frames));
    if (!(config.fps > 0.0))
        throw DomainError("fps must be positive");
    if (config.modality == Modality::speech)
        return;
    if (config.point_count <= 0)
        throw DomainError("point_count must be positive");

    std::set<PointPair> seen;
    for (auto [i, j] : config.angle_pairs)
    {
        if (!(0 <= i && i < j && j < config.point_count))
            throw DomainError("angle pair (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") out of range for " + std::to_string(config.point_count) + " points");
        if (!seen.insert({i, j}).second)
            throw DomainError("duplicate angle pair (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
    if (config.normalize)
    {
        if (!config.reference_pair)
            throw DomainError("normalization enabled without a reference pair");
        auto [i, j] = *config.reference_pair;
        if (i < 0 || j < 0 || i >= config.point_count || j >= config.point_count || i == j)
            throw DomainError("reference pair out of range");
    }
}

} // namespace affect
