#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace affect
{

enum class Modality
{
    face,
    body,
    hand,
    speech,
};

inline constexpr std::array<Modality, 3> kVisualModalities{Modality::face, Modality::body, Modality::hand};
inline constexpr std::array<Modality, 4> kAllModalities{Modality::face, Modality::body, Modality::hand,
                                                        Modality::speech};

std::string_view to_string(Modality m);
Modality modality_from_string(std::string_view name);

constexpr bool is_visual(Modality m) { return m != Modality::speech; }

/// Thrown by anything that rejects a value on domain grounds (range, shape,
/// invariant). Parsers throw the ParseError subclass, which carries a location.
class DomainError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

void require_visual(Modality m);
void require_speech(Modality m);

using PointPair = std::pair<int, int>;

/// Per-modality tracking layout and windowing parameters.
struct ModalityConfig
{
    Modality modality = Modality::face;
    int point_count = 0;
    std::vector<PointPair> angle_pairs;
    int window_frames = 10;
    double fps = 30.0;

    // Divide coordinates by the mean distance between these two points over
    // the recording before computing features.
    bool normalize = false;
    std::optional<PointPair> reference_pair;
};

// Point layouts used by the defaults below.
//
// body: 0 shoulder centre, 1 left shoulder, 2 right shoulder, 3 right elbow,
//       4 left elbow, 5 right wrist, 6 left wrist, 7 spine, 8 right hip,
//       9 left hip, 10 hip centre, 11 head
// hand: 0 left shoulder, 1 right shoulder, 2 left elbow, 3 right elbow,
//       4 left wrist, 5 right wrist, 6 left hand tip, 7 right hand tip
// face: 60 frontal points; 0 and 1 are the outer eye corners.
inline constexpr int kFacePoints = 60;
inline constexpr int kBodyPoints = 12;
inline constexpr int kHandPoints = 8;

inline constexpr int kSpeechFeatureCount = 988;
inline constexpr int kProsodicFeatureCount = 38;

std::vector<PointPair> all_pairs(int point_count);
std::vector<PointPair> chain_pairs(int point_count);

/// Defaults: face uses the consecutive-index chain, body and hand all pairs.
ModalityConfig default_config(Modality m);

/// Throws DomainError describing the first violated invariant.
void validate(const ModalityConfig& config);

} // namespace affect
