#include "affect/features.hpp"

#include <ostream>

namespace affect
{

Eigen::VectorXd VisualFeatureVector::flatten() const
{
    const Eigen::Index n = displacements.size();
    Eigen::VectorXd out(coords.size() + angles.size() + 3 * n);
    out << coords, angles, displacements, Eigen::VectorXd::Zero(2 * n);
    auto motion = out.tail(2 * n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        motion[2 * i] = speeds[i];
        motion[2 * i + 1] = orientations[i];
    }
    return out;
}

VisualFeatureVector assemble_feature_vector(const FrameWindow& window, const ModalityConfig& config)
{
    require_visual(config.modality);
    if (window.modality != config.modality)
        throw DomainError("window modality " + std::string(to_string(window.modality)) + " does not match " +
                          std::string(to_string(config.modality)));
    const auto& frames = window.frames;
    if (static_cast<int>(frames.size()) != config.window_frames)
        throw DomainError("window has " + std::to_string(frames.size()) + " frames, expected " +
                          std::to_string(config.window_frames));
    for (std::size_t k = 1; k < frames.size(); ++k)
        if (frames[k].frame_index != frames[k - 1].frame_index + 1)
            throw DomainError("frame_index gap between " + std::to_string(frames[k - 1].frame_index) + " and " +
                              std::to_string(frames[k].frame_index));
    const int n = config.point_count;
    for (const Frame& f : frames)
        if (f.points.cols() != n)
            throw DomainError("frame " + std::to_string(f.frame_index) + " has " + std::to_string(f.points.cols()) +
                              " points, expected " + std::to_string(n));

    const Frame& first = frames.front();
    const Frame& last = frames.back();
    const double duration = last.timestamp_s - first.timestamp_s;

    VisualFeatureVector fv;
    fv.modality = config.modality;
    fv.window = {window.recording_id, first.frame_index, last.frame_index, first.timestamp_s, last.timestamp_s};
    fv.coords = last.points.reshaped();

    fv.angles.resize(static_cast<Eigen::Index>(config.angle_pairs.size()));
    for (std::size_t p = 0; p < config.angle_pairs.size(); ++p)
    {
        auto [i, j] = config.angle_pairs[p];
        fv.angles[static_cast<Eigen::Index>(p)] =
            pair_angle<double>(last.points.col(i), last.points.col(j));
    }

    fv.displacements.resize(n);
    fv.speeds.resize(n);
    fv.orientations.resize(n);
    Eigen::Matrix2Xd track(2, static_cast<Eigen::Index>(frames.size()));
    for (int i = 0; i < n; ++i)
    {
        for (std::size_t k = 0; k < frames.size(); ++k)
            track.col(static_cast<Eigen::Index>(k)) = frames[k].points.col(i);
        const auto kin = point_kinematics(track, duration);
        fv.displacements[i] = kin.displacement;
        fv.speeds[i] = kin.speed;
        fv.orientations[i] = kin.orientation;
    }
    return fv;
}

WindowAggregate aggregate_window(const VisualFeatureVector& fv)
{
    const auto m = fv.displacements.size();
    if (m == 0 || fv.speeds.size() != m)
        throw DomainError("feature vector has no motion features");
    return {fv.modality, fv.window, fv.displacements.mean(), fv.speeds.mean(), static_cast<int>(m)};
}

std::vector<FrameWindow> window_iterator(const FrameStream& stream, const ModalityConfig& config)
{
    std::vector<FrameWindow> windows;
    const auto n = static_cast<std::size_t>(config.window_frames);
    const std::span<const Frame> all(stream.frames);
    for (std::size_t start = 0; start + n <= all.size(); start += n)
        windows.push_back({stream.recording_id, stream.modality, all.subspan(start, n)});
    return windows;
}

double reference_length(const FrameStream& stream, const ModalityConfig& config)
{
    if (!config.reference_pair)
        throw DomainError("no reference pair configured");
    if (stream.frames.empty())
        throw DomainError("cannot measure a reference length on an empty stream");
    auto [i, j] = *config.reference_pair;
    double sum = 0.0;
    for (const Frame& f : stream.frames)
        sum += (f.points.col(i) - f.points.col(j)).norm();
    return sum / static_cast<double>(stream.frames.size());
}

FrameStream normalize_stream(const FrameStream& stream, const ModalityConfig& config)
{
    FrameStream out = stream;
    if (!config.normalize || stream.frames.empty())
        return out;
    const double ref = reference_length(stream, config);
    if (!(ref > 0.0))
        throw DomainError("reference length is zero; cannot normalize");
    for (Frame& f : out.frames)
        f.points /= ref;
    return out;
}

std::vector<VisualFeatureVector> extract_features(const FrameStream& stream, const ModalityConfig& config)
{
    validate(config);
    const FrameStream prepared = normalize_stream(stream, config);
    std::vector<VisualFeatureVector> out;
    for (const auto& w : window_iterator(prepared, config))
        out.push_back(assemble_feature_vector(w, config));
    return out;
}

std::string feature_csv_header(const ModalityConfig& config)
{
    std::string h = "recording_id,start_frame,end_frame";
    const int n = config.point_count;
    for (int i = 0; i < n; ++i)
        h += ",x" + std::to_string(i) + ",y" + std::to_string(i);
    for (auto [i, j] : config.angle_pairs)
        h += ",a" + std::to_string(i) + "_" + std::to_string(j);
    for (int i = 0; i < n; ++i)
        h += ",d" + std::to_string(i);
    for (int i = 0; i < n; ++i)
        h += ",s" + std::to_string(i) + ",o" + std::to_string(i);
    return h;
}

void write_feature_csv(std::span<const VisualFeatureVector> vectors, const ModalityConfig& config,
                       std::ostream& out)
{
    out << feature_csv_header(config) << '\n';
    for (const auto& fv : vectors)
    {
        out << fv.window.recording_id << ',' << fv.window.start_frame << ',' << fv.window.end_frame;
        const Eigen::VectorXd flat = fv.flatten();
        for (double v : flat)
            out << ',' << format_double(v);
        out << '\n';
    }
    if (!out)
        throw DomainError("write failure");
}

} // namespace affect
