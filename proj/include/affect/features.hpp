#pragma once

#include <cmath>
#include <iosfwd>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "affect/datamodel.hpp"
#include "affect/modality.hpp"

namespace affect
{

template <class Scalar>
struct PointKinematics
{
    Scalar displacement; // net, first to last position
    Scalar speed;        // path length / duration
    Scalar orientation;  // direction of net displacement, (-pi, pi]
};

/// Kinematics of one point tracked over a window. track is 2 x N, one column
/// per frame. orientation is 0 when the point ends where it started.
template <class Derived>
PointKinematics<typename Derived::Scalar> point_kinematics(const Eigen::MatrixBase<Derived>& track,
                                                           typename Derived::Scalar duration_s)
{
    using Scalar = typename Derived::Scalar;
    static_assert(Derived::RowsAtCompileTime == 2 || Derived::RowsAtCompileTime == Eigen::Dynamic);
    if (track.rows() != 2)
        throw DomainError("track must have 2 rows");
    if (track.cols() < 2)
        throw DomainError("kinematics need at least 2 positions, got " + std::to_string(track.cols()));
    if (!(duration_s > Scalar(0)))
        throw DomainError("window duration must be positive");

    const Eigen::Index n = track.cols();
    const auto net = (track.col(n - 1) - track.col(0)).eval();
    const Scalar path = (track.rightCols(n - 1) - track.leftCols(n - 1)).colwise().norm().sum();
    const Scalar displacement = net.norm();
    const Scalar orientation = displacement == Scalar(0) ? Scalar(0) : std::atan2(net.y(), net.x());
    return {displacement, path / duration_s, orientation};
}

/// Angle between the undirected line through a and b and the horizontal, in
/// (-pi/2, pi/2]. Coincident points give 0.
template <class Scalar>
Scalar pair_angle(const Eigen::Matrix<Scalar, 2, 1>& a, const Eigen::Matrix<Scalar, 2, 1>& b)
{
    const Eigen::Matrix<Scalar, 2, 1> d = b - a;
    if (d.x() == Scalar(0) && d.y() == Scalar(0))
        return Scalar(0);
    constexpr Scalar half_pi = std::numbers::pi_v<Scalar> / 2;
    Scalar angle = std::atan2(d.y(), d.x());
    if (angle > half_pi)
        angle -= std::numbers::pi_v<Scalar>;
    else if (angle <= -half_pi)
        angle += std::numbers::pi_v<Scalar>;
    return angle;
}

struct WindowRef
{
    std::string recording_id;
    std::int64_t start_frame = 0;
    std::int64_t end_frame = 0;
    double start_time_s = 0.0;
    double end_time_s = 0.0;

    friend bool operator==(const WindowRef&, const WindowRef&) = default;
};

/// A contiguous run of frames from one stream.
struct FrameWindow
{
    std::string recording_id;
    Modality modality = Modality::face;
    std::span<const Frame> frames;
};

struct VisualFeatureVector
{
    Modality modality = Modality::face;
    WindowRef window;
    Eigen::VectorXd coords;       // x0, y0, x1, y1, ... of the last frame
    Eigen::VectorXd angles;       // one per configured pair
    Eigen::VectorXd displacements;
    Eigen::VectorXd speeds;       // sensor units per second
    Eigen::VectorXd orientations;

    /// coords, angles, displacements, then (speed, orientation) per point.
    Eigen::VectorXd flatten() const;
};

struct WindowAggregate
{
    Modality modality = Modality::face;
    WindowRef window;
    double mean_displacement = 0.0;
    double mean_speed = 0.0;
    int count = 0;
};

VisualFeatureVector assemble_feature_vector(const FrameWindow& window, const ModalityConfig& config);
WindowAggregate aggregate_window(const VisualFeatureVector& fv);

/// Non-overlapping windows of config.window_frames frames aligned to the
/// first frame; a trailing partial window is dropped.
std::vector<FrameWindow> window_iterator(const FrameStream& stream, const ModalityConfig& config);

/// Mean distance between the reference pair across the stream.
double reference_length(const FrameStream& stream, const ModalityConfig& config);

/// Copy of the stream with coordinates divided by reference_length when
/// config.normalize is set; otherwise an unchanged copy.
FrameStream normalize_stream(const FrameStream& stream, const ModalityConfig& config);

/// Normalizes (when configured) and assembles one vector per window.
std::vector<VisualFeatureVector> extract_features(const FrameStream& stream, const ModalityConfig& config);

std::string feature_csv_header(const ModalityConfig& config);
void write_feature_csv(std::span<const VisualFeatureVector> vectors, const ModalityConfig& config,
                       std::ostream& out);

} // namespace affect
