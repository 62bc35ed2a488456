#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "affect/datamodel.hpp"

namespace affect
{

/// Parameters for a synthetic recording. Each visual point moves along a
/// straight line per window, out and back on alternate windows, with net
/// displacement proportional to the window's intensity. noise scales a
/// per-modality Gaussian jitter relative to that modality's motion amplitude.
struct SyntheticSpec
{
    std::vector<double> curve{0.5}; // control values in [0, 1]
    int windows = 50;
    double noise = 0.0;
    std::uint64_t seed = 7;
    std::string recording_id = "sim000";
    std::string subject_id = "synthetic";
    std::vector<Modality> modalities{Modality::face, Modality::body, Modality::hand, Modality::speech};
    int window_frames = 10;
    double fps = 30.0;
};

/// Per-window intensity. One control value is a constant curve, windows
/// values are used as given, anything else is linearly interpolated.
std::vector<double> sample_curve(const std::vector<double>& control, int windows);

/// Smooth seeded curve covering most of [0, 1].
std::vector<double> random_curve(int windows, std::uint64_t seed);

/// Deterministic in spec. Annotations carry the exact curve value per window.
Recording generate_synthetic_recording(const SyntheticSpec& spec);

/// Base layout of the tracked points in sensor units (pixels).
Eigen::Matrix2Xd template_points(Modality m);

} // namespace affect
