#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "affect/datamodel.hpp"
#include "affect/features.hpp"

namespace affect
{

struct FitMetadata
{
    std::size_t rows = 0;
    double cf = 0.0;
    double ridge = 0.0;

    friend bool operator==(const FitMetadata&, const FitMetadata&) = default;
};

/// intensity = theta[0] * confidence + theta[1] * mean displacement
///           + theta[2] * mean speed + theta[3]
struct VisualIntensityModel
{
    Modality modality = Modality::face;
    Eigen::Vector4d theta = Eigen::Vector4d::Zero();
    FitMetadata fit;

    friend bool operator==(const VisualIntensityModel&, const VisualIntensityModel&) = default;
};

/// intensity = sum_i theta[i] * prosodic[i] (+ theta[38] when include_intercept)
struct SpeechIntensityModel
{
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(kProsodicFeatureCount);
    bool include_intercept = false;
    FitMetadata fit;

    friend bool operator==(const SpeechIntensityModel& a, const SpeechIntensityModel& b)
    {
        return a.theta.size() == b.theta.size() && a.theta == b.theta && a.include_intercept == b.include_intercept &&
               a.fit == b.fit;
    }
};

struct IntensityEstimate
{
    double value = 0.0; // clamped to [0, 1]
    double raw = 0.0;
    std::optional<Modality> modality; // empty for a fused estimate
    WindowRef window;
    double timestamp_s = 0.0;
};

std::string source_name(const IntensityEstimate& e);
IntensityEstimate make_estimate(double raw, std::optional<Modality> modality, WindowRef window, double timestamp_s);

struct FitReport
{
    Eigen::VectorXd theta;
    double cf = 0.0;
    double condition = 0.0;
    double ridge = 0.0;
};

IntensityEstimate estimate_visual(const VisualIntensityModel& model, double confidence, const WindowAggregate& agg);
IntensityEstimate estimate_speech(const SpeechIntensityModel& model, const SpeechFeatureRow& row);

/// One training row for a visual model.
struct VisualSample
{
    double confidence = 0.0;
    double mean_displacement = 0.0;
    double mean_speed = 0.0;
    double label = 0.0;
};

Eigen::MatrixXd visual_design(std::span<const VisualSample> samples);
Eigen::MatrixXd speech_design(std::span<const SpeechFeatureRow> rows, bool include_intercept);

/// Least-squares fit of the visual model; the intercept is never penalized.
std::pair<VisualIntensityModel, FitReport> fit_visual(Modality modality, std::span<const VisualSample> samples,
                                                      double ridge = 0.0);

std::pair<SpeechIntensityModel, FitReport> fit_speech(std::span<const SpeechFeatureRow> rows,
                                                      std::span<const double> labels, double ridge = 0.0,
                                                      bool include_intercept = false);

/// Holds per-modality estimates whose timestamps fall in [start, start + length).
class FusionBuffer
{
public:
    explicit FusionBuffer(double start_s = 0.0, double length_s = 1.0);

    double start() const { return start_; }
    double length() const { return length_; }
    double end() const { return start_ + length_; }
    bool contains(double t) const { return t >= start_ && t < end(); }
    bool empty() const { return entries_.empty(); }

    /// Rejects fused estimates and timestamps outside the window.
    void add(const IntensityEstimate& estimate);

    /// Clears and moves to the window (on the same grid) that contains t.
    void advance_to(double t);

    const std::map<Modality, std::vector<IntensityEstimate>>& entries() const { return entries_; }

private:
    double origin_;
    double start_;
    double length_;
    std::map<Modality, std::vector<IntensityEstimate>> entries_;
};

/// Mean of the per-modality means of clamped values. Empty buffer gives nullopt.
std::optional<IntensityEstimate> fuse_multimodal(const FusionBuffer& buffer);

std::string visual_model_to_json(const VisualIntensityModel& model);
std::string speech_model_to_json(const SpeechIntensityModel& model);
using IntensityModel = std::variant<VisualIntensityModel, SpeechIntensityModel>;
IntensityModel intensity_model_from_json(const std::string& text);

void write_estimates_csv(std::span<const IntensityEstimate> estimates, std::ostream& out);
std::vector<IntensityEstimate> parse_estimates_csv(std::istream& in);

} // namespace affect
