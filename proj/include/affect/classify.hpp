#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "affect/modality.hpp"

namespace affect
{

enum class Label
{
    not_anger,
    anger,
};

std::string_view to_string(Label label);

struct TrainingExample
{
    Eigen::VectorXd features;
    Label label = Label::not_anger;
};

struct TrainConfig
{
    double lambda = 1e-3;
    int epochs = 50;
    std::uint64_t seed = 7;
};

/// Linear SVM over standardized features. Confidence is the logistic of
/// A * margin + B.
struct LinearClassifier
{
    Modality modality = Modality::face;
    Eigen::VectorXd weights;
    double bias = 0.0;
    Eigen::VectorXd mean;
    Eigen::VectorXd scale; // per-feature std, 1 for constant features
    double calib_a = 1.0;
    double calib_b = 0.0;
    TrainConfig config;

    Eigen::Index feature_count() const { return weights.size(); }

    friend bool operator==(const LinearClassifier& a, const LinearClassifier& b);
};

struct Prediction
{
    Label label = Label::not_anger;
    double margin = 0.0;
    double confidence = 0.5;
};

struct FusedPrediction
{
    Label label = Label::not_anger;
    double vote_fraction = 0.0;
    std::vector<Prediction> members;
};

/// Per-epoch value of the regularized hinge objective at the kept iterate.
struct TrainTrace
{
    std::vector<double> objective;
};

/// Epoch-shuffled Pegasos with an averaged iterate. After every epoch the
/// averaged iterate replaces the kept model only if it lowers the objective,
/// so the trace is non-increasing.
LinearClassifier train(std::span<const TrainingExample> examples, Modality modality, const TrainConfig& config = {},
                       TrainTrace* trace = nullptr);

double hinge_objective(const LinearClassifier& clf, std::span<const TrainingExample> examples);

double logistic(double z);

/// margin = w . standardize(x) + b; anger iff margin > 0.
Prediction predict(const LinearClassifier& clf, const Eigen::Ref<const Eigen::VectorXd>& features);

struct LabeledMargin
{
    double margin;
    Label label;
};

struct CalibrationResult
{
    LinearClassifier classifier;
    bool calibrated = false; // false when the held-out set had a single class
    double log_likelihood = 0.0;
};

/// Platt-style fit of (A, B) by damped Newton with backtracking, started from
/// the base-rate model and run for a fixed number of iterations.
CalibrationResult calibrate(const LinearClassifier& clf, std::span<const LabeledMargin> held_out,
                            int iterations = 100);

double calibration_log_likelihood(double a, double b, std::span<const LabeledMargin> samples);

/// Majority vote; ties go to not_anger.
FusedPrediction fuse_majority(std::span<const Prediction> predictions);

std::string classifier_to_json(const LinearClassifier& clf);
LinearClassifier classifier_from_json(const std::string& text);

} // namespace affect
