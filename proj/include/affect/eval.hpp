#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "affect/classify.hpp"
#include "affect/datamodel.hpp"
#include "affect/pipeline.hpp"

namespace affect
{

/// Absolute slack on the margin comparison so that a difference of exactly
/// the margin survives floating-point subtraction.
inline constexpr double kMarginTolerance = 1e-9;

struct IntensityAccuracyReport
{
    std::size_t n = 0;
    double accuracy = 0.0;
    double margin = 0.1;
    double mae = 0.0;
};

/// accuracy = fraction of |estimate - label| <= margin (inclusive).
IntensityAccuracyReport intensity_accuracy(std::span<const double> estimates, std::span<const double> labels,
                                           double margin = 0.1);

struct ClassificationReport
{
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    bool precision_defined = true; // false when TP + FP == 0 (precision reported as 0)
    bool recall_defined = true;
};

/// Anger is the positive class.
ClassificationReport classification_metrics(std::span<const Label> predicted, std::span<const Label> actual);

struct FoldPlan
{
    int k = 10;
    std::uint64_t seed = 7;
    std::vector<std::vector<std::size_t>> folds;

    std::vector<std::size_t> training_indices(std::size_t fold) const;
};

/// Seeded shuffle then round-robin assignment. With labels the shuffle is done
/// per class and the classes are dealt one after the other, which stratifies.
FoldPlan kfold(std::size_t items, int k = 10, std::uint64_t seed = 7, std::span<const Label> labels = {});

inline Label binarize(double intensity, double threshold = 0.5)
{
    return intensity >= threshold ? Label::anger : Label::not_anger;
}

struct ExperimentConfig
{
    int k = 10;
    std::uint64_t seed = 7;
    double margin = 0.1;
    TrainConfig train;
    double ridge = 0.0;
    bool speech_intercept = false;
    double anger_threshold = 0.5;
    PipelineConfig pipeline;
};

struct ExperimentRow
{
    std::string name; // modality name or "multiple"
    std::size_t windows = 0;
    double classification_accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double intensity_accuracy = 0.0;
    double mae = 0.0;

    friend bool operator==(const ExperimentRow&, const ExperimentRow&) = default;
};

struct ExperimentReport
{
    int k = 10;
    std::uint64_t seed = 7;
    double margin = 0.1;
    std::vector<ExperimentRow> rows; // fold means

    const ExperimentRow* row(const std::string& name) const;
    friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

/// One annotated window with every modality's inputs.
struct AnnotatedWindow
{
    std::string recording_id;
    double label = 0.0;
    Label cls = Label::not_anger;
    double start_time_s = 0.0;
    double span_s = 0.0;
    std::map<Modality, Eigen::VectorXd> features; // classifier input
    std::map<Modality, WindowAggregate> aggregates;
    std::map<Modality, SpeechFeatureRow> speech;
};

/// Modalities present in any recording of the dataset.
std::vector<Modality> dataset_modalities(std::span<const Recording> dataset);

/// Throws when a recording lacks annotations, lacks a modality present
/// elsewhere in the dataset, or has no data for an annotated window.
std::vector<AnnotatedWindow> collect_windows(std::span<const Recording> dataset, const ExperimentConfig& config);

/// Trains one classifier per modality on the selected windows.
std::map<Modality, LinearClassifier> train_classifiers(std::span<const AnnotatedWindow> windows,
                                                       std::span<const std::size_t> selected,
                                                       std::span<const Modality> modalities,
                                                       const ExperimentConfig& config);

/// Confidence fed to a visual intensity model for one window.
double model_confidence(const ModelSet& models, const AnnotatedWindow& window, Modality modality,
                        std::span<const Modality> modalities, bool fused_confidence);

/// Fits the intensity models for every modality, using the classifiers
/// already in models for the confidence input.
void fit_intensity_models(ModelSet& models, std::span<const AnnotatedWindow> windows,
                          std::span<const std::size_t> selected, std::span<const Modality> modalities,
                          const ExperimentConfig& config);

/// k-fold cross validation over annotated windows. Each fold trains the
/// per-modality classifiers and intensity models on the training windows and
/// scores the held-out windows; the multimodal row fuses the per-modality
/// estimates of each window and majority-votes the labels.
ExperimentReport run_experiment(std::span<const Recording> dataset, const ExperimentConfig& config = {});

/// Aligned plain-text tables: classification (accuracy, precision, recall)
/// and intensity accuracy per modality.
std::string format_report(const ExperimentReport& report);
void write_report_csv(const ExperimentReport& report, std::ostream& out);

} // namespace affect
