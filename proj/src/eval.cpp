#include "affect/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace affect
{

IntensityAccuracyReport intensity_accuracy(std::span<const double> estimates, std::span<const double> labels,
                                           double margin)
{
    if (estimates.size() != labels.size())
        throw DomainError("intensity accuracy: " + std::to_string(estimates.size()) + " estimates vs " +
                          std::to_string(labels.size()) + " labels");
    if (estimates.empty())
        throw DomainError("intensity accuracy needs at least one window");
    if (!(margin >= 0.0))
        throw DomainError("margin must be non-negative");

    std::size_t hits = 0;
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i)
    {
        if (!(labels[i] >= 0.0 && labels[i] <= 1.0))
            throw DomainError("label " + format_double(labels[i]) + " outside [0, 1]");
        const double err = std::abs(estimates[i] - labels[i]);
        hits += err <= margin + kMarginTolerance ? 1 : 0;
        abs_sum += err;
    }
    const auto n = static_cast<double>(estimates.size());
    return {estimates.size(), static_cast<double>(hits) / n, margin, abs_sum / n};
}

ClassificationReport classification_metrics(std::span<const Label> predicted, std::span<const Label> actual)
{
    if (predicted.size() != actual.size())
        throw DomainError("classification metrics: length mismatch");
    if (predicted.empty())
        throw DomainError("classification metrics need at least one prediction");
    ClassificationReport r;
    for (std::size_t i = 0; i < predicted.size(); ++i)
    {
        const bool p = predicted[i] == Label::anger;
        const bool a = actual[i] == Label::anger;
        if (p && a)
            ++r.tp;
        else if (p)
            ++r.fp;
        else if (a)
            ++r.fn;
        else
            ++r.tn;
    }
    r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(predicted.size());
    r.precision_defined = r.tp + r.fp > 0;
    r.recall_defined = r.tp + r.fn > 0;
    r.precision = r.precision_defined ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
    r.recall = r.recall_defined ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
    return r;
}

std::vector<std::size_t> FoldPlan::training_indices(std::size_t fold) const
{
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < folds.size(); ++f)
        if (f != fold)
            out.insert(out.end(), folds[f].begin(), folds[f].end());
    std::sort(out.begin(), out.end());
    return out;
}

FoldPlan kfold(std::size_t items, int k, std::uint64_t seed, std::span<const Label> labels)
{
    if (k < 2)
        throw DomainError("k must be at least 2");
    if (static_cast<std::size_t>(k) > items)
        throw DomainError("k = " + std::to_string(k) + " exceeds item count " + std::to_string(items));
    if (!labels.empty() && labels.size() != items)
        throw DomainError("kfold: label count does not match item count");

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order;
    if (labels.empty())
    {
        order.resize(items);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
    }
    else
    {
        for (Label cls : {Label::not_anger, Label::anger})
        {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < items; ++i)
                if (labels[i] == cls)
                    members.push_back(i);
            std::shuffle(members.begin(), members.end(), rng);
            order.insert(order.end(), members.begin(), members.end());
        }
    }

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.folds.resize(static_cast<std::size_t>(k));
    for (std::size_t j = 0; j < order.size(); ++j)
        plan.folds[j % static_cast<std::size_t>(k)].push_back(order[j]);
    for (auto& f : plan.folds)
        std::sort(f.begin(), f.end());
    return plan;
}

const ExperimentRow* ExperimentReport::row(const std::string& name) const
{
    for (const auto& r : rows)
        if (r.name == name)
            return &r;
    return nullptr;
}

std::vector<Modality> dataset_modalities(std::span<const Recording> dataset)
{
    std::vector<Modality> mods;
    for (Modality m : kAllModalities)
        if (std::any_of(dataset.begin(), dataset.end(), [m](const Recording& r) { return r.has(m); }))
            mods.push_back(m);
    return mods;
}

std::vector<AnnotatedWindow> collect_windows(std::span<const Recording> dataset, const ExperimentConfig& config)
{
    const auto mods = dataset_modalities(dataset);
    std::vector<AnnotatedWindow> windows;
    for (const Recording& rec : dataset)
    {
        const std::string& rid = rec.meta.recording_id;
        if (rec.annotations.empty())
            throw DomainError("recording " + rid + " has no annotations");

        std::map<Modality, std::map<std::int64_t, VisualFeatureVector>> by_start;
        std::map<std::int64_t, const SpeechFeatureRow*> speech_by_window;
        int window_frames = config.pipeline.config_for(Modality::face).window_frames;
        double frame_period = 1.0 / rec.meta.fps;
        for (Modality m : mods)
        {
            if (!rec.has(m))
                throw DomainError("recording " + rid + " is missing " + std::string(to_string(m)) + " data");
            if (m == Modality::speech)
            {
                for (const auto& row : rec.speech)
                    speech_by_window[row.window_index] = &row;
                continue;
            }
            const auto& cfg = config.pipeline.config_for(m);
            window_frames = cfg.window_frames;
            frame_period = 1.0 / cfg.fps;
            for (auto& fv : extract_features(rec.streams.at(m), cfg))
            {
                const auto start = fv.window.start_frame;
                by_start[m].emplace(start, std::move(fv));
            }
        }

        for (const auto& a : rec.annotations)
        {
            AnnotatedWindow w;
            w.recording_id = rid;
            w.label = a.intensity;
            w.cls = binarize(a.intensity, config.anger_threshold);
            w.start_time_s = static_cast<double>(a.start_frame) * frame_period;
            w.span_s = window_frames * frame_period;
            const std::string frames = std::to_string(a.start_frame) + ".." + std::to_string(a.end_frame);
            for (Modality m : mods)
            {
                if (m == Modality::speech)
                {
                    auto it = a.start_frame % window_frames == 0 ? speech_by_window.find(a.start_frame / window_frames)
                                                                 : speech_by_window.end();
                    if (it == speech_by_window.end())
                        throw DomainError("recording " + rid + ": no speech row for frames " + frames);
                    w.features[m] = it->second->features;
                    w.speech[m] = *it->second;
                    continue;
                }
                auto it = by_start[m].find(a.start_frame);
                if (it == by_start[m].end() || it->second.window.end_frame != a.end_frame)
                    throw DomainError("recording " + rid + ": no " + std::string(to_string(m)) +
                                      " window for frames " + frames);
                w.start_time_s = it->second.window.start_time_s;
                w.features[m] = it->second.flatten();
                w.aggregates[m] = aggregate_window(it->second);
            }
            windows.push_back(std::move(w));
        }
    }
    return windows;
}

std::map<Modality, LinearClassifier> train_classifiers(std::span<const AnnotatedWindow> windows,
                                                       std::span<const std::size_t> selected,
                                                       std::span<const Modality> modalities,
                                                       const ExperimentConfig& config)
{
    std::map<Modality, LinearClassifier> out;
    for (Modality m : modalities)
    {
        std::vector<TrainingExample> examples;
        examples.reserve(selected.size());
        for (auto i : selected)
            examples.push_back({windows[i].features.at(m), windows[i].cls});
        out.emplace(m, train(examples, m, config.train));
    }
    return out;
}

double model_confidence(const ModelSet& models, const AnnotatedWindow& window, Modality modality,
                        std::span<const Modality> modalities, bool fused_confidence)
{
    auto prediction = [&](Modality m) {
        auto it = models.classifiers.find(m);
        if (it == models.classifiers.end())
            throw DomainError("missing classifier for " + std::string(to_string(m)));
        return predict(it->second, window.features.at(m));
    };
    if (!fused_confidence)
        return prediction(modality).confidence;
    int anger = 0;
    for (Modality m : modalities)
        anger += prediction(m).label == Label::anger ? 1 : 0;
    return static_cast<double>(anger) / static_cast<double>(modalities.size());
}

void fit_intensity_models(ModelSet& models, std::span<const AnnotatedWindow> windows,
                          std::span<const std::size_t> selected, std::span<const Modality> modalities,
                          const ExperimentConfig& config)
{
    for (Modality m : modalities)
    {
        if (m == Modality::speech)
        {
            std::vector<SpeechFeatureRow> rows;
            std::vector<double> labels;
            for (auto i : selected)
            {
                rows.push_back(windows[i].speech.at(m));
                labels.push_back(windows[i].label);
            }
            models.speech = fit_speech(rows, labels, config.ridge, config.speech_intercept).first;
            continue;
        }
        std::vector<VisualSample> samples;
        for (auto i : selected)
        {
            const auto& agg = windows[i].aggregates.at(m);
            samples.push_back({model_confidence(models, windows[i], m, modalities, config.pipeline.fused_confidence),
                               agg.mean_displacement, agg.mean_speed, windows[i].label});
        }
        models.visual[m] = fit_visual(m, samples, config.ridge).first;
    }
}

namespace
{

struct FoldScores
{
    std::map<std::string, ClassificationReport> classification;
    std::map<std::string, IntensityAccuracyReport> intensity;
};

FoldScores run_fold(std::span<const AnnotatedWindow> windows, const std::vector<std::size_t>& train_idx,
                    const std::vector<std::size_t>& test_idx, std::span<const Modality> mods,
                    const ExperimentConfig& config)
{
    ModelSet models;
    models.classifiers = train_classifiers(windows, train_idx, mods, config);
    fit_intensity_models(models, windows, train_idx, mods, config);

    // Per test window: one prediction and one estimate per modality.
    std::map<Modality, std::vector<Prediction>> preds;
    std::map<Modality, std::vector<IntensityEstimate>> estimates;
    for (Modality m : mods)
        for (auto i : test_idx)
        {
            const auto& w = windows[i];
            preds[m].push_back(predict(models.classifiers.at(m), w.features.at(m)));
            if (m == Modality::speech)
                estimates[m].push_back(estimate_speech(*models.speech, w.speech.at(m)));
            else
                estimates[m].push_back(estimate_visual(
                    models.visual.at(m), model_confidence(models, w, m, mods, config.pipeline.fused_confidence),
                    w.aggregates.at(m)));
        }

    FoldScores scores;
    std::vector<double> labels;
    std::vector<Label> classes;
    for (auto i : test_idx)
    {
        labels.push_back(windows[i].label);
        classes.push_back(windows[i].cls);
    }
    for (Modality m : mods)
    {
        std::vector<double> values;
        std::vector<Label> predicted;
        for (std::size_t t = 0; t < test_idx.size(); ++t)
        {
            values.push_back(estimates[m][t].value);
            predicted.push_back(preds[m][t].label);
        }
        const std::string name(to_string(m));
        scores.intensity[name] = intensity_accuracy(values, labels, config.margin);
        scores.classification[name] = classification_metrics(predicted, classes);
    }

    // Multimodal: fuse each window's estimates over that window's time span.
    std::vector<double> fused_values;
    std::vector<Label> fused_labels;
    for (std::size_t t = 0; t < test_idx.size(); ++t)
    {
        const auto& w = windows[test_idx[t]];
        double span = w.span_s;
        for (Modality m : mods)
            span = std::max(span, estimates[m][t].timestamp_s - w.start_time_s + 1e-9);
        FusionBuffer buffer(w.start_time_s, span);
        std::vector<Prediction> votes;
        for (Modality m : mods)
        {
            buffer.add(estimates[m][t]);
            votes.push_back(preds[m][t]);
        }
        fused_values.push_back(fuse_multimodal(buffer)->value);
        fused_labels.push_back(fuse_majority(votes).label);
    }
    scores.intensity["multiple"] = intensity_accuracy(fused_values, labels, config.margin);
    scores.classification["multiple"] = classification_metrics(fused_labels, classes);
    return scores;
}

} // namespace

ExperimentReport run_experiment(std::span<const Recording> dataset, const ExperimentConfig& config)
{
    if (dataset.empty())
        throw DomainError("experiment needs at least one recording");
    const auto mods = dataset_modalities(dataset);
    if (mods.empty())
        throw DomainError("dataset has no modality data");
    const auto windows = collect_windows(dataset, config);

    std::vector<Label> classes;
    for (const auto& w : windows)
        classes.push_back(w.cls);
    const FoldPlan plan = kfold(windows.size(), config.k, config.seed, classes);

    std::vector<std::string> names;
    for (Modality m : mods)
        names.emplace_back(to_string(m));
    names.emplace_back("multiple");

    std::map<std::string, ExperimentRow> sums;
    for (const auto& name : names)
        sums[name].name = name;

    for (std::size_t f = 0; f < plan.folds.size(); ++f)
    {
        const auto scores = run_fold(windows, plan.training_indices(f), plan.folds[f], mods, config);
        for (const auto& name : names)
        {
            auto& row = sums[name];
            const auto& c = scores.classification.at(name);
            const auto& i = scores.intensity.at(name);
            row.windows += i.n;
            row.classification_accuracy += c.accuracy;
            row.precision += c.precision;
            row.recall += c.recall;
            row.intensity_accuracy += i.accuracy;
            row.mae += i.mae;
        }
    }

    ExperimentReport report;
    report.k = config.k;
    report.seed = config.seed;
    report.margin = config.margin;
    const auto folds = static_cast<double>(plan.folds.size());
    for (const auto& name : names)
    {
        ExperimentRow row = sums[name];
        row.classification_accuracy /= folds;
        row.precision /= folds;
        row.recall /= folds;
        row.intensity_accuracy /= folds;
        row.mae /= folds;
        report.rows.push_back(row);
    }
    return report;
}

namespace
{

std::string title_case(const std::string& s)
{
    std::string out = s;
    if (!out.empty())
        out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
}

} // namespace

std::string format_report(const ExperimentReport& report)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "Anger recognition (" << report.k << "-fold cross validation, seed " << report.seed << ")\n";
    os << std::left << std::setw(10) << "Modality" << std::right << std::setw(10) << "Accuracy" << std::setw(11)
       << "Precision" << std::setw(8) << "Recall" << '\n';
    for (const auto& r : report.rows)
        os << std::left << std::setw(10) << title_case(r.name) << std::right << std::setw(10)
           << r.classification_accuracy << std::setw(11) << r.precision << std::setw(8) << r.recall << '\n';
    os << '\n';
    os << "Anger intensity estimation (margin +/-" << report.margin << ")\n";
    os << std::left << std::setw(10) << "Modality" << std::right << std::setw(10) << "Accuracy" << std::setw(8)
       << "MAE" << '\n';
    for (const auto& r : report.rows)
        os << std::left << std::setw(10) << title_case(r.name) << std::right << std::setw(10)
           << r.intensity_accuracy << std::setw(8) << r.mae << '\n';
    return os.str();
}

void write_report_csv(const ExperimentReport& report, std::ostream& out)
{
    out << "modality,windows,classification_accuracy,precision,recall,intensity_accuracy,mae,margin,k,seed\n";
    for (const auto& r : report.rows)
        out << r.name << ',' << r.windows << ',' << format_double(r.classification_accuracy) << ','
            << format_double(r.precision) << ',' << format_double(r.recall) << ','
            << format_double(r.intensity_accuracy) << ',' << format_double(r.mae) << ','
            << format_double(report.margin) << ',' << report.k << ',' << report.seed << '\n';
    if (!out)
        throw DomainError("write failure");
}

} // namespace affect
