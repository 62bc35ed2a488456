#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "affect/classify.hpp"
#include "affect/datamodel.hpp"
#include "affect/eval.hpp"
#include "affect/intensity.hpp"

namespace testing
{

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir
{
public:
    explicit TempDir(const std::string& tag)
    {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("affect-" + tag + "-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Random finite double spread over many binades, both signs.
inline double any_double(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> exp(-30, 30);
    return std::ldexp(mant(rng), exp(rng));
}

inline std::string any_id(std::mt19937_64& rng)
{
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_.:";
    std::uniform_int_distribution<std::size_t> len(1, 16);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string s(len(rng), ' ');
    for (char& c : s)
        c = alphabet[pick(rng)];
    return s;
}

inline std::string any_rfc3339(std::mt19937_64& rng)
{
    auto in = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", in(1970, 2099), in(1, 12), in(1, 28), in(0, 23),
                  in(0, 59), in(0, 59));
    std::string s = buf;
    if (in(0, 1))
        s += "." + std::to_string(in(0, 999999));
    switch (in(0, 2))
    {
    case 0: s += "Z"; break;
    case 1: std::snprintf(buf, sizeof buf, "+%02d:%02d", in(0, 14), in(0, 59)); s += buf; break;
    default: std::snprintf(buf, sizeof buf, "-%02d:%02d", in(0, 12), in(0, 59)); s += buf; break;
    }
    return s;
}

inline affect::FrameStream any_stream(std::mt19937_64& rng, const affect::ModalityConfig& config)
{
    affect::FrameStream s;
    s.recording_id = any_id(rng);
    s.modality = config.modality;
    std::uniform_int_distribution<int> count(1, 12);
    std::uniform_int_distribution<int> gap(1, 5);
    std::uniform_real_distribution<double> dt(1e-4, 0.5);
    std::int64_t index = std::uniform_int_distribution<int>(0, 1000)(rng);
    double t = std::uniform_real_distribution<double>(-10.0, 1000.0)(rng);
    const int n = count(rng);
    for (int k = 0; k < n; ++k)
    {
        affect::Frame f;
        f.frame_index = index;
        f.timestamp_s = t;
        f.points.resize(2, config.point_count);
        for (Eigen::Index i = 0; i < f.points.size(); ++i)
            f.points.data()[i] = any_double(rng);
        s.frames.push_back(std::move(f));
        index += gap(rng);
        t += dt(rng);
    }
    return s;
}

inline affect::SpeechFeatureRow any_speech_row(std::mt19937_64& rng, const std::string& id, std::int64_t window)
{
    affect::SpeechFeatureRow r;
    r.recording_id = id;
    r.window_index = window;
    r.timestamp_s = std::uniform_real_distribution<double>(0.0, 1e4)(rng);
    r.features.resize(affect::kSpeechFeatureCount);
    for (auto& v : r.features)
        v = any_double(rng);
    return r;
}

inline affect::AnnotationRecord any_annotation(std::mt19937_64& rng, int window_frames = 10)
{
    affect::AnnotationRecord a;
    a.recording_id = any_id(rng);
    a.start_frame = std::uniform_int_distribution<std::int64_t>(0, 1'000'000)(rng);
    a.end_frame = a.start_frame + window_frames - 1;
    const int kind = std::uniform_int_distribution<int>(0, 9)(rng);
    a.intensity = kind == 0 ? 0.0 : kind == 1 ? 1.0 : std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    a.annotator_id = any_id(rng);
    a.created_at = any_rfc3339(rng);
    return a;
}

inline affect::LinearClassifier any_classifier(std::mt19937_64& rng)
{
    affect::LinearClassifier c;
    c.modality = affect::kAllModalities[std::uniform_int_distribution<int>(0, 3)(rng)];
    const int n = std::uniform_int_distribution<int>(1, 40)(rng);
    c.weights.resize(n);
    c.mean.resize(n);
    c.scale.resize(n);
    for (int i = 0; i < n; ++i)
    {
        c.weights[i] = any_double(rng);
        c.mean[i] = any_double(rng);
        c.scale[i] = std::abs(any_double(rng)) + 1e-3;
    }
    c.bias = any_double(rng);
    c.calib_a = any_double(rng);
    c.calib_b = any_double(rng);
    c.config.lambda = std::abs(any_double(rng)) + 1e-12;
    c.config.epochs = std::uniform_int_distribution<int>(1, 500)(rng);
    c.config.seed = rng();
    return c;
}

/// Classifiers and intensity models trained on every window of a dataset.
inline affect::ModelSet fit_all(const std::vector<affect::Recording>& data, const affect::ExperimentConfig& cfg = {})
{
    const auto mods = affect::dataset_modalities(data);
    const auto windows = affect::collect_windows(data, cfg);
    std::vector<std::size_t> all(windows.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = i;
    affect::ModelSet models;
    models.classifiers = affect::train_classifiers(windows, all, mods, cfg);
    affect::fit_intensity_models(models, windows, all, mods, cfg);
    return models;
}

} // namespace testing
