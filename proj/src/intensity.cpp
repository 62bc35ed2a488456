#include "affect/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "affect/least_squares.hpp"
#include "json.hpp"
#include "text.hpp"

using nlohmann::json;

namespace affect
{

namespace
{

constexpr int kFormatVersion = 1;

void check_label(double y)
{
    if (!(y >= 0.0 && y <= 1.0))
        throw DomainError("intensity label " + format_double(y) + " outside [0, 1]");
}

FitReport report_from(const LeastSquaresFit<double>& fit)
{
    return {fit.theta, fit.cost, fit.condition, fit.ridge};
}

json fit_json(const FitMetadata& fit)
{
    return {{"rows", fit.rows}, {"cf", fit.cf}, {"lambda", fit.ridge}};
}

FitMetadata fit_from(const json& j)
{
    return {j.at("rows").get<std::size_t>(), j.at("cf").get<double>(), j.at("lambda").get<double>()};
}

} // namespace

std::string source_name(const IntensityEstimate& e)
{
    return e.modality ? std::string(to_string(*e.modality)) : std::string("fused");
}

IntensityEstimate make_estimate(double raw, std::optional<Modality> modality, WindowRef window, double timestamp_s)
{
    IntensityEstimate e;
    e.raw = raw;
    e.value = std::min(1.0, std::max(0.0, raw));
    e.modality = modality;
    e.window = std::move(window);
    e.timestamp_s = timestamp_s;
    return e;
}

IntensityEstimate estimate_visual(const VisualIntensityModel& model, double confidence, const WindowAggregate& agg)
{
    if (agg.modality != model.modality)
        throw DomainError("intensity model is for " + std::string(to_string(model.modality)) + ", window is " +
                          std::string(to_string(agg.modality)));
    if (!std::isfinite(confidence) || !std::isfinite(agg.mean_displacement) || !std::isfinite(agg.mean_speed))
        throw DomainError("non-finite intensity model input");
    if (confidence < 0.0 || confidence > 1.0)
        throw DomainError("confidence " + format_double(confidence) + " outside [0, 1]");
    const Eigen::Vector4d x(confidence, agg.mean_displacement, agg.mean_speed, 1.0);
    return make_estimate(model.theta.dot(x), model.modality, agg.window, agg.window.end_time_s);
}

IntensityEstimate estimate_speech(const SpeechIntensityModel& model, const SpeechFeatureRow& row)
{
    if (row.features.size() != kSpeechFeatureCount)
        throw DomainError("speech row has " + std::to_string(row.features.size()) + " features, expected " +
                          std::to_string(kSpeechFeatureCount));
    const Eigen::Index expected = kProsodicFeatureCount + (model.include_intercept ? 1 : 0);
    if (model.theta.size() != expected)
        throw DomainError("speech model has " + std::to_string(model.theta.size()) + " parameters, expected " +
                          std::to_string(expected));
    double raw = model.theta.head(kProsodicFeatureCount).dot(row.prosodic());
    if (model.include_intercept)
        raw += model.theta[kProsodicFeatureCount];
    if (!std::isfinite(raw))
        throw DomainError("non-finite speech estimate");
    WindowRef window{row.recording_id, row.window_index, row.window_index, row.timestamp_s, row.timestamp_s};
    return make_estimate(raw, Modality::speech, std::move(window), row.timestamp_s);
}

Eigen::MatrixXd visual_design(std::span<const VisualSample> samples)
{
    Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), 4);
    for (std::size_t i = 0; i < samples.size(); ++i)
        x.row(static_cast<Eigen::Index>(i)) << samples[i].confidence, samples[i].mean_displacement,
            samples[i].mean_speed, 1.0;
    return x;
}

Eigen::MatrixXd speech_design(std::span<const SpeechFeatureRow> rows, bool include_intercept)
{
    const Eigen::Index p = kProsodicFeatureCount + (include_intercept ? 1 : 0);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), p);
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
        if (rows[i].features.size() != kSpeechFeatureCount)
            throw DomainError("speech row has " + std::to_string(rows[i].features.size()) + " features");
        const auto r = static_cast<Eigen::Index>(i);
        x.row(r).head(kProsodicFeatureCount) = rows[i].prosodic().transpose();
        if (include_intercept)
            x(r, kProsodicFeatureCount) = 1.0;
    }
    return x;
}

std::pair<VisualIntensityModel, FitReport> fit_visual(Modality modality, std::span<const VisualSample> samples,
                                                      double ridge)
{
    require_visual(modality);
    Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        check_label(samples[i].label);
        y[static_cast<Eigen::Index>(i)] = samples[i].label;
    }
    const auto fit = solve_normal_equations<double>(visual_design(samples), y, ridge, Eigen::Index{3});

    VisualIntensityModel model;
    model.modality = modality;
    model.theta = fit.theta;
    model.fit = {samples.size(), fit.cost, fit.ridge};
    return {model, report_from(fit)};
}

std::pair<SpeechIntensityModel, FitReport> fit_speech(std::span<const SpeechFeatureRow> rows,
                                                      std::span<const double> labels, double ridge,
                                                      bool include_intercept)
{
    if (rows.size() != labels.size())
        throw DomainError("speech fit: " + std::to_string(rows.size()) + " rows but " +
                          std::to_string(labels.size()) + " labels");
    for (double y : labels)
        check_label(y);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
    std::optional<Eigen::Index> intercept;
    if (include_intercept)
        intercept = kProsodicFeatureCount;
    const auto fit = solve_normal_equations<double>(speech_design(rows, include_intercept), y, ridge, intercept);

    SpeechIntensityModel model;
    model.theta = fit.theta;
    model.include_intercept = include_intercept;
    model.fit = {rows.size(), fit.cost, fit.ridge};
    return {model, report_from(fit)};
}

// ---------------------------------------------------------------------------
// fusion

FusionBuffer::FusionBuffer(double start_s, double length_s) : origin_(start_s), start_(start_s), length_(length_s)
{
    if (!(length_s > 0.0) || !std::isfinite(length_s) || !std::isfinite(start_s))
        throw DomainError("fusion window length must be positive");
}

void FusionBuffer::add(const IntensityEstimate& estimate)
{
    if (!estimate.modality)
        throw DomainError("fused estimates cannot be buffered");
    if (!contains(estimate.timestamp_s))
        throw DomainError("estimate at t=" + format_double(estimate.timestamp_s) + " outside fusion window [" +
                          format_double(start_) + ", " + format_double(end()) + ")");
    entries_[*estimate.modality].push_back(estimate);
}

void FusionBuffer::advance_to(double t)
{
    entries_.clear();
    start_ = origin_ + std::floor((t - origin_) / length_) * length_;
    // Guard against rounding at the boundary.
    if (t >= end())
        start_ += length_;
    else if (t < start_)
        start_ -= length_;
}

std::optional<IntensityEstimate> fuse_multimodal(const FusionBuffer& buffer)
{
    double sum_of_means = 0.0;
    int modalities = 0;
    WindowRef window;
    window.start_time_s = buffer.start();
    window.end_time_s = buffer.end();
    bool first = true;
    for (const auto& [m, list] : buffer.entries())
    {
        if (list.empty())
            continue;
        double sum = 0.0;
        for (const auto& e : list)
        {
            sum += e.value;
            if (first || e.window.start_frame < window.start_frame)
                window.start_frame = e.window.start_frame;
            if (first || e.window.end_frame > window.end_frame)
                window.end_frame = e.window.end_frame;
            if (first)
                window.recording_id = e.window.recording_id;
            first = false;
        }
        sum_of_means += sum / static_cast<double>(list.size());
        ++modalities;
    }
    if (modalities == 0)
        return std::nullopt;
    const double fused = sum_of_means / modalities;
    return make_estimate(fused, std::nullopt, std::move(window), buffer.end());
}

// ---------------------------------------------------------------------------
// files

std::string visual_model_to_json(const VisualIntensityModel& model)
{
    json j{{"format_version", kFormatVersion},
           {"kind", "visual"},
           {"modality", to_string(model.modality)},
           {"theta", std::vector<double>(model.theta.begin(), model.theta.end())},
           {"intercept", true},
           {"training", fit_json(model.fit)}};
    return j.dump(2);
}

std::string speech_model_to_json(const SpeechIntensityModel& model)
{
    json j{{"format_version", kFormatVersion},
           {"kind", "speech"},
           {"modality", "speech"},
           {"theta", std::vector<double>(model.theta.begin(), model.theta.end())},
           {"intercept", model.include_intercept},
           {"training", fit_json(model.fit)}};
    return j.dump(2);
}

IntensityModel intensity_model_from_json(const std::string& text)
{
    try
    {
        const json j = json::parse(text);
        if (j.at("format_version").get<int>() != kFormatVersion)
            throw DomainError("unsupported intensity model format_version");
        const auto kind = j.at("kind").get<std::string>();
        const auto theta = j.at("theta").get<std::vector<double>>();
        for (double v : theta)
            if (!std::isfinite(v))
                throw DomainError("intensity model: non-finite theta");
        if (kind == "visual")
        {
            VisualIntensityModel m;
            m.modality = modality_from_string(j.at("modality").get<std::string>());
            require_visual(m.modality);
            if (theta.size() != 4)
                throw DomainError("visual model needs 4 theta values, file has " + std::to_string(theta.size()));
            m.theta = Eigen::Vector4d(theta[0], theta[1], theta[2], theta[3]);
            m.fit = fit_from(j.at("training"));
            return m;
        }
        if (kind == "speech")
        {
            SpeechIntensityModel m;
            m.include_intercept = j.at("intercept").get<bool>();
            const std::size_t expected = kProsodicFeatureCount + (m.include_intercept ? 1u : 0u);
            if (theta.size() != expected)
                throw DomainError("speech model needs " + std::to_string(expected) + " theta values, file has " +
                                  std::to_string(theta.size()));
            m.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
            m.fit = fit_from(j.at("training"));
            return m;
        }
        throw DomainError("unknown intensity model kind '" + kind + "'");
    }
    catch (const json::exception& e)
    {
        throw DomainError(std::string("invalid intensity model file: ") + e.what());
    }
}

void write_estimates_csv(std::span<const IntensityEstimate> estimates, std::ostream& out)
{
    out << "recording_id,timestamp_s,modality,raw,value\n";
    for (const auto& e : estimates)
        out << e.window.recording_id << ',' << format_double(e.timestamp_s) << ',' << source_name(e) << ','
            << format_double(e.raw) << ',' << format_double(e.value) << '\n';
    if (!out)
        throw DomainError("write failure");
}

std::vector<IntensityEstimate> parse_estimates_csv(std::istream& in)
{
    std::vector<IntensityEstimate> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        detail::strip_cr(line);
        if (line.empty() || (line_no == 1 && line.starts_with("recording_id,")))
            continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != 5)
            throw ParseError(line_no, "expected 5 columns, got " + std::to_string(cells.size()));
        std::optional<Modality> m;
        if (cells[2] != "fused")
        {
            try
            {
                m = modality_from_string(cells[2]);
            }
            catch (const DomainError& e)
            {
                throw ParseError(line_no, e.what());
            }
        }
        IntensityEstimate e;
        e.window.recording_id = std::string(cells[0]);
        e.timestamp_s = detail::parse_finite(cells[1], line_no, "timestamp_s");
        e.modality = m;
        e.raw = detail::parse_finite(cells[3], line_no, "raw");
        e.value = detail::parse_finite(cells[4], line_no, "value");
        if (e.value < 0.0 || e.value > 1.0)
            throw ParseError(line_no, "value outside [0, 1]");
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace affect
