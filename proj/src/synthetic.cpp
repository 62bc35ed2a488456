#include "affect/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace affect
{

namespace
{

// Motion amplitude (sensor units per window at intensity 1) and relative
// jitter per modality. Face and body tracking are the noisier channels.
struct ChannelProfile
{
    double amplitude;
    double jitter;
};

ChannelProfile profile(Modality m)
{
    switch (m)
    {
    case Modality::face: return {8.0, 3.0};
    case Modality::body: return {25.0, 3.0};
    case Modality::hand: return {60.0, 1.0};
    case Modality::speech: return {1.0, 1.0};
    }
    return {1.0, 1.0};
}

std::mt19937_64 channel_rng(std::uint64_t seed, Modality m)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(m) + 1u};
    return std::mt19937_64(seq);
}

FrameStream synth_stream(const SyntheticSpec& spec, Modality m, const std::vector<double>& values)
{
    auto rng = channel_rng(spec.seed, m);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const Eigen::Matrix2Xd base = template_points(m);
    const Eigen::Index n = base.cols();
    const ChannelProfile prof = profile(m);

    Eigen::Matrix2Xd direction(2, n);
    Eigen::RowVectorXd amplitude(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const double phi = 2.0 * std::numbers::pi * uni(rng);
        direction.col(i) << std::cos(phi), std::sin(phi);
        amplitude[i] = prof.amplitude * (0.7 + 0.6 * uni(rng));
    }
    const double jitter = spec.noise * prof.jitter * prof.amplitude;

    FrameStream stream;
    stream.recording_id = spec.recording_id;
    stream.modality = m;
    stream.frames.reserve(static_cast<std::size_t>(spec.windows * spec.window_frames));

    Eigen::Matrix2Xd start = base;
    const double steps = spec.window_frames - 1;
    for (int w = 0; w < spec.windows; ++w)
    {
        const double sign = (w % 2 == 0) ? 1.0 : -1.0;
        const Eigen::Matrix2Xd delta = sign * values[w] * (direction.array().rowwise() * amplitude.array()).matrix();
        for (int k = 0; k < spec.window_frames; ++k)
        {
            Frame f;
            f.frame_index = static_cast<std::int64_t>(w) * spec.window_frames + k;
            f.timestamp_s = static_cast<double>(f.frame_index) / spec.fps;
            f.points = start + delta * (k / steps);
            if (jitter > 0.0)
                for (Eigen::Index i = 0; i < n; ++i)
                    f.points.col(i) += jitter * Eigen::Vector2d(gauss(rng), gauss(rng));
            stream.frames.push_back(std::move(f));
        }
        start += delta;
    }
    return stream;
}

std::vector<SpeechFeatureRow> synth_speech(const SyntheticSpec& spec, const std::vector<double>& values)
{
    auto rng = channel_rng(spec.seed, Modality::speech);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Eigen::VectorXd offset(kProsodicFeatureCount);
    Eigen::VectorXd gain(kProsodicFeatureCount);
    for (int i = 0; i < kProsodicFeatureCount; ++i)
    {
        offset[i] = uni(rng);
        const double g = uni(rng);
        gain[i] = (g < 0 ? -1.0 : 1.0) * (0.5 + std::abs(g));
    }
    const double jitter = spec.noise * profile(Modality::speech).jitter;

    std::vector<SpeechFeatureRow> rows;
    for (int w = 0; w < spec.windows; ++w)
    {
        SpeechFeatureRow row;
        row.recording_id = spec.recording_id;
        row.window_index = w;
        const auto last_frame = static_cast<std::int64_t>(w + 1) * spec.window_frames - 1;
        row.timestamp_s = static_cast<double>(last_frame) / spec.fps;
        row.features.resize(kSpeechFeatureCount);
        for (int i = 0; i < kProsodicFeatureCount; ++i)
            row.features[i] = offset[i] + gain[i] * values[w] + jitter * std::abs(gain[i]) * gauss(rng);
        for (int i = kProsodicFeatureCount; i < kSpeechFeatureCount; ++i)
            row.features[i] = gauss(rng);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

Eigen::Matrix2Xd template_points(Modality m)
{
    Eigen::Matrix2Xd p;
    switch (m)
    {
    case Modality::face:
    {
        p.resize(2, kFacePoints);
        p.col(0) << 290.0, 190.0;
        p.col(1) << 350.0, 190.0;
        for (int i = 2; i < kFacePoints; ++i)
        {
            const double t = 2.0 * std::numbers::pi * (i - 2) / (kFacePoints - 2);
            const double r = (i % 2 == 0) ? 1.0 : 0.6;
            p.col(i) << 320.0 + 50.0 * r * std::cos(t), 200.0 + 65.0 * r * std::sin(t);
        }
        break;
    }
    case Modality::body:
        p.resize(2, kBodyPoints);
        p << 320, 270, 370, 390, 250, 400, 240, 320, 350, 290, 320, 320,
             150, 155, 155, 220, 220, 280, 280, 220, 290, 290, 290, 90;
        break;
    case Modality::hand:
        p.resize(2, kHandPoints);
        p << 270, 370, 250, 390, 240, 400, 235, 405,
             155, 155, 220, 220, 280, 280, 300, 300;
        break;
    case Modality::speech:
        throw DomainError("speech has no point layout");
    }
    return p;
}

std::vector<double> sample_curve(const std::vector<double>& control, int windows)
{
    if (control.empty())
        throw DomainError("intensity curve is empty");
    for (double v : control)
        if (!(v >= 0.0 && v <= 1.0))
            throw DomainError("curve value " + format_double(v) + " outside [0, 1]");
    if (windows < 0)
        throw DomainError("window count must be non-negative");

    const auto w = static_cast<std::size_t>(windows);
    if (control.size() == 1)
        return std::vector<double>(w, control.front());
    if (control.size() == w)
        return control;

    std::vector<double> out(w);
    for (std::size_t i = 0; i < w; ++i)
    {
        const double pos = w == 1 ? 0.0 : static_cast<double>(i) * (control.size() - 1) / (w - 1);
        const auto lo = std::min(static_cast<std::size_t>(pos), control.size() - 2);
        const double t = pos - static_cast<double>(lo);
        out[i] = control[lo] + t * (control[lo + 1] - control[lo]);
    }
    return out;
}

std::vector<double> random_curve(int windows, std::uint64_t seed)
{
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    struct Wave
    {
        double period, phase, weight;
    };
    std::vector<Wave> waves;
    for (int k = 0; k < 3; ++k)
        waves.push_back({12.0 + 60.0 * uni(rng), 2.0 * std::numbers::pi * uni(rng), 0.5 + uni(rng)});

    std::vector<double> raw(static_cast<std::size_t>(std::max(windows, 0)));
    for (std::size_t i = 0; i < raw.size(); ++i)
        for (const Wave& wv : waves)
            raw[i] += wv.weight * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / wv.period + wv.phase);
    if (raw.empty())
        return raw;

    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    const double a = *lo, b = *hi;
    for (double& v : raw)
        v = b > a ? 0.02 + 0.96 * (v - a) / (b - a) : 0.5;
    return raw;
}

Recording generate_synthetic_recording(const SyntheticSpec& spec)
{
    validate_identifier(spec.recording_id, "recording_id");
    if (spec.window_frames < 2)
        throw DomainError("window_frames must be >= 2");
    if (!(spec.fps > 0.0))
        throw DomainError("fps must be positive");
    if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise))
        throw DomainError("noise must be a non-negative finite value");
    const std::vector<double> values = sample_curve(spec.curve, spec.windows);

    Recording rec;
    rec.meta.recording_id = spec.recording_id;
    rec.meta.subject_id = spec.subject_id;
    rec.meta.fps = spec.fps;
    rec.meta.source = "synthetic";

    for (Modality m : kAllModalities)
    {
        if (std::find(spec.modalities.begin(), spec.modalities.end(), m) == spec.modalities.end())
            continue;
        rec.meta.modalities.push_back(m);
        if (m == Modality::speech)
        {
            rec.speech = synth_speech(spec, values);
            rec.meta.frame_counts[m] = static_cast<std::int64_t>(rec.speech.size());
        }
        else
        {
            rec.streams[m] = synth_stream(spec, m, values);
            rec.meta.frame_counts[m] = static_cast<std::int64_t>(rec.streams[m].frames.size());
        }
    }

    for (int w = 0; w < spec.windows; ++w)
    {
        AnnotationRecord a;
        a.recording_id = spec.recording_id;
        a.start_frame = static_cast<std::int64_t>(w) * spec.window_frames;
        a.end_frame = a.start_frame + spec.window_frames - 1;
        a.intensity = values[static_cast<std::size_t>(w)];
        a.annotator_id = "synthetic";
        a.created_at = "1970-01-01T00:00:00Z";
        rec.annotations.push_back(std::move(a));
    }
    return rec;
}

} // namespace affect
