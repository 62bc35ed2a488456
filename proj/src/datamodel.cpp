#include "affect/datamodel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <istream>
#include <ostream>
#include <regex>

#include "json.hpp"
#include "text.hpp"

using nlohmann::json;

namespace affect
{

ParseError::ParseError(std::size_t line, const std::string& what)
    : DomainError("line " + std::to_string(line) + ": " + what), line_(line)
{
}

FieldError::FieldError(std::string field, const std::string& what)
    : DomainError(field + ": " + what), field_(std::move(field))
{
}

std::string format_double(double value) { return detail::format_double(value); }

void validate_identifier(const std::string& id, const std::string& field)
{
    if (id.empty())
        throw FieldError(field, "must not be empty");
    for (char c : id)
        if (c == ',' || c == '"' || c == '\n' || c == '\r' || c == '/' || c == '\\')
            throw FieldError(field, "contains a forbidden character");
}

bool is_rfc3339(const std::string& text)
{
    static const std::regex pattern(
        R"(^(\d{4})-(\d{2})-(\d{2})[Tt](\d{2}):(\d{2}):(\d{2})(\.\d+)?([Zz]|[+-](\d{2}):(\d{2}))$)");
    std::smatch m;
    if (!std::regex_match(text, m, pattern))
        return false;
    auto num = [&](int i) { return std::stoi(m[i].str()); };
    if (num(2) < 1 || num(2) > 12 || num(3) < 1 || num(3) > 31)
        return false;
    if (num(4) > 23 || num(5) > 59 || num(6) > 60)
        return false;
    if (m[9].matched && (num(9) > 23 || num(10) > 59))
        return false;
    return true;
}

void validate(const AnnotationRecord& r, int window_frames)
{
    validate_identifier(r.recording_id, "recording_id");
    validate_identifier(r.annotator_id, "annotator_id");
    if (r.start_frame < 0)
        throw FieldError("start_frame", "must be non-negative");
    if (r.end_frame < r.start_frame || r.end_frame - r.start_frame + 1 != window_frames)
        throw FieldError("end_frame", "window must span exactly " + std::to_string(window_frames) +
                                          " frames, got " + std::to_string(r.start_frame) + ".." +
                                          std::to_string(r.end_frame));
    if (!(r.intensity >= 0.0 && r.intensity <= 1.0))
        throw FieldError("intensity", "must lie in [0, 1], got " + format_double(r.intensity));
    if (!is_rfc3339(r.created_at))
        throw FieldError("created_at", "not an RFC 3339 timestamp: '" + r.created_at + "'");
}

void validate(const RecordingMeta& meta)
{
    validate_identifier(meta.recording_id, "recording_id");
    if (!(meta.fps > 0.0) || !std::isfinite(meta.fps))
        throw FieldError("fps", "must be positive");
    for (auto [m, count] : meta.frame_counts)
        if (count < 0)
            throw FieldError("frame_counts", std::string(to_string(m)) + " count is negative");
}

// ---------------------------------------------------------------------------
// frames

std::string frame_csv_header(int point_count)
{
    std::string h = "recording_id,modality,frame_index,timestamp_s";
    for (int i = 0; i < point_count; ++i)
        h += ",x" + std::to_string(i) + ",y" + std::to_string(i);
    return h;
}

FrameStream parse_frames(std::istream& in, const ModalityConfig& config)
{
    validate(config);
    require_visual(config.modality);

    FrameStream stream;
    stream.modality = config.modality;
    const std::size_t expected_cells = 4 + 2 * static_cast<std::size_t>(config.point_count);
    const std::string header = frame_csv_header(config.point_count);

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        detail::strip_cr(line);
        if (line.empty())
            continue;
        if (line_no == 1 && line.starts_with("recording_id,"))
        {
            if (line != header)
            {
                auto cells = detail::split_csv(line);
                throw ParseError(line_no, "header names " + std::to_string((cells.size() - 4) / 2) +
                                              " points, " + std::string(to_string(config.modality)) +
                                              " expects " + std::to_string(config.point_count));
            }
            continue;
        }

        auto cells = detail::split_csv(line);
        if (cells.size() < 4 || (cells.size() - 4) % 2 != 0)
            throw ParseError(line_no, "malformed frame line with " + std::to_string(cells.size()) + " cells");
        if (cells.size() != expected_cells)
            throw ParseError(line_no, "frame has " + std::to_string((cells.size() - 4) / 2) + " points, " +
                                          std::string(to_string(config.modality)) + " expects " +
                                          std::to_string(config.point_count));

        std::string id(cells[0]);
        try
        {
            validate_identifier(id, "recording_id");
        }
        catch (const FieldError& e)
        {
            throw ParseError(line_no, e.what());
        }
        if (stream.frames.empty())
            stream.recording_id = id;
        else if (id != stream.recording_id)
            throw ParseError(line_no, "recording_id '" + id + "' differs from '" + stream.recording_id + "'");
        if (cells[1] != to_string(config.modality))
            throw ParseError(line_no, "modality '" + std::string(cells[1]) + "' does not match configured " +
                                          std::string(to_string(config.modality)));

        Frame f;
        f.frame_index = detail::parse_int(cells[2], line_no, "frame_index");
        if (f.frame_index < 0)
            throw ParseError(line_no, "frame_index must be non-negative");
        f.timestamp_s = detail::parse_finite(cells[3], line_no, "timestamp_s");
        f.points.resize(2, config.point_count);
        for (int i = 0; i < config.point_count; ++i)
        {
            f.points(0, i) = detail::parse_finite(cells[4 + 2 * i], line_no, "x" + std::to_string(i));
            f.points(1, i) = detail::parse_finite(cells[5 + 2 * i], line_no, "y" + std::to_string(i));
        }

        if (!stream.frames.empty())
        {
            const Frame& prev = stream.frames.back();
            if (f.frame_index <= prev.frame_index)
                throw ParseError(line_no, "frame_index " + std::to_string(f.frame_index) +
                                              " is not greater than previous " + std::to_string(prev.frame_index));
            if (f.timestamp_s <= prev.timestamp_s)
                throw ParseError(line_no, "timestamp_s is not strictly increasing");
        }
        stream.frames.push_back(std::move(f));
    }
    if (in.bad())
        throw DomainError("read failure");
    return stream;
}

void write_frames(const FrameStream& stream, std::ostream& out)
{
    const int n = stream.frames.empty() ? default_config(stream.modality).point_count
                                        : static_cast<int>(stream.frames.front().points.cols());
    out << frame_csv_header(n) << '\n';
    const std::string prefix = stream.recording_id + "," + std::string(to_string(stream.modality)) + ",";
    for (const Frame& f : stream.frames)
    {
        out << prefix << f.frame_index << ',' << format_double(f.timestamp_s);
        for (Eigen::Index i = 0; i < f.points.cols(); ++i)
            out << ',' << format_double(f.points(0, i)) << ',' << format_double(f.points(1, i));
        out << '\n';
    }
    if (!out)
        throw DomainError("write failure");
}

// ---------------------------------------------------------------------------
// speech

std::string speech_csv_header()
{
    std::string h = "recording_id,window_index,timestamp_s";
    char buf[8];
    for (int i = 0; i < kSpeechFeatureCount; ++i)
    {
        std::snprintf(buf, sizeof buf, "f%03d", i);
        h += ',';
        h += buf;
    }
    return h;
}

std::vector<SpeechFeatureRow> parse_speech_features(std::istream& in)
{
    std::vector<SpeechFeatureRow> rows;
    constexpr std::size_t expected_cells = 3 + kSpeechFeatureCount;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        detail::strip_cr(line);
        if (line.empty())
            continue;
        auto cells = detail::split_csv(line);
        if (line_no == 1 && line.starts_with("recording_id,"))
        {
            if (cells.size() != expected_cells)
                throw ParseError(line_no, "header has " + std::to_string(cells.size()) + " columns, expected " +
                                              std::to_string(expected_cells));
            continue;
        }
        if (cells.size() != expected_cells)
            throw ParseError(line_no, "expected " + std::to_string(expected_cells) + " columns (3 ids + " +
                                          std::to_string(kSpeechFeatureCount) + " features), got " +
                                          std::to_string(cells.size()));
        SpeechFeatureRow row;
        row.recording_id = std::string(cells[0]);
        try
        {
            validate_identifier(row.recording_id, "recording_id");
        }
        catch (const FieldError& e)
        {
            throw ParseError(line_no, e.what());
        }
        row.window_index = detail::parse_int(cells[1], line_no, "window_index");
        if (row.window_index < 0)
            throw ParseError(line_no, "window_index must be non-negative");
        row.timestamp_s = detail::parse_finite(cells[2], line_no, "timestamp_s");
        row.features.resize(kSpeechFeatureCount);
        for (int i = 0; i < kSpeechFeatureCount; ++i)
            row.features[i] = detail::parse_finite(cells[3 + i], line_no, "f" + std::to_string(i));
        rows.push_back(std::move(row));
    }
    if (in.bad())
        throw DomainError("read failure");
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.window_index < b.window_index; });
    return rows;
}

void write_speech_features(std::span<const SpeechFeatureRow> rows, std::ostream& out)
{
    out << speech_csv_header() << '\n';
    for (const auto& row : rows)
    {
        if (row.features.size() != kSpeechFeatureCount)
            throw DomainError("speech row has " + std::to_string(row.features.size()) + " features");
        out << row.recording_id << ',' << row.window_index << ',' << format_double(row.timestamp_s);
        for (Eigen::Index i = 0; i < row.features.size(); ++i)
            out << ',' << format_double(row.features[i]);
        out << '\n';
    }
    if (!out)
        throw DomainError("write failure");
}

// ---------------------------------------------------------------------------
// annotations

namespace
{

template <class T>
T required(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end())
        throw FieldError(key, "missing");
    if constexpr (std::is_same_v<T, std::string>)
    {
        if (!it->is_string())
            throw FieldError(key, "must be a string");
    }
    else if constexpr (std::is_integral_v<T>)
    {
        if (!it->is_number_integer())
            throw FieldError(key, "must be an integer");
    }
    else
    {
        if (!it->is_number())
            throw FieldError(key, "must be a number");
    }
    return it->get<T>();
}

json annotation_json(const AnnotationRecord& r)
{
    return json{{"recording_id", r.recording_id}, {"start_frame", r.start_frame}, {"end_frame", r.end_frame},
                {"intensity", r.intensity},       {"annotator_id", r.annotator_id}, {"created_at", r.created_at}};
}

AnnotationRecord annotation_from(const json& j, int window_frames)
{
    if (!j.is_object())
        throw DomainError("annotation must be a JSON object");
    AnnotationRecord r;
    r.recording_id = required<std::string>(j, "recording_id");
    r.start_frame = required<std::int64_t>(j, "start_frame");
    r.end_frame = required<std::int64_t>(j, "end_frame");
    r.intensity = required<double>(j, "intensity");
    r.annotator_id = required<std::string>(j, "annotator_id");
    r.created_at = required<std::string>(j, "created_at");
    validate(r, window_frames);
    return r;
}

} // namespace

std::string to_json_line(const AnnotationRecord& record) { return annotation_json(record).dump(); }

AnnotationRecord annotation_from_json(const std::string& text, int window_frames)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw DomainError(std::string("invalid JSON: ") + e.what());
    }
    return annotation_from(j, window_frames);
}

std::vector<AnnotationRecord> parse_annotations(std::istream& in, int window_frames)
{
    std::vector<AnnotationRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        detail::strip_cr(line);
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        try
        {
            records.push_back(annotation_from_json(line, window_frames));
        }
        catch (const DomainError& e)
        {
            throw ParseError(line_no, e.what());
        }
    }
    if (in.bad())
        throw DomainError("read failure");
    return records;
}

void write_annotations(std::span<const AnnotationRecord> records, std::ostream& out)
{
    for (const auto& r : records)
        out << to_json_line(r) << '\n';
    if (!out)
        throw DomainError("write failure");
}

// ---------------------------------------------------------------------------
// recording meta

std::string to_json(const RecordingMeta& meta)
{
    json mods = json::array();
    for (Modality m : meta.modalities)
        mods.push_back(to_string(m));
    json counts = json::object();
    for (auto [m, n] : meta.frame_counts)
        counts[std::string(to_string(m))] = n;
    json j{{"recording_id", meta.recording_id}, {"subject_id", meta.subject_id}, {"fps", meta.fps},
           {"modalities", mods},                {"frame_counts", counts},       {"source", meta.source}};
    return j.dump(2);
}

RecordingMeta parse_recording_meta(const std::string& text)
{
    RecordingMeta meta;
    try
    {
        json j = json::parse(text);
        meta.recording_id = required<std::string>(j, "recording_id");
        meta.subject_id = j.value("subject_id", std::string{});
        meta.fps = required<double>(j, "fps");
        for (const auto& m : j.at("modalities"))
            meta.modalities.push_back(modality_from_string(m.get<std::string>()));
        for (const auto& [k, v] : j.at("frame_counts").items())
            meta.frame_counts[modality_from_string(k)] = v.get<std::int64_t>();
        meta.source = j.value("source", std::string("captured"));
    }
    catch (const json::exception& e)
    {
        throw DomainError(std::string("invalid recording meta: ") + e.what());
    }
    validate(meta);
    return meta;
}

} // namespace affect
