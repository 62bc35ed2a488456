#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "affect/modality.hpp"

namespace affect
{

/// A DomainError located in a text input. line is 1-based and counts the
/// header line when one is present.
class ParseError : public DomainError
{
public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// A DomainError tied to one named field of a record.
class FieldError : public DomainError
{
public:
    FieldError(std::string field, const std::string& what);
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// One timestamped sample of 2-D feature points. Column i of points is (x_i, y_i).
struct Frame
{
    std::int64_t frame_index = 0;
    double timestamp_s = 0.0;
    Eigen::Matrix2Xd points;

    friend bool operator==(const Frame& a, const Frame& b)
    {
        return a.frame_index == b.frame_index && a.timestamp_s == b.timestamp_s &&
               a.points.cols() == b.points.cols() && a.points == b.points;
    }
};

/// All frames of one modality of one recording, ordered by frame_index.
struct FrameStream
{
    std::string recording_id;
    Modality modality = Modality::face;
    std::vector<Frame> frames;

    friend bool operator==(const FrameStream&, const FrameStream&) = default;
};

struct SpeechFeatureRow
{
    std::string recording_id;
    std::int64_t window_index = 0;
    double timestamp_s = 0.0;
    Eigen::VectorXd features; // kSpeechFeatureCount values

    auto prosodic() const { return features.head(kProsodicFeatureCount); }

    friend bool operator==(const SpeechFeatureRow& a, const SpeechFeatureRow& b)
    {
        return a.recording_id == b.recording_id && a.window_index == b.window_index &&
               a.timestamp_s == b.timestamp_s && a.features.size() == b.features.size() &&
               a.features == b.features;
    }
};

struct AnnotationRecord
{
    std::string recording_id;
    std::int64_t start_frame = 0;
    std::int64_t end_frame = 0;
    double intensity = 0.0;
    std::string annotator_id;
    std::string created_at; // RFC 3339

    friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct RecordingMeta
{
    std::string recording_id;
    std::string subject_id;
    double fps = 30.0;
    std::vector<Modality> modalities;
    std::map<Modality, std::int64_t> frame_counts; // speech counts rows
    std::string source = "captured";

    friend bool operator==(const RecordingMeta&, const RecordingMeta&) = default;
};

/// Everything known about one recording.
struct Recording
{
    RecordingMeta meta;
    std::map<Modality, FrameStream> streams;
    std::vector<SpeechFeatureRow> speech;
    std::vector<AnnotationRecord> annotations;

    bool has(Modality m) const { return m == Modality::speech ? !speech.empty() : streams.count(m) > 0; }
};

// Identifiers end up as bare CSV cells and JSON strings.
void validate_identifier(const std::string& id, const std::string& field);
bool is_rfc3339(const std::string& text);

void validate(const AnnotationRecord& record, int window_frames = 10);
void validate(const RecordingMeta& meta);

/// Reads the frame CSV format. The header line is optional; when present it
/// must name exactly config.point_count coordinate pairs.
FrameStream parse_frames(std::istream& in, const ModalityConfig& config);
void write_frames(const FrameStream& stream, std::ostream& out);
std::string frame_csv_header(int point_count);

/// Rows come back sorted by window_index (stable for equal indices).
std::vector<SpeechFeatureRow> parse_speech_features(std::istream& in);
void write_speech_features(std::span<const SpeechFeatureRow> rows, std::ostream& out);
std::string speech_csv_header();

/// JSON Lines, one record per line; blank lines are skipped.
std::vector<AnnotationRecord> parse_annotations(std::istream& in, int window_frames = 10);
void write_annotations(std::span<const AnnotationRecord> records, std::ostream& out);

std::string to_json_line(const AnnotationRecord& record);
AnnotationRecord annotation_from_json(const std::string& text, int window_frames = 10);

std::string to_json(const RecordingMeta& meta);
RecordingMeta parse_recording_meta(const std::string& text);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

} // namespace affect
