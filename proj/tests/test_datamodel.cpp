#include <sstream>

#include "affect/dataset.hpp"
#include "affect/features.hpp"
#include "affect/synthetic.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace affect;

namespace
{

std::string frame_line(const std::string& id, const std::string& modality, int index, double t, int points)
{
    std::ostringstream os;
    os << id << ',' << modality << ',' << index << ',' << t;
    for (int i = 0; i < 2 * points; ++i)
        os << ',' << i * 0.5;
    return os.str();
}

std::size_t parse_error_line(const std::string& text, const ModalityConfig& config)
{
    std::istringstream in(text);
    try
    {
        parse_frames(in, config);
    }
    catch (const ParseError& e)
    {
        return e.line();
    }
    return 0;
}

std::string speech_line(const std::string& id, int window, int features, double value = 0.0)
{
    std::ostringstream os;
    os << id << ',' << window << ',' << window * 0.3;
    for (int i = 0; i < features; ++i)
        os << ',' << value;
    return os.str();
}

} // namespace

TEST_SUITE("modality")
{
    TEST_CASE("names round trip and reject unknown names")
    {
        for (Modality m : kAllModalities)
            CHECK(modality_from_string(to_string(m)) == m);
        CHECK_THROWS_AS(modality_from_string("voice"), DomainError);
    }

    TEST_CASE("visual and speech operations reject the other kind")
    {
        CHECK_THROWS_AS(require_visual(Modality::speech), DomainError);
        CHECK_NOTHROW(require_visual(Modality::hand));
        CHECK_THROWS_AS(require_speech(Modality::face), DomainError);
        CHECK_NOTHROW(require_speech(Modality::speech));
    }

    TEST_CASE("default configs")
    {
        CHECK(default_config(Modality::face).point_count == 60);
        CHECK(default_config(Modality::body).point_count == 12);
        CHECK(default_config(Modality::hand).point_count == 8);
        CHECK(default_config(Modality::hand).angle_pairs.size() == 28);
        CHECK(default_config(Modality::body).angle_pairs.size() == 66);
        CHECK(default_config(Modality::face).angle_pairs.size() == 59);
        for (Modality m : kVisualModalities)
        {
            const auto cfg = default_config(m);
            CHECK(cfg.window_frames == 10);
            CHECK(cfg.fps == 30.0);
            CHECK_FALSE(cfg.normalize);
            CHECK_NOTHROW(validate(cfg));
        }
        CHECK(default_config(Modality::speech).point_count == 0);
    }

    TEST_CASE("config validation")
    {
        auto cfg = default_config(Modality::hand);
        cfg.window_frames = 1;
        CHECK_THROWS_AS(validate(cfg), DomainError);

        cfg = default_config(Modality::hand);
        cfg.angle_pairs.push_back({0, 8});
        CHECK_THROWS_AS(validate(cfg), DomainError);

        cfg = default_config(Modality::hand);
        cfg.angle_pairs.push_back(cfg.angle_pairs.front());
        CHECK_THROWS_AS(validate(cfg), DomainError);

        cfg = default_config(Modality::hand);
        cfg.angle_pairs = {{3, 1}};
        CHECK_THROWS_AS(validate(cfg), DomainError);
    }
}

TEST_SUITE("frames")
{
    const ModalityConfig face = default_config(Modality::face);

    TEST_CASE("one well-formed face line parses to one frame")
    {
        std::istringstream in(frame_line("r1", "face", 0, 0.0, 60) + "\n");
        const FrameStream s = parse_frames(in, face);
        REQUIRE(s.frames.size() == 1);
        CHECK(s.recording_id == "r1");
        CHECK(s.modality == Modality::face);
        CHECK(s.frames[0].points.cols() == 60);
        CHECK(s.frames[0].points(0, 3) == 3.0);
    }

    TEST_CASE("59 pairs on a face line is a point-count error on line 1")
    {
        CHECK(parse_error_line(frame_line("r1", "face", 0, 0.0, 59) + "\n", face) == 1);
        // with a header the offending data line is line 2
        CHECK(parse_error_line(frame_csv_header(60) + "\n" + frame_line("r1", "face", 0, 0.0, 59) + "\n", face) == 2);
    }

    TEST_CASE("repeated frame_index is a monotonicity error")
    {
        const std::string text =
            frame_line("r1", "face", 5, 0.0, 60) + "\n" + frame_line("r1", "face", 5, 0.1, 60) + "\n";
        std::istringstream in(text);
        CHECK_THROWS_WITH_AS(parse_frames(in, face), doctest::Contains("frame_index"), ParseError);
        CHECK(parse_error_line(text, face) == 2);
    }

    TEST_CASE("timestamps must increase")
    {
        const std::string text =
            frame_line("r1", "face", 1, 0.5, 60) + "\n" + frame_line("r1", "face", 2, 0.5, 60) + "\n";
        CHECK(parse_error_line(text, face) == 2);
    }

    TEST_CASE("non-finite and non-numeric cells are rejected with their line")
    {
        std::string bad = frame_line("r1", "face", 0, 0.0, 60);
        bad.replace(bad.rfind(','), std::string::npos, ",nan");
        CHECK(parse_error_line(bad + "\n", face) == 1);

        std::string word = frame_line("r1", "face", 0, 0.0, 60);
        word.replace(word.rfind(','), std::string::npos, ",abc");
        CHECK(parse_error_line("\n" + word + "\n", face) > 0);
    }

    TEST_CASE("modality and recording id must be consistent")
    {
        CHECK(parse_error_line(frame_line("r1", "body", 0, 0.0, 60) + "\n", face) == 1);
        const std::string mixed =
            frame_line("r1", "face", 0, 0.0, 60) + "\n" + frame_line("r2", "face", 1, 0.1, 60) + "\n";
        CHECK(parse_error_line(mixed, face) == 2);
    }

    TEST_CASE("empty stream writes only the header")
    {
        FrameStream s;
        s.recording_id = "r";
        s.modality = Modality::hand;
        std::ostringstream out;
        write_frames(s, out);
        CHECK(out.str() == frame_csv_header(8) + "\n");
        CHECK(frame_csv_header(2) == "recording_id,modality,frame_index,timestamp_s,x0,y0,x1,y1");
    }

    TEST_CASE("3-frame hand stream round trips")
    {
        const auto cfg = default_config(Modality::hand);
        FrameStream s;
        s.recording_id = "hand-rec";
        s.modality = Modality::hand;
        for (int k = 0; k < 3; ++k)
        {
            Frame f;
            f.frame_index = k;
            f.timestamp_s = k / 30.0;
            f.points = template_points(Modality::hand).array() + 0.1 * k;
            s.frames.push_back(f);
        }
        std::stringstream io;
        write_frames(s, io);
        CHECK(parse_frames(io, cfg) == s);
    }

    TEST_CASE("coordinate 1.25 keeps its digits")
    {
        const auto cfg = default_config(Modality::hand);
        FrameStream s{"r", Modality::hand, {}};
        Frame f;
        f.points = Eigen::Matrix2Xd::Zero(2, 8);
        f.points(0, 0) = 1.25;
        s.frames.push_back(f);
        std::stringstream io;
        write_frames(s, io);
        CHECK(io.str().find(",1.25,") != std::string::npos);
        CHECK(parse_frames(io, cfg).frames[0].points(0, 0) == 1.25);
    }

    TEST_CASE("CRLF input is accepted")
    {
        const auto cfg = default_config(Modality::hand);
        std::istringstream in(frame_line("r", "hand", 0, 0.0, 8) + "\r\n");
        CHECK(parse_frames(in, cfg).frames.size() == 1);
    }
}

TEST_SUITE("speech")
{
    TEST_CASE("row of 988 zeros has a zero prosodic slice")
    {
        std::istringstream in(speech_line("r", 0, 988) + "\n");
        const auto rows = parse_speech_features(in);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].prosodic().size() == 38);
        CHECK(rows[0].prosodic().isZero(0.0));
    }

    TEST_CASE("987 features is a column-count error")
    {
        std::istringstream in(speech_line("r", 0, 987) + "\n");
        CHECK_THROWS_AS(parse_speech_features(in), ParseError);
    }

    TEST_CASE("rows come back ordered by window_index")
    {
        std::istringstream in(speech_csv_header() + "\n" + speech_line("r", 3, 988, 3.0) + "\n" +
                              speech_line("r", 1, 988, 1.0) + "\n");
        const auto rows = parse_speech_features(in);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].window_index == 1);
        CHECK(rows[1].window_index == 3);
        CHECK(rows[0].features[0] == 1.0);
    }

    TEST_CASE("non-numeric cell is rejected")
    {
        std::string line = speech_line("r", 0, 988);
        line.replace(line.rfind(','), std::string::npos, ",x");
        std::istringstream in(line + "\n");
        CHECK_THROWS_AS(parse_speech_features(in), ParseError);
    }

    TEST_CASE("header names")
    {
        const std::string h = speech_csv_header();
        CHECK(h.rfind("recording_id,window_index,timestamp_s,f000,f001,", 0) == 0);
        CHECK(h.substr(h.size() - 5) == ",f987");
    }
}

TEST_SUITE("annotations")
{
    AnnotationRecord record(double intensity, std::int64_t start = 0, std::int64_t end = 9)
    {
        return {"rec", start, end, intensity, "ann", "2024-01-02T03:04:05Z"};
    }

    TEST_CASE("intensity boundaries")
    {
        CHECK_NOTHROW(validate(record(0.0)));
        CHECK_NOTHROW(validate(record(1.0)));
        try
        {
            validate(record(1.0000001));
            FAIL("accepted 1.0000001");
        }
        catch (const FieldError& e)
        {
            CHECK(e.field() == "intensity");
        }
        CHECK_THROWS_AS(validate(record(-0.01)), FieldError);
    }

    TEST_CASE("window length must equal N")
    {
        CHECK_NOTHROW(validate(record(0.5, 0, 9), 10));
        CHECK_THROWS_AS(validate(record(0.5, 0, 8), 10), FieldError);
        CHECK_NOTHROW(validate(record(0.5, 0, 8), 9));
    }

    TEST_CASE("parse reports the failing line")
    {
        std::istringstream in(to_json_line(record(0.5)) + "\n" + to_json_line(record(0.5, 0, 8)) + "\n");
        try
        {
            parse_annotations(in);
            FAIL("accepted a short window");
        }
        catch (const ParseError& e)
        {
            CHECK(e.line() == 2);
        }
    }

    TEST_CASE("missing and mistyped keys")
    {
        CHECK_THROWS_AS(annotation_from_json(R"({"recording_id":"r","start_frame":0,"end_frame":9,"intensity":0.5})"),
                        FieldError);
        CHECK_THROWS_AS(annotation_from_json(R"({"recording_id":"r","start_frame":"0","end_frame":9,"intensity":0.5,)"
                                             R"("annotator_id":"a","created_at":"2024-01-02T03:04:05Z"})"),
                        FieldError);
        CHECK_THROWS_AS(annotation_from_json("not json"), DomainError);
        auto bad_time = record(0.5);
        bad_time.created_at = "2024-13-02T03:04:05Z";
        CHECK_THROWS_AS(validate(bad_time), FieldError);
    }

    TEST_CASE("rfc3339")
    {
        CHECK(is_rfc3339("2024-02-29T23:59:60Z"));
        CHECK(is_rfc3339("2024-02-29t23:59:59.123+05:30"));
        CHECK_FALSE(is_rfc3339("2024-02-29 23:59:59"));
        CHECK_FALSE(is_rfc3339("2024-02-29T24:00:00Z"));
        CHECK_FALSE(is_rfc3339("2024-2-29T23:00:00Z"));
    }

    TEST_CASE("identifiers reject separators")
    {
        CHECK_THROWS_AS(validate_identifier("a,b", "recording_id"), FieldError);
        CHECK_THROWS_AS(validate_identifier("", "recording_id"), FieldError);
        CHECK_THROWS_AS(validate_identifier("../x", "recording_id"), FieldError);
        CHECK_NOTHROW(validate_identifier("sim-001_a", "recording_id"));
    }
}

TEST_SUITE("round trips")
{
    TEST_CASE("frame streams, 1000 random instances")
    {
        std::mt19937_64 rng(101);
        for (int i = 0; i < 1000; ++i)
        {
            const auto cfg = default_config(kVisualModalities[static_cast<std::size_t>(i % 3)]);
            const FrameStream s = testing::any_stream(rng, cfg);
            std::stringstream io;
            write_frames(s, io);
            REQUIRE(parse_frames(io, cfg) == s);
        }
    }

    TEST_CASE("speech rows, 1000 random instances")
    {
        std::mt19937_64 rng(102);
        for (int i = 0; i < 1000; ++i)
        {
            const std::string id = testing::any_id(rng);
            std::vector<SpeechFeatureRow> rows;
            const int n = 1 + i % 3;
            for (int w = 0; w < n; ++w)
                rows.push_back(testing::any_speech_row(rng, id, w * 2 + i % 2));
            std::stringstream io;
            write_speech_features(rows, io);
            REQUIRE(parse_speech_features(io) == rows);
        }
    }

    TEST_CASE("annotations, 1000 random instances")
    {
        std::mt19937_64 rng(103);
        std::vector<AnnotationRecord> records;
        for (int i = 0; i < 1000; ++i)
            records.push_back(testing::any_annotation(rng));
        std::stringstream io;
        write_annotations(records, io);
        CHECK(parse_annotations(io) == records);
        for (const auto& r : records)
            REQUIRE(annotation_from_json(to_json_line(r)) == r);
    }

    TEST_CASE("recording meta")
    {
        std::mt19937_64 rng(104);
        for (int i = 0; i < 1000; ++i)
        {
            RecordingMeta meta;
            meta.recording_id = testing::any_id(rng);
            meta.subject_id = testing::any_id(rng);
            meta.fps = std::abs(testing::any_double(rng)) + 1e-6;
            for (Modality m : kAllModalities)
                if (rng() % 2)
                {
                    meta.modalities.push_back(m);
                    meta.frame_counts[m] = static_cast<std::int64_t>(rng() % 100000);
                }
            meta.source = i % 2 ? "synthetic" : "captured";
            REQUIRE(parse_recording_meta(to_json(meta)) == meta);
        }
    }
}

TEST_SUITE("synthetic")
{
    SyntheticSpec constant(double v, int windows = 20)
    {
        SyntheticSpec spec;
        spec.curve = {v};
        spec.windows = windows;
        return spec;
    }

    double mean_speed(const Recording& rec, Modality m)
    {
        double sum = 0.0;
        int n = 0;
        for (const auto& fv : extract_features(rec.streams.at(m), default_config(m)))
        {
            sum += aggregate_window(fv).mean_speed;
            ++n;
        }
        return sum / n;
    }

    TEST_CASE("constant 0 curve without noise is stationary")
    {
        const Recording rec = generate_synthetic_recording(constant(0.0));
        for (Modality m : kVisualModalities)
            for (const auto& fv : extract_features(rec.streams.at(m), default_config(m)))
            {
                REQUIRE(fv.displacements.isZero(0.0));
                REQUIRE(fv.speeds.isZero(0.0));
            }
    }

    TEST_CASE("intensity 1.0 moves faster than 0.5")
    {
        for (Modality m : kVisualModalities)
        {
            const double fast = mean_speed(generate_synthetic_recording(constant(1.0)), m);
            const double slow = mean_speed(generate_synthetic_recording(constant(0.5)), m);
            CHECK(fast > slow);
        }
    }

    TEST_CASE("window mean speed is non-decreasing in the target without noise")
    {
        SyntheticSpec spec;
        spec.windows = 40;
        spec.curve = random_curve(40, 3);
        const Recording rec = generate_synthetic_recording(spec);
        for (Modality m : kVisualModalities)
        {
            const auto fvs = extract_features(rec.streams.at(m), default_config(m));
            REQUIRE(fvs.size() == 40);
            for (std::size_t a = 0; a < fvs.size(); ++a)
                for (std::size_t b = 0; b < fvs.size(); ++b)
                    if (spec.curve[a] < spec.curve[b])
                        REQUIRE(aggregate_window(fvs[a]).mean_speed <= aggregate_window(fvs[b]).mean_speed + 1e-9);
        }
    }

    TEST_CASE("same seed gives identical files")
    {
        SyntheticSpec spec;
        spec.noise = 0.05;
        spec.curve = random_curve(spec.windows, spec.seed);
        testing::TempDir a("syn-a"), b("syn-b");
        save_recording(generate_synthetic_recording(spec), a.path());
        save_recording(generate_synthetic_recording(spec), b.path());
        for (const char* name : {"meta.json", "face.csv", "body.csv", "hand.csv", "speech.csv", "annotations.jsonl"})
            CHECK(read_file(a.path() / name) == read_file(b.path() / name));
    }

    TEST_CASE("counts and ground truth")
    {
        const Recording rec = generate_synthetic_recording(constant(0.3, 50));
        for (Modality m : kVisualModalities)
            CHECK(rec.streams.at(m).frames.size() == 500);
        CHECK(rec.speech.size() == 50);
        REQUIRE(rec.annotations.size() == 50);
        CHECK(rec.annotations[7].start_frame == 70);
        CHECK(rec.annotations[7].end_frame == 79);
        CHECK(rec.annotations[7].intensity == 0.3);
        for (const auto& a : rec.annotations)
            CHECK_NOTHROW(validate(a));
    }

    TEST_CASE("curve outside [0, 1] is rejected")
    {
        CHECK_THROWS_AS(generate_synthetic_recording(constant(1.5)), DomainError);
        CHECK_THROWS_AS(sample_curve({0.2, -0.1}, 5), DomainError);
    }

    TEST_CASE("curve sampling")
    {
        CHECK(sample_curve({0.0, 1.0}, 5) == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
        CHECK(sample_curve({0.4}, 3) == std::vector<double>{0.4, 0.4, 0.4});
        const auto r = random_curve(100, 9);
        CHECK(*std::min_element(r.begin(), r.end()) >= 0.0);
        CHECK(*std::max_element(r.begin(), r.end()) <= 1.0);
    }
}

TEST_SUITE("dataset directories")
{
    TEST_CASE("save and load a recording")
    {
        SyntheticSpec spec;
        spec.windows = 5;
        spec.noise = 0.1;
        const Recording rec = generate_synthetic_recording(spec);
        testing::TempDir dir("ds");
        save_recording(rec, dir.path() / "sim000");
        const auto loaded = load_dataset(dir.path());
        REQUIRE(loaded.size() == 1);
        CHECK(loaded[0].meta == rec.meta);
        CHECK(loaded[0].streams == rec.streams);
        CHECK(loaded[0].speech == rec.speech);
        CHECK(loaded[0].annotations == rec.annotations);
        CHECK(load_dataset(dir.path() / "sim000").size() == 1);
    }

    TEST_CASE("missing directory is an error")
    {
        testing::TempDir dir("ds-missing");
        CHECK_THROWS_AS(load_recording(dir.path() / "nope"), DomainError);
    }
}
