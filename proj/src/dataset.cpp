#include "affect/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <variant>

namespace fs = std::filesystem;

namespace affect
{

void atomic_write(const fs::path& path, const std::string& content)
{
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw DomainError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out)
            throw DomainError("write failure on " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw DomainError("cannot replace " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DomainError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void save_recording(const Recording& recording, const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw DomainError("cannot create " + dir.string() + ": " + ec.message());

    atomic_write(dir / "meta.json", to_json(recording.meta) + "\n");
    for (const auto& [m, stream] : recording.streams)
    {
        std::ostringstream os;
        write_frames(stream, os);
        atomic_write(dir / (std::string(to_string(m)) + ".csv"), os.str());
    }
    if (!recording.speech.empty())
    {
        std::ostringstream os;
        write_speech_features(recording.speech, os);
        atomic_write(dir / "speech.csv", os.str());
    }
    std::ostringstream os;
    write_annotations(recording.annotations, os);
    atomic_write(dir / "annotations.jsonl", os.str());
}

namespace
{

template <class Fn>
auto with_file(const fs::path& path, Fn&& fn)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DomainError("cannot open " + path.string());
    try
    {
        return fn(in);
    }
    catch (const DomainError& e)
    {
        throw DomainError(path.string() + ": " + e.what());
    }
}

} // namespace

bool is_recording_dir(const fs::path& dir) { return fs::is_regular_file(dir / "meta.json"); }

Recording load_recording(const fs::path& dir, const PipelineConfig& config)
{
    Recording rec;
    rec.meta = parse_recording_meta(read_file(dir / "meta.json"));
    int window_frames = 10;
    for (Modality m : kVisualModalities)
    {
        const fs::path file = dir / (std::string(to_string(m)) + ".csv");
        if (!fs::exists(file))
            continue;
        const auto& cfg = config.config_for(m);
        window_frames = cfg.window_frames;
        rec.streams[m] = with_file(file, [&](std::istream& in) { return parse_frames(in, cfg); });
        if (rec.streams[m].frames.empty())
            rec.streams.erase(m);
        else if (rec.streams[m].recording_id != rec.meta.recording_id)
            throw DomainError(file.string() + ": recording_id does not match meta.json");
    }
    if (fs::exists(dir / "speech.csv"))
        rec.speech = with_file(dir / "speech.csv", [](std::istream& in) { return parse_speech_features(in); });
    if (fs::exists(dir / "annotations.jsonl"))
        rec.annotations = with_file(dir / "annotations.jsonl",
                                    [&](std::istream& in) { return parse_annotations(in, window_frames); });
    return rec;
}

std::vector<Recording> load_dataset(const fs::path& path, const PipelineConfig& config)
{
    if (!fs::is_directory(path))
        throw DomainError("dataset path " + path.string() + " is not a directory");
    if (is_recording_dir(path))
        return {load_recording(path, config)};

    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(path))
        if (entry.is_directory() && is_recording_dir(entry.path()))
            dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    std::vector<Recording> out;
    for (const auto& d : dirs)
        out.push_back(load_recording(d, config));
    return out;
}

void save_models(const ModelSet& models, const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw DomainError("cannot create " + dir.string() + ": " + ec.message());
    for (const auto& [m, clf] : models.classifiers)
        atomic_write(dir / ("classifier_" + std::string(to_string(m)) + ".json"), classifier_to_json(clf) + "\n");
    for (const auto& [m, model] : models.visual)
        atomic_write(dir / ("intensity_" + std::string(to_string(m)) + ".json"), visual_model_to_json(model) + "\n");
    if (models.speech)
        atomic_write(dir / "intensity_speech.json", speech_model_to_json(*models.speech) + "\n");
}

ModelSet load_models(const fs::path& dir)
{
    ModelSet models;
    if (!fs::is_directory(dir))
        return models;
    for (Modality m : kAllModalities)
    {
        const std::string name(to_string(m));
        const fs::path clf_file = dir / ("classifier_" + name + ".json");
        if (fs::exists(clf_file))
        {
            auto clf = classifier_from_json(read_file(clf_file));
            if (clf.modality != m)
                throw DomainError(clf_file.string() + ": modality field is " + std::string(to_string(clf.modality)));
            models.classifiers[m] = std::move(clf);
        }
        const fs::path model_file = dir / ("intensity_" + name + ".json");
        if (fs::exists(model_file))
        {
            auto model = intensity_model_from_json(read_file(model_file));
            if (auto* v = std::get_if<VisualIntensityModel>(&model))
            {
                if (v->modality != m)
                    throw DomainError(model_file.string() + ": modality field mismatch");
                models.visual[m] = *v;
            }
            else if (m == Modality::speech)
                models.speech = std::get<SpeechIntensityModel>(model);
            else
                throw DomainError(model_file.string() + ": speech model stored under a visual name");
        }
    }
    return models;
}

} // namespace affect
