#include "affect/service.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "affect/dataset.hpp"
#include "httplib.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace affect
{

AnnotationKey key_of(const AnnotationRecord& r) { return {r.recording_id, r.start_frame, r.end_frame, r.annotator_id}; }

// ---------------------------------------------------------------------------
// store

DataStore::DataStore(fs::path root, PipelineConfig config) : root_(std::move(root)), config_(std::move(config)) {}

std::vector<RecordingMeta> DataStore::list_recordings() const
{
    std::error_code ec;
    if (!fs::is_directory(root_, ec))
        throw ServiceError(500, "data directory " + root_.string() + " does not exist or is not readable");
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root_, ec))
        if (entry.is_directory() && is_recording_dir(entry.path()))
            dirs.push_back(entry.path());
    if (ec)
        throw ServiceError(500, "cannot list " + root_.string() + ": " + ec.message());
    std::sort(dirs.begin(), dirs.end());
    std::vector<RecordingMeta> metas;
    for (const auto& d : dirs)
    {
        try
        {
            metas.push_back(parse_recording_meta(read_file(d / "meta.json")));
        }
        catch (const DomainError& e)
        {
            throw ServiceError(500, (d / "meta.json").string() + ": " + e.what());
        }
    }
    return metas;
}

fs::path DataStore::recording_dir(const std::string& id) const
{
    if (fs::is_directory(root_))
        for (const auto& entry : fs::directory_iterator(root_))
        {
            if (!entry.is_directory() || !is_recording_dir(entry.path()))
                continue;
            try
            {
                if (parse_recording_meta(read_file(entry.path() / "meta.json")).recording_id == id)
                    return entry.path();
            }
            catch (const DomainError&)
            {
            }
        }
    throw ServiceError(404, "unknown recording '" + id + "'");
}

bool DataStore::has_recording(const std::string& id) const
{
    try
    {
        recording_dir(id);
        return true;
    }
    catch (const ServiceError&)
    {
        return false;
    }
}

Recording DataStore::recording(const std::string& id) const { return load_recording(recording_dir(id), config_); }

std::vector<Frame> DataStore::frames(const std::string& id, Modality modality, std::int64_t from,
                                     std::int64_t to) const
{
    if (!is_visual(modality))
        throw ServiceError(400, "frames are only available for face, body and hand");
    if (from < 0 || from > to)
        throw ServiceError(400, "bad frame range [" + std::to_string(from) + ", " + std::to_string(to) + "]");
    const Recording rec = recording(id);
    auto it = rec.streams.find(modality);
    if (it == rec.streams.end())
        throw ServiceError(404, "recording '" + id + "' has no " + std::string(to_string(modality)) + " stream");
    std::vector<Frame> out;
    for (const Frame& f : it->second.frames)
        if (f.frame_index >= from && f.frame_index <= to)
            out.push_back(f);
    return out;
}

std::vector<AnnotationRecord> DataStore::annotations(const std::string& id) const
{
    const fs::path file = recording_dir(id) / "annotations.jsonl";
    if (!fs::exists(file))
        return {};
    std::istringstream in(read_file(file));
    return parse_annotations(in, config_.config_for(Modality::face).window_frames);
}

std::mutex& DataStore::recording_mutex(const std::string& id)
{
    std::lock_guard lock(mutexes_guard_);
    auto& slot = mutexes_[id];
    if (!slot)
        slot = std::make_unique<std::mutex>();
    return *slot;
}

AnnotationRecord DataStore::submit_annotation(const AnnotationRecord& record)
{
    validate(record, config_.config_for(Modality::face).window_frames);
    const fs::path dir = recording_dir(record.recording_id);

    std::lock_guard lock(recording_mutex(record.recording_id));
    std::vector<AnnotationRecord> stored = annotations(record.recording_id);
    const auto key = key_of(record);
    auto it = std::find_if(stored.begin(), stored.end(), [&](const auto& r) { return key_of(r) == key; });
    if (it != stored.end())
        *it = record;
    else
        stored.push_back(record);
    std::ostringstream os;
    write_annotations(stored, os);
    atomic_write(dir / "annotations.jsonl", os.str());
    return record;
}

ModelSet DataStore::models() const { return load_models(root_ / "models"); }

PipelineResult DataStore::estimates(const std::string& id) const
{
    const Recording rec = recording(id);
    const ModelSet models = this->models();
    if (models.empty())
        throw ServiceError(409, "models not fitted");
    try
    {
        return run_pipeline(rec, models, config_);
    }
    catch (const DomainError& e)
    {
        throw ServiceError(409, std::string("models not fitted for this recording: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// http

namespace
{

json frame_json(const Frame& f)
{
    json pts = json::array();
    for (Eigen::Index i = 0; i < f.points.cols(); ++i)
        pts.push_back({f.points(0, i), f.points(1, i)});
    return {{"frame_index", f.frame_index}, {"timestamp_s", f.timestamp_s}, {"points", pts}};
}

json meta_json(const RecordingMeta& meta) { return json::parse(to_json(meta)); }

json estimate_json(const IntensityEstimate& e)
{
    return {{"recording_id", e.window.recording_id},
            {"timestamp_s", e.timestamp_s},
            {"modality", source_name(e)},
            {"raw", e.raw},
            {"value", e.value}};
}

void send_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message, const std::string& field = {})
{
    json body{{"error", message}};
    if (!field.empty())
        body["field"] = field;
    send_json(res, status, body);
}

std::int64_t query_int(const httplib::Request& req, const char* name, std::int64_t fallback)
{
    if (!req.has_param(name))
        return fallback;
    const std::string v = req.get_param_value(name);
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
        throw ServiceError(400, std::string("query parameter '") + name + "' must be an integer");
    return out;
}

bool wants_csv(const httplib::Request& req)
{
    if (req.has_param("format"))
        return req.get_param_value("format") == "csv";
    const auto accept = req.get_header_value("Accept");
    return accept.find("text/csv") != std::string::npos;
}

// Runs a handler and maps exceptions to HTTP errors.
template <class Fn>
void guarded(httplib::Response& res, Fn&& fn)
{
    try
    {
        fn();
    }
    catch (const ServiceError& e)
    {
        send_error(res, e.status(), e.what());
    }
    catch (const FieldError& e)
    {
        send_error(res, 400, e.what(), e.field());
    }
    catch (const DomainError& e)
    {
        send_error(res, 400, e.what());
    }
    catch (const std::exception& e)
    {
        send_error(res, 500, e.what());
    }
}

} // namespace

Service::Service(DataStore& store) : store_(store), server_(std::make_unique<httplib::Server>())
{
    install_routes();
}

Service::~Service() { stop(); }

void Service::install_routes()
{
    auto& srv = *server_;
    // SO_REUSEADDR only: a second server on an occupied port must fail to bind.
    srv.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                             {"Access-Control-Allow-Headers", "Content-Type, Accept"}});

    srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    srv.Get("/api/recordings", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] {
            json list = json::array();
            for (const auto& meta : store_.list_recordings())
                list.push_back(meta_json(meta));
            send_json(res, 200, list);
        });
    });

    srv.Get("/api/recordings/:id/frames", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const std::string id = req.path_params.at("id");
            if (!req.has_param("modality"))
                throw ServiceError(400, "query parameter 'modality' is required");
            Modality modality;
            try
            {
                modality = modality_from_string(req.get_param_value("modality"));
            }
            catch (const DomainError& e)
            {
                throw ServiceError(400, e.what());
            }
            const auto from = query_int(req, "from", 0);
            const auto to = query_int(req, "to", std::numeric_limits<std::int64_t>::max());
            const auto frames = store_.frames(id, modality, from, to);
            if (wants_csv(req))
            {
                std::ostringstream os;
                write_frames(FrameStream{id, modality, frames}, os);
                res.set_content(os.str(), "text/csv");
                return;
            }
            json list = json::array();
            for (const auto& f : frames)
                list.push_back(frame_json(f));
            send_json(res, 200, {{"recording_id", id}, {"modality", to_string(modality)}, {"frames", list}});
        });
    });

    srv.Get("/api/recordings/:id/annotations", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            json list = json::array();
            for (const auto& a : store_.annotations(req.path_params.at("id")))
                list.push_back(json::parse(to_json_line(a)));
            send_json(res, 200, list);
        });
    });

    srv.Post("/api/annotations", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto window = store_.config().config_for(Modality::face).window_frames;
            const AnnotationRecord record = annotation_from_json(req.body, window);
            const auto stored = store_.submit_annotation(record);
            send_json(res, 200, json::parse(to_json_line(stored)));
        });
    });

    srv.Get("/api/recordings/:id/estimates", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto result = store_.estimates(req.path_params.at("id"));
            std::vector<IntensityEstimate> all = result.per_modality;
            all.insert(all.end(), result.fused.begin(), result.fused.end());
            std::stable_sort(all.begin(), all.end(),
                             [](const auto& a, const auto& b) { return a.timestamp_s < b.timestamp_s; });
            if (wants_csv(req))
            {
                std::ostringstream os;
                write_estimates_csv(all, os);
                res.set_content(os.str(), "text/csv");
                return;
            }
            json list = json::array();
            for (const auto& e : all)
                list.push_back(estimate_json(e));
            send_json(res, 200, list);
        });
    });
}

int Service::bind(const std::string& host, int port)
{
    if (port == 0)
        return server_->bind_to_any_port(host);
    return server_->bind_to_port(host, port) ? port : -1;
}

bool Service::listen_after_bind() { return server_->listen_after_bind(); }

void Service::stop()
{
    if (server_ && server_->is_running())
        server_->stop();
}

void Service::wait_until_ready() const { server_->wait_until_ready(); }

} // namespace affect
