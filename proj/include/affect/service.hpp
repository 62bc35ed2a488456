#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "affect/datamodel.hpp"
#include "affect/pipeline.hpp"

namespace httplib
{
class Server;
}

namespace affect
{

/// Maps to HTTP status codes at the service boundary.
class ServiceError : public DomainError
{
public:
    ServiceError(int status, const std::string& what) : DomainError(what), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

struct AnnotationKey
{
    std::string recording_id;
    std::int64_t start_frame;
    std::int64_t end_frame;
    std::string annotator_id;

    auto operator<=>(const AnnotationKey&) const = default;
};

AnnotationKey key_of(const AnnotationRecord& record);

/// File-backed store over a dataset directory (see dataset.hpp); models live
/// in <root>/models. Annotation writes are serialized per recording and
/// replace the annotation file atomically.
class DataStore
{
public:
    explicit DataStore(std::filesystem::path root, PipelineConfig config = {});

    const std::filesystem::path& root() const { return root_; }
    const PipelineConfig& config() const { return config_; }

    std::vector<RecordingMeta> list_recordings() const;
    bool has_recording(const std::string& id) const;
    Recording recording(const std::string& id) const;

    /// Frames with from <= frame_index <= to; the range is clipped to the stream.
    std::vector<Frame> frames(const std::string& id, Modality modality, std::int64_t from, std::int64_t to) const;

    std::vector<AnnotationRecord> annotations(const std::string& id) const;

    /// Validates, then stores with last-write-wins per AnnotationKey.
    AnnotationRecord submit_annotation(const AnnotationRecord& record);

    ModelSet models() const;
    PipelineResult estimates(const std::string& id) const;

private:
    std::filesystem::path recording_dir(const std::string& id) const;
    std::mutex& recording_mutex(const std::string& id);

    std::filesystem::path root_;
    PipelineConfig config_;
    std::mutex mutexes_guard_;
    std::map<std::string, std::unique_ptr<std::mutex>> mutexes_;
};

inline constexpr int kDefaultPort = 8735;

/// HTTP front end for a DataStore.
///
///   GET  /api/recordings
///   GET  /api/recordings/{id}/frames?modality=&from=&to=[&format=csv]
///   GET  /api/recordings/{id}/annotations
///   GET  /api/recordings/{id}/estimates[?format=csv]
///   POST /api/annotations
class Service
{
public:
    explicit Service(DataStore& store);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds without serving; port 0 picks a free port. Returns the bound
    /// port or -1 when binding failed.
    int bind(const std::string& host, int port);

    /// Blocks until stop() is called.
    bool listen_after_bind();
    void stop();
    void wait_until_ready() const;

private:
    void install_routes();

    DataStore& store_;
    std::unique_ptr<httplib::Server> server_;
};

} // namespace affect
