// affectint: simulate, extract, train, fit, estimate, evaluate, serve.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "affect/dataset.hpp"
#include "affect/eval.hpp"
#include "affect/features.hpp"
#include "affect/service.hpp"
#include "affect/synthetic.hpp"

namespace fs = std::filesystem;
using namespace affect;

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

const char* const kConfigHelp = R"(
Every command accepts --config FILE: a flat text file with one key=value per
line, where the key is a long option name of that command without the dashes.
Lines starting with # or ; are comments. Flags given on the command line take
precedence over the file, which takes precedence over the defaults.

    # evaluate.cfg
    k = 5
    seed = 11
    margin = 0.1

Exit codes: 0 success, 1 validation or domain error, 2 usage error.)";

std::vector<double> parse_curve(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        std::size_t used = 0;
        double v = 0.0;
        try
        {
            v = std::stod(item, &used);
        }
        catch (const std::exception&)
        {
            used = 0;
        }
        if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos)
            throw DomainError("--curve: '" + item + "' is not a number");
        if (!(v >= 0.0 && v <= 1.0))
            throw DomainError("--curve: value " + item + " outside [0, 1]");
        out.push_back(v);
    }
    if (out.empty())
        throw DomainError("--curve is empty");
    return out;
}

std::vector<Modality> parse_modalities(const std::vector<std::string>& names)
{
    std::vector<Modality> out;
    for (const auto& n : names)
        out.push_back(modality_from_string(n));
    return out;
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
    {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec)
            throw DomainError("cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    atomic_write(path, text);
}

std::vector<std::size_t> all_indices(std::size_t n)
{
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;
    return idx;
}

// Feature length a visual classifier sees for a stream under a config.
Eigen::Index visual_feature_length(const ModalityConfig& cfg)
{
    return 5 * static_cast<Eigen::Index>(cfg.point_count) + static_cast<Eigen::Index>(cfg.angle_pairs.size());
}

// Compares every model with the shape of the data it is about to see.
void check_model_shapes(const ModelSet& models, std::span<const Recording> dataset, const PipelineConfig& config)
{
    const auto mods = dataset_modalities(dataset);
    for (Modality m : mods)
    {
        const std::string name(to_string(m));
        auto clf = models.classifiers.find(m);
        if (clf == models.classifiers.end())
            throw DomainError("no " + name + " classifier in the model directory");
        const Eigen::Index data_len =
            is_visual(m) ? visual_feature_length(config.config_for(m)) : Eigen::Index{kSpeechFeatureCount};
        if (clf->second.weights.size() != data_len)
            throw DomainError("schema mismatch for " + name + ": model expects " +
                              std::to_string(clf->second.weights.size()) + " features, data provides " +
                              std::to_string(data_len));
        if (m == Modality::speech && models.speech)
        {
            const auto expected = kProsodicFeatureCount + (models.speech->include_intercept ? 1 : 0);
            if (models.speech->theta.size() != expected)
                throw DomainError("schema mismatch for speech intensity: model has " +
                                  std::to_string(models.speech->theta.size()) + " coefficients, data provides " +
                                  std::to_string(expected));
        }
    }
}

struct CommonTrainOptions
{
    double lambda = 1e-3;
    int epochs = 50;
    std::uint64_t seed = 7;
    int window = 10;
    bool normalize = false;

    void add(CLI::App* cmd)
    {
        cmd->add_option("--lambda", lambda, "Classifier regularization")->check(CLI::PositiveNumber);
        cmd->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);
        cmd->add_option("--seed", seed, "Random seed");
        add_window(cmd);
    }
    void add_window(CLI::App* cmd)
    {
        cmd->add_option("--window", window, "Frames per window")->check(CLI::Range(2, 100000));
        cmd->add_flag("--normalize", normalize, "Scale visual coordinates by the reference pair distance");
    }
    PipelineConfig pipeline() const
    {
        PipelineConfig cfg;
        for (auto& [m, mc] : cfg.modalities)
        {
            mc.window_frames = window;
            mc.normalize = normalize;
        }
        return cfg;
    }
    ExperimentConfig experiment() const
    {
        ExperimentConfig cfg;
        cfg.train = {lambda, epochs, seed};
        cfg.seed = seed;
        cfg.pipeline = pipeline();
        return cfg;
    }
};

// Flat key=value config whose keys belong to the selected command.
class CommandConfig : public CLI::ConfigINI
{
public:
    explicit CommandConfig(const CLI::App& app) : app_(app) {}

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override
    {
        auto items = CLI::ConfigINI::from_config(input);
        const auto subs = app_.get_subcommands();
        if (subs.empty())
            return items;
        for (auto& item : items)
            if (item.parents.empty() || (item.parents.size() == 1 && item.parents.front() == "default"))
                item.parents = {subs.front()->get_name()};
        return items;
    }

private:
    const CLI::App& app_;
};

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

int run_serve(const fs::path& data_dir, int port, const std::string& host, const PipelineConfig& config)
{
    if (!fs::is_directory(data_dir))
        throw DomainError("data directory " + data_dir.string() + " does not exist");
    DataStore store(data_dir, config);
    Service service(store);
    const int bound = service.bind(host, port);
    if (bound < 0)
        throw DomainError("cannot listen on " + host + ":" + std::to_string(port) + " (port in use?)");

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "serving " << data_dir.string() << " on http://" << host << ":" << bound << std::endl;

    std::atomic<bool> done{false};
    std::thread watcher([&] {
        while (!done && !g_interrupted)
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        service.stop();
    });
    service.listen_after_bind();
    done = true;
    watcher.join();
    std::cout << "stopped" << std::endl;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Anger recognition and intensity estimation from face, body, hand and speech data", "affectint"};
    app.footer(kConfigHelp);
    app.require_subcommand(1);
    app.set_version_flag("--version", "affectint 1.0.0");
    app.fallthrough();
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.set_config("--config", "", "Read command options from a key=value file");
    app.config_formatter(std::make_shared<CommandConfig>(app));

    auto with_config = [](CLI::App* cmd) {
        cmd->footer(kConfigHelp);
        return cmd;
    };

    // simulate
    auto* simulate = with_config(app.add_subcommand("simulate", "Write a synthetic recording with ground truth"));
    fs::path sim_out;
    int sim_windows = 50;
    double sim_noise = 0.0;
    std::uint64_t sim_seed = 7;
    std::string sim_curve = "random";
    std::string sim_id = "sim000";
    std::vector<std::string> sim_modalities{"face", "body", "hand", "speech"};
    simulate->add_option("--out", sim_out, "Dataset directory; the recording goes to <out>/<id>")->required();
    simulate->add_option("--windows", sim_windows, "Number of annotated windows")->check(CLI::NonNegativeNumber);
    simulate->add_option("--noise", sim_noise, "Tracking jitter relative to motion amplitude")
        ->check(CLI::NonNegativeNumber);
    simulate->add_option("--seed", sim_seed, "Random seed");
    simulate->add_option("--curve", sim_curve, "'random' or comma-separated intensities in [0, 1]");
    simulate->add_option("--id", sim_id, "Recording id");
    simulate->add_option("--modalities", sim_modalities, "Subset of face, body, hand, speech")->delimiter(',');

    // extract
    auto* extract = with_config(app.add_subcommand("extract", "Write per-window feature vectors as CSV"));
    fs::path ext_in, ext_out;
    std::string ext_modality;
    CommonTrainOptions ext_opts;
    extract->add_option("--in", ext_in, "Frame CSV file or recording directory")->required();
    extract->add_option("--modality", ext_modality, "face, body or hand")->required();
    extract->add_option("--out", ext_out, "Feature CSV (stdout when omitted)");
    ext_opts.add_window(extract);

    // train
    auto* train_cmd = with_config(app.add_subcommand("train", "Train per-modality anger classifiers"));
    fs::path train_in, train_out;
    CommonTrainOptions train_opts;
    train_cmd->add_option("--in", train_in, "Dataset or recording directory")->required();
    train_cmd->add_option("--out", train_out, "Model directory")->required();
    train_opts.add(train_cmd);

    // fit
    auto* fit_cmd = with_config(app.add_subcommand("fit", "Fit intensity models using trained classifiers"));
    fs::path fit_in, fit_model, fit_out;
    double fit_ridge = 0.0;
    bool fit_speech_intercept = false;
    bool fit_fused_confidence = false;
    CommonTrainOptions fit_opts;
    fit_cmd->add_option("--in", fit_in, "Dataset or recording directory")->required();
    fit_cmd->add_option("--model", fit_model, "Model directory holding the classifiers")->required();
    fit_cmd->add_option("--out", fit_out, "Output model directory (defaults to --model)");
    fit_cmd->add_option("--ridge", fit_ridge, "Ridge penalty on the intensity fit")->check(CLI::NonNegativeNumber);
    fit_cmd->add_flag("--speech-intercept", fit_speech_intercept, "Add an intercept to the speech model");
    fit_cmd->add_flag("--fused-confidence", fit_fused_confidence, "Use the cross-modality vote as confidence");
    fit_opts.add_window(fit_cmd);

    // estimate
    auto* estimate = with_config(app.add_subcommand("estimate", "Write per-modality and fused intensity estimates"));
    fs::path est_in, est_model, est_out;
    double est_fusion = 1.0;
    bool est_fused_confidence = false;
    CommonTrainOptions est_opts;
    estimate->add_option("--in", est_in, "Recording directory (or dataset with one recording)")->required();
    estimate->add_option("--model", est_model, "Model directory")->required();
    estimate->add_option("--out", est_out, "Estimate CSV (stdout when omitted)");
    estimate->add_option("--fusion-window", est_fusion, "Fusion window in seconds")->check(CLI::PositiveNumber);
    estimate->add_flag("--fused-confidence", est_fused_confidence, "Use the cross-modality vote as confidence");
    est_opts.add_window(estimate);

    // evaluate
    auto* evaluate = with_config(app.add_subcommand("evaluate", "k-fold cross validation report"));
    fs::path eval_in, eval_out;
    int eval_k = 10;
    double eval_margin = 0.1;
    double eval_ridge = 0.0;
    bool eval_speech_intercept = false;
    bool eval_fused_confidence = false;
    CommonTrainOptions eval_opts;
    evaluate->add_option("--in", eval_in, "Dataset or recording directory")->required();
    evaluate->add_option("--out", eval_out, "Report file; a .csv with the same stem is written next to it");
    evaluate->add_option("--k", eval_k, "Number of folds")->check(CLI::Range(2, 1000000));
    evaluate->add_option("--margin", eval_margin, "Intensity accuracy margin")->check(CLI::NonNegativeNumber);
    evaluate->add_option("--ridge", eval_ridge, "Ridge penalty on the intensity fit")->check(CLI::NonNegativeNumber);
    evaluate->add_flag("--speech-intercept", eval_speech_intercept, "Add an intercept to the speech model");
    evaluate->add_flag("--fused-confidence", eval_fused_confidence, "Use the cross-modality vote as confidence");
    eval_opts.add(evaluate);

    // serve
    auto* serve = with_config(app.add_subcommand("serve", "Serve recordings, annotations and estimates over HTTP"));
    fs::path serve_dir;
    int serve_port = kDefaultPort;
    std::string serve_host = "127.0.0.1";
    CommonTrainOptions serve_opts;
    serve->add_option("--data-dir", serve_dir, "Dataset directory; models are read from <data-dir>/models")
        ->required();
    serve->add_option("--port", serve_port, "TCP port (0 picks a free port)")->check(CLI::Range(0, 65535));
    serve->add_option("--host", serve_host, "Listen address");
    serve_opts.add_window(serve);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForVersion& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        std::cerr << "error: " << e.what() << "\n\n";
        CLI::App* target = &app;
        for (auto* sub : app.get_subcommands())
            target = sub;
        std::cerr << target->help();
        return kExitUsage;
    }

    try
    {
        if (*simulate)
        {
            SyntheticSpec spec;
            spec.windows = sim_windows;
            spec.noise = sim_noise;
            spec.seed = sim_seed;
            spec.recording_id = sim_id;
            spec.modalities = parse_modalities(sim_modalities);
            spec.curve = sim_curve == "random" ? random_curve(sim_windows, sim_seed) : parse_curve(sim_curve);
            const Recording rec = generate_synthetic_recording(spec);
            save_recording(rec, sim_out / sim_id);
            std::cout << "wrote " << (sim_out / sim_id).string() << ": " << rec.annotations.size() << " windows\n";
        }
        else if (*extract)
        {
            const Modality m = modality_from_string(ext_modality);
            require_visual(m);
            const ModalityConfig cfg = ext_opts.pipeline().config_for(m);
            FrameStream stream;
            if (fs::is_directory(ext_in))
            {
                const Recording rec = load_recording(ext_in, ext_opts.pipeline());
                if (!rec.has(m))
                    throw DomainError(ext_in.string() + " has no " + ext_modality + " stream");
                stream = rec.streams.at(m);
            }
            else
            {
                std::ifstream in(ext_in);
                if (!in)
                    throw DomainError("cannot open " + ext_in.string());
                stream = parse_frames(in, cfg);
            }
            const auto vectors = extract_features(stream, cfg);
            std::ostringstream os;
            write_feature_csv(vectors, cfg, os);
            if (ext_out.empty())
                std::cout << os.str();
            else
                write_text(ext_out, os.str());
        }
        else if (*train_cmd)
        {
            const ExperimentConfig cfg = train_opts.experiment();
            const auto dataset = load_dataset(train_in, cfg.pipeline);
            const auto mods = dataset_modalities(dataset);
            const auto windows = collect_windows(dataset, cfg);
            const auto idx = all_indices(windows.size());
            ModelSet models;
            models.classifiers = train_classifiers(windows, idx, mods, cfg);
            save_models(models, train_out);
            std::cout << "trained " << models.classifiers.size() << " classifiers on " << windows.size()
                      << " windows\n";
        }
        else if (*fit_cmd)
        {
            ExperimentConfig cfg = fit_opts.experiment();
            cfg.ridge = fit_ridge;
            cfg.speech_intercept = fit_speech_intercept;
            cfg.pipeline.fused_confidence = fit_fused_confidence;
            const auto dataset = load_dataset(fit_in, cfg.pipeline);
            ModelSet models = load_models(fit_model);
            if (models.classifiers.empty())
                throw DomainError("no classifiers in " + fit_model.string() + "; run train first");
            check_model_shapes(models, dataset, cfg.pipeline);
            const auto mods = dataset_modalities(dataset);
            const auto windows = collect_windows(dataset, cfg);
            fit_intensity_models(models, windows, all_indices(windows.size()), mods, cfg);
            save_models(models, fit_out.empty() ? fit_model : fit_out);
            std::cout << "fitted " << models.visual.size() + (models.speech ? 1 : 0) << " intensity models on "
                      << windows.size() << " windows\n";
        }
        else if (*estimate)
        {
            PipelineConfig cfg = est_opts.pipeline();
            cfg.fusion_window_s = est_fusion;
            cfg.fused_confidence = est_fused_confidence;
            const auto dataset = load_dataset(est_in, cfg);
            if (dataset.size() != 1)
                throw DomainError("estimate needs exactly one recording, found " + std::to_string(dataset.size()));
            const ModelSet models = load_models(est_model);
            if (models.empty())
                throw DomainError("no models in " + est_model.string());
            check_model_shapes(models, dataset, cfg);
            const PipelineResult result = run_pipeline(dataset.front(), models, cfg);
            std::vector<IntensityEstimate> all = result.per_modality;
            all.insert(all.end(), result.fused.begin(), result.fused.end());
            std::stable_sort(all.begin(), all.end(),
                             [](const auto& a, const auto& b) { return a.timestamp_s < b.timestamp_s; });
            std::ostringstream os;
            write_estimates_csv(all, os);
            if (est_out.empty())
                std::cout << os.str();
            else
            {
                write_text(est_out, os.str());
                std::cout << "wrote " << all.size() << " estimates (" << result.fused.size() << " fused)\n";
            }
        }
        else if (*evaluate)
        {
            ExperimentConfig cfg = eval_opts.experiment();
            cfg.k = eval_k;
            cfg.margin = eval_margin;
            cfg.ridge = eval_ridge;
            cfg.speech_intercept = eval_speech_intercept;
            cfg.pipeline.fused_confidence = eval_fused_confidence;
            const auto dataset = load_dataset(eval_in, cfg.pipeline);
            const ExperimentReport report = run_experiment(dataset, cfg);
            const std::string text = format_report(report);
            std::cout << text;
            if (!eval_out.empty())
            {
                write_text(eval_out, text);
                std::ostringstream csv;
                write_report_csv(report, csv);
                fs::path csv_path = eval_out;
                csv_path.replace_extension(".csv");
                if (csv_path == eval_out)
                    csv_path += ".csv";
                write_text(csv_path, csv.str());
            }
            if (const auto* fused = report.row("multiple"))
                std::cout << "fused intensity accuracy: " << format_double(fused->intensity_accuracy) << "\n";
        }
        else if (*serve)
        {
            return run_serve(serve_dir, serve_port, serve_host, serve_opts.pipeline());
        }
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitOk;
}
