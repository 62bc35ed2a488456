#include "affect/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "json.hpp"

using nlohmann::json;

namespace affect
{

namespace
{

constexpr int kFormatVersion = 1;

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

bool same(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.size() == b.size() && a == b; }

double sign_of(Label l) { return l == Label::anger ? 1.0 : -1.0; }

Eigen::VectorXd to_vector(const json& j, const char* key)
{
    const auto& arr = j.at(key);
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

json to_array(const Eigen::VectorXd& v) { return json(std::vector<double>(v.begin(), v.end())); }

} // namespace

std::string_view to_string(Label label) { return label == Label::anger ? "anger" : "not_anger"; }

bool operator==(const LinearClassifier& a, const LinearClassifier& b)
{
    return a.modality == b.modality && same(a.weights, b.weights) && a.bias == b.bias && same(a.mean, b.mean) &&
           same(a.scale, b.scale) && a.calib_a == b.calib_a && a.calib_b == b.calib_b &&
           a.config.lambda == b.config.lambda && a.config.epochs == b.config.epochs && a.config.seed == b.config.seed;
}

double logistic(double z)
{
    if (z >= 0)
        return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double hinge_objective(const LinearClassifier& clf, std::span<const TrainingExample> examples)
{
    double loss = 0.0;
    for (const auto& ex : examples)
    {
        const double m = predict(clf, ex.features).margin;
        loss += std::max(0.0, 1.0 - sign_of(ex.label) * m);
    }
    const double reg = 0.5 * clf.config.lambda * (clf.weights.squaredNorm() + clf.bias * clf.bias);
    return reg + loss / static_cast<double>(examples.size());
}

LinearClassifier train(std::span<const TrainingExample> examples, Modality modality, const TrainConfig& config,
                       TrainTrace* trace)
{
    if (examples.size() < 2)
        throw DomainError("training needs at least 2 examples, got " + std::to_string(examples.size()));
    if (!(config.lambda > 0.0) || config.epochs < 1)
        throw DomainError("training needs lambda > 0 and epochs >= 1");
    const Eigen::Index d = examples.front().features.size();
    bool has_pos = false, has_neg = false;
    for (const auto& ex : examples)
    {
        if (ex.features.size() != d)
            throw DomainError("inconsistent feature length: " + std::to_string(ex.features.size()) + " vs " +
                              std::to_string(d));
        if (!ex.features.allFinite())
            throw DomainError("non-finite training feature");
        (ex.label == Label::anger ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg)
        throw DomainError("training set contains a single class");

    const auto n = static_cast<Eigen::Index>(examples.size());
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        x.row(i) = examples[static_cast<std::size_t>(i)].features.transpose();
        y[i] = sign_of(examples[static_cast<std::size_t>(i)].label);
    }

    LinearClassifier clf;
    clf.modality = modality;
    clf.config = config;
    clf.mean = x.colwise().mean().transpose();
    clf.scale = ((x.rowwise() - clf.mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
    std::vector<bool> pinned(static_cast<std::size_t>(d), false);
    for (Eigen::Index j = 0; j < d; ++j)
        if (!(clf.scale[j] > 1e-12 * std::max(1.0, std::abs(clf.mean[j]))))
        {
            clf.scale[j] = 1.0;
            pinned[static_cast<std::size_t>(j)] = true;
        }

    // Standardized design with a trailing constant column for the bias.
    Eigen::MatrixXd z(n, d + 1);
    z.leftCols(d) = (x.rowwise() - clf.mean.transpose()).array().rowwise() / clf.scale.transpose().array();
    for (Eigen::Index j = 0; j < d; ++j)
        if (pinned[static_cast<std::size_t>(j)])
            z.col(j).setZero();
    z.col(d).setOnes();

    auto objective = [&](const Eigen::VectorXd& w) {
        const Eigen::ArrayXd margins = (z * w).array() * y.array();
        return 0.5 * config.lambda * w.squaredNorm() + (1.0 - margins).max(0.0).mean();
    };

    Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(d + 1);
    Eigen::VectorXd best = Eigen::VectorXd::Zero(d + 1);
    double best_obj = std::numeric_limits<double>::infinity();
    const double radius = 1.0 / std::sqrt(config.lambda);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(config.seed);
    std::int64_t t = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch)
    {
        std::shuffle(order.begin(), order.end(), rng);
        for (Eigen::Index i : order)
        {
            ++t;
            const double eta = 1.0 / (config.lambda * static_cast<double>(t));
            const bool violated = y[i] * z.row(i).dot(w) < 1.0;
            w *= 1.0 - eta * config.lambda;
            if (violated)
                w += eta * y[i] * z.row(i).transpose();
            const double norm = w.norm();
            if (norm > radius)
                w *= radius / norm;
            avg += (w - avg) / static_cast<double>(t);
        }
        const double obj = objective(avg);
        if (obj < best_obj)
        {
            best_obj = obj;
            best = avg;
        }
        if (trace)
            trace->objective.push_back(best_obj);
    }

    clf.weights = best.head(d);
    for (Eigen::Index j = 0; j < d; ++j)
        if (pinned[static_cast<std::size_t>(j)])
            clf.weights[j] = 0.0;
    clf.bias = best[d];
    return clf;
}

Prediction predict(const LinearClassifier& clf, const Eigen::Ref<const Eigen::VectorXd>& features)
{
    if (features.size() != clf.weights.size())
        throw DomainError("classifier expects " + std::to_string(clf.weights.size()) + " features, got " +
                          std::to_string(features.size()));
    const double margin =
        clf.weights.dot(((features - clf.mean).array() / clf.scale.array()).matrix()) + clf.bias;
    Prediction p;
    p.margin = margin;
    p.label = margin > 0.0 ? Label::anger : Label::not_anger;
    p.confidence = logistic(clf.calib_a * margin + clf.calib_b);
    return p;
}

double calibration_log_likelihood(double a, double b, std::span<const LabeledMargin> samples)
{
    double ll = 0.0;
    for (const auto& s : samples)
    {
        const double z = a * s.margin + b;
        ll -= s.label == Label::anger ? softplus(-z) : softplus(z);
    }
    return ll;
}

CalibrationResult calibrate(const LinearClassifier& clf, std::span<const LabeledMargin> held_out, int iterations)
{
    CalibrationResult result{clf, false, 0.0};
    const auto positives = std::count_if(held_out.begin(), held_out.end(),
                                         [](const LabeledMargin& s) { return s.label == Label::anger; });
    const auto total = static_cast<std::ptrdiff_t>(held_out.size());
    if (positives == 0 || positives == total)
    {
        result.classifier.calib_a = 1.0;
        result.classifier.calib_b = 0.0;
        return result;
    }

    const double p = static_cast<double>(positives) / static_cast<double>(total);
    Eigen::Vector2d theta(0.0, std::log(p / (1.0 - p)));
    double ll = calibration_log_likelihood(theta[0], theta[1], held_out);

    for (int it = 0; it < iterations; ++it)
    {
        Eigen::Vector2d grad = Eigen::Vector2d::Zero();
        Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
        for (const auto& s : held_out)
        {
            const double q = logistic(theta[0] * s.margin + theta[1]);
            const double t = s.label == Label::anger ? 1.0 : 0.0;
            const Eigen::Vector2d phi(s.margin, 1.0);
            grad += (t - q) * phi;
            hess += q * (1.0 - q) * phi * phi.transpose();
        }
        if (grad.norm() < 1e-12)
            break;
        hess += (1e-12 + 1e-10 * hess.trace()) * Eigen::Matrix2d::Identity();
        const Eigen::Vector2d step = hess.ldlt().solve(grad);

        double scale = 1.0;
        bool improved = false;
        while (scale > 1e-10)
        {
            const Eigen::Vector2d cand = theta + scale * step;
            const double cand_ll = calibration_log_likelihood(cand[0], cand[1], held_out);
            if (cand_ll > ll)
            {
                theta = cand;
                ll = cand_ll;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!improved)
            break;
    }

    result.classifier.calib_a = theta[0];
    result.classifier.calib_b = theta[1];
    result.calibrated = true;
    result.log_likelihood = ll;
    return result;
}

FusedPrediction fuse_majority(std::span<const Prediction> predictions)
{
    if (predictions.empty())
        throw DomainError("majority fusion needs at least one prediction");
    const auto anger = std::count_if(predictions.begin(), predictions.end(),
                                     [](const Prediction& p) { return p.label == Label::anger; });
    const auto total = static_cast<std::ptrdiff_t>(predictions.size());
    FusedPrediction fused;
    fused.label = 2 * anger > total ? Label::anger : Label::not_anger;
    const auto votes = fused.label == Label::anger ? anger : total - anger;
    fused.vote_fraction = static_cast<double>(votes) / static_cast<double>(total);
    fused.members.assign(predictions.begin(), predictions.end());
    return fused;
}

std::string classifier_to_json(const LinearClassifier& clf)
{
    json j{{"format_version", kFormatVersion},
           {"kind", "linear_svm"},
           {"modality", to_string(clf.modality)},
           {"weights", to_array(clf.weights)},
           {"bias", clf.bias},
           {"standardizer", {{"mean", to_array(clf.mean)}, {"std", to_array(clf.scale)}}},
           {"calibration", {{"A", clf.calib_a}, {"B", clf.calib_b}}},
           {"train_config", {{"lambda", clf.config.lambda}, {"epochs", clf.config.epochs}, {"seed", clf.config.seed}}}};
    return j.dump(2);
}

LinearClassifier classifier_from_json(const std::string& text)
{
    LinearClassifier clf;
    try
    {
        const json j = json::parse(text);
        if (j.at("format_version").get<int>() != kFormatVersion)
            throw DomainError("unsupported classifier format_version");
        if (j.at("kind").get<std::string>() != "linear_svm")
            throw DomainError("not a linear_svm classifier file");
        clf.modality = modality_from_string(j.at("modality").get<std::string>());
        clf.weights = to_vector(j, "weights");
        clf.bias = j.at("bias").get<double>();
        clf.mean = to_vector(j.at("standardizer"), "mean");
        clf.scale = to_vector(j.at("standardizer"), "std");
        clf.calib_a = j.at("calibration").at("A").get<double>();
        clf.calib_b = j.at("calibration").at("B").get<double>();
        const auto& cfg = j.at("train_config");
        clf.config.lambda = cfg.at("lambda").get<double>();
        clf.config.epochs = cfg.at("epochs").get<int>();
        clf.config.seed = cfg.at("seed").get<std::uint64_t>();
    }
    catch (const json::exception& e)
    {
        throw DomainError(std::string("invalid classifier file: ") + e.what());
    }
    if (clf.mean.size() != clf.weights.size() || clf.scale.size() != clf.weights.size())
        throw DomainError("classifier file: weights, mean and std lengths differ");
    if (!clf.weights.allFinite() || !clf.mean.allFinite() || !std::isfinite(clf.bias) ||
        !std::isfinite(clf.calib_a) || !std::isfinite(clf.calib_b))
        throw DomainError("classifier file: non-finite parameter");
    if ((clf.scale.array() <= 0.0).any())
        throw DomainError("classifier file: std values must be positive");
    return clf;
}

} // namespace affect
