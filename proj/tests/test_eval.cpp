#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "affect/eval.hpp"
#include "affect/synthetic.hpp"
#include "doctest.h"

using namespace affect;

namespace
{

std::vector<Recording> synthetic_dataset(int windows, double noise, std::uint64_t seed = 7)
{
    SyntheticSpec spec;
    spec.windows = windows;
    spec.noise = noise;
    spec.seed = seed;
    spec.curve = random_curve(windows, seed);
    return {generate_synthetic_recording(spec)};
}

} // namespace

TEST_SUITE("intensity accuracy")
{
    TEST_CASE("counting")
    {
        const std::vector<double> est{0.45, 0.7, 0.2}, lab{0.5, 0.5, 0.5};
        const auto r = intensity_accuracy(est, lab);
        CHECK(r.accuracy == doctest::Approx(1.0 / 3.0));
        CHECK(r.n == 3);
        CHECK(r.mae == doctest::Approx((0.05 + 0.2 + 0.3) / 3));
    }

    TEST_CASE("identity")
    {
        const std::vector<double> v{0.0, 0.3, 1.0};
        const auto r = intensity_accuracy(v, v);
        CHECK(r.accuracy == 1.0);
        CHECK(r.mae == 0.0);
    }

    TEST_CASE("difference of exactly the margin counts")
    {
        std::vector<double> lab, est;
        for (int i = 0; i <= 9; ++i)
        {
            lab.push_back(0.1 * i);
            est.push_back(0.1 * i + 0.1);
        }
        CHECK(intensity_accuracy(est, lab, 0.1).accuracy == 1.0);
        CHECK(intensity_accuracy(lab, est, 0.1).accuracy == 1.0);
        CHECK(intensity_accuracy(est, lab, 0.0999).accuracy == 0.0);
    }

    TEST_CASE("zero margin")
    {
        const std::vector<double> est{0.2, 0.5000001}, lab{0.2, 0.5};
        CHECK(intensity_accuracy(est, lab, 0.0).accuracy == 0.5);
    }

    TEST_CASE("monotone in margin on random data")
    {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> est(500), lab(500);
        for (int i = 0; i < 500; ++i)
        {
            est[i] = u(rng);
            lab[i] = u(rng);
        }
        double last = -1.0;
        for (double m = 0.0; m <= 1.0; m += 0.01)
        {
            const double a = intensity_accuracy(est, lab, m).accuracy;
            CHECK(a >= last);
            last = a;
        }
        CHECK(last == 1.0);
    }

    TEST_CASE("errors")
    {
        const std::vector<double> a{0.1, 0.2}, b{0.1};
        CHECK_THROWS_AS(intensity_accuracy(a, b), DomainError);
        CHECK_THROWS_AS(intensity_accuracy(std::vector<double>{}, std::vector<double>{}), DomainError);
        const std::vector<double> bad{1.2, 0.2};
        CHECK_THROWS_AS(intensity_accuracy(a, bad), DomainError);
    }
}

TEST_SUITE("classification metrics")
{
    const Label A = Label::anger, N = Label::not_anger;

    TEST_CASE("all correct")
    {
        const std::vector<Label> y{A, N, A, N};
        const auto r = classification_metrics(y, y);
        CHECK(r.precision == 1.0);
        CHECK(r.recall == 1.0);
        CHECK(r.accuracy == 1.0);
    }

    TEST_CASE("always anger on half-anger labels")
    {
        const std::vector<Label> p{A, A, A, A}, y{A, N, A, N};
        const auto r = classification_metrics(p, y);
        CHECK(r.precision == 0.5);
        CHECK(r.recall == 1.0);
    }

    TEST_CASE("TP 3, FP 1, FN 2")
    {
        const std::vector<Label> p{A, A, A, A, N, N, N}, y{A, A, A, N, A, A, N};
        const auto r = classification_metrics(p, y);
        CHECK(r.tp == 3);
        CHECK(r.fp == 1);
        CHECK(r.fn == 2);
        CHECK(r.tn == 1);
        CHECK(r.precision == 0.75);
        CHECK(r.recall == 0.6);
    }

    TEST_CASE("undefined precision is flagged")
    {
        const std::vector<Label> p{N, N}, y{A, N};
        const auto r = classification_metrics(p, y);
        CHECK_FALSE(r.precision_defined);
        CHECK(r.precision == 0.0);
        CHECK(r.recall_defined);
    }

    TEST_CASE("random pairs match a confusion-count oracle")
    {
        std::mt19937_64 rng(2);
        for (int t = 0; t < 200; ++t)
        {
            const int n = 1 + static_cast<int>(rng() % 50);
            std::vector<Label> p, y;
            int tp = 0, fp = 0, fn = 0, tn = 0;
            for (int i = 0; i < n; ++i)
            {
                p.push_back(rng() % 2 ? A : N);
                y.push_back(rng() % 2 ? A : N);
                if (p.back() == A)
                    (y.back() == A ? tp : fp) += 1;
                else
                    (y.back() == A ? fn : tn) += 1;
            }
            const auto r = classification_metrics(p, y);
            REQUIRE(r.tp == static_cast<std::size_t>(tp));
            REQUIRE(r.fp == static_cast<std::size_t>(fp));
            REQUIRE(r.fn == static_cast<std::size_t>(fn));
            REQUIRE(r.tn == static_cast<std::size_t>(tn));
            REQUIRE(r.accuracy == doctest::Approx(double(tp + tn) / n));
            if (tp + fp > 0)
                REQUIRE(r.precision == doctest::Approx(double(tp) / (tp + fp)));
            if (tp + fn > 0)
                REQUIRE(r.recall == doctest::Approx(double(tp) / (tp + fn)));
        }
    }

    TEST_CASE("errors")
    {
        CHECK_THROWS_AS(classification_metrics(std::vector<Label>{}, std::vector<Label>{}), DomainError);
        CHECK_THROWS_AS(classification_metrics(std::vector<Label>{A}, std::vector<Label>{A, N}), DomainError);
    }
}

TEST_SUITE("folds")
{
    void check_partition(const FoldPlan& plan, std::size_t n)
    {
        std::set<std::size_t> seen;
        std::size_t lo = n, hi = 0;
        for (const auto& f : plan.folds)
        {
            lo = std::min(lo, f.size());
            hi = std::max(hi, f.size());
            for (auto i : f)
            {
                REQUIRE(i < n);
                REQUIRE(seen.insert(i).second);
            }
        }
        REQUIRE(seen.size() == n);
        REQUIRE(hi - lo <= 1);
    }

    TEST_CASE("100 items, k 10")
    {
        const auto plan = kfold(100, 10, 7);
        REQUIRE(plan.folds.size() == 10);
        for (const auto& f : plan.folds)
            CHECK(f.size() == 10);
        check_partition(plan, 100);
    }

    TEST_CASE("same seed, same plan; other seed, other plan")
    {
        CHECK(kfold(100, 10, 7).folds == kfold(100, 10, 7).folds);
        CHECK(kfold(100, 10, 7).folds != kfold(100, 10, 8).folds);
    }

    TEST_CASE("95 items: five folds of 10 and five of 9")
    {
        const auto plan = kfold(95, 10, 3);
        int tens = 0, nines = 0;
        for (const auto& f : plan.folds)
            (f.size() == 10 ? tens : nines) += 1;
        CHECK(tens == 5);
        CHECK(nines == 5);
    }

    TEST_CASE("partition property over random sizes")
    {
        std::mt19937_64 rng(4);
        for (int t = 0; t < 300; ++t)
        {
            const std::size_t n = 2 + rng() % 200;
            const int k = 2 + static_cast<int>(rng() % (n - 1));
            check_partition(kfold(n, k, rng()), n);
        }
    }

    TEST_CASE("stratified plans keep both classes in every training split")
    {
        std::mt19937_64 rng(5);
        for (int t = 0; t < 100; ++t)
        {
            const std::size_t n = 20 + rng() % 100;
            std::vector<Label> labels(n, Label::not_anger);
            const std::size_t positives = 2 + rng() % (n / 2);
            for (std::size_t i = 0; i < positives; ++i)
                labels[rng() % n] = Label::anger;
            const auto plan = kfold(n, 10, rng(), labels);
            check_partition(plan, n);
            for (std::size_t f = 0; f < plan.folds.size(); ++f)
            {
                const auto train = plan.training_indices(f);
                const auto anger = std::count_if(train.begin(), train.end(),
                                                 [&](auto i) { return labels[i] == Label::anger; });
                REQUIRE(anger > 0);
                REQUIRE(static_cast<std::size_t>(anger) < train.size());
            }
        }
    }

    TEST_CASE("errors")
    {
        CHECK_THROWS_AS(kfold(5, 10, 1), DomainError);
        CHECK_THROWS_AS(kfold(5, 1, 1), DomainError);
        CHECK_THROWS_AS(kfold(5, 2, 1, std::vector<Label>(4)), DomainError);
    }
}

TEST_SUITE("experiment")
{
    TEST_CASE("reports every modality plus the multimodal row")
    {
        const auto data = synthetic_dataset(120, 0.05);
        const auto report = run_experiment(data);
        CHECK(report.k == 10);
        REQUIRE(report.rows.size() == 5);
        for (const char* name : {"face", "body", "hand", "speech", "multiple"})
        {
            const auto* row = report.row(name);
            REQUIRE(row != nullptr);
            CHECK(row->windows == 120);
            CHECK(row->intensity_accuracy >= 0.0);
            CHECK(row->intensity_accuracy <= 1.0);
        }
    }

    TEST_CASE("same dataset and seed give an identical report")
    {
        const auto data = synthetic_dataset(100, 0.05);
        const auto a = run_experiment(data);
        const auto b = run_experiment(data);
        CHECK(a == b);
        CHECK(format_report(a) == format_report(b));
    }

    TEST_CASE("removing speech drops its row and leaves the visual rows")
    {
        auto data = synthetic_dataset(100, 0.05);
        const auto with = run_experiment(data);
        for (auto& r : data)
        {
            r.speech.clear();
            r.meta.modalities.pop_back();
        }
        const auto without = run_experiment(data);
        CHECK(without.row("speech") == nullptr);
        REQUIRE(without.row("multiple") != nullptr);
        for (const char* name : {"face", "body", "hand"})
            CHECK(*with.row(name) == *without.row(name));
    }

    TEST_CASE("perfect synthetic data is exact at margin 0")
    {
        const auto data = synthetic_dataset(100, 0.0);
        ExperimentConfig cfg;
        cfg.margin = 0.0;
        const auto report = run_experiment(data, cfg);
        CHECK(report.row("multiple")->intensity_accuracy == 1.0);
    }

    TEST_CASE("low noise: multimodal beats face and body")
    {
        const auto report = run_experiment(synthetic_dataset(200, 0.02));
        const double fused = report.row("multiple")->intensity_accuracy;
        CHECK(fused >= 0.9);
        CHECK(fused >= report.row("face")->intensity_accuracy);
        CHECK(fused >= report.row("body")->intensity_accuracy);
    }

    TEST_CASE("input errors")
    {
        CHECK_THROWS_AS(run_experiment(std::vector<Recording>{}), DomainError);
        auto data = synthetic_dataset(30, 0.05);
        data[0].annotations.clear();
        CHECK_THROWS_AS(run_experiment(data), DomainError);

        auto two = synthetic_dataset(30, 0.05);
        auto other = synthetic_dataset(30, 0.05, 8)[0];
        other.meta.recording_id = "other";
        other.streams.erase(Modality::hand);
        two.push_back(other);
        CHECK_THROWS_WITH_AS(run_experiment(two), doctest::Contains("hand"), DomainError);

        auto gap = synthetic_dataset(30, 0.05);
        gap[0].annotations.push_back({gap[0].meta.recording_id, 1000, 1009, 0.5, "a", "2024-01-01T00:00:00Z"});
        CHECK_THROWS_AS(run_experiment(gap), DomainError);
    }

    TEST_CASE("report text and csv")
    {
        const auto report = run_experiment(synthetic_dataset(60, 0.05));
        const std::string text = format_report(report);
        CHECK(text.find("Anger recognition") != std::string::npos);
        CHECK(text.find("Anger intensity estimation (margin +/-0.10)") != std::string::npos);
        CHECK(text.find("Multiple") != std::string::npos);
        std::ostringstream csv;
        write_report_csv(report, csv);
        std::istringstream in(csv.str());
        std::string line;
        int lines = 0;
        while (std::getline(in, line))
            ++lines;
        CHECK(lines == 6);
    }
}
