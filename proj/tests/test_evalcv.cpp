#include <doctest.h>

#include <cmath>
#include <set>

#include "regimenet/evalcv.hpp"

using namespace regimenet;

namespace {

// Mann-Whitney pair counting with ties worth one half, the AUC oracle.
double auc_oracle(const std::vector<double>& scores, const std::vector<std::uint8_t>& truth) {
    double wins = 0.0;
    std::int64_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!truth[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (truth[j]) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

Matrix row_matrix(const std::vector<double>& values) {
    Matrix M(1, values.size());
    for (std::size_t i = 0; i < values.size(); ++i) M(0, i) = values[i];
    return M;
}

} // namespace

TEST_CASE("confusion counting") {
    const Matrix pred = row_matrix({1, 1, 0, 0});
    const Matrix truth = row_matrix({1, 0, 1, 0});
    const ConfusionCounts c = confusion(pred, truth);
    CHECK(c.tp == 1);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
    CHECK(c.tn == 1);

    SUBCASE("perfect prediction has no errors") {
        const ConfusionCounts p = confusion(truth, truth);
        CHECK(p.fp == 0);
        CHECK(p.fn == 0);
    }
    SUBCASE("inverted prediction has no correct cells") {
        const Matrix inverted = row_matrix({0, 1, 0, 1});
        const ConfusionCounts p = confusion(inverted, truth);
        CHECK(p.tp == 0);
        CHECK(p.tn == 0);
    }
    SUBCASE("shape mismatch is rejected") {
        CHECK_THROWS_AS(confusion(Matrix(1, 3), Matrix(1, 4)), ShapeError);
    }
}

TEST_CASE("precision, recall and rates") {
    ConfusionCounts c{1, 1, 1, 1};
    const auto [precision, recall] = precision_recall(c);
    CHECK(precision == 0.5);
    CHECK(recall == 0.5);
    CHECK(error_rate(c) == 0.5);
    CHECK(fall_out(c) == 0.5);

    SUBCASE("no false negatives gives recall one") {
        const ConfusionCounts p{5, 2, 3, 0};
        CHECK(precision_recall(p).second == 1.0);
    }
    SUBCASE("empty positive prediction is vacuously precise") {
        const ConfusionCounts p{0, 0, 4, 2};
        CHECK(precision_recall(p).first == 1.0);
    }
    SUBCASE("all-positive prediction on all-negative truth") {
        const ConfusionCounts p{0, 6, 0, 0};
        CHECK(error_rate(p) == 1.0);
        CHECK(fall_out(p) == 1.0);
    }
    SUBCASE("accuracy complements the error rate exactly") {
        const ConfusionCounts p{3, 2, 7, 1};
        CHECK(error_rate(p) + (1.0 - error_rate(p)) == 1.0);
    }
    SUBCASE("empty set is a domain error") {
        CHECK_THROWS_AS(error_rate(ConfusionCounts{}), DomainError);
    }
}

TEST_CASE("roc curve") {
    SUBCASE("hand case gives AUC 0.75") {
        const RocResult roc = roc_curve({0.9, 0.8, 0.4, 0.3}, {1, 0, 1, 0});
        CHECK(roc.auc == doctest::Approx(0.75).epsilon(1e-15));
    }
    SUBCASE("perfectly separating scores give AUC 1") {
        const RocResult roc = roc_curve({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
        CHECK(roc.auc == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("constant scores give AUC one half") {
        const RocResult roc = roc_curve({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0});
        CHECK(roc.auc == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("matches brute-force pair counting on random instances") {
        Rng rng(3);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 20 + rng.below(80);
            std::vector<double> scores(n);
            std::vector<std::uint8_t> truth(n);
            bool has_pos = false, has_neg = false;
            for (std::size_t i = 0; i < n; ++i) {
                // coarse quantization forces plenty of ties
                scores[i] = std::round(rng.uniform01() * 8.0) / 8.0;
                truth[i] = rng.below(2) ? 1 : 0;
                (truth[i] ? has_pos : has_neg) = true;
            }
            if (!has_pos || !has_neg) continue;
            const RocResult roc = roc_curve(scores, truth);
            CHECK(std::abs(roc.auc - auc_oracle(scores, truth)) <= 1e-12);
        }
    }
    SUBCASE("points run from the origin to (1,1) sorted by fpr") {
        const RocResult roc = roc_curve({0.9, 0.8, 0.4, 0.3}, {1, 0, 1, 0});
        CHECK(roc.points.front().fpr == 0.0);
        CHECK(roc.points.front().tpr == 0.0);
        CHECK(roc.points.back().fpr == 1.0);
        CHECK(roc.points.back().tpr == 1.0);
        for (std::size_t i = 1; i < roc.points.size(); ++i)
            CHECK(roc.points[i].fpr >= roc.points[i - 1].fpr);
    }
    SUBCASE("single-class truth is degenerate") {
        CHECK_THROWS_AS(roc_curve({0.1, 0.2}, {1, 1}), DomainError);
        CHECK_THROWS_AS(roc_curve({0.1, 0.2}, {0, 0}), DomainError);
    }
}

TEST_CASE("precision-recall curve") {
    const std::vector<double> scores{0.9, 0.8, 0.4, 0.3};
    const std::vector<std::uint8_t> truth{1, 0, 1, 0};
    const auto points = pr_curve(scores, truth);

    SUBCASE("starts at the empty prediction and ends all-positive") {
        CHECK(points.front().recall == 0.0);
        CHECK(points.back().recall == 1.0);
        CHECK(points.back().precision == doctest::Approx(0.5).epsilon(1e-15)); // prevalence
    }
    SUBCASE("perfect separation passes through (1,1)") {
        const auto ideal = pr_curve({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
        bool found = false;
        for (const PrPoint& p : ideal)
            if (p.recall == 1.0 && p.precision == 1.0) found = true;
        CHECK(found);
    }
    SUBCASE("no positives is degenerate") {
        CHECK_THROWS_AS(pr_curve({0.1, 0.2}, {0, 0}), DomainError);
    }
}

TEST_CASE("prevalence and parity") {
    CHECK(prevalence({1, 1, 1}) == 1.0);
    CHECK(prevalence({0, 0, 0, 0}) == 0.0);
    CHECK(prevalence({1, 0, 1, 0}) == 0.5);

    Matrix pred(2, 3), truth(2, 3);
    pred(0, 0) = 1;
    pred(1, 0) = 1; // example 0: predicted prevalence 1
    truth(0, 0) = 1; // true prevalence 0.5
    truth(0, 2) = 1;
    const auto pairs = parity_pairs(pred, truth);
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0].first == 0.5);
    CHECK(pairs[0].second == 1.0);
    CHECK(pairs[1].first == 0.0);
    CHECK(pairs[1].second == 0.0);
    CHECK(pairs[2].first == 0.5);
    CHECK(pairs[2].second == 0.0);

    SUBCASE("identical predictions sit on the diagonal") {
        const auto diag = parity_pairs(truth, truth);
        for (const auto& [t, p] : diag) CHECK(t == p);
    }
}

TEST_CASE("pct_cost") {
    CHECK(pct_cost(1.0, 1.2) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(pct_cost(3.5, 3.5) == 0.0);
    CHECK(pct_cost(2.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(pct_cost(0.0, 1.0), DomainError);
}

TEST_CASE("k-fold split") {
    Rng rng(5);

    SUBCASE("ten examples in five folds of two") {
        const auto folds = kfold_split(10, 5, rng);
        REQUIRE(folds.size() == 5);
        std::set<int> seen;
        for (const KFold& f : folds) {
            CHECK(f.val_indices.size() == 2);
            CHECK(f.train_indices.size() == 8);
            seen.insert(f.val_indices.begin(), f.val_indices.end());
        }
        CHECK(seen.size() == 10);
    }
    SUBCASE("validation folds partition the index set for many sizes") {
        for (int s : {5, 7, 23, 100, 101, 104}) {
            const auto folds = kfold_split(s, 5, rng);
            std::set<int> seen;
            std::size_t total = 0;
            std::size_t min_size = 1000, max_size = 0;
            for (const KFold& f : folds) {
                seen.insert(f.val_indices.begin(), f.val_indices.end());
                total += f.val_indices.size();
                min_size = std::min(min_size, f.val_indices.size());
                max_size = std::max(max_size, f.val_indices.size());
            }
            CHECK(seen.size() == static_cast<std::size_t>(s));
            CHECK(total == static_cast<std::size_t>(s));
            CHECK(max_size - min_size <= 1);
        }
    }
    SUBCASE("fixed seed reproduces the folds") {
        Rng a(9), b(9);
        const auto fa = kfold_split(23, 5, a);
        const auto fb = kfold_split(23, 5, b);
        for (std::size_t f = 0; f < fa.size(); ++f)
            CHECK(fa[f].val_indices == fb[f].val_indices);
    }
    SUBCASE("fewer examples than folds is a split error") {
        CHECK_THROWS_AS(kfold_split(4, 5, rng), SplitError);
    }
}

TEST_CASE("cross-validation aggregation") {
    const NetworkSpec spec{{4, 8, 10}};

    SUBCASE("identical folds have zero recall variance") {
        std::vector<FoldMetrics> folds(5);
        for (auto& f : folds) {
            f.recall = 0.8444;
            f.precision = 0.8281;
            f.error_rate = 0.01888;
            f.pct_cost = 0.05208;
            f.iterations = 411;
        }
        const CVResult r = aggregate_cv(spec, 0.01, folds);
        CHECK(r.recall_variance == 0.0);
        CHECK(r.mean_recall == doctest::Approx(0.8444).epsilon(1e-15));
    }
    SUBCASE("reported standard deviation is the square root of the variance") {
        // reference pair: variance 0.007412 ~ std 0.08609
        CHECK(std::sqrt(0.007412) == doctest::Approx(0.08609).epsilon(1e-4));
        std::vector<FoldMetrics> folds(2);
        folds[0].recall = 0.7;
        folds[1].recall = 0.9;
        const CVResult r = aggregate_cv(spec, 0.01, folds);
        CHECK(r.recall_variance == doctest::Approx(0.01).epsilon(1e-14)); // population
        CHECK(std::sqrt(r.recall_variance) == doctest::Approx(0.1).epsilon(1e-14));
    }
    SUBCASE("failed folds are excluded from the means") {
        std::vector<FoldMetrics> folds(3);
        folds[0].recall = 0.5;
        folds[1].failed = true;
        folds[1].recall = 99.0;
        folds[2].recall = 0.7;
        const CVResult r = aggregate_cv(spec, 0.1, folds);
        CHECK(r.failed_folds == 1);
        CHECK(r.mean_recall == doctest::Approx(0.6).epsilon(1e-14));
    }
}

TEST_CASE("select_best follows recall with the documented tie rules") {
    const NetworkSpec net1{{12, 256, 512, 2500}};
    const NetworkSpec net2{{12, 512, 256, 2500}};

    // a cross-validation grid shaped like a real tuning run
    std::vector<CVResult> results;
    const auto add = [&](const NetworkSpec& spec, double lr, double rec, double er) {
        CVResult r;
        r.spec = spec;
        r.learning_rate = lr;
        r.mean_recall = rec;
        r.mean_error_rate = er;
        results.push_back(r);
    };
    add(net1, 0.1, 0.4697, 0.05136);
    add(net1, 0.01, 0.8444, 0.01888);
    add(net1, 0.0075, 0.7657, 0.01950);
    add(net1, 0.001, 0.8287, 0.01733);
    add(net2, 0.1, 0.3096, 0.07268);
    add(net2, 0.01, 0.7809, 0.01858);
    add(net2, 0.0075, 0.6956, 0.02187);
    add(net2, 0.001, 0.8310, 0.01726);

    const CVResult& best = select_best(results);
    CHECK(best.spec.layer_sizes == net1.layer_sizes);
    CHECK(best.learning_rate == 0.01);

    SUBCASE("single candidate selects itself") {
        const std::vector<CVResult> one{results[3]};
        CHECK(select_best(one).learning_rate == 0.001);
    }
    SUBCASE("equal recalls fall to the lower error rate") {
        std::vector<CVResult> tie;
        add(net1, 0.1, 0.5, 0.2);
        add(net2, 0.2, 0.5, 0.1);
        tie.push_back(results[results.size() - 2]);
        tie.push_back(results[results.size() - 1]);
        const CVResult& winner = select_best(tie);
        CHECK(winner.learning_rate == 0.2);
    }
}

TEST_CASE("cross_validate runs the full loop on a toy dataset") {
    // ten identical examples: every fold sees the same data, so the recall
    // variance must vanish
    Dataset ds;
    ds.case_tag = CaseTag::Landfill;
    ds.n0 = 3;
    ds.k = 4;
    ds.nx = 2;
    ds.ny = 2;
    for (int j = 0; j < 10; ++j) {
        ds.features.push_back({1.0, 2.0, 3.0});
        ds.labels.push_back({1, 0, 1, 0});
    }

    CrossValidateConfig cfg;
    cfg.kappa = 5;
    cfg.train.max_iterations = 30;
    cfg.train.learning_rate = 0.05;
    cfg.train.improvement_threshold = 1e-15;

    const std::vector<NetworkSpec> specs{NetworkSpec{{3, 5, 4}}};
    const std::vector<double> lrs{0.1, 0.01};
    const auto results = cross_validate(ds, specs, lrs, cfg);
    REQUIRE(results.size() == 2);
    for (const CVResult& r : results) {
        CHECK(r.folds == 5);
        CHECK(r.failed_folds == 0);
        CHECK(r.recall_variance == 0.0);
        CHECK(r.mean_iterations > 0.0);
    }
}
