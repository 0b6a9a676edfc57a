#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "regimenet/datagen.hpp"
#include "regimenet/matrix.hpp"
#include "regimenet/neural.hpp"
#include "regimenet/rng.hpp"

namespace regimenet {

/// Cell-level confusion counts pooled over all examples of a set
/// (micro-averaging); positive = 1 = GF.
struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;
    std::int64_t total() const { return tp + fp + tn + fn; }
};

ConfusionCounts confusion(const Matrix& pred, const Matrix& truth);

/// (precision, recall); an empty denominator with tp == 0 counts as
/// vacuously perfect (1).
std::pair<double, double> precision_recall(const ConfusionCounts& counts);
double error_rate(const ConfusionCounts& counts);
double fall_out(const ConfusionCounts& counts);

struct MetricsReport {
    double recall = 0.0;
    double precision = 0.0;
    double error_rate = 0.0;
    double accuracy = 0.0;
    double fpr = 0.0;
    double auc = 0.0;
    ConfusionCounts counts;
};

/// Metrics of thresholded predictions plus the ROC area of the raw scores.
MetricsReport evaluate_predictions(const Matrix& proba, const Matrix& truth,
                                   double threshold = 0.5);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocResult {
    std::vector<RocPoint> points; // sorted by fpr, from (0,0) to (1,1)
    double auc = 0.0;
};

/// Threshold sweep over the distinct scores (ties grouped); the trapezoid
/// area equals the Mann-Whitney pair statistic with ties counted 1/2.
/// Throws DomainError when the truth contains a single class.
RocResult roc_curve(const std::vector<double>& scores,
                    const std::vector<std::uint8_t>& truth);

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

/// One point per distinct threshold, from the empty prediction (recall 0)
/// down to all-positive (recall 1, precision = prevalence).
std::vector<PrPoint> pr_curve(const std::vector<double>& scores,
                              const std::vector<std::uint8_t>& truth);

/// Fraction of positive cells in one example.
double prevalence(const std::vector<std::uint8_t>& labels);

/// Per-example (true prevalence, predicted prevalence) pairs.
std::vector<std::pair<double, double>> parity_pairs(const Matrix& pred_labels,
                                                    const Matrix& truth_labels);

/// |c_val - c_train| / c_train.
double pct_cost(double c_train, double c_val);

struct KFold {
    std::vector<int> train_indices;
    std::vector<int> val_indices;
};

/// Shuffled kappa-fold partition; fold sizes differ by at most one.
std::vector<KFold> kfold_split(int s, int kappa, Rng& rng);

struct FoldMetrics {
    double recall = 0.0;
    double precision = 0.0;
    double error_rate = 0.0;
    double pct_cost = 0.0;
    double iterations = 0.0;
    double seconds = 0.0;
    bool failed = false; // diverged; excluded from the means
};

struct CVResult {
    NetworkSpec spec;
    double learning_rate = 0.0;
    double mean_recall = 0.0;
    double mean_precision = 0.0;
    double mean_error_rate = 0.0;
    double mean_pct_cost = 0.0;
    double recall_variance = 0.0; // population variance over the folds
    double mean_iterations = 0.0;
    double wall_time_seconds = 0.0;
    int folds = 0;
    int failed_folds = 0;
};

/// Aggregates per-fold metrics into a CV row (kept separate from the
/// training loop so the aggregation rules are testable on their own).
CVResult aggregate_cv(const NetworkSpec& spec, double learning_rate,
                      const std::vector<FoldMetrics>& folds);

struct CrossValidateConfig {
    int kappa = 5;
    TrainConfig train;
    double threshold = 0.5;
    std::uint64_t fold_seed = 0;
};

/// kappa trainings per (spec, learning rate) candidate; per fold the
/// normalizer is fit on that fold's training part, metrics are computed on
/// the validation fold and %cost compares the final training cost with the
/// validation cost.
std::vector<CVResult> cross_validate(const Dataset& train_set,
                                     const std::vector<NetworkSpec>& specs,
                                     const std::vector<double>& learning_rates,
                                     const CrossValidateConfig& cfg);

/// Highest mean recall; ties fall to the lower error rate, then the lower
/// wall time.
const CVResult& select_best(const std::vector<CVResult>& results);

} // namespace regimenet
