#include "regimenet/evalcv.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace regimenet {

ConfusionCounts confusion(const Matrix& pred, const Matrix& truth) {
    if (!pred.same_shape(truth)) throw ShapeError("confusion: shape mismatch");
    ConfusionCounts c;
    const double* p = pred.data();
    const double* t = truth.data();
    const std::size_t n = pred.rows() * pred.cols();
    for (std::size_t i = 0; i < n; ++i) {
        const bool pp = p[i] != 0.0;
        const bool tt = t[i] != 0.0;
        if (pp && tt)
            ++c.tp;
        else if (pp && !tt)
            ++c.fp;
        else if (!pp && tt)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

std::pair<double, double> precision_recall(const ConfusionCounts& c) {
    const double precision =
        c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp)
                        : (c.tp == 0 ? 1.0 : 0.0);
    const double recall =
        c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn)
                        : (c.tp == 0 ? 1.0 : 0.0);
    return {precision, recall};
}

double error_rate(const ConfusionCounts& c) {
    if (c.total() == 0) throw DomainError("error_rate: empty set");
    return static_cast<double>(c.fp + c.fn) / static_cast<double>(c.total());
}

double fall_out(const ConfusionCounts& c) {
    if (c.total() == 0) throw DomainError("fall_out: empty set");
    if (c.fp + c.tn == 0) return 0.0;
    return static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
}

MetricsReport evaluate_predictions(const Matrix& proba, const Matrix& truth,
                                   double threshold) {
    MetricsReport report;
    const Matrix labels = predict_labels(proba, threshold);
    report.counts = confusion(labels, truth);
    const auto [precision, recall] = precision_recall(report.counts);
    report.precision = precision;
    report.recall = recall;
    report.error_rate = error_rate(report.counts);
    report.accuracy = 1.0 - report.error_rate;
    report.fpr = fall_out(report.counts);

    std::vector<double> scores(proba.raw().begin(), proba.raw().end());
    std::vector<std::uint8_t> flat(truth.raw().size());
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = truth.raw()[i] != 0.0;
    report.auc = roc_curve(scores, flat).auc;
    return report;
}

namespace {

struct ScoreSweep {
    // Cumulative positive/negative counts after each distinct-score group,
    // swept from the highest score down.
    std::vector<std::int64_t> tp;
    std::vector<std::int64_t> fp;
    std::int64_t positives = 0;
    std::int64_t negatives = 0;
};

ScoreSweep sweep_scores(const std::vector<double>& scores,
                        const std::vector<std::uint8_t>& truth) {
    if (scores.size() != truth.size()) throw ShapeError("score/truth size mismatch");
    if (scores.empty()) throw DomainError("empty score set");
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    ScoreSweep sweep;
    for (std::uint8_t t : truth)
        t ? ++sweep.positives : ++sweep.negatives;

    std::int64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const double v = scores[idx[i]];
        while (i < idx.size() && scores[idx[i]] == v) {
            truth[idx[i]] ? ++tp : ++fp;
            ++i;
        }
        sweep.tp.push_back(tp);
        sweep.fp.push_back(fp);
    }
    return sweep;
}

} // namespace

RocResult roc_curve(const std::vector<double>& scores,
                    const std::vector<std::uint8_t>& truth) {
    const ScoreSweep sweep = sweep_scores(scores, truth);
    if (sweep.positives == 0 || sweep.negatives == 0)
        throw DomainError("roc_curve: needs at least one positive and one negative");

    RocResult result;
    result.points.push_back({0.0, 0.0});
    const double np = static_cast<double>(sweep.positives);
    const double nn = static_cast<double>(sweep.negatives);
    double auc = 0.0;
    double prev_fpr = 0.0, prev_tpr = 0.0;
    for (std::size_t g = 0; g < sweep.tp.size(); ++g) {
        const double tpr = static_cast<double>(sweep.tp[g]) / np;
        const double fpr = static_cast<double>(sweep.fp[g]) / nn;
        auc += (fpr - prev_fpr) * 0.5 * (tpr + prev_tpr);
        result.points.push_back({fpr, tpr});
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    result.auc = auc;
    return result;
}

std::vector<PrPoint> pr_curve(const std::vector<double>& scores,
                              const std::vector<std::uint8_t>& truth) {
    const ScoreSweep sweep = sweep_scores(scores, truth);
    if (sweep.positives == 0) throw DomainError("pr_curve: needs at least one positive");

    std::vector<PrPoint> points;
    points.push_back({0.0, 1.0}); // threshold above every score: empty prediction
    for (std::size_t g = 0; g < sweep.tp.size(); ++g) {
        ConfusionCounts c;
        c.tp = sweep.tp[g];
        c.fp = sweep.fp[g];
        c.fn = sweep.positives - sweep.tp[g];
        c.tn = sweep.negatives - sweep.fp[g];
        const auto [precision, recall] = precision_recall(c);
        points.push_back({recall, precision});
    }
    return points;
}

double prevalence(const std::vector<std::uint8_t>& labels) {
    if (labels.empty()) throw DomainError("prevalence: empty label vector");
    std::int64_t positives = 0;
    for (std::uint8_t l : labels)
        if (l) ++positives;
    return static_cast<double>(positives) / static_cast<double>(labels.size());
}

std::vector<std::pair<double, double>> parity_pairs(const Matrix& pred_labels,
                                                    const Matrix& truth_labels) {
    if (!pred_labels.same_shape(truth_labels)) throw ShapeError("parity_pairs: shape mismatch");
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(pred_labels.cols());
    const double k = static_cast<double>(pred_labels.rows());
    for (std::size_t c = 0; c < pred_labels.cols(); ++c) {
        double t = 0.0, p = 0.0;
        for (std::size_t r = 0; r < pred_labels.rows(); ++r) {
            if (truth_labels(r, c) != 0.0) t += 1.0;
            if (pred_labels(r, c) != 0.0) p += 1.0;
        }
        pairs.emplace_back(t / k, p / k);
    }
    return pairs;
}

double pct_cost(double c_train, double c_val) {
    if (!(c_train > 0.0)) throw DomainError("pct_cost: training cost must be positive");
    return std::abs(c_val - c_train) / c_train;
}

std::vector<KFold> kfold_split(int s, int kappa, Rng& rng) {
    if (kappa < 2) throw DomainError("kfold_split: kappa must be >= 2");
    if (s < kappa) throw SplitError("kfold_split: fewer examples than folds");

    std::vector<int> indices(static_cast<std::size_t>(s));
    std::iota(indices.begin(), indices.end(), 0);
    rng.shuffle(indices);

    std::vector<KFold> folds(static_cast<std::size_t>(kappa));
    const int base = s / kappa;
    const int extra = s % kappa;
    int cursor = 0;
    std::vector<std::pair<int, int>> ranges;
    for (int f = 0; f < kappa; ++f) {
        const int len = base + (f < extra ? 1 : 0);
        ranges.emplace_back(cursor, cursor + len);
        cursor += len;
    }
    for (int f = 0; f < kappa; ++f) {
        auto& fold = folds[static_cast<std::size_t>(f)];
        for (int i = 0; i < s; ++i) {
            if (i >= ranges[f].first && i < ranges[f].second)
                fold.val_indices.push_back(indices[static_cast<std::size_t>(i)]);
            else
                fold.train_indices.push_back(indices[static_cast<std::size_t>(i)]);
        }
    }
    return folds;
}

CVResult aggregate_cv(const NetworkSpec& spec, double learning_rate,
                      const std::vector<FoldMetrics>& folds) {
    CVResult result;
    result.spec = spec;
    result.learning_rate = learning_rate;
    result.folds = static_cast<int>(folds.size());

    std::vector<double> recalls;
    for (const FoldMetrics& f : folds) {
        if (f.failed) {
            ++result.failed_folds;
            continue;
        }
        recalls.push_back(f.recall);
        result.mean_recall += f.recall;
        result.mean_precision += f.precision;
        result.mean_error_rate += f.error_rate;
        result.mean_pct_cost += f.pct_cost;
        result.mean_iterations += f.iterations;
        result.wall_time_seconds += f.seconds;
    }
    const double n = static_cast<double>(recalls.size());
    if (n > 0.0) {
        result.mean_recall /= n;
        result.mean_precision /= n;
        result.mean_error_rate /= n;
        result.mean_pct_cost /= n;
        result.mean_iterations /= n;
        result.wall_time_seconds /= n;
        double var = 0.0;
        for (double r : recalls) var += (r - result.mean_recall) * (r - result.mean_recall);
        result.recall_variance = var / n; // population variance
    }
    return result;
}

std::vector<CVResult> cross_validate(const Dataset& train_set,
                                     const std::vector<NetworkSpec>& specs,
                                     const std::vector<double>& learning_rates,
                                     const CrossValidateConfig& cfg) {
    if (specs.empty() || learning_rates.empty())
        throw DomainError("cross_validate: empty candidate grids");

    Rng fold_rng(cfg.fold_seed);
    const std::vector<KFold> folds =
        kfold_split(static_cast<int>(train_set.size()), cfg.kappa, fold_rng);

    const Matrix X_all = train_set.feature_matrix();
    const Matrix Y_all = train_set.label_matrix();
    const auto take_columns = [](const Matrix& M, const std::vector<int>& idx) {
        Matrix out(M.rows(), idx.size());
        for (std::size_t c = 0; c < idx.size(); ++c)
            for (std::size_t r = 0; r < M.rows(); ++r)
                out(r, c) = M(r, static_cast<std::size_t>(idx[c]));
        return out;
    };

    std::vector<CVResult> results;
    for (const NetworkSpec& spec : specs) {
        for (double lr : learning_rates) {
            std::vector<FoldMetrics> fold_metrics;
            for (const KFold& fold : folds) {
                FoldMetrics fm;
                const auto start = std::chrono::steady_clock::now();
                try {
                    const Matrix X_tr = take_columns(X_all, fold.train_indices);
                    const Matrix Y_tr = take_columns(Y_all, fold.train_indices);
                    const Matrix X_va = take_columns(X_all, fold.val_indices);
                    const Matrix Y_va = take_columns(Y_all, fold.val_indices);

                    const Normalizer norm = fit_normalizer(X_tr);
                    const Matrix Xn_tr = apply_normalizer(norm, X_tr);
                    const Matrix Xn_va = apply_normalizer(norm, X_va);

                    TrainConfig tc = cfg.train;
                    tc.learning_rate = lr;
                    const TrainResult tr = train(spec, Xn_tr, Y_tr, tc);

                    const Matrix proba = forward(tr.params, Xn_va).output();
                    const Matrix pred = predict_labels(proba, cfg.threshold);
                    const ConfusionCounts counts = confusion(pred, Y_va);
                    const auto [precision, recall] = precision_recall(counts);
                    fm.precision = precision;
                    fm.recall = recall;
                    fm.error_rate = error_rate(counts);
                    fm.pct_cost =
                        pct_cost(tr.cost_history.back(), cross_entropy(proba, Y_va));
                    fm.iterations = static_cast<double>(tr.iterations);
                } catch (const NumericalError&) {
                    fm.failed = true;
                }
                fm.seconds = std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
                fold_metrics.push_back(fm);
            }
            results.push_back(aggregate_cv(spec, lr, fold_metrics));
        }
    }
    return results;
}

const CVResult& select_best(const std::vector<CVResult>& results) {
    if (results.empty()) throw DomainError("select_best: no results");
    const CVResult* best = &results.front();
    for (const CVResult& r : results) {
        if (r.mean_recall > best->mean_recall) {
            best = &r;
        } else if (r.mean_recall == best->mean_recall) {
            if (r.mean_error_rate < best->mean_error_rate ||
                (r.mean_error_rate == best->mean_error_rate &&
                 r.wall_time_seconds < best->wall_time_seconds))
                best = &r;
        }
    }
    return *best;
}

} // namespace regimenet
