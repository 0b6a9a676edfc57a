#include "regimenet/neural.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "regimenet/errors.hpp"
#include "regimenet/io.hpp"

namespace regimenet {

void NetworkSpec::validate() const {
    if (layer_sizes.size() < 2)
        throw DomainError("network spec needs at least input and output layers");
    for (int n : layer_sizes)
        if (n < 1) throw DomainError("network spec: layer sizes must be >= 1");
}

std::string NetworkSpec::to_string() const {
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < layer_sizes.size(); ++i)
        out << layer_sizes[i] << (i + 1 == layer_sizes.size() ? "" : ", ");
    out << "]";
    return out.str();
}

NetworkParameters init_parameters(const NetworkSpec& spec, Rng& rng) {
    spec.validate();
    NetworkParameters p;
    const std::size_t edges = spec.edge_count();
    p.W.reserve(edges);
    p.b.reserve(edges);
    for (std::size_t l = 0; l < edges; ++l) {
        const int fan_in = spec.layer_sizes[l];
        const int fan_out = spec.layer_sizes[l + 1];
        const bool output_layer = l + 1 == edges;
        const double stddev =
            output_layer ? std::sqrt(1.0 / fan_in) : std::sqrt(2.0 / fan_in);
        Matrix W(static_cast<std::size_t>(fan_out), static_cast<std::size_t>(fan_in));
        for (double& w : W.raw()) w = rng.normal(0.0, stddev);
        p.W.push_back(std::move(W));
        p.b.emplace_back(static_cast<std::size_t>(fan_out), 0.0);
    }
    return p;
}

Matrix relu(const Matrix& Z) {
    Matrix A = Z;
    for (double& v : A.raw()) v = std::max(0.0, v);
    return A;
}

Matrix sigmoid(const Matrix& Z) {
    Matrix A = Z;
    for (double& v : A.raw()) {
        // branch form avoids overflow of exp for large |v|
        if (v >= 0.0) {
            v = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            v = e / (1.0 + e);
        }
    }
    return A;
}

namespace {

void add_bias_columns(Matrix& Z, const std::vector<double>& b) {
    const std::size_t cols = Z.cols();
    for (std::size_t r = 0; r < Z.rows(); ++r) {
        double* row = Z.data() + r * cols;
        const double br = b[r];
        for (std::size_t c = 0; c < cols; ++c) row[c] += br;
    }
}

} // namespace

ForwardCache forward(const NetworkParameters& params, const Matrix& X) {
    if (params.W.empty()) throw StateError("forward: uninitialized parameters");
    if (X.rows() != params.W.front().cols())
        throw ShapeError("forward: input has " + std::to_string(X.rows()) +
                         " features, network expects " +
                         std::to_string(params.W.front().cols()));
    ForwardCache cache;
    cache.A.push_back(X);
    for (std::size_t l = 0; l < params.W.size(); ++l) {
        Matrix Z = matmul(params.W[l], cache.A.back());
        add_bias_columns(Z, params.b[l]);
        const bool output_layer = l + 1 == params.W.size();
        cache.A.push_back(output_layer ? sigmoid(Z) : relu(Z));
        cache.Z.push_back(std::move(Z));
    }
    return cache;
}

double cross_entropy(const Matrix& A_L, const Matrix& Y) {
    if (!A_L.same_shape(Y)) throw ShapeError("cross_entropy: shape mismatch");
    constexpr double clip = 1e-12;
    double sum = 0.0;
    const double* a = A_L.data();
    const double* y = Y.data();
    const std::size_t n = A_L.rows() * A_L.cols();
    for (std::size_t i = 0; i < n; ++i) {
        const double p = std::min(std::max(a[i], clip), 1.0 - clip);
        sum += y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
    }
    return -sum / static_cast<double>(n);
}

Gradients backward(const NetworkParameters& params, const ForwardCache& cache,
                   const Matrix& Y) {
    const std::size_t edges = params.W.size();
    if (cache.A.size() != edges + 1 || cache.Z.size() != edges)
        throw ShapeError("backward: cache does not match the network");
    if (!cache.output().same_shape(Y)) throw ShapeError("backward: label shape mismatch");

    const std::size_t s = Y.cols();
    const double scale = 1.0 / (static_cast<double>(s) * static_cast<double>(Y.rows()));

    Gradients g;
    g.dW.resize(edges);
    g.db.resize(edges);

    // Output delta for the sigmoid + cross-entropy pair.
    Matrix delta = cache.output();
    {
        const double* y = Y.data();
        double* d = delta.data();
        const std::size_t n = delta.rows() * delta.cols();
        for (std::size_t i = 0; i < n; ++i) d[i] = (d[i] - y[i]) * scale;
    }

    for (std::size_t l = edges; l-- > 0;) {
        g.dW[l] = matmul_transposed_b(delta, cache.A[l]);
        std::vector<double>& db = g.db[l];
        db.assign(delta.rows(), 0.0);
        for (std::size_t r = 0; r < delta.rows(); ++r) {
            const double* row = delta.data() + r * delta.cols();
            double acc = 0.0;
            for (std::size_t c = 0; c < delta.cols(); ++c) acc += row[c];
            db[r] = acc;
        }
        if (l > 0) {
            Matrix next = matmul_transposed_a(params.W[l], delta);
            const double* z = cache.Z[l - 1].data();
            double* d = next.data();
            const std::size_t n = next.rows() * next.cols();
            for (std::size_t i = 0; i < n; ++i)
                if (z[i] <= 0.0) d[i] = 0.0; // ReLU mask
            delta = std::move(next);
        }
    }
    return g;
}

void gd_step(NetworkParameters& params, const Gradients& grads, double learning_rate) {
    if (grads.dW.size() != params.W.size())
        throw ShapeError("gd_step: gradient/parameter layer counts disagree");
    for (std::size_t l = 0; l < params.W.size(); ++l) {
        if (!params.W[l].same_shape(grads.dW[l]))
            throw ShapeError("gd_step: gradient shape mismatch");
        double* w = params.W[l].data();
        const double* dw = grads.dW[l].data();
        const std::size_t n = params.W[l].rows() * params.W[l].cols();
        for (std::size_t i = 0; i < n; ++i) w[i] -= learning_rate * dw[i];
        for (std::size_t i = 0; i < params.b[l].size(); ++i)
            params.b[l][i] -= learning_rate * grads.db[l][i];
    }
}

namespace {

// Column-lexicographic order over (features, labels). Sorting the examples
// into this canonical order makes full-batch training independent of the
// order the caller stored them in, including summation order.
std::vector<std::size_t> canonical_order(const Matrix& X, const Matrix& Y) {
    std::vector<std::size_t> idx(X.cols());
    std::iota(idx.begin(), idx.end(), 0);
    const auto less = [&](std::size_t a, std::size_t b) {
        for (std::size_t r = 0; r < X.rows(); ++r) {
            if (X(r, a) < X(r, b)) return true;
            if (X(r, a) > X(r, b)) return false;
        }
        for (std::size_t r = 0; r < Y.rows(); ++r) {
            if (Y(r, a) < Y(r, b)) return true;
            if (Y(r, a) > Y(r, b)) return false;
        }
        return false;
    };
    std::stable_sort(idx.begin(), idx.end(), less);
    return idx;
}

Matrix reorder_columns(const Matrix& M, const std::vector<std::size_t>& order) {
    Matrix out(M.rows(), M.cols());
    for (std::size_t c = 0; c < order.size(); ++c)
        for (std::size_t r = 0; r < M.rows(); ++r) out(r, c) = M(r, order[c]);
    return out;
}

} // namespace

TrainResult train(const NetworkSpec& spec, const Matrix& X_train, const Matrix& Y_train,
                  const TrainConfig& cfg, const Matrix* X_val, const Matrix* Y_val) {
    spec.validate();
    if (X_train.cols() != Y_train.cols())
        throw ShapeError("train: feature/label example counts disagree");
    if (static_cast<int>(X_train.rows()) != spec.input_size() ||
        static_cast<int>(Y_train.rows()) != spec.output_size())
        throw ShapeError("train: data shapes do not match the network spec");
    if (!(cfg.learning_rate > 0.0)) throw DomainError("train: learning rate must be positive");
    if ((X_val == nullptr) != (Y_val == nullptr))
        throw ShapeError("train: validation features and labels must come together");

    const std::vector<std::size_t> order = canonical_order(X_train, Y_train);
    const Matrix X = reorder_columns(X_train, order);
    const Matrix Y = reorder_columns(Y_train, order);

    Matrix Xv, Yv;
    const bool with_val = X_val != nullptr;
    if (with_val) {
        const std::vector<std::size_t> vorder = canonical_order(*X_val, *Y_val);
        Xv = reorder_columns(*X_val, vorder);
        Yv = reorder_columns(*Y_val, vorder);
    }

    Rng rng(cfg.seed);
    TrainResult result;
    result.params = init_parameters(spec, rng);
    result.stop_reason = "max_iterations";

    double best = std::numeric_limits<double>::infinity();
    double prev = std::numeric_limits<double>::infinity();
    int no_best = 0;
    int small_improvement = 0;

    for (int it = 0; it < cfg.max_iterations; ++it) {
        const ForwardCache cache = forward(result.params, X);
        const double cost = cross_entropy(cache.output(), Y);
        if (!std::isfinite(cost))
            throw DivergenceError("train: non-finite cost at iteration " +
                                  std::to_string(it + 1) + " with learning rate " +
                                  std::to_string(cfg.learning_rate));
        result.cost_history.push_back(cost);
        if (with_val) {
            const ForwardCache vcache = forward(result.params, Xv);
            result.val_cost_history.push_back(cross_entropy(vcache.output(), Yv));
        }
        result.iterations = it + 1;

        if (cost < best) {
            best = cost;
            no_best = 0;
        } else {
            ++no_best;
        }
        if (it > 0 && prev - cost < cfg.improvement_threshold)
            ++small_improvement;
        else if (it > 0)
            small_improvement = 0;
        prev = cost;

        if (no_best >= cfg.patience) {
            result.stop_reason = "patience";
            break;
        }
        if (small_improvement >= cfg.patience) {
            result.stop_reason = "threshold";
            break;
        }

        // The descent optimizes the per-example summed cross entropy: the
        // reported cost averages over all s*k entries, while the step scales
        // its gradient by the output size k, so learning rates stay
        // comparable across mesh sizes; without the scaling the updates
        // shrink with the cell count and training stalls.
        Gradients grads = backward(result.params, cache, Y);
        const double k_scale = static_cast<double>(spec.output_size());
        for (auto& dW : grads.dW)
            for (double& v : dW.raw()) v *= k_scale;
        for (auto& db : grads.db)
            for (double& v : db) v *= k_scale;
        gd_step(result.params, grads, cfg.learning_rate);
    }
    return result;
}

Normalizer fit_normalizer(const Matrix& X_train) {
    if (X_train.cols() < 2) throw ShapeError("fit_normalizer: need at least 2 examples");
    const std::size_t s = X_train.cols();
    Normalizer norm;
    norm.mean.resize(X_train.rows());
    norm.std.resize(X_train.rows());
    std::vector<double> row(s);
    for (std::size_t r = 0; r < X_train.rows(); ++r) {
        for (std::size_t c = 0; c < s; ++c) row[c] = X_train(r, c);
        // summing in sorted order keeps the statistics independent of the
        // example order
        std::sort(row.begin(), row.end());
        const double mean =
            std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(s);
        for (double& v : row) {
            const double d = v - mean;
            v = d * d;
        }
        std::sort(row.begin(), row.end());
        const double var =
            std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(s);
        norm.mean[r] = mean;
        norm.std[r] = std::max(std::sqrt(var), 1e-12);
    }
    return norm;
}

Matrix apply_normalizer(const Normalizer& norm, const Matrix& X) {
    if (X.rows() != norm.mean.size())
        throw ShapeError("apply_normalizer: feature count mismatch");
    Matrix out = X;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        const double mean = norm.mean[r];
        const double inv = 1.0 / norm.std[r];
        double* row = out.data() + r * out.cols();
        for (std::size_t c = 0; c < out.cols(); ++c) row[c] = (row[c] - mean) * inv;
    }
    return out;
}

Matrix predict_proba(const NetworkParameters& params, const Normalizer& norm,
                     const Matrix& X) {
    const Matrix Xn = apply_normalizer(norm, X);
    return forward(params, Xn).output();
}

Matrix predict_labels(const Matrix& proba, double threshold) {
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw DomainError("predict_labels: threshold must lie in (0,1)");
    Matrix labels(proba.rows(), proba.cols());
    const double* p = proba.data();
    double* l = labels.data();
    const std::size_t n = proba.rows() * proba.cols();
    for (std::size_t i = 0; i < n; ++i) l[i] = p[i] >= threshold ? 1.0 : 0.0;
    return labels;
}

namespace {

void write_matrix_csv(const std::string& path, const Matrix& M) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    for (std::size_t r = 0; r < M.rows(); ++r)
        for (std::size_t c = 0; c < M.cols(); ++c)
            out << format_double(M(r, c)) << (c + 1 == M.cols() ? '\n' : ',');
}

Matrix read_matrix_csv(const std::string& path, std::size_t rows, std::size_t cols) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    Matrix M(rows, cols);
    std::string line;
    std::size_t r = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (r >= rows) throw FormatError(path + ": too many rows");
        std::istringstream ls(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ls, cell, ',')) {
            if (c >= cols) throw FormatError(path + ": too many columns");
            M(r, c++) = std::stod(cell);
        }
        if (c != cols) throw FormatError(path + ": short row");
        ++r;
    }
    if (r != rows) throw FormatError(path + ": expected " + std::to_string(rows) + " rows");
    return M;
}

} // namespace

void save_model(const std::string& dir, const NetworkSpec& spec,
                const NetworkParameters& params, const Normalizer& norm,
                std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["layer_sizes"] = spec.layer_sizes;
    manifest["seed"] = seed;
    manifest["normalizer"]["mean"] = norm.mean;
    manifest["normalizer"]["std"] = norm.std;
    write_text_file((fs::path(dir) / "model.json").string(), manifest.dump(2) + "\n");

    for (std::size_t l = 0; l < params.W.size(); ++l) {
        write_matrix_csv((fs::path(dir) / ("W" + std::to_string(l) + ".csv")).string(),
                         params.W[l]);
        Matrix b(params.b[l].size(), 1);
        for (std::size_t i = 0; i < params.b[l].size(); ++i) b(i, 0) = params.b[l][i];
        write_matrix_csv((fs::path(dir) / ("b" + std::to_string(l) + ".csv")).string(), b);
    }
}

LoadedModel load_model(const std::string& dir) {
    namespace fs = std::filesystem;
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text_file((fs::path(dir) / "model.json").string()));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(dir + "/model.json: " + e.what());
    }
    LoadedModel model;
    try {
        model.spec.layer_sizes = manifest.at("layer_sizes").get<std::vector<int>>();
        model.seed = manifest.at("seed").get<std::uint64_t>();
        model.norm.mean = manifest.at("normalizer").at("mean").get<std::vector<double>>();
        model.norm.std = manifest.at("normalizer").at("std").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(dir + "/model.json: " + e.what());
    }
    model.spec.validate();
    if (model.norm.mean.size() != static_cast<std::size_t>(model.spec.input_size()) ||
        model.norm.std.size() != model.norm.mean.size())
        throw FormatError(dir + ": normalizer does not match the network input size");

    for (std::size_t l = 0; l + 1 < model.spec.layer_sizes.size(); ++l) {
        const std::size_t rows = static_cast<std::size_t>(model.spec.layer_sizes[l + 1]);
        const std::size_t cols = static_cast<std::size_t>(model.spec.layer_sizes[l]);
        model.params.W.push_back(
            read_matrix_csv((fs::path(dir) / ("W" + std::to_string(l) + ".csv")).string(),
                            rows, cols));
        const Matrix b = read_matrix_csv(
            (fs::path(dir) / ("b" + std::to_string(l) + ".csv")).string(), rows, 1);
        std::vector<double> bv(rows);
        for (std::size_t i = 0; i < rows; ++i) bv[i] = b(i, 0);
        model.params.b.push_back(std::move(bv));
    }
    return model;
}

} // namespace regimenet
