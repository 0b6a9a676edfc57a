#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "regimenet/matrix.hpp"
#include "regimenet/rng.hpp"

namespace regimenet {

/// Layer widths [n0, n1, ..., nL]; ReLU on the hidden layers, sigmoid on the
/// output layer.
struct NetworkSpec {
    std::vector<int> layer_sizes;

    void validate() const;
    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    std::size_t edge_count() const { return layer_sizes.size() - 1; }
    std::string to_string() const; // e.g. "[12, 256, 512, 2500]"
};

struct NetworkParameters {
    std::vector<Matrix> W;               // W[l]: sizes[l+1] x sizes[l]
    std::vector<std::vector<double>> b;  // b[l]: sizes[l+1]
};

struct TrainConfig {
    double learning_rate = 0.01;
    int max_iterations = 2500;
    int patience = 15;
    double improvement_threshold = 1e-8;
    std::uint64_t seed = 0;
};

/// Per-feature statistics of the training set; the standard deviation is
/// floored at 1e-12 so constant features normalize to zero.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> std;
};

/// He initialization on ReLU layers, 1/sqrt(fan_in) on the sigmoid output
/// layer, zero biases.
NetworkParameters init_parameters(const NetworkSpec& spec, Rng& rng);

Matrix relu(const Matrix& Z);
Matrix sigmoid(const Matrix& Z);

struct ForwardCache {
    std::vector<Matrix> Z; // per edge
    std::vector<Matrix> A; // A[0] = X, A[l] = activation(Z[l-1])
    const Matrix& output() const { return A.back(); }
};

ForwardCache forward(const NetworkParameters& params, const Matrix& X);

/// Mean binary cross entropy over all k x s entries, probabilities clipped
/// to [1e-12, 1 - 1e-12].
double cross_entropy(const Matrix& A_L, const Matrix& Y);

struct Gradients {
    std::vector<Matrix> dW;
    std::vector<std::vector<double>> db;
};

/// Backpropagation for the sigmoid + cross-entropy head:
/// delta_L = (A_L - Y) / (s*k).
Gradients backward(const NetworkParameters& params, const ForwardCache& cache,
                   const Matrix& Y);

void gd_step(NetworkParameters& params, const Gradients& grads, double learning_rate);

struct TrainResult {
    NetworkParameters params;
    std::vector<double> cost_history;
    std::vector<double> val_cost_history; // empty without a validation set
    int iterations = 0;
    std::string stop_reason; // max_iterations | patience | threshold
};

/// Full-batch gradient descent with the two early-stopping rules: stop when
/// `patience` consecutive iterations fail to improve the best cost seen, or
/// when `patience` consecutive per-iteration improvements stay below
/// improvement_threshold. Expects already-normalized X. Example columns are
/// reordered into a canonical order internally, so training is invariant to
/// the order the examples arrive in.
TrainResult train(const NetworkSpec& spec, const Matrix& X_train, const Matrix& Y_train,
                  const TrainConfig& cfg, const Matrix* X_val = nullptr,
                  const Matrix* Y_val = nullptr);

Normalizer fit_normalizer(const Matrix& X_train);
Matrix apply_normalizer(const Normalizer& norm, const Matrix& X);

Matrix predict_proba(const NetworkParameters& params, const Normalizer& norm, const Matrix& X);
/// 1 where probability >= threshold.
Matrix predict_labels(const Matrix& proba, double threshold = 0.5);

/// model.json (spec, seed, normalizer) plus one CSV blob per layer;
/// round-trip exact.
void save_model(const std::string& dir, const NetworkSpec& spec,
                const NetworkParameters& params, const Normalizer& norm, std::uint64_t seed);

struct LoadedModel {
    NetworkSpec spec;
    NetworkParameters params;
    Normalizer norm;
    std::uint64_t seed = 0;
};

LoadedModel load_model(const std::string& dir);

} // namespace regimenet
