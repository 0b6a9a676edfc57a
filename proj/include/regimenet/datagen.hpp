#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "regimenet/matrix.hpp"
#include "regimenet/rng.hpp"
#include "regimenet/scenarios.hpp"

namespace regimenet {

struct TruncatedNormalSpec {
    double mu = 0.0;
    double sigma = 1.0;
    double lo = 0.0;
    double hi = 1.0;
};

enum class CaseTag { Landfill, Spe10 };

std::string case_name(CaseTag tag);
CaseTag case_from_name(const std::string& name);

/// Draws n normal samples, clips each into [lo, hi], then removes exact
/// repeats (clipping collapses out-of-range draws onto the bounds), keeping
/// first-occurrence order.
std::vector<double> sample_clipped(const TruncatedNormalSpec& spec, int n, Rng& rng);

// Sampling distributions shared by the two cases.
inline constexpr TruncatedNormalSpec kInfluxSpec{0.0105, 0.0035, 0.001, 0.1};
inline constexpr TruncatedNormalSpec kForchheimerCoefficientSpec{0.55, 0.4, 0.1, 0.9};
inline constexpr TruncatedNormalSpec kForchheimerExponentSpec{1.0, 1.5, 1.0, 4.0};
inline constexpr TruncatedNormalSpec kWellRateSpec{100.0, 30.0, 10.0, 300.0};
inline constexpr double kDeltaLo = 0.01;
inline constexpr double kDeltaHi = 0.25;

/// Landfill feature vectors [u0, cF, m, delta, n_channels, phi1..phi7]
/// (n0 = 12): the Cartesian product of 7 u0, 6 cF, 4 m and 7 delta values
/// crossed with the 2- and 7-channel configurations (2352 vectors). Channel
/// porosity vectors are drawn once per parameter combination and shared
/// between the two configurations; unused slots are zero.
std::vector<std::vector<double>> build_case1_inputs(Rng& rng);

/// SPE10 feature vectors [Q, cF, m, delta] (n0 = 4): product of 9 Q, 8 cF,
/// 6 m and 9 delta values (3888 vectors).
std::vector<std::vector<double>> build_case2_inputs(Rng& rng);

/// Reduced landfill sweep for quick experiments: counts (cF, delta, u0, m)
/// crossed with both channel configurations.
std::vector<std::vector<double>> build_case1_inputs_reduced(Rng& rng, int n_cF, int n_delta,
                                                            int n_u0, int n_m);

struct Dataset {
    CaseTag case_tag = CaseTag::Landfill;
    std::uint64_t seed = 0;
    int n0 = 0;
    int k = 0;
    int nx = 0;
    int ny = 0;
    int dropped = 0; // non-converged runs excluded during generation
    std::vector<std::vector<double>> features;      // s vectors of length n0
    std::vector<std::vector<std::uint8_t>> labels;  // s vectors of length k, 1 = GF

    std::size_t size() const { return features.size(); }
    Matrix feature_matrix() const; // n0 x s
    Matrix label_matrix() const;   // k x s
    Dataset subset(const std::vector<int>& indices) const;
};

struct GenerateConfig {
    CaseTag case_tag = CaseTag::Landfill;
    int nx = 50;
    int ny = 50;
    std::uint64_t seed = 0; // recorded in the dataset
    int workers = 1;
    RegularizationConfig reg;
    PicardOptions picard;
    // Landfill settings.
    double background_phi = 0.35;
    double domain_width = 1.0;
    double domain_height = 1.0;
    // SPE10 settings.
    std::string permeability_path;
    std::uint64_t synthetic_seed = 1;
    double synthetic_log_mean = -18.0;
    double synthetic_log_std = 1.5;
    FluidProperties fluid = FluidProperties::water();
};

/// Solves the flow model for every feature vector and stores the cell
/// labeling (1 = GF). Runs are distributed over cfg.workers tasks; output
/// order equals input order. Non-converged runs are dropped with a warning
/// on stderr; if nothing converges a GenerationError is thrown.
Dataset generate_dataset(const std::vector<std::vector<double>>& inputs,
                         const GenerateConfig& cfg);

/// Scenario for one feature vector, as used by generate_dataset.
Scenario scenario_from_features(const std::vector<double>& features,
                                const GenerateConfig& cfg);

/// Shuffles example indices and moves floor(s * test_fraction) of them
/// (at least one) into the test set; the split is disjoint and exhaustive.
std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset, double test_fraction,
                                             Rng& rng);

/// Directory layout: features.csv, labels.csv (one '0'/'1' string per
/// example), meta.json. save followed by load is the identity.
void save_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& dir);

} // namespace regimenet
