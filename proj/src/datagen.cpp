#include "regimenet/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "regimenet/io.hpp"

namespace regimenet {

std::string case_name(CaseTag tag) {
    return tag == CaseTag::Landfill ? "landfill" : "spe10";
}

CaseTag case_from_name(const std::string& name) {
    if (name == "landfill") return CaseTag::Landfill;
    if (name == "spe10") return CaseTag::Spe10;
    throw ConfigError("unknown case '" + name + "' (expected landfill or spe10)");
}

std::vector<double> sample_clipped(const TruncatedNormalSpec& spec, int n, Rng& rng) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double v = rng.normal(spec.mu, spec.sigma);
        v = std::min(std::max(v, spec.lo), spec.hi);
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    }
    return out;
}

namespace {

constexpr int kMaxResampleAttempts = 100;

// Redraws until clipping + dedup leaves exactly `want` distinct values.
std::vector<double> sample_exact_count(const TruncatedNormalSpec& spec, int draws, int want,
                                       Rng& rng) {
    for (int attempt = 0; attempt < kMaxResampleAttempts; ++attempt) {
        std::vector<double> v = sample_clipped(spec, draws, rng);
        if (static_cast<int>(v.size()) == want) return v;
    }
    throw SamplingError("sample_exact_count: could not reach " + std::to_string(want) +
                        " distinct values in " + std::to_string(kMaxResampleAttempts) +
                        " attempts");
}

std::vector<double> sample_uniform_distinct(double lo, double hi, int n, Rng& rng) {
    for (int attempt = 0; attempt < kMaxResampleAttempts; ++attempt) {
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double v = rng.uniform(lo, hi);
            if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
        }
        if (static_cast<int>(out.size()) == n) return out;
    }
    throw SamplingError("sample_uniform_distinct: repeated uniform draws");
}

std::vector<std::vector<double>> landfill_product(const std::vector<double>& u0s,
                                                  const std::vector<double>& cFs,
                                                  const std::vector<double>& ms,
                                                  const std::vector<double>& deltas,
                                                  Rng& rng) {
    const std::size_t combos = u0s.size() * cFs.size() * ms.size() * deltas.size();
    // One porosity vector of 7 per parameter combination, shared between the
    // 2- and 7-channel variants of that combination.
    std::vector<std::array<double, 7>> porosities(combos);
    for (auto& vec : porosities)
        for (double& phi : vec) phi = rng.uniform(0.9, 0.99);

    std::vector<std::vector<double>> inputs;
    inputs.reserve(combos * 2);
    for (int n_channels : {2, 7}) {
        std::size_t combo = 0;
        for (double u0 : u0s)
            for (double cF : cFs)
                for (double m : ms)
                    for (double delta : deltas) {
                        std::vector<double> f(12, 0.0);
                        f[0] = u0;
                        f[1] = cF;
                        f[2] = m;
                        f[3] = delta;
                        f[4] = n_channels;
                        for (int c = 0; c < n_channels; ++c) f[5 + c] = porosities[combo][c];
                        inputs.push_back(std::move(f));
                        ++combo;
                    }
    }
    return inputs;
}

} // namespace

std::vector<std::vector<double>> build_case1_inputs(Rng& rng) {
    const std::vector<double> u0s = sample_exact_count(kInfluxSpec, 7, 7, rng);
    const std::vector<double> cFs = sample_exact_count(kForchheimerCoefficientSpec, 7, 6, rng);
    const std::vector<double> ms = sample_exact_count(kForchheimerExponentSpec, 7, 4, rng);
    const std::vector<double> deltas = sample_uniform_distinct(kDeltaLo, kDeltaHi, 7, rng);
    return landfill_product(u0s, cFs, ms, deltas, rng);
}

std::vector<std::vector<double>> build_case1_inputs_reduced(Rng& rng, int n_cF, int n_delta,
                                                            int n_u0, int n_m) {
    const std::vector<double> u0s = sample_exact_count(kInfluxSpec, n_u0, n_u0, rng);
    const std::vector<double> cFs =
        sample_exact_count(kForchheimerCoefficientSpec, n_cF, n_cF, rng);
    const std::vector<double> ms =
        sample_exact_count(kForchheimerExponentSpec, 2 * n_m, n_m, rng);
    const std::vector<double> deltas = sample_uniform_distinct(kDeltaLo, kDeltaHi, n_delta, rng);
    return landfill_product(u0s, cFs, ms, deltas, rng);
}

std::vector<std::vector<double>> build_case2_inputs(Rng& rng) {
    const std::vector<double> qs = sample_exact_count(kWellRateSpec, 9, 9, rng);
    const std::vector<double> cFs = sample_exact_count(kForchheimerCoefficientSpec, 9, 8, rng);
    const std::vector<double> ms = sample_exact_count(kForchheimerExponentSpec, 9, 6, rng);
    const std::vector<double> deltas = sample_uniform_distinct(kDeltaLo, kDeltaHi, 9, rng);

    std::vector<std::vector<double>> inputs;
    inputs.reserve(qs.size() * cFs.size() * ms.size() * deltas.size());
    for (double Q : qs)
        for (double cF : cFs)
            for (double m : ms)
                for (double delta : deltas) inputs.push_back({Q, cF, m, delta});
    return inputs;
}

Matrix Dataset::feature_matrix() const {
    Matrix X(static_cast<std::size_t>(n0), size());
    for (std::size_t j = 0; j < size(); ++j)
        for (int i = 0; i < n0; ++i) X(static_cast<std::size_t>(i), j) = features[j][i];
    return X;
}

Matrix Dataset::label_matrix() const {
    Matrix Y(static_cast<std::size_t>(k), size());
    for (std::size_t j = 0; j < size(); ++j)
        for (int i = 0; i < k; ++i) Y(static_cast<std::size_t>(i), j) = labels[j][i];
    return Y;
}

Dataset Dataset::subset(const std::vector<int>& indices) const {
    Dataset out = *this;
    out.features.clear();
    out.labels.clear();
    out.features.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (int idx : indices) {
        out.features.push_back(features[static_cast<std::size_t>(idx)]);
        out.labels.push_back(labels[static_cast<std::size_t>(idx)]);
    }
    return out;
}

Scenario scenario_from_features(const std::vector<double>& features,
                                const GenerateConfig& cfg) {
    if (cfg.case_tag == CaseTag::Landfill) {
        if (features.size() != 12)
            throw ShapeError("landfill feature vector must have 12 entries");
        LandfillConfig lc;
        lc.u0 = features[0];
        lc.cF = features[1];
        lc.m = features[2];
        lc.delta = features[3];
        lc.n_channels = static_cast<int>(std::lround(features[4]));
        lc.channel_porosities.assign(features.begin() + 5,
                                     features.begin() + 5 + lc.n_channels);
        lc.background_phi = cfg.background_phi;
        lc.nx = cfg.nx;
        lc.ny = cfg.ny;
        lc.domain_width = cfg.domain_width;
        lc.domain_height = cfg.domain_height;
        lc.fluid = cfg.fluid;
        return build_landfill(lc);
    }
    if (features.size() != 4) throw ShapeError("spe10 feature vector must have 4 entries");
    Spe10Config sc;
    sc.Q = features[0];
    sc.cF = features[1];
    sc.m = features[2];
    sc.delta = features[3];
    sc.nx = cfg.nx;
    sc.ny = cfg.ny;
    sc.permeability_path = cfg.permeability_path;
    sc.synthetic = cfg.permeability_path.empty();
    sc.synthetic_seed = cfg.synthetic_seed;
    sc.synthetic_log_mean = cfg.synthetic_log_mean;
    sc.synthetic_log_std = cfg.synthetic_log_std;
    sc.fluid = cfg.fluid;
    return build_spe10(sc);
}

Dataset generate_dataset(const std::vector<std::vector<double>>& inputs,
                         const GenerateConfig& cfg) {
    if (inputs.empty()) throw GenerationError("generate_dataset: no inputs");

    const std::size_t s = inputs.size();
    std::vector<std::vector<std::uint8_t>> labels(s);
    std::vector<std::uint8_t> ok(s, 0);
    std::vector<std::string> failures(s);

    // SPE10 reuses one permeability field; building it here keeps the worker
    // loop free of disk access.
    GenerateConfig shared = cfg;
    CellField spe10_k;
    if (cfg.case_tag == CaseTag::Spe10 && !cfg.permeability_path.empty()) {
        const StructuredGrid2D probe(cfg.nx, cfg.ny, 1.0, 1.0);
        spe10_k = load_spe10_permeability(cfg.permeability_path,
                                          static_cast<std::size_t>(probe.cell_count()));
    }

    const int workers = std::max(1, cfg.workers);
    long progress = 0;
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (long idx = 0; idx < static_cast<long>(s); ++idx) {
        const std::size_t j = static_cast<std::size_t>(idx);
        try {
            Scenario sc = scenario_from_features(inputs[j], shared);
            if (spe10_k.size() > 0) sc.medium.k = spe10_k;
            // Plain fixed point first; cells oscillating across the
            // transition band settle under progressively stronger damping
            // (the fixed point itself does not depend on the relaxation).
            const double base = cfg.picard.relaxation;
            for (double omega : {base, 0.5 * base, 0.25 * base}) {
                PicardOptions opts = cfg.picard;
                opts.relaxation = omega;
                try {
                    const FlowSolution sol = picard_solve(sc.grid, sc.medium, sc.fluid,
                                                          sc.bcs, sc.q, sc.f, cfg.reg, opts);
                    if (sol.converged) {
                        labels[j] = sol.labels;
                        ok[j] = 1;
                        break;
                    }
                    failures[j] = "no convergence in " + std::to_string(sol.iterations) +
                                  " iterations";
                } catch (const NumericalError& e) {
                    failures[j] = e.what();
                }
            }
        } catch (const std::exception& e) {
            failures[j] = e.what();
        }
#pragma omp critical
        {
            ++progress;
            if (progress % 100 == 0)
                std::fprintf(stderr, "[generate] %ld/%zu examples solved\n", progress, s);
        }
    }

    Dataset ds;
    ds.case_tag = cfg.case_tag;
    ds.seed = cfg.seed;
    ds.nx = cfg.nx;
    ds.ny = cfg.ny;
    ds.n0 = static_cast<int>(inputs.front().size());
    ds.k = cfg.nx * cfg.ny;
    for (std::size_t j = 0; j < s; ++j) {
        if (!ok[j]) {
            std::ostringstream echo;
            for (double v : inputs[j]) echo << " " << format_double(v);
            std::fprintf(stderr, "[generate] dropped example %zu (%s); inputs:%s\n", j,
                         failures[j].c_str(), echo.str().c_str());
            ++ds.dropped;
            continue;
        }
        ds.features.push_back(inputs[j]);
        ds.labels.push_back(std::move(labels[j]));
    }
    if (ds.features.empty())
        throw GenerationError("generate_dataset: every solver run failed");
    return ds;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset, double test_fraction,
                                             Rng& rng) {
    if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
        throw DomainError("split_train_test: fraction must lie in (0,1)");
    const std::size_t s = dataset.size();
    if (s < 2) throw SplitError("split_train_test: need at least 2 examples");

    std::vector<int> indices(s);
    std::iota(indices.begin(), indices.end(), 0);
    rng.shuffle(indices);

    // floor() keeps 5% of 2352 at 117 examples and 5% of 3888 at 194; the
    // small bias guards against an exact multiple landing just below the
    // integer.
    std::size_t test_size = static_cast<std::size_t>(
        std::floor(static_cast<double>(s) * test_fraction + 1e-9));
    test_size = std::max<std::size_t>(1, std::min(test_size, s - 1));

    const std::vector<int> test_idx(indices.begin(), indices.begin() + test_size);
    const std::vector<int> train_idx(indices.begin() + test_size, indices.end());
    return {dataset.subset(train_idx), dataset.subset(test_idx)};
}

void save_dataset(const Dataset& dataset, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    std::ofstream feat(fs::path(dir) / "features.csv");
    if (!feat) throw FormatError("cannot write " + dir + "/features.csv");
    if (dataset.case_tag == CaseTag::Landfill)
        feat << "u0,cF,m,delta,n_channels,phi1,phi2,phi3,phi4,phi5,phi6,phi7\n";
    else
        feat << "Q,cF,m,delta\n";
    for (const auto& row : dataset.features) {
        for (std::size_t i = 0; i < row.size(); ++i)
            feat << format_double(row[i]) << (i + 1 == row.size() ? '\n' : ',');
    }

    std::ofstream lab(fs::path(dir) / "labels.csv");
    if (!lab) throw FormatError("cannot write " + dir + "/labels.csv");
    for (const auto& row : dataset.labels) {
        std::string line(row.size(), '0');
        for (std::size_t i = 0; i < row.size(); ++i)
            if (row[i]) line[i] = '1';
        lab << line << "\n";
    }

    nlohmann::json meta;
    meta["case"] = case_name(dataset.case_tag);
    meta["seed"] = dataset.seed;
    meta["nx"] = dataset.nx;
    meta["ny"] = dataset.ny;
    meta["n0"] = dataset.n0;
    meta["k"] = dataset.k;
    meta["examples"] = dataset.size();
    meta["dropped"] = dataset.dropped;
    write_text_file((fs::path(dir) / "meta.json").string(), meta.dump(2) + "\n");
}

Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path meta_path = fs::path(dir) / "meta.json";
    if (!fs::exists(meta_path)) throw FormatError(dir + ": meta.json missing");

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(meta_path.string()));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(dir + "/meta.json: " + e.what());
    }

    Dataset ds;
    try {
        ds.case_tag = case_from_name(meta.at("case").get<std::string>());
        ds.seed = meta.at("seed").get<std::uint64_t>();
        ds.nx = meta.at("nx").get<int>();
        ds.ny = meta.at("ny").get<int>();
        ds.n0 = meta.at("n0").get<int>();
        ds.k = meta.at("k").get<int>();
        ds.dropped = meta.at("dropped").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(dir + "/meta.json: " + e.what());
    }

    std::ifstream feat(fs::path(dir) / "features.csv");
    if (!feat) throw FormatError(dir + ": features.csv missing");
    std::string line;
    std::getline(feat, line); // header
    while (std::getline(feat, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw FormatError(dir + "/features.csv: unparsable value '" + cell + "'");
            }
        }
        if (static_cast<int>(row.size()) != ds.n0)
            throw FormatError(dir + "/features.csv: row with " + std::to_string(row.size()) +
                              " fields, expected " + std::to_string(ds.n0));
        ds.features.push_back(std::move(row));
    }

    std::ifstream lab(fs::path(dir) / "labels.csv");
    if (!lab) throw FormatError(dir + ": labels.csv missing");
    while (std::getline(lab, line)) {
        if (line.empty()) continue;
        if (static_cast<int>(line.size()) != ds.k)
            throw FormatError(dir + "/labels.csv: row of length " +
                              std::to_string(line.size()) + ", expected " +
                              std::to_string(ds.k));
        std::vector<std::uint8_t> row(line.size());
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] != '0' && line[i] != '1')
                throw FormatError(dir + "/labels.csv: labels must be '0' or '1'");
            row[i] = line[i] == '1';
        }
        ds.labels.push_back(std::move(row));
    }

    if (ds.features.size() != ds.labels.size() ||
        ds.features.size() != meta.at("examples").get<std::size_t>())
        throw FormatError(dir + ": feature/label/example counts disagree");
    return ds;
}

} // namespace regimenet
