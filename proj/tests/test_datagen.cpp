#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "regimenet/datagen.hpp"
#include "regimenet/solver.hpp"

using namespace regimenet;

namespace {

std::set<double> distinct_feature(const std::vector<std::vector<double>>& inputs,
                                  std::size_t index) {
    std::set<double> values;
    for (const auto& f : inputs) values.insert(f[index]);
    return values;
}

GenerateConfig tiny_landfill_config() {
    GenerateConfig cfg;
    cfg.case_tag = CaseTag::Landfill;
    cfg.nx = 5;
    cfg.ny = 5;
    cfg.workers = 2;
    return cfg;
}

} // namespace

TEST_CASE("sample_clipped") {
    Rng rng(1);

    SUBCASE("out-of-range draws collapse onto the bounds") {
        // mean far below the window: every draw clips to lo
        const TruncatedNormalSpec spec{-100.0, 0.5, 0.001, 0.1};
        const auto values = sample_clipped(spec, 7, rng);
        REQUIRE(values.size() == 1);
        CHECK(values[0] == 0.001);
    }
    SUBCASE("interior draws stay distinct") {
        const TruncatedNormalSpec spec{0.0, 1e-6, -1.0, 1.0};
        const auto values = sample_clipped(spec, 7, rng);
        CHECK(values.size() == 7);
    }
    SUBCASE("the cF distribution can land on six distinct values") {
        // seeds are cheap; scan until clipping merges exactly one pair
        bool found = false;
        for (std::uint64_t seed = 0; seed < 200 && !found; ++seed) {
            Rng local(seed);
            found = sample_clipped(kForchheimerCoefficientSpec, 7, local).size() == 6;
        }
        CHECK(found);
    }
}

TEST_CASE("case 1 input sweep") {
    Rng rng(7);
    const auto inputs = build_case1_inputs(rng);

    CHECK(inputs.size() == 2352);
    for (const auto& f : inputs) {
        REQUIRE(f.size() == 12);
        CHECK(f[2] >= 1.0); // Forchheimer exponent restriction
    }
    CHECK(distinct_feature(inputs, 0).size() == 7); // u0
    CHECK(distinct_feature(inputs, 1).size() == 6); // cF
    CHECK(distinct_feature(inputs, 2).size() == 4); // m
    CHECK(distinct_feature(inputs, 3).size() == 7); // delta

    SUBCASE("two-channel rows zero-pad the unused porosity slots") {
        for (const auto& f : inputs) {
            if (f[4] != 2.0) continue;
            for (int slot = 7; slot < 12; ++slot) CHECK(f[slot] == 0.0);
            CHECK(f[5] > 0.0);
            CHECK(f[6] > 0.0);
        }
    }
    SUBCASE("porosity vectors are shared across the channel configurations") {
        const std::size_t combos = inputs.size() / 2;
        for (std::size_t i = 0; i < combos; i += 97) {
            const auto& two = inputs[i];
            const auto& seven = inputs[i + combos];
            CHECK(two[4] == 2.0);
            CHECK(seven[4] == 7.0);
            CHECK(two[5] == seven[5]);
            CHECK(two[6] == seven[6]);
        }
    }
    SUBCASE("sampled values stay inside their cut-off intervals") {
        for (const auto& f : inputs) {
            CHECK(f[0] >= 0.001);
            CHECK(f[0] <= 0.1); // u0
            CHECK(f[1] >= 0.1);
            CHECK(f[1] <= 0.9); // cF
            CHECK(f[2] <= 4.0); // m (>= 1 asserted above)
            CHECK(f[3] >= 0.01);
            CHECK(f[3] <= 0.25); // delta
        }
    }
    SUBCASE("porosities stay within the sampling window") {
        for (const auto& f : inputs)
            for (int slot = 5; slot < 5 + static_cast<int>(f[4]); ++slot) {
                CHECK(f[slot] >= 0.9);
                CHECK(f[slot] <= 0.99);
            }
    }
}

TEST_CASE("case 2 input sweep") {
    Rng rng(11);
    const auto inputs = build_case2_inputs(rng);

    CHECK(inputs.size() == 3888);
    for (const auto& f : inputs) {
        REQUIRE(f.size() == 4);
        CHECK(f[0] >= 10.0);
        CHECK(f[0] <= 300.0);
    }
    CHECK(distinct_feature(inputs, 0).size() == 9); // Q
    CHECK(distinct_feature(inputs, 1).size() == 8); // cF
    CHECK(distinct_feature(inputs, 2).size() == 6); // m
    CHECK(distinct_feature(inputs, 3).size() == 9); // delta
}

TEST_CASE("train/test split") {
    Dataset ds;
    ds.n0 = 2;
    ds.k = 3;

    SUBCASE("floors the held-out size (117 of 2352, 194 of 3888)") {
        for (const auto& [s, expected] :
             std::vector<std::pair<int, std::size_t>>{{2352, 117}, {3888, 194}}) {
            ds.features.assign(static_cast<std::size_t>(s), {1.0, 2.0});
            ds.labels.assign(static_cast<std::size_t>(s), {1, 0, 1});
            Rng rng(3);
            const auto [train, test] = split_train_test(ds, 0.05, rng);
            CHECK(test.size() == expected);
            CHECK(train.size() + test.size() == static_cast<std::size_t>(s));
        }
    }
    SUBCASE("split is a disjoint exhaustive partition") {
        const int s = 40;
        ds.features.clear();
        ds.labels.clear();
        for (int j = 0; j < s; ++j) {
            ds.features.push_back({static_cast<double>(j), 0.0});
            ds.labels.push_back({1, 0, 0});
        }
        Rng rng(5);
        const auto [train, test] = split_train_test(ds, 0.2, rng);
        std::multiset<double> ids;
        for (const auto& f : train.features) ids.insert(f[0]);
        for (const auto& f : test.features) ids.insert(f[0]);
        CHECK(ids.size() == static_cast<std::size_t>(s));
        CHECK(std::set<double>(ids.begin(), ids.end()).size() ==
              static_cast<std::size_t>(s));
    }
    SUBCASE("too-small datasets are rejected") {
        ds.features.assign(1, {1.0, 2.0});
        ds.labels.assign(1, {1, 0, 1});
        Rng rng(1);
        CHECK_THROWS_AS(split_train_test(ds, 0.5, rng), SplitError);
    }
}

TEST_CASE("generate_dataset on a tiny landfill mesh") {
    const GenerateConfig cfg = tiny_landfill_config();
    // u0, cF, m, delta, channels, porosities
    const std::vector<std::vector<double>> inputs{
        {0.0105, 0.5, 1.0, 0.10, 2, 0.95, 0.96, 0, 0, 0, 0, 0},
        {0.0200, 0.7, 2.0, 0.05, 2, 0.92, 0.97, 0, 0, 0, 0, 0},
        {0.0105, 0.5, 1.0, 0.20, 7, 0.91, 0.93, 0.95, 0.96, 0.97, 0.98, 0.94},
    };

    const Dataset ds = generate_dataset(inputs, cfg);
    CHECK(ds.size() == 3);
    CHECK(ds.k == 25);
    CHECK(ds.n0 == 12);
    for (const auto& row : ds.labels) CHECK(row.size() == 25);

    SUBCASE("fixed inputs give bit-identical datasets for any worker count") {
        GenerateConfig serial = cfg;
        serial.workers = 1;
        const Dataset again = generate_dataset(inputs, serial);
        REQUIRE(again.size() == ds.size());
        for (std::size_t j = 0; j < ds.size(); ++j) {
            CHECK(again.features[j] == ds.features[j]);
            CHECK(again.labels[j] == ds.labels[j]);
        }
    }
    SUBCASE("output order equals input order") {
        for (std::size_t j = 0; j < ds.size(); ++j) CHECK(ds.features[j] == inputs[j]);
    }
    SUBCASE("relabeling a fresh solve reproduces the stored row") {
        const Scenario sc = scenario_from_features(inputs[1], cfg);
        const FlowSolution sol =
            picard_solve(sc.grid, sc.medium, sc.fluid, sc.bcs, sc.q, sc.f, cfg.reg,
                         cfg.picard);
        REQUIRE(sol.converged);
        CHECK(classify_cells(sol.magnitude, sol.u_bar) == ds.labels[1]);
    }
}

TEST_CASE("near-unit tolerance keeps every cell slow") {
    const GenerateConfig cfg = tiny_landfill_config();
    const std::vector<std::vector<double>> inputs{
        {0.0105, 0.5, 1.0, 0.999, 2, 0.95, 0.96, 0, 0, 0, 0, 0}};
    const Dataset ds = generate_dataset(inputs, cfg);
    REQUIRE(ds.size() == 1);
    for (auto l : ds.labels[0]) CHECK(l == 0);
}

TEST_CASE("dataset save/load round-trip") {
    const GenerateConfig cfg = tiny_landfill_config();
    const std::vector<std::vector<double>> inputs{
        {0.0105, 0.5, 1.0, 0.10, 2, 0.95, 0.96, 0, 0, 0, 0, 0},
        {0.0300, 0.3, 1.5, 0.02, 2, 0.93, 0.98, 0, 0, 0, 0, 0},
    };
    Dataset ds = generate_dataset(inputs, cfg);
    ds.seed = 42;

    const std::string dir = "test_dataset_dir";
    save_dataset(ds, dir);
    const Dataset back = load_dataset(dir);

    CHECK(back.case_tag == ds.case_tag);
    CHECK(back.seed == 42);
    CHECK(back.nx == ds.nx);
    CHECK(back.k == ds.k);
    REQUIRE(back.size() == ds.size());
    for (std::size_t j = 0; j < ds.size(); ++j) {
        CHECK(back.features[j] == ds.features[j]);
        CHECK(back.labels[j] == ds.labels[j]);
    }

    SUBCASE("short label rows are rejected") {
        std::ofstream lab(std::filesystem::path(dir) / "labels.csv");
        lab << "0101\n";
        lab.close();
        CHECK_THROWS_AS(load_dataset(dir), FormatError);
    }
    SUBCASE("missing metadata is rejected") {
        std::filesystem::remove(std::filesystem::path(dir) / "meta.json");
        CHECK_THROWS_AS(load_dataset(dir), FormatError);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("feature and label matrices match the stored vectors") {
    Dataset ds;
    ds.n0 = 2;
    ds.k = 3;
    ds.features = {{1.0, 2.0}, {3.0, 4.0}};
    ds.labels = {{1, 0, 1}, {0, 0, 1}};
    const Matrix X = ds.feature_matrix();
    const Matrix Y = ds.label_matrix();
    CHECK(X.rows() == 2);
    CHECK(X.cols() == 2);
    CHECK(X(0, 1) == 3.0);
    CHECK(X(1, 0) == 2.0);
    CHECK(Y.rows() == 3);
    CHECK(Y(0, 0) == 1.0);
    CHECK(Y(2, 1) == 1.0);
}
