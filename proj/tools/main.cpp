// regimenet: batch front end for the flow-regime labeling pipeline.
//
// Subcommands: solve, generate, crossval, train, evaluate, predict.
// Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 data-format
// error.

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "regimenet/datagen.hpp"
#include "regimenet/evalcv.hpp"
#include "regimenet/io.hpp"
#include "regimenet/neural.hpp"
#include "regimenet/scenarios.hpp"
#include "regimenet/solver.hpp"

namespace fs = std::filesystem;
using namespace regimenet;

namespace {

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        values.push_back(std::stod(item));
    }
    return values;
}

std::vector<NetworkSpec> parse_network_list(const std::string& text) {
    std::vector<NetworkSpec> specs;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.empty()) continue;
        NetworkSpec spec;
        for (double v : parse_double_list(item))
            spec.layer_sizes.push_back(static_cast<int>(std::lround(v)));
        spec.validate();
        specs.push_back(std::move(spec));
    }
    return specs;
}

struct ScenarioOptions {
    std::string case_name = "landfill";
    int nx = 0; // 0: case default
    int ny = 0;
    double u0 = 0.0105;
    double Q = 100.0;
    double cF = 0.55;
    double m = 1.0;
    double delta = 0.1;
    int channels = 2;
    std::string porosities = "0.9528,0.9719";
    double background_phi = 0.35;
    std::string geometry_path;
    std::string perm_file;
    std::uint64_t perm_seed = 1;
    double perm_log_mean = -18.0;
    double perm_log_std = 1.5;
};

struct SolverOptions {
    double tol = 1e-6;
    int max_iterations = 500;
    double relaxation = 1.0;
    double epsilon = 0.1;
    bool epsilon_absolute = false;
    int table_points = 512;
    double truncation = 6.0;
    int quadrature_points = 4096;
    std::string variant = "limit-consistent";
};

void add_scenario_options(CLI::App* cmd, ScenarioOptions& opt, bool with_mesh = true) {
    cmd->add_option("--case", opt.case_name, "Test case: landfill or spe10")
        ->check(CLI::IsMember({"landfill", "spe10"}))
        ->capture_default_str();
    if (with_mesh) {
        cmd->add_option("--nx", opt.nx, "Cells in x (0: case default)")->capture_default_str();
        cmd->add_option("--ny", opt.ny, "Cells in y (0: case default)")->capture_default_str();
    }
    cmd->add_option("--u0", opt.u0, "Landfill top influx, kg/m^2/s")->capture_default_str();
    cmd->add_option("--Q", opt.Q, "SPE10 injection rate, kg/s")->capture_default_str();
    cmd->add_option("--cF", opt.cF, "Forchheimer coefficient")->capture_default_str();
    cmd->add_option("--m", opt.m, "Forchheimer exponent (>= 1)")->capture_default_str();
    cmd->add_option("--delta", opt.delta, "Error tolerance in [0,1)")->capture_default_str();
    cmd->add_option("--channels", opt.channels, "Landfill channel count (2 or 7)")
        ->capture_default_str();
    cmd->add_option("--porosities", opt.porosities,
                    "Comma-separated channel porosities, one per channel")
        ->capture_default_str();
    cmd->add_option("--background-phi", opt.background_phi, "Landfill soil porosity")
        ->capture_default_str();
    cmd->add_option("--geometry", opt.geometry_path,
                    "Channel geometry file (default: built-in layout)")
        ->capture_default_str();
    cmd->add_option("--perm-file", opt.perm_file, "SPE10 permeability file (m^2, row-major)")
        ->capture_default_str();
    cmd->add_option("--perm-seed", opt.perm_seed, "Synthetic permeability seed")
        ->capture_default_str();
    cmd->add_option("--perm-log-mean", opt.perm_log_mean, "Synthetic field ln-mean")
        ->capture_default_str();
    cmd->add_option("--perm-log-std", opt.perm_log_std, "Synthetic field ln-std")
        ->capture_default_str();
}

void add_solver_options(CLI::App* cmd, SolverOptions& opt) {
    cmd->add_option("--tol", opt.tol, "Fixed-point tolerance on magnitudes")
        ->capture_default_str();
    cmd->add_option("--max-iter", opt.max_iterations, "Fixed-point iteration cap")
        ->capture_default_str();
    cmd->add_option("--relax", opt.relaxation, "Coefficient relaxation in (0,1]")
        ->capture_default_str();
    cmd->add_option("--epsilon", opt.epsilon, "Mollifier standard deviation")
        ->capture_default_str();
    cmd->add_flag("--epsilon-absolute", opt.epsilon_absolute,
                  "Interpret --epsilon as an absolute flux instead of a multiple of the "
                  "threshold");
    cmd->add_option("--table-points", opt.table_points, "Mollified-law table nodes")
        ->capture_default_str();
    cmd->add_option("--truncation", opt.truncation, "Kernel half-width in epsilons")
        ->capture_default_str();
    cmd->add_option("--quad-points", opt.quadrature_points, "Quadrature nodes per evaluation")
        ->capture_default_str();
    cmd->add_option("--variant", opt.variant, "Dissipation variant")
        ->check(CLI::IsMember({"limit-consistent", "paper-literal"}))
        ->capture_default_str();
}

RegularizationConfig make_reg(const SolverOptions& opt) {
    RegularizationConfig reg;
    reg.epsilon = opt.epsilon;
    reg.epsilon_relative = !opt.epsilon_absolute;
    reg.table_points = opt.table_points;
    reg.truncation = opt.truncation;
    reg.quadrature_points = opt.quadrature_points;
    reg.variant = opt.variant == "paper-literal" ? DissipationVariant::PaperLiteral
                                                 : DissipationVariant::LimitConsistent;
    return reg;
}

PicardOptions make_picard(const SolverOptions& opt) {
    PicardOptions picard;
    picard.tol = opt.tol;
    picard.max_iterations = opt.max_iterations;
    picard.relaxation = opt.relaxation;
    return picard;
}

Scenario make_scenario(const ScenarioOptions& opt) {
    if (opt.case_name == "landfill") {
        LandfillConfig cfg;
        cfg.n_channels = opt.channels;
        cfg.channel_porosities = parse_double_list(opt.porosities);
        cfg.u0 = opt.u0;
        cfg.background_phi = opt.background_phi;
        cfg.cF = opt.cF;
        cfg.m = opt.m;
        cfg.delta = opt.delta;
        cfg.geometry_path = opt.geometry_path;
        if (opt.nx > 0) cfg.nx = opt.nx;
        if (opt.ny > 0) cfg.ny = opt.ny;
        return build_landfill(cfg);
    }
    Spe10Config cfg;
    cfg.Q = opt.Q;
    cfg.cF = opt.cF;
    cfg.m = opt.m;
    cfg.delta = opt.delta;
    cfg.permeability_path = opt.perm_file;
    cfg.synthetic = opt.perm_file.empty();
    cfg.synthetic_seed = opt.perm_seed;
    cfg.synthetic_log_mean = opt.perm_log_mean;
    cfg.synthetic_log_std = opt.perm_log_std;
    if (opt.nx > 0) cfg.nx = opt.nx;
    if (opt.ny > 0) cfg.ny = opt.ny;
    return build_spe10(cfg);
}

void write_json(const std::string& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

int cmd_solve(const ScenarioOptions& sopt, const SolverOptions& vopt,
              const std::string& out_dir) {
    const Scenario sc = make_scenario(sopt);
    const FlowSolution sol = picard_solve(sc.grid, sc.medium, sc.fluid, sc.bcs, sc.q, sc.f,
                                          make_reg(vopt), make_picard(vopt));
    fs::create_directories(out_dir);
    write_cell_field_csv((fs::path(out_dir) / "pressure.csv").string(), sol.pressure, sc.grid);
    write_cell_field_csv((fs::path(out_dir) / "magnitude.csv").string(), sol.magnitude,
                         sc.grid);
    write_labels_pgm((fs::path(out_dir) / "labels.pgm").string(), sol.labels, sc.grid);

    const int fast_cells =
        static_cast<int>(std::count(sol.labels.begin(), sol.labels.end(), 1));
    nlohmann::json report;
    report["case"] = sopt.case_name;
    report["iterations"] = sol.iterations;
    report["converged"] = sol.converged;
    report["u_bar"] = sol.u_bar;
    report["mass_residual_max"] = sol.mass_residual_max;
    report["fast_cells"] = fast_cells;
    report["cells"] = sc.grid.cell_count();
    write_json((fs::path(out_dir) / "solve_report.json").string(), report);

    if (!sol.converged) {
        std::fprintf(stderr, "solve: no convergence within %d iterations\n", sol.iterations);
        return 2;
    }
    std::printf("solve: converged in %d iterations, %d/%d fast cells, u_bar=%g\n",
                sol.iterations, fast_cells, sc.grid.cell_count(), sol.u_bar);
    return 0;
}

int cmd_generate(const ScenarioOptions& sopt, const SolverOptions& vopt,
                 const std::string& out_dir, std::uint64_t seed, int workers,
                 const std::string& sweep) {
    GenerateConfig cfg;
    cfg.case_tag = case_from_name(sopt.case_name);
    cfg.nx = sopt.nx > 0 ? sopt.nx : (cfg.case_tag == CaseTag::Landfill ? 50 : 60);
    cfg.ny = sopt.ny > 0 ? sopt.ny : (cfg.case_tag == CaseTag::Landfill ? 50 : 220);
    cfg.seed = seed;
    cfg.workers = workers;
    cfg.reg = make_reg(vopt);
    cfg.picard = make_picard(vopt);
    cfg.background_phi = sopt.background_phi;
    cfg.permeability_path = sopt.perm_file;
    cfg.synthetic_seed = sopt.perm_seed;
    cfg.synthetic_log_mean = sopt.perm_log_mean;
    cfg.synthetic_log_std = sopt.perm_log_std;

    Rng rng(seed);
    std::vector<std::vector<double>> inputs;
    if (cfg.case_tag == CaseTag::Landfill) {
        if (sweep.empty()) {
            inputs = build_case1_inputs(rng);
        } else {
            const auto counts = parse_double_list(sweep);
            if (counts.size() != 4)
                throw ConfigError("--sweep expects 'n_cF,n_delta,n_u0,n_m'");
            inputs = build_case1_inputs_reduced(
                rng, static_cast<int>(counts[0]), static_cast<int>(counts[1]),
                static_cast<int>(counts[2]), static_cast<int>(counts[3]));
        }
    } else {
        if (!sweep.empty()) throw ConfigError("--sweep applies to the landfill case only");
        inputs = build_case2_inputs(rng);
    }

    std::printf("generate: %zu inputs on a %dx%d mesh (%d workers)\n", inputs.size(), cfg.nx,
                cfg.ny, cfg.workers);
    Dataset ds = generate_dataset(inputs, cfg);
    save_dataset(ds, out_dir);
    std::printf("generate: wrote %zu examples to %s (%d dropped)\n", ds.size(),
                out_dir.c_str(), ds.dropped);
    return 0;
}

int cmd_crossval(const std::string& dataset_dir, const std::string& out_dir,
                 const std::string& networks, const std::string& lrs, int kappa,
                 TrainConfig train_cfg, double improvement_override, double threshold,
                 std::uint64_t fold_seed) {
    const Dataset ds = load_dataset(dataset_dir);

    std::vector<NetworkSpec> specs;
    if (!networks.empty()) {
        specs = parse_network_list(networks);
    } else if (ds.case_tag == CaseTag::Landfill) {
        specs.push_back(NetworkSpec{{ds.n0, 256, 512, ds.k}});
        specs.push_back(NetworkSpec{{ds.n0, 512, 256, ds.k}});
    } else {
        specs.push_back(NetworkSpec{{ds.n0, 256, 512, ds.k}});
        specs.push_back(NetworkSpec{{ds.n0, 512, 1024, 2048, ds.k}});
    }
    for (const NetworkSpec& spec : specs) {
        if (spec.input_size() != ds.n0 || spec.output_size() != ds.k)
            throw ConfigError("network " + spec.to_string() +
                              " does not match the dataset (n0=" + std::to_string(ds.n0) +
                              ", k=" + std::to_string(ds.k) + ")");
    }

    CrossValidateConfig cfg;
    cfg.kappa = kappa;
    cfg.train = train_cfg;
    if (improvement_override > 0.0) {
        cfg.train.improvement_threshold = improvement_override;
    } else {
        // tuning defaults: 1e-6 for the landfill case, 1e-5 for spe10
        cfg.train.improvement_threshold = ds.case_tag == CaseTag::Landfill ? 1e-6 : 1e-5;
    }
    cfg.threshold = threshold;
    cfg.fold_seed = fold_seed;

    const std::vector<double> rates =
        lrs.empty() ? std::vector<double>{0.1, 0.01, 0.0075, 0.001} : parse_double_list(lrs);
    const auto results = cross_validate(ds, specs, rates, cfg);

    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "cv_results.csv");
    csv << "net,lr,rec,prec,er_r,pct_cost,var,iter,time_s,failed_folds\n";
    for (const CVResult& r : results) {
        csv << '"' << r.spec.to_string() << '"' << ',' << format_double(r.learning_rate) << ','
            << format_double(r.mean_recall) << ',' << format_double(r.mean_precision) << ','
            << format_double(r.mean_error_rate) << ',' << format_double(r.mean_pct_cost) << ','
            << format_double(r.recall_variance) << ',' << format_double(r.mean_iterations)
            << ',' << format_double(r.wall_time_seconds) << ',' << r.failed_folds << "\n";
    }
    csv.close();

    const CVResult& best = select_best(results);
    nlohmann::json bj;
    bj["layer_sizes"] = best.spec.layer_sizes;
    bj["learning_rate"] = best.learning_rate;
    bj["metric"] = "recall";
    bj["mean_recall"] = best.mean_recall;
    bj["recall_std"] = std::sqrt(best.recall_variance);
    write_json((fs::path(out_dir) / "best.json").string(), bj);

    std::printf("crossval: best %s at lr=%g with mean recall %.4f\n",
                best.spec.to_string().c_str(), best.learning_rate, best.mean_recall);
    return 0;
}

int cmd_train(const std::string& dataset_dir, const std::string& model_dir,
              const std::string& layers, TrainConfig cfg, double test_fraction,
              std::uint64_t split_seed) {
    const Dataset ds = load_dataset(dataset_dir);
    Rng split_rng(split_seed);
    const auto [train_set, test_set] = split_train_test(ds, test_fraction, split_rng);
    std::printf("train: %zu training / %zu test examples\n", train_set.size(),
                test_set.size());

    NetworkSpec spec;
    if (!layers.empty()) {
        spec = parse_network_list(layers).at(0);
    } else {
        spec.layer_sizes = {ds.n0, 256, 512, ds.k};
    }
    if (spec.input_size() != ds.n0 || spec.output_size() != ds.k)
        throw ConfigError("network " + spec.to_string() + " does not match the dataset");

    const Matrix X_train = train_set.feature_matrix();
    const Matrix Y_train = train_set.label_matrix();
    const Matrix X_test = test_set.feature_matrix();
    const Matrix Y_test = test_set.label_matrix();

    const Normalizer norm = fit_normalizer(X_train);
    const Matrix Xn_train = apply_normalizer(norm, X_train);
    const Matrix Xn_test = apply_normalizer(norm, X_test);

    const TrainResult result = train(spec, Xn_train, Y_train, cfg, &Xn_test, &Y_test);
    save_model(model_dir, spec, result.params, norm, cfg.seed);

    std::ofstream hist(fs::path(model_dir) / "cost_history.csv");
    hist << "iteration,train_cost,test_cost\n";
    for (std::size_t i = 0; i < result.cost_history.size(); ++i)
        hist << i + 1 << ',' << format_double(result.cost_history[i]) << ','
             << format_double(result.val_cost_history[i]) << "\n";
    hist.close();

    // persist the held-out set so evaluation sees untouched examples
    save_dataset(test_set, (fs::path(model_dir) / "test_set").string());

    nlohmann::json tj;
    tj["iterations"] = result.iterations;
    tj["stop_reason"] = result.stop_reason;
    tj["final_train_cost"] = result.cost_history.back();
    tj["final_test_cost"] = result.val_cost_history.back();
    tj["learning_rate"] = cfg.learning_rate;
    tj["train_examples"] = train_set.size();
    tj["test_examples"] = test_set.size();
    write_json((fs::path(model_dir) / "train_report.json").string(), tj);

    std::printf("train: stopped after %d iterations (%s), final cost %.6g\n",
                result.iterations, result.stop_reason.c_str(), result.cost_history.back());
    return 0;
}

int cmd_evaluate(const std::string& dataset_dir, const std::string& model_dir,
                 const std::string& out_dir, double threshold, bool maps) {
    const LoadedModel model = load_model(model_dir);

    Dataset ds;
    if (!dataset_dir.empty()) {
        ds = load_dataset(dataset_dir);
    } else {
        const fs::path test_dir = fs::path(model_dir) / "test_set";
        if (!fs::exists(test_dir))
            throw ConfigError("no --dataset given and the model has no stored test set");
        ds = load_dataset(test_dir.string());
    }
    if (model.spec.input_size() != ds.n0 || model.spec.output_size() != ds.k)
        throw ConfigError("model does not match the dataset shape");

    const Matrix X = ds.feature_matrix();
    const Matrix Y = ds.label_matrix();
    const Matrix proba = predict_proba(model.params, model.norm, X);
    const MetricsReport report = evaluate_predictions(proba, Y, threshold);

    fs::create_directories(out_dir);
    nlohmann::json mj;
    mj["recall"] = report.recall;
    mj["precision"] = report.precision;
    mj["error_rate"] = report.error_rate;
    mj["accuracy"] = report.accuracy;
    mj["fpr"] = report.fpr;
    mj["auc"] = report.auc;
    mj["threshold"] = threshold;
    mj["examples"] = ds.size();
    mj["tp"] = report.counts.tp;
    mj["fp"] = report.counts.fp;
    mj["tn"] = report.counts.tn;
    mj["fn"] = report.counts.fn;
    write_json((fs::path(out_dir) / "metrics.json").string(), mj);

    std::vector<double> scores(proba.raw().begin(), proba.raw().end());
    std::vector<std::uint8_t> flat(Y.raw().size());
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = Y.raw()[i] != 0.0;

    {
        const RocResult roc = roc_curve(scores, flat);
        std::ofstream out(fs::path(out_dir) / "roc.csv");
        out << "fpr,tpr\n";
        for (const RocPoint& p : roc.points)
            out << format_double(p.fpr) << ',' << format_double(p.tpr) << "\n";
    }
    {
        const auto pr = pr_curve(scores, flat);
        std::ofstream out(fs::path(out_dir) / "pr.csv");
        out << "recall,precision\n";
        for (const PrPoint& p : pr)
            out << format_double(p.recall) << ',' << format_double(p.precision) << "\n";
    }

    const Matrix labels = predict_labels(proba, threshold);
    {
        const auto pairs = parity_pairs(labels, Y);
        std::ofstream out(fs::path(out_dir) / "parity.csv");
        out << "true_prevalence,predicted_prevalence\n";
        for (const auto& [t, p] : pairs)
            out << format_double(t) << ',' << format_double(p) << "\n";
    }
    {
        std::ofstream conf(fs::path(out_dir) / "confusion.csv");
        conf << ",pred_negative,pred_positive\n";
        conf << "true_negative," << report.counts.tn << ',' << report.counts.fp << "\n";
        conf << "true_positive," << report.counts.fn << ',' << report.counts.tp << "\n";
    }
    if (maps) {
        const fs::path map_dir = fs::path(out_dir) / "maps";
        fs::create_directories(map_dir);
        const StructuredGrid2D grid(ds.nx, ds.ny, 1.0, 1.0);
        for (std::size_t j = 0; j < ds.size(); ++j) {
            std::vector<std::uint8_t> pred(static_cast<std::size_t>(ds.k));
            for (int i = 0; i < ds.k; ++i)
                pred[static_cast<std::size_t>(i)] =
                    labels(static_cast<std::size_t>(i), j) != 0.0;
            char name[64];
            std::snprintf(name, sizeof(name), "pred_%04zu.pgm", j);
            write_labels_pgm((map_dir / name).string(), pred, grid);
            std::snprintf(name, sizeof(name), "true_%04zu.pgm", j);
            write_labels_pgm((map_dir / name).string(), ds.labels[j], grid);
        }
    }

    std::printf("evaluate: recall %.4f precision %.4f error rate %.5f auc %.5f\n",
                report.recall, report.precision, report.error_rate, report.auc);
    return 0;
}

int cmd_predict(const std::string& model_dir, const std::string& features_path,
                const std::string& out_path, double threshold) {
    const LoadedModel model = load_model(model_dir);

    std::ifstream in(features_path);
    if (!in) throw FormatError("cannot open " + features_path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (!std::isdigit(static_cast<unsigned char>(line[0])) && line[0] != '-' &&
            line[0] != '+' && line[0] != '.')
            continue; // header or comment
        std::vector<double> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != static_cast<std::size_t>(model.spec.input_size()))
            throw FormatError("feature row with " + std::to_string(row.size()) +
                              " values; the model expects " +
                              std::to_string(model.spec.input_size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError(features_path + ": no feature rows");

    Matrix X(static_cast<std::size_t>(model.spec.input_size()), rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j)
        for (std::size_t i = 0; i < rows[j].size(); ++i) X(i, j) = rows[j][i];

    const Matrix proba = predict_proba(model.params, model.norm, X);
    const Matrix labels = predict_labels(proba, threshold);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw FormatError("cannot write " + out_path);
        out = &file;
    }
    for (std::size_t j = 0; j < labels.cols(); ++j) {
        std::string text(labels.rows(), '0');
        for (std::size_t i = 0; i < labels.rows(); ++i)
            if (labels(i, j) != 0.0) text[i] = '1';
        *out << text << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flow-regime labeling pipeline: adaptive Darcy/Forchheimer solver, dataset "
                 "generation, and neural-network classification"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "Key-value config file; subcommand options live in [subcommand] sections");

    // ----- solve -----
    ScenarioOptions solve_sopt;
    SolverOptions solve_vopt;
    std::string solve_out = "solve_out";
    CLI::App* solve = app.add_subcommand("solve", "Run one flow solve and write its labeling");
    add_scenario_options(solve, solve_sopt);
    add_solver_options(solve, solve_vopt);
    solve->add_option("--out", solve_out, "Output directory")->capture_default_str();

    // ----- generate -----
    ScenarioOptions gen_sopt;
    SolverOptions gen_vopt;
    std::string gen_out = "dataset";
    std::uint64_t gen_seed = 0;
    int gen_workers = 4;
    std::string gen_sweep;
    CLI::App* generate =
        app.add_subcommand("generate", "Sample the parameter sweep and solve every example");
    add_scenario_options(generate, gen_sopt);
    add_solver_options(generate, gen_vopt);
    generate->add_option("--out", gen_out, "Dataset directory")->capture_default_str();
    generate->add_option("--seed", gen_seed, "Sampling seed")->capture_default_str();
    generate->add_option("--workers", gen_workers, "Parallel solver tasks")
        ->capture_default_str();
    generate->add_option("--sweep", gen_sweep,
                         "Reduced landfill sweep counts 'n_cF,n_delta,n_u0,n_m'")
        ->capture_default_str();

    // ----- crossval -----
    std::string cv_dataset, cv_out = "crossval";
    std::string cv_networks, cv_lrs;
    int cv_kappa = 5;
    TrainConfig cv_train;
    double cv_improvement = 0.0;
    double cv_threshold = 0.5;
    std::uint64_t cv_fold_seed = 0;
    CLI::App* crossval =
        app.add_subcommand("crossval", "Tune the hyperparameters by k-fold cross-validation");
    crossval->add_option("--dataset", cv_dataset, "Dataset directory")->required();
    crossval->add_option("--out", cv_out, "Output directory")->capture_default_str();
    crossval
        ->add_option("--networks", cv_networks,
                     "Semicolon-separated layer lists, e.g. "
                     "'12,256,512,2500;12,512,256,2500'")
        ->capture_default_str();
    crossval->add_option("--lrs", cv_lrs, "Comma-separated learning rates")
        ->capture_default_str();
    crossval->add_option("--kappa", cv_kappa, "Fold count")->capture_default_str();
    crossval->add_option("--max-iter", cv_train.max_iterations, "Training iteration cap")
        ->capture_default_str();
    crossval->add_option("--patience", cv_train.patience, "Early-stopping patience")
        ->capture_default_str();
    crossval
        ->add_option("--improvement", cv_improvement,
                     "Early-stopping threshold (0: case default 1e-6/1e-5)")
        ->capture_default_str();
    crossval->add_option("--threshold", cv_threshold, "Classification threshold")
        ->capture_default_str();
    crossval->add_option("--seed", cv_train.seed, "Weight initialization seed")
        ->capture_default_str();
    crossval->add_option("--fold-seed", cv_fold_seed, "Fold shuffling seed")
        ->capture_default_str();
    int cv_workers = 0;
    crossval->add_option("--workers", cv_workers,
                         "Thread budget for the fold trainings (0: all cores)")
        ->capture_default_str();

    // ----- train -----
    std::string train_dataset, train_model = "model";
    std::string train_layers;
    TrainConfig train_cfg;
    train_cfg.improvement_threshold = 1e-8;
    double train_test_fraction = 0.05;
    std::uint64_t train_split_seed = 0;
    CLI::App* train_cmd = app.add_subcommand("train", "Train the classifier on a dataset");
    train_cmd->add_option("--dataset", train_dataset, "Dataset directory")->required();
    train_cmd->add_option("--model", train_model, "Model output directory")
        ->capture_default_str();
    train_cmd->add_option("--layers", train_layers, "Layer sizes, e.g. '12,256,512,2500'")
        ->capture_default_str();
    train_cmd->add_option("--lr", train_cfg.learning_rate, "Learning rate")
        ->capture_default_str();
    train_cmd->add_option("--max-iter", train_cfg.max_iterations, "Iteration cap")
        ->capture_default_str();
    train_cmd->add_option("--patience", train_cfg.patience, "Early-stopping patience")
        ->capture_default_str();
    train_cmd
        ->add_option("--improvement", train_cfg.improvement_threshold,
                     "Early-stopping improvement threshold")
        ->capture_default_str();
    train_cmd->add_option("--seed", train_cfg.seed, "Weight initialization seed")
        ->capture_default_str();
    train_cmd->add_option("--test-fraction", train_test_fraction, "Held-out fraction")
        ->capture_default_str();
    train_cmd->add_option("--split-seed", train_split_seed, "Split shuffling seed")
        ->capture_default_str();

    // ----- evaluate -----
    std::string eval_dataset, eval_model = "model", eval_out = "evaluation";
    double eval_threshold = 0.5;
    bool eval_maps = false;
    CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate a model on a dataset");
    evaluate
        ->add_option("--dataset", eval_dataset,
                     "Dataset directory (default: the model's stored test set)")
        ->capture_default_str();
    evaluate->add_option("--model", eval_model, "Model directory")->capture_default_str();
    evaluate->add_option("--out", eval_out, "Output directory")->capture_default_str();
    evaluate->add_option("--threshold", eval_threshold, "Classification threshold")
        ->capture_default_str();
    evaluate->add_flag("--maps", eval_maps, "Write per-example label maps as PGM");

    // ----- predict -----
    std::string pred_model = "model", pred_features, pred_out;
    double pred_threshold = 0.5;
    CLI::App* predict =
        app.add_subcommand("predict", "Emit label strings for supplied feature rows");
    predict->add_option("--model", pred_model, "Model directory")->capture_default_str();
    predict->add_option("--features", pred_features, "CSV of feature rows")->required();
    predict->add_option("--out", pred_out, "Output file (default: stdout)")
        ->capture_default_str();
    predict->add_option("--threshold", pred_threshold, "Classification threshold")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e); // 0 for --help, nonzero usage errors otherwise
    }

    try {
        if (solve->parsed()) return cmd_solve(solve_sopt, solve_vopt, solve_out);
        if (generate->parsed())
            return cmd_generate(gen_sopt, gen_vopt, gen_out, gen_seed, gen_workers, gen_sweep);
        if (crossval->parsed()) {
#ifdef _OPENMP
            if (cv_workers > 0) omp_set_num_threads(cv_workers);
#endif
            return cmd_crossval(cv_dataset, cv_out, cv_networks, cv_lrs, cv_kappa, cv_train,
                                cv_improvement, cv_threshold, cv_fold_seed);
        }
        if (train_cmd->parsed())
            return cmd_train(train_dataset, train_model, train_layers, train_cfg,
                             train_test_fraction, train_split_seed);
        if (evaluate->parsed())
            return cmd_evaluate(eval_dataset, eval_model, eval_out, eval_threshold, eval_maps);
        if (predict->parsed())
            return cmd_predict(pred_model, pred_features, pred_out, pred_threshold);
    } catch (const DataFormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
