// explasso command-line front door: calibrate, fit, simulate, fisher,
// diagnose. One JSON document on stdout per invocation; logs on stderr.
// Exit codes: 0 success, 2 usage, 3 I/O, 4 numeric.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "explasso/calibration.hpp"
#include "explasso/design.hpp"
#include "explasso/experiments.hpp"
#include "explasso/noise.hpp"
#include "explasso/rng.hpp"
#include "explasso/solver.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace explasso;

constexpr const char* kSchema = "explasso/1";

json to_json(const calibration::CalibrationResult& c) {
    return json{{"quantile", c.quantile},
                {"lambda", c.lambda},
                {"alpha", c.alpha},
                {"eta", c.eta},
                {"N", c.n_samples},
                {"mc_bracket", {c.mc_bracket_lo, c.mc_bracket_hi}},
                {"seed", c.seed}};
}

json to_json(const solver::FitResult& f) {
    json beta = json::array();
    for (long j = 0; j < f.beta_hat.size(); ++j) beta.push_back(f.beta_hat[j]);
    return json{{"beta", beta},
                {"sigma", f.sigma_hat},
                {"active_set", f.active_set},
                {"objective", f.objective},
                {"kkt_residual", f.kkt_residual},
                {"converged", f.converged},
                {"iters", f.outer_iters}};
}

std::vector<int> parse_index_list(const std::string& s) {
    std::vector<int> out;
    std::string cur;
    for (char c : s + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(std::stoi(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

// flat key=value scenario file; '#' starts a comment line
std::map<std::string, std::string> read_kv_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line without '=': " + line);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

int cmd_calibrate(const std::string& model_spec, const std::string& design_path, long n,
                  long p, double alpha, double eta, long reps, std::uint64_t seed,
                  const std::string& dump_samples) {
    const auto model = noise::NoiseModel::parse(model_spec);
    Eigen::MatrixXd X;
    if (!design_path.empty()) {
        X = design::load_matrix_csv(design_path);
    } else {
        if (n < 1 || p < 1)
            throw std::invalid_argument("calibrate needs --design or both --n and --p");
        auto rng = make_engine(derive_seed(seed, 0xdeu));
        X = design::generate_gaussian_design(n, p, rng);
    }
    std::vector<char> mask(X.cols(), 1);
    const int threads = int(std::max(1u, std::thread::hardware_concurrency()));
    const auto res = calibration::calibrate(X, mask, model, alpha, eta, reps, seed, threads);
    if (!dump_samples.empty()) {
        design::write_matrix_csv(dump_samples, res.lambda_star_samples, {"lambda_star"});
    }
    json out = to_json(res);
    out["schema"] = kSchema;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_fit(const std::string& data_path, const std::string& model_spec,
            const std::string& lambda_arg, double alpha, double eta, long reps,
            std::uint64_t seed, bool intercept, const std::string& unpenalized) {
    const auto model = noise::NoiseModel::parse(model_spec);
    design::Dataset ds = design::load_csv(data_path);
    for (int j : parse_index_list(unpenalized)) {
        if (j < 0 || j >= ds.p())
            throw std::invalid_argument("--unpenalized index out of range: " + std::to_string(j));
        ds.penalty_mask[j] = 0;
    }
    if (intercept) ds = design::with_intercept(ds);

    solver::FitConfig cfg;
    cfg.alpha = alpha;
    cfg.eta = eta;
    cfg.seed = seed;
    std::optional<calibration::CalibrationResult> calib;
    if (lambda_arg == "auto") {
        const int threads = int(std::max(1u, std::thread::hardware_concurrency()));
        calib = calibration::calibrate(ds, model, alpha, eta, reps, seed, threads);
    } else {
        std::size_t pos = 0;
        double v = 0;
        try {
            v = std::stod(lambda_arg, &pos);
        } catch (const std::exception&) {
            pos = std::string::npos;
        }
        if (pos != lambda_arg.size() || !(v > 0))
            throw std::invalid_argument("--lambda must be a positive number or 'auto'");
        cfg.lambda = v;
    }
    const auto fit = solver::fit_exp_lasso(ds, model, cfg, calib ? &*calib : nullptr);
    json out = to_json(fit);
    out["schema"] = kSchema;
    out["lambda"] = fit.lambda;
    if (calib) out["calibration"] = to_json(*calib);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_simulate(const std::string& study, experiments::ScenarioConfig cfg,
                 const std::string& multipliers_arg, const std::string& out_dir) {
    std::vector<double> multipliers;
    {
        std::string cur;
        for (char c : multipliers_arg + ",") {
            if (c == ',') {
                if (!cur.empty()) multipliers.push_back(std::stod(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
    }
    experiments::ExperimentReport rep;
    if (study == "rates")
        rep = experiments::run_oracle_rates(cfg);
    else if (study == "edge")
        rep = experiments::run_detection_edge(cfg, multipliers);
    else if (study == "select")
        rep = experiments::run_variable_selection(cfg);
    else if (study == "efficiency")
        rep = experiments::run_efficiency(cfg);
    else
        throw std::invalid_argument("unknown study '" + study +
                                    "' (rates | edge | select | efficiency)");

    json agg = json::object();
    for (const auto& [k, v] : rep.aggregates) agg[k] = v;
    json out{{"schema", kSchema}, {"study", study}, {"aggregates", agg},
             {"notes", rep.notes}};
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        rep.write_csv(out_dir + "/replications.csv");
        std::ofstream jf(out_dir + "/aggregates.json");
        if (!jf) throw io_error("cannot write aggregates.json in '" + out_dir + "'");
        jf << out.dump(2) << "\n";
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_fisher(const std::string& model_spec) {
    const auto model = noise::NoiseModel::parse(model_spec);
    const auto info = noise::fisher_info(model, noise::FisherMethod::quadrature);
    const Eigen::Matrix2d k = info.matrix();
    const Eigen::Matrix2d inv = info.inverse();
    json out{{"schema", kSchema},
             {"model", model.name()},
             {"order", {"scale", "location"}},
             {"K", {{k(0, 0), k(0, 1)}, {k(1, 0), k(1, 1)}}},
             {"K_inv", {{inv(0, 0), inv(0, 1)}, {inv(1, 0), inv(1, 1)}}}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_diagnose(const std::string& data_path, bool intercept, const std::string& s_arg,
                 const std::string& sigma_ref_path) {
    design::Dataset ds = design::load_csv(data_path);
    if (intercept) ds = design::with_intercept(ds);
    std::optional<std::vector<int>> S;
    if (!s_arg.empty()) S = parse_index_list(s_arg);
    std::optional<Eigen::MatrixXd> sigma_ref;
    if (!sigma_ref_path.empty()) sigma_ref = design::load_matrix_csv(sigma_ref_path);
    const auto d = design::diagnose(ds, S ? &*S : nullptr, sigma_ref ? &*sigma_ref : nullptr);
    json out{{"schema", kSchema}, {"n", ds.n()}, {"p", ds.p()},
             {"k_x", d.k_x},      {"min_col_norm_sq", d.min_col_norm_sq}};
    if (d.gram_deviation) out["gram_deviation"] = *d.gram_deviation;
    if (d.irrepresentable_eta0) out["irrepresentable_eta0"] = *d.irrepresentable_eta0;
    if (d.cond_s) out["cond_s"] = *d.cond_s;
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exp-Lasso: pivotal location-scale regression"};
    app.require_subcommand(1);

    // calibrate
    std::string model_spec = "gaussian", design_path, dump_samples;
    long n = 0, p = 0, reps = 10000;
    double alpha = 0.05, eta = 0.1;
    std::uint64_t seed = 1;
    auto* cal = app.add_subcommand("calibrate", "Monte Carlo quantile of the pivotal statistic");
    cal->add_option("--model", model_spec, "gaussian | subbotin:<r> | logistic | huber | gumbel");
    cal->add_option("--design", design_path, "design CSV (y column ignored if present)");
    cal->add_option("--n", n, "rows of a generated Gaussian design");
    cal->add_option("--p", p, "columns of a generated Gaussian design");
    cal->add_option("--alpha", alpha, "level in (0, 1/2]");
    cal->add_option("--eta", eta, "edge margin in [0, 1)");
    cal->add_option("--reps", reps, "number of lambda* replicates (>= 100)");
    cal->add_option("--seed", seed, "rng seed");
    cal->add_option("--dump-samples", dump_samples, "write sorted lambda* samples to CSV");

    // fit
    std::string data_path, lambda_arg = "auto", unpenalized;
    bool no_intercept = false;
    auto* fit = app.add_subcommand("fit", "exp-Lasso fit on a CSV dataset");
    fit->add_option("--data", data_path, "CSV with a 'y' column")->required();
    fit->add_option("--model", model_spec, "noise model spec");
    fit->add_option("--lambda", lambda_arg, "positive value or 'auto'");
    fit->add_option("--alpha", alpha, "calibration level for auto");
    fit->add_option("--eta", eta, "edge margin for auto");
    fit->add_option("--reps", reps, "calibration replicates for auto");
    fit->add_option("--seed", seed, "rng seed");
    fit->add_flag("--no-intercept", no_intercept, "skip the unpenalized intercept");
    fit->add_option("--unpenalized", unpenalized,
                    "comma-separated predictor indices (0-based, pre-intercept) left unpenalized");

    // simulate
    std::string study, out_dir, multipliers = "0.2,0.5,0.8,1.0,1.2,1.5,2.0";
    std::string config_path;
    experiments::ScenarioConfig sc;
    auto* sim = app.add_subcommand("simulate", "replicated desk-scale studies");
    sim->add_option("--study", study, "rates | edge | select | efficiency")->required();
    sim->add_option("--config", config_path, "key=value scenario file (flags override)");
    auto* opt_n = sim->add_option("--n", sc.n, "sample size");
    auto* opt_p = sim->add_option("--p", sc.p, "dimension");
    auto* opt_s = sim->add_option("--s", sc.s_star, "sparsity s*");
    auto* opt_bm = sim->add_option("--beta-mag", sc.beta_magnitude, "signal size in sigma* units");
    auto* opt_sig = sim->add_option("--sigma", sc.sigma_star, "noise scale sigma*");
    auto* opt_model = sim->add_option("--model", sc.model, "noise model spec");
    auto* opt_design = sim->add_option("--design", sc.design, "gaussian | orthogonal | file");
    auto* opt_df = sim->add_option("--design-file", sc.design_file, "CSV design for design=file");
    auto* opt_reps = sim->add_option("--reps", sc.replications, "replications");
    auto* opt_alpha = sim->add_option("--alpha", sc.alpha, "calibration level");
    auto* opt_eta = sim->add_option("--eta", sc.eta, "edge margin");
    auto* opt_seed = sim->add_option("--seed", sc.seed, "rng seed");
    auto* opt_nc = sim->add_option("--calib-reps", sc.n_calib, "lambda* replicates");
    auto* opt_threads = sim->add_option("--threads", sc.n_threads, "0 = all cores");
    sim->add_option("--multipliers", multipliers, "edge study lambda multipliers");
    sim->add_option("--out", out_dir, "directory for replications.csv + aggregates.json");

    // fisher
    auto* fis = app.add_subcommand("fisher", "information matrix K(0,1) and its inverse");
    fis->add_option("--model", model_spec, "noise model spec");

    // diagnose
    std::string s_arg, sigma_ref_path;
    bool diag_intercept = false;
    auto* dia = app.add_subcommand("diagnose", "design diagnostics");
    dia->add_option("--data", data_path, "CSV with a 'y' column")->required();
    dia->add_flag("--intercept", diag_intercept, "center and prepend intercept first");
    dia->add_option("--s", s_arg, "comma-separated active-set indices for eta0");
    dia->add_option("--sigma-ref", sigma_ref_path, "reference Sigma CSV for gram deviation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(cal))
            return cmd_calibrate(model_spec, design_path, n, p, alpha, eta, reps, seed,
                                 dump_samples);
        if (app.got_subcommand(fit))
            return cmd_fit(data_path, model_spec, lambda_arg, alpha, eta, reps, seed,
                           !no_intercept, unpenalized);
        if (app.got_subcommand(sim)) {
            if (!config_path.empty()) {
                const auto kv = read_kv_config(config_path);
                auto set_if = [&](const char* key, CLI::Option* opt, auto& field) {
                    const auto it = kv.find(key);
                    if (it == kv.end() || opt->count() > 0) return;
                    std::istringstream ss(it->second);
                    ss >> field;
                    if (ss.fail()) throw std::invalid_argument("bad config value for " +
                                                               std::string(key));
                };
                set_if("n", opt_n, sc.n);
                set_if("p", opt_p, sc.p);
                set_if("s_star", opt_s, sc.s_star);
                set_if("beta_magnitude", opt_bm, sc.beta_magnitude);
                set_if("sigma_star", opt_sig, sc.sigma_star);
                set_if("model", opt_model, sc.model);
                set_if("design", opt_design, sc.design);
                set_if("design_file", opt_df, sc.design_file);
                set_if("replications", opt_reps, sc.replications);
                set_if("alpha", opt_alpha, sc.alpha);
                set_if("eta", opt_eta, sc.eta);
                set_if("seed", opt_seed, sc.seed);
                set_if("n_calib", opt_nc, sc.n_calib);
                set_if("n_threads", opt_threads, sc.n_threads);
            }
            return cmd_simulate(study, sc, multipliers, out_dir);
        }
        if (app.got_subcommand(fis)) return cmd_fisher(model_spec);
        if (app.got_subcommand(dia))
            return cmd_diagnose(data_path, diag_intercept, s_arg, sigma_ref_path);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 2;
}
