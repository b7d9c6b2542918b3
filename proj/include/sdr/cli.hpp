#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdr/io.hpp"
#include "sdr/simulation.hpp"

namespace sdr::cli {

using io::json;

namespace detail {

inline BasisSpec basis_from_name(const std::string& name) {
    if (name == "linear") return BasisSpec::linear();
    if (name == "quadratic") return BasisSpec::quadratic();
    throw Error(ErrorCode::validation, "unknown basis '" + name + "' (expected linear or quadratic)");
}

inline ScreenMode mode_from_name(const std::string& name) {
    if (name == "forward") return ScreenMode::forward;
    if (name == "inverse") return ScreenMode::inverse;
    throw Error(ErrorCode::validation, "unknown screening mode '" + name + "' (expected forward or inverse)");
}

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) items.push_back(item);
    return items;
}

/// Fixed 10-decimal rounding with trailing zeros trimmed to one, so an
/// angle of exactly zero prints as "0.0".
inline std::string format_angle(double deg) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(10) << deg;
    std::string s = os.str();
    while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
    if (s == "-0.0") s = "0.0";
    return s;
}

inline void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream file(path, std::ios::binary);
    require(file.good(), ErrorCode::io, "cannot write '" + path + "'");
    file << text;
}

inline ScreeningConfig screening_config(const std::string& mode, double alpha, std::optional<double> theta) {
    ScreeningConfig cfg = theta ? ScreeningConfig::coefficient(mode_from_name(mode), *theta)
                                : ScreeningConfig::p_value(mode_from_name(mode), alpha);
    cfg.validate();
    return cfg;
}

inline ScreeningResult run_screen(const Dataset& data, const ScreeningConfig& cfg, const BasisSpec& basis) {
    if (cfg.mode == ScreenMode::forward) return forward_screen(data, cfg);
    return inverse_screen(data, build_fy(data.y(), basis), cfg);
}

inline void log_config(std::ostream& err, const json& config) { err << "# config " << config.dump() << '\n'; }

}  // namespace detail

/// Runs one command line. Returns 0 on success, 1 on validation errors
/// (including bad flags and malformed input files), 2 on numerical failure.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Sufficient dimension reduction: screening, PFC/SPC fits, binary PFC, simulations"};
    app.require_subcommand(1);

    // screen
    auto* screen = app.add_subcommand("screen", "univariate predictor screening, JSON report on stdout");
    std::string screen_mode = "inverse";
    std::string screen_basis = "linear";
    double screen_alpha = 0.05;
    std::optional<double> screen_theta;
    std::string screen_response;
    std::string screen_input;
    screen->add_option("--mode", screen_mode, "forward or inverse")->check(CLI::IsMember({"forward", "inverse"}));
    screen->add_option("--basis", screen_basis, "f_y basis for inverse screening")->check(CLI::IsMember({"linear", "quadratic"}));
    screen->add_option("--alpha", screen_alpha, "p-value threshold");
    screen->add_option("--theta", screen_theta, "absolute-coefficient threshold (replaces the p-value rule)");
    screen->add_option("--response", screen_response, "response column name")->required();
    screen->add_option("input", screen_input, "dataset CSV")->required();

    // fit
    auto* fit = app.add_subcommand("fit", "fit a reduction: pfc, spc or binary-pfc");
    std::string fit_method;
    Index fit_d = 1;
    std::string fit_basis = "linear";
    std::string fit_screen;
    double fit_alpha = 0.05;
    std::string fit_response;
    std::string fit_input;
    std::string fit_out;
    int fit_max_outer = 200;
    double fit_tol = 1e-6;
    fit->add_option("method", fit_method, "pfc, spc or binary-pfc")->required()->check(CLI::IsMember({"pfc", "spc", "binary-pfc"}));
    fit->add_option("--d", fit_d, "reduction dimension");
    fit->add_option("--basis", fit_basis, "f_y basis")->check(CLI::IsMember({"linear", "quadratic"}));
    fit->add_option("--screen", fit_screen, "screen predictors first (forward or inverse)")->check(CLI::IsMember({"forward", "inverse"}));
    fit->add_option("--alpha", fit_alpha, "screening p-value threshold");
    fit->add_option("--response", fit_response, "response column name")->required();
    fit->add_option("--out", fit_out, "summary CSV (pfc/spc) or state JSON (binary-pfc)");
    fit->add_option("--max-outer", fit_max_outer, "binary-pfc: maximum outer cycles");
    fit->add_option("--tol", fit_tol, "binary-pfc: relative log-likelihood tolerance");
    fit->add_option("input", fit_input, "dataset CSV")->required();

    // bridge
    auto* bridge = app.add_subcommand("bridge", "latent SPC model to PFC form, with verification");
    std::string bridge_model;
    std::optional<double> bridge_ybar;
    std::string bridge_grid = "-5,-4,-3,-2,-1,0,1,2,3,4,5";
    bridge->add_option("--model", bridge_model, "model JSON")->required();
    bridge->add_option("--ybar", bridge_ybar, "response mean used to center f_y (default: model field 'ybar' or 0)");
    bridge->add_option("--grid", bridge_grid, "comma-separated y values for the mean-structure check");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "simulation studies");
    simulate->require_subcommand(1);
    auto* table1 = simulate->add_subcommand("table1", "binary PFC angle study, one CSV row per (gamma, sigma_y)");
    std::string sim_gamma = "G1";
    std::string sim_sigma = "0.1,1,3,5,10";
    int sim_reps = 50;
    std::uint64_t sim_seed = 0;
    Index sim_n = 200;
    Index sim_p = 20;
    std::string sim_out;
    std::optional<unsigned> sim_threads;
    table1->add_option("--gamma", sim_gamma, "comma-separated presets from G1..G4");
    table1->add_option("--sigma-y", sim_sigma, "comma-separated sigma_y values");
    table1->add_option("--reps", sim_reps, "replications per cell")->check(CLI::PositiveNumber);
    table1->add_option("--seed", sim_seed, "base seed");
    table1->add_option("--n", sim_n, "observations per replicate");
    table1->add_option("--p", sim_p, "predictors");
    table1->add_option("--threads", sim_threads, "worker threads (default: PFC_THREADS or hardware)")->check(CLI::PositiveNumber);
    table1->add_option("--out", sim_out, "CSV output (stdout when omitted)");

    // angle
    auto* angle = app.add_subcommand("angle", "largest principal angle (degrees) between two basis JSON files");
    std::string angle_a;
    std::string angle_b;
    angle->add_option("a", angle_a, "first basis JSON")->required();
    angle->add_option("b", angle_b, "second basis JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (*screen) {
            const ScreeningConfig cfg = detail::screening_config(screen_mode, screen_alpha, screen_theta);
            detail::log_config(err, {{"command", "screen"}, {"mode", screen_mode}, {"basis", screen_basis},
                                     {"criterion", screen_theta ? "abs-coefficient" : "p-value"},
                                     {"threshold", cfg.threshold}, {"response", screen_response}, {"input", screen_input}});
            const Dataset data = io::read_csv_dataset(screen_input, screen_response);
            const ScreeningResult res = detail::run_screen(data, cfg, detail::basis_from_name(screen_basis));
            out << io::screening_to_json(res, data.column_names()).dump(2) << '\n';
            return 0;
        }

        if (*fit) {
            detail::log_config(err, {{"command", "fit"}, {"method", fit_method}, {"d", fit_d}, {"basis", fit_basis},
                                     {"screen", fit_screen}, {"alpha", fit_alpha}, {"response", fit_response},
                                     {"max_outer", fit_max_outer}, {"tol", fit_tol}, {"input", fit_input}, {"out", fit_out}});
            Dataset data = io::read_csv_dataset(fit_input, fit_response);
            const BasisSpec basis = detail::basis_from_name(fit_basis);
            json report{{"method", fit_method}};
            if (!fit_screen.empty()) {
                const ScreeningConfig cfg = detail::screening_config(fit_screen, fit_alpha, std::nullopt);
                const ScreeningResult res = detail::run_screen(data, cfg, basis);
                report["screening"] = io::screening_to_json(res, data.column_names());
                data = reduce_columns(data, res);
            }
            report["columns"] = data.column_names();

            if (fit_method == "binary-pfc") {
                BinaryPfcOptions opts;
                opts.max_outer = fit_max_outer;
                opts.tol = fit_tol;
                const BinaryPfcState state = fit_binary_pfc(data, fit_d, InitFromLinearPfc{basis}, opts);
                report.update(io::state_to_json(state));
                report["p"] = data.p();
                report["d"] = fit_d;
                detail::write_text(fit_out, report.dump(2) + "\n", out);
                return 0;
            }

            const ReductionBasis g =
                fit_method == "pfc" ? fit_pfc(data, build_fy(data.y(), basis), fit_d) : fit_spc(data, fit_d);
            report.update(io::basis_to_json(g));
            out << report.dump(2) << '\n';
            if (!fit_out.empty()) {
                std::ostringstream csv;
                io::write_summary_csv(csv, project(data, g), data.response_name());
                detail::write_text(fit_out, csv.str(), out);
            }
            return 0;
        }

        if (*bridge) {
            const json model_json = io::read_json_file(bridge_model);
            const LatentSpcModel model = io::model_from_json(model_json);
            double ybar = 0.0;
            if (bridge_ybar) ybar = *bridge_ybar;
            else if (model_json.contains("ybar") && model_json.at("ybar").is_number()) ybar = model_json.at("ybar").get<double>();
            std::vector<double> grid_values;
            for (const auto& item : detail::split_list(bridge_grid)) grid_values.push_back(std::stod(item));
            detail::log_config(err, {{"command", "bridge"}, {"model", bridge_model}, {"ybar", ybar}, {"grid", grid_values}});
            const PfcForm form = latent_to_pfc(model, ybar);
            const Vector grid = Eigen::Map<const Vector>(grid_values.data(), static_cast<Index>(grid_values.size()));
            const MeanStructureReport mean_rep = verify_mean_structure(model, form, grid);
            const CovarianceBlockReport cov_rep = verify_covariance_blocks(model, form);
            json report = io::form_to_json(form);
            report["verification"] = {{"mean_structure_max_deviation", mean_rep.max_deviation},
                                      {"omega_sq_deviation", cov_rep.omega_sq_deviation},
                                      {"omega0_sq_deviation", cov_rep.omega0_sq_deviation},
                                      {"diagonal_blocks_agree", cov_rep.diagonal_blocks_agree},
                                      {"cross_block_norm", cov_rep.cross_block_norm}};
            out << report.dump(2) << '\n';
            return 0;
        }

        if (*table1) {
            const std::vector<std::string> presets = detail::split_list(sim_gamma);
            const std::vector<std::string> sigmas = detail::split_list(sim_sigma);
            require(!presets.empty() && !sigmas.empty(), ErrorCode::validation, "need at least one gamma and one sigma_y");
            const unsigned threads = sim_threads ? *sim_threads : default_thread_count();
            detail::log_config(err, {{"command", "simulate table1"}, {"gamma", presets}, {"sigma_y", sigmas},
                                     {"reps", sim_reps}, {"seed", sim_seed}, {"n", sim_n}, {"p", sim_p},
                                     {"threads", threads}, {"out", sim_out}});
            std::ostringstream csv;
            csv << "gamma,sigma_y,mean_angle_deg,sd_angle_deg,n_warnings,n_failed\n";
            for (const auto& name : presets) {
                const GammaPreset preset = parse_gamma_preset(name);
                for (const auto& sigma_text : sigmas) {
                    const double sigma = io::detail::parse_number(sigma_text, 0, "sigma-y");
                    SimulationConfig cfg = SimulationConfig::table1(preset, sigma, sim_reps, cell_seed(sim_seed, preset, sigma));
                    cfg.n = sim_n;
                    cfg.p = sim_p;
                    AngleStudyOptions opts;
                    opts.threads = threads;
                    const StudyReport rep = run_angle_study(cfg, opts);
                    err << "# cell " << name << " sigma_y=" << sigma_text << " mean=" << rep.mean_angle
                        << " wall=" << rep.wall_seconds << "s\n";
                    csv << name << ',' << sigma_text << ',' << std::fixed << std::setprecision(6) << rep.mean_angle << ','
                        << rep.sd_angle << ',' << rep.n_warnings << ',' << rep.n_failed << '\n';
                    csv.unsetf(std::ios::fixed);
                }
            }
            detail::write_text(sim_out, csv.str(), out);
            return 0;
        }

        if (*angle) {
            detail::log_config(err, {{"command", "angle"}, {"a", angle_a}, {"b", angle_b}});
            const ReductionBasis a = io::basis_from_json(io::read_json_file(angle_a));
            const ReductionBasis b = io::basis_from_json(io::read_json_file(angle_b));
            out << detail::format_angle(subspace_angle(a, b)) << '\n';
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return is_numerical(e.code()) ? 2 : 1;
    } catch (const json::exception& e) {
        err << "error: malformed JSON: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace sdr::cli
