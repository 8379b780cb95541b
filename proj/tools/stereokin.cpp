// stereokin: quasi-2D dipolar loss toolkit command line.
// Exit codes: 0 success, 2 input error, 3 numerical failure, 4 fit non-convergence.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stereokin/bandmap.hpp"
#include "stereokin/channels.hpp"
#include "stereokin/core.hpp"
#include "stereokin/fitting.hpp"
#include "stereokin/gasmodel.hpp"
#include "stereokin/io.hpp"
#include "stereokin/kinetics.hpp"
#include "stereokin/scattering.hpp"

namespace {

namespace sk = stereokin;
using sk::io::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitNonConverged = 4;

#ifndef STEREOKIN_VERSION
#define STEREOKIN_VERSION "0.0.0"
#endif

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const fs::path& out_path, const std::string& subcommand, json parameters,
                    json inputs, std::vector<std::string> outputs, std::uint64_t seed) {
    json m;
    m["tool"] = "stereokin";
    m["version"] = STEREOKIN_VERSION;
    m["subcommand"] = subcommand;
    m["timestamp_utc"] = utc_timestamp();
    m["seed"] = seed;
    m["parameters"] = std::move(parameters);
    m["inputs"] = std::move(inputs);
    m["outputs"] = std::move(outputs);
    fs::path p = out_path;
    p += ".manifest.json";
    sk::io::write_text_file(p, m.dump(2) + "\n");
}

sk::VibrationalDistribution initial_distribution(const sk::ExperimentConfig& cfg, int v_cut,
                                                 double parametric_p, double heated_f0) {
    sk::VibrationalDistribution dist =
        sk::boltzmann_occupancy(cfg.temperature, cfg.trap.nu_z, v_cut);
    double p = parametric_p;
    if (heated_f0 > 0.0) {
        if (heated_f0 > dist.fractions[0])
            throw std::invalid_argument("heated-f0 target exceeds the thermal ground fraction");
        p = 1.0 - heated_f0 / dist.fractions[0];
    }
    if (p > 0.0) dist = sk::parametric_transfer(dist, p);
    return dist;
}

struct CloudGeometry {
    sk::LayerStack stack;
    sk::CloudState state;
    double n_avg = 0.0;  // m^-2
};

CloudGeometry cloud_geometry(const sk::ExperimentConfig& cfg) {
    if (!cfg.stack.configured())
        throw std::invalid_argument("config: needs a \"stack\" block (alpha0 or rms_width_layers)");
    if (cfg.total_molecules <= 0.0)
        throw std::invalid_argument("config: total_molecules must be > 0 for cloud geometry");
    CloudGeometry g;
    const double w = cfg.stack.width();
    g.stack = sk::gaussian_layer_stack(cfg.total_molecules, w, sk::default_j_max(w));
    g.state.total_number = cfg.total_molecules;
    g.state.sigma_r = sk::thermal_radial_size(cfg.temperature, cfg.trap.nu_r, cfg.molecule.mass);
    g.state.alpha = sk::effective_layer_number(g.stack);
    g.n_avg = sk::average_2d_density(g.state);
    return g;
}

// ---------------------------------------------------------------- channels --
int run_channels(const sk::PairConfiguration& pair, int l_max, int m_max,
                 const std::string& format, const std::string& out_path) {
    const auto list = sk::enumerate_channels(pair, l_max, m_max);
    const sk::Channel lowest = sk::classify_lowest_channel(pair);

    std::string text;
    if (format == "json") {
        json j;
        j["pair"] = {{"same_internal_state", pair.same_internal_state},
                     {"v1", pair.v1},
                     {"v2", pair.v2}};
        j["lowest_channel"] = static_cast<int>(lowest);
        j["channels"] = json::array();
        for (const auto& c : list)
            j["channels"].push_back({{"eta", c.eta}, {"L", c.L}, {"gamma", c.gamma}, {"M", c.M}});
        text = j.dump(2) + "\n";
    } else {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "# pair: %s internal, v1=%d v2=%d -> lowest channel |%d>\n",
                      pair.same_internal_state ? "same" : "different", pair.v1, pair.v2,
                      static_cast<int>(lowest));
        text = buf;
        text += "  eta    L  gamma    M\n";
        for (const auto& c : list) {
            std::snprintf(buf, sizeof(buf), "%5d %4d %6d %4d\n", c.eta, c.L, c.gamma, c.M);
            text += buf;
        }
    }
    if (out_path.empty()) {
        std::cout << text;
    } else {
        sk::io::write_text_file(out_path, text);
        write_manifest(out_path, "channels",
                       json{{"same_internal_state", pair.same_internal_state},
                            {"v1", pair.v1},
                            {"v2", pair.v2},
                            {"l_max", l_max},
                            {"m_max", m_max},
                            {"format", format}},
                       json::object(), {out_path}, 0);
    }
    return kExitOk;
}

// --------------------------------------------------------------- occupancy --
int run_occupancy(const std::string& config_path, double temperature_nk, double nu_z_khz,
                  int v_cut, double parametric_p, const std::string& out_path) {
    double t_k = sk::units::kelvin_from_nk(temperature_nk);
    double nu_z = sk::units::hz_from_khz(nu_z_khz);
    json inputs = json::object();
    if (!config_path.empty()) {
        const sk::ExperimentConfig cfg = sk::io::load_experiment_config(config_path);
        if (temperature_nk < 0.0) t_k = cfg.temperature;
        if (nu_z_khz < 0.0) nu_z = cfg.trap.nu_z;
        inputs["config"] = config_path;
    }
    if (t_k < 0.0 || nu_z <= 0.0)
        throw std::invalid_argument("occupancy: need --temperature-nk and --nu-z-khz or --config");

    sk::VibrationalDistribution dist = sk::boltzmann_occupancy(t_k, nu_z, v_cut);
    if (parametric_p > 0.0) dist = sk::parametric_transfer(dist, parametric_p);

    std::vector<std::vector<double>> rows;
    for (int v = 0; v < static_cast<int>(dist.fractions.size()); ++v)
        rows.push_back({static_cast<double>(v), dist.fractions[static_cast<std::size_t>(v)]});
    sk::io::write_csv(out_path, {"v", "fraction"}, rows);
    write_manifest(out_path, "occupancy",
                   json{{"temperature_nk", sk::units::nk_from_kelvin(t_k)},
                        {"nu_z_hz", nu_z},
                        {"v_cut", v_cut},
                        {"parametric_p", parametric_p},
                        {"scaled_temperature", sk::scaled_temperature(t_k, nu_z)}},
                   inputs, {out_path}, 0);
    return kExitOk;
}

// ------------------------------------------------------------------- cloud --
int run_cloud(const std::string& config_path, const std::string& out_path) {
    const sk::ExperimentConfig cfg = sk::io::load_experiment_config(config_path);
    const CloudGeometry g = cloud_geometry(cfg);
    const double peak_count = g.stack.count(0);

    json j;
    j["alpha"] = g.state.alpha;
    j["stack_rms_width_layers"] = cfg.stack.width();
    j["occupied_layers"] = static_cast<int>(g.stack.counts.size());
    j["peak_layer_molecules"] = peak_count;
    j["sigma_r_um"] = g.state.sigma_r * 1e6;
    j["average_density_cm2"] = sk::units::per_cm2_from_per_m2(g.n_avg);
    j["peak_layer_density_cm2"] =
        sk::units::per_cm2_from_per_m2(sk::peak_layer_density(peak_count, g.state.sigma_r));
    j["scaled_temperature"] = sk::scaled_temperature(cfg.temperature, cfg.trap.nu_z);
    j["aho_nm"] = sk::axial_oscillator_length(cfg) * 1e9;
    sk::io::write_text_file(out_path, j.dump(2) + "\n");
    write_manifest(out_path, "cloud", sk::io::experiment_config_to_json(cfg),
                   json{{"config", config_path}}, {out_path}, 0);
    return kExitOk;
}

// ---------------------------------------------------------------- simulate --
int run_simulate(const std::string& config_path, const std::string& rates_path,
                 const std::string& out_path, double tmax_s, int points,
                 const std::string& grid, int v_cut, double parametric_p, double heated_f0,
                 double noise_fraction, std::uint64_t seed) {
    if (points < 2) throw std::invalid_argument("simulate: need --points >= 2");
    const sk::ExperimentConfig cfg = sk::io::load_experiment_config(config_path);
    const sk::RateConstants rates = sk::io::load_rate_constants(rates_path);
    const CloudGeometry g = cloud_geometry(cfg);
    const sk::VibrationalDistribution dist =
        initial_distribution(cfg, v_cut, parametric_p, heated_f0);

    const double beta_init = sk::effective_initial_rate(dist, rates.beta2, rates.beta3);
    double tmax = tmax_s;
    if (tmax <= 0.0) {
        if (beta_init <= 0.0 || g.n_avg <= 0.0)
            throw std::invalid_argument("simulate: cannot derive a hold time; pass --tmax-s");
        tmax = 3.0 / (beta_init * g.n_avg);
    }

    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(points));
    if (grid == "log") {
        const double t0 = tmax / 100.0;
        for (int i = 0; i < points; ++i)
            times.push_back(t0 * std::pow(tmax / t0, static_cast<double>(i) / (points - 1)));
    } else {
        for (int i = 0; i < points; ++i)
            times.push_back(tmax * static_cast<double>(i) / (points - 1));
    }

    const sk::RateMatrix matrix =
        sk::RateMatrix::two_constant(rates.beta2, rates.beta3, static_cast<int>(dist.fractions.size()));

    if (noise_fraction > 0.0) {
        const sk::TimeSeries ts =
            sk::synthesize_dataset(matrix, dist, g.n_avg, times, noise_fraction, seed);
        sk::io::save_time_series(out_path, ts);
    } else {
        sk::LevelDensities init;
        init.n.resize(dist.fractions.size());
        for (std::size_t v = 0; v < dist.fractions.size(); ++v)
            init.n[v] = g.n_avg * dist.fractions[v];
        const sk::Trajectory traj = sk::integrate_loss(init, matrix, times);
        sk::io::save_trajectory(out_path, traj);
    }

    json params = sk::io::experiment_config_to_json(cfg);
    params["tmax_s"] = tmax;
    params["points"] = points;
    params["grid"] = grid;
    params["v_cut"] = v_cut;
    params["noise_fraction"] = noise_fraction;
    params["initial_fractions"] = dist.fractions;
    params["n_avg_cm2"] = sk::units::per_cm2_from_per_m2(g.n_avg);
    params["beta_initial_cm2_per_s"] = sk::units::cm2ps_from_m2ps(beta_init);
    write_manifest(out_path, "simulate", params,
                   json{{"config", config_path}, {"rates", rates_path}}, {out_path}, seed);
    return kExitOk;
}

// --------------------------------------------------------------------- fit --
int run_fit(const std::string& thermal_path, const std::string& heated_path,
            const std::string& single_path, const std::string& config_path,
            const std::string& out_path, int v_cut, double heated_f0,
            double init_beta2_cm2, double init_beta3_cm2) {
    json report;
    bool converged = false;

    if (!single_path.empty()) {
        const sk::TimeSeries ts = sk::io::load_time_series(single_path);
        const sk::SingleBetaFit fit = sk::fit_single_beta(ts);
        report["model"] = "single-beta";
        report["beta1_cm2_per_s"] = sk::units::cm2ps_from_m2ps(fit.beta);
        report["beta1_stderr_cm2_per_s"] = sk::units::cm2ps_from_m2ps(fit.beta_stderr);
        report["n0_cm2"] = sk::units::per_cm2_from_per_m2(fit.n0);
        report["n0_stderr_cm2"] = sk::units::per_cm2_from_per_m2(fit.n0_stderr);
        report["reduced_chi2"] = fit.diagnostics.reduced_chi2;
        report["iterations"] = fit.diagnostics.iterations;
        report["gradient_norm"] = fit.diagnostics.gradient_norm;
        report["condition_number"] = std::isfinite(fit.diagnostics.condition_number)
                                         ? json(fit.diagnostics.condition_number)
                                         : json("inf");
        report["converged"] = fit.diagnostics.converged;
        converged = fit.diagnostics.converged;
        sk::io::write_text_file(out_path, report.dump(2) + "\n");
        write_manifest(out_path, "fit", json{{"mode", "single"}},
                       json{{"data", single_path}}, {out_path}, 0);
    } else {
        if (thermal_path.empty() || heated_path.empty() || config_path.empty())
            throw std::invalid_argument("fit: need --thermal, --heated and --config (or --single)");
        const sk::ExperimentConfig cfg = sk::io::load_experiment_config(config_path);
        const sk::TimeSeries ts_thermal = sk::io::load_time_series(thermal_path);
        const sk::TimeSeries ts_heated = sk::io::load_time_series(heated_path);
        const sk::VibrationalDistribution dist_thermal =
            sk::boltzmann_occupancy(cfg.temperature, cfg.trap.nu_z, v_cut);
        const sk::VibrationalDistribution dist_heated =
            initial_distribution(cfg, v_cut, 0.0, heated_f0);

        sk::RateConstants init;
        init.beta2 = sk::units::m2ps_from_cm2ps(init_beta2_cm2);
        init.beta3 = sk::units::m2ps_from_cm2ps(init_beta3_cm2);
        const sk::DualCurveFit fit =
            sk::fit_dual_curves(ts_thermal, ts_heated, dist_thermal, dist_heated, init);

        report["model"] = "dual-curve";
        report["beta2_cm2_per_s"] = sk::units::cm2ps_from_m2ps(fit.beta2);
        report["beta2_stderr_cm2_per_s"] = sk::units::cm2ps_from_m2ps(fit.beta2_stderr);
        report["beta3_cm2_per_s"] = sk::units::cm2ps_from_m2ps(fit.beta3);
        report["beta3_stderr_cm2_per_s"] = sk::units::cm2ps_from_m2ps(fit.beta3_stderr);
        report["n0_thermal_cm2"] = sk::units::per_cm2_from_per_m2(fit.n0_thermal);
        report["n0_heated_cm2"] = sk::units::per_cm2_from_per_m2(fit.n0_heated);
        report["parameters_order"] =
            json::array({"beta2_cm2_per_s", "beta3_cm2_per_s", "n0_thermal_cm2", "n0_heated_cm2"});
        const double scale[4] = {1e4, 1e4, 1e-4, 1e-4};  // SI -> report units
        json cov = json::array();
        for (int i = 0; i < 4; ++i) {
            json row = json::array();
            for (int j = 0; j < 4; ++j) row.push_back(fit.covariance(i, j) * scale[i] * scale[j]);
            cov.push_back(row);
        }
        report["covariance"] = cov;
        report["initial_fractions_thermal"] = dist_thermal.fractions;
        report["initial_fractions_heated"] = dist_heated.fractions;
        report["reduced_chi2"] = fit.diagnostics.reduced_chi2;
        report["iterations"] = fit.diagnostics.iterations;
        report["gradient_norm"] = fit.diagnostics.gradient_norm;
        report["condition_number"] = std::isfinite(fit.diagnostics.condition_number)
                                         ? json(fit.diagnostics.condition_number)
                                         : json("inf");
        report["rank_deficient"] = fit.diagnostics.rank_deficient;
        report["converged"] = fit.diagnostics.converged;
        converged = fit.diagnostics.converged;
        sk::io::write_text_file(out_path, report.dump(2) + "\n");
        write_manifest(out_path, "fit",
                       json{{"mode", "dual"}, {"v_cut", v_cut}, {"heated_f0", heated_f0}},
                       json{{"thermal", thermal_path}, {"heated", heated_path}, {"config", config_path}},
                       {out_path}, 0);
    }
    return converged ? kExitOk : kExitNonConverged;
}

// ------------------------------------------------------------- scan-dipole --
int run_scan_dipole(const std::string& config_path, int channel_id, double d_min_debye,
                    double d_max_debye, int points, double t_gas_nk, const std::string& mode,
                    double window_lo_debye, double window_hi_debye, double r_abs_nm,
                    const std::string& out_path) {
    if (points < 5) throw std::invalid_argument("scan-dipole: need --points >= 5");
    if (!(d_min_debye < d_max_debye))
        throw std::invalid_argument("scan-dipole: need d-min < d-max");
    const sk::ExperimentConfig cfg = sk::io::load_experiment_config(config_path);
    const sk::Channel channel = static_cast<sk::Channel>(channel_id);
    const double t_gas =
        t_gas_nk > 0.0 ? sk::units::kelvin_from_nk(t_gas_nk) : cfg.temperature;
    if (t_gas <= 0.0) throw std::invalid_argument("scan-dipole: gas temperature must be > 0");

    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        grid[static_cast<std::size_t>(i)] =
            sk::units::cm_from_debye(d_min_debye + (d_max_debye - d_min_debye) * i / (points - 1));
    const double wlo =
        sk::units::cm_from_debye(window_lo_debye > 0.0 ? window_lo_debye : d_min_debye);
    const double whi =
        sk::units::cm_from_debye(window_hi_debye > 0.0 ? window_hi_debye : d_max_debye);

    sk::RateOptions opts;
    opts.r_abs = r_abs_nm * 1e-9;
    const sk::RateVsDipole scan =
        sk::dipole_scan(channel, grid, t_gas, cfg.molecule.mass / 2.0, cfg.molecule.c6, wlo, whi, opts);

    const bool to2d = mode == "2d";
    const double a_ho = sk::axial_oscillator_length(cfg);
    std::vector<std::string> header = {"d_debye",
                                       to2d ? "beta_cm2_per_s" : "beta_cm3_per_s",
                                       "barrier_uK", "barrier_nm", "transmission"};
    std::vector<std::vector<double>> rows;
    for (const auto& pt : scan.points) {
        const double beta = to2d ? sk::units::cm2ps_from_m2ps(sk::convert_beta_3d_to_2d(pt.beta3d, a_ho))
                                 : sk::units::cm3ps_from_m3ps(pt.beta3d);
        rows.push_back({sk::units::debye_from_cm(pt.dipole), beta,
                        sk::units::uk_from_joule(pt.barrier_height), pt.barrier_radius * 1e9,
                        pt.transmission});
    }
    sk::io::write_csv(out_path, header, rows);

    json slope;
    slope["slope_log_beta_vs_log_d"] = scan.slope;
    slope["window_lo_debye"] = sk::units::debye_from_cm(scan.window_lo);
    slope["window_hi_debye"] = sk::units::debye_from_cm(scan.window_hi);
    slope["window_points"] = scan.window_points;
    slope["channel"] = channel_id;
    slope["mode"] = mode;
    slope["t_gas_nk"] = sk::units::nk_from_kelvin(t_gas);
    fs::path slope_path = fs::path(out_path);
    slope_path.replace_extension(".slope.json");
    sk::io::write_text_file(slope_path, slope.dump(2) + "\n");

    json params = slope;
    params["d_min_debye"] = d_min_debye;
    params["d_max_debye"] = d_max_debye;
    params["points"] = points;
    params["r_abs_nm"] = r_abs_nm;
    write_manifest(out_path, "scan-dipole", params, json{{"config", config_path}},
                   {out_path, slope_path.string()}, 0);
    return kExitOk;
}

// ----------------------------------------------------------------- bandmap --
int run_bandmap(const std::string& image_path, const std::string& trace_path,
                double calib_hbark_per_px, double rms_width_px, double fixed_sigma,
                const std::string& out_path, std::string overlay_path) {
    sk::MomentumTrace trace;
    json inputs = json::object();
    if (!image_path.empty()) {
        if (calib_hbark_per_px <= 0.0)
            throw std::invalid_argument("bandmap: --calib-hbark-per-px required with --image");
        sk::ODImage img = sk::io::read_image(image_path);
        img.momentum_per_pixel = calib_hbark_per_px;
        trace = sk::transverse_average(img, rms_width_px);
        inputs["image"] = image_path;
    } else if (!trace_path.empty()) {
        trace = sk::io::load_trace(trace_path);
        inputs["trace"] = trace_path;
    } else {
        throw std::invalid_argument("bandmap: need --image or --trace");
    }

    sk::PopulationFitOptions opts;
    if (fixed_sigma >= 0.0) opts.fixed_sigma = fixed_sigma;
    const sk::ZonePopulations pops = sk::fit_populations(trace, opts);

    json report;
    report["fractions"] = {{"n0", pops.fractions[0]}, {"n1", pops.fractions[1]},
                           {"n2", pops.fractions[2]}};
    report["uncertainties"] = {{"n0", pops.uncertainties[0]}, {"n1", pops.uncertainties[1]},
                               {"n2", pops.uncertainties[2]}};
    report["resolution_hbark"] = pops.resolution;
    report["amplitude"] = pops.amplitude;
    report["offset"] = pops.offset;
    report["center_hbark"] = pops.center;
    report["residual_norm"] = pops.residual_norm;
    report["converged"] = pops.converged;
    sk::io::write_text_file(out_path, report.dump(2) + "\n");

    if (overlay_path.empty()) {
        fs::path p = fs::path(out_path);
        p.replace_extension(".model.csv");
        overlay_path = p.string();
    }
    const sk::MomentumTrace overlay =
        sk::model_trace(pops.fractions, pops.resolution, pops.amplitude, pops.offset,
                        trace.momentum, pops.center);
    sk::io::save_trace(overlay_path, overlay);

    write_manifest(out_path, "bandmap",
                   json{{"calib_hbark_per_px", calib_hbark_per_px},
                        {"rms_width_px", rms_width_px},
                        {"fixed_sigma_hbark", fixed_sigma}},
                   inputs, {out_path, overlay_path}, 0);
    return pops.converged ? kExitOk : kExitNonConverged;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stereokin: quantized-stereodynamics loss toolkit for quasi-2D dipolar gases"};
    app.set_version_flag("--version", STEREOKIN_VERSION);
    app.require_subcommand(1);

    // channels
    auto* c_ch = app.add_subcommand("channels", "allowed collision channels for a molecule pair");
    std::string ch_internal = "same";
    int ch_v1 = 0, ch_v2 = 0, ch_lmax = 1, ch_mmax = 1;
    std::string ch_format = "text", ch_out;
    c_ch->add_option("--internal", ch_internal, "internal states: same|different")
        ->check(CLI::IsMember({"same", "different"}));
    c_ch->add_option("--v1", ch_v1, "lattice level of molecule 1");
    c_ch->add_option("--v2", ch_v2, "lattice level of molecule 2");
    c_ch->add_option("--l-max", ch_lmax, "max 3D angular momentum label");
    c_ch->add_option("--m-max", ch_mmax, "max |M|");
    c_ch->add_option("--format", ch_format)->check(CLI::IsMember({"text", "json"}));
    c_ch->add_option("--out", ch_out, "output path (default stdout)");

    // occupancy
    auto* c_occ = app.add_subcommand("occupancy", "lattice-level occupation table (CSV)");
    std::string occ_config, occ_out = "occupancy.csv";
    double occ_t_nk = -1.0, occ_nu_khz = -1.0, occ_p = 0.0;
    int occ_vcut = 2;
    c_occ->add_option("--config", occ_config, "experiment config JSON");
    c_occ->add_option("--temperature-nk", occ_t_nk, "gas temperature, nK");
    c_occ->add_option("--nu-z-khz", occ_nu_khz, "axial lattice frequency, kHz");
    c_occ->add_option("--vcut", occ_vcut, "top aggregated level");
    c_occ->add_option("--parametric-p", occ_p, "v0 -> v2 transfer fraction");
    c_occ->add_option("--out", occ_out);

    // cloud
    auto* c_cloud = app.add_subcommand("cloud", "layer stack and density summary (JSON)");
    std::string cloud_config, cloud_out = "cloud.json";
    c_cloud->add_option("--config", cloud_config)->required();
    c_cloud->add_option("--out", cloud_out);

    // simulate
    auto* c_sim = app.add_subcommand("simulate", "integrate the loss model (CSV trajectory)");
    std::string sim_config, sim_rates, sim_out = "trajectory.csv", sim_grid = "linear";
    double sim_tmax = 0.0, sim_p = 0.0, sim_f0 = 0.0, sim_noise = 0.0;
    int sim_points = 60, sim_vcut = 2;
    std::uint64_t sim_seed = 0;
    c_sim->add_option("--config", sim_config)->required();
    c_sim->add_option("--rates", sim_rates, "rates JSON")->required();
    c_sim->add_option("--out", sim_out);
    c_sim->add_option("--tmax-s", sim_tmax, "hold time; default 3 characteristic times");
    c_sim->add_option("--points", sim_points)->check(CLI::PositiveNumber);
    c_sim->add_option("--grid", sim_grid)->check(CLI::IsMember({"linear", "log"}));
    c_sim->add_option("--vcut", sim_vcut);
    c_sim->add_option("--parametric-p", sim_p, "v0 -> v2 transfer fraction");
    c_sim->add_option("--heated-f0", sim_f0, "target ground fraction after heating");
    c_sim->add_option("--noise-fraction", sim_noise, "multiplicative noise; emits a dataset CSV");
    c_sim->add_option("--seed", sim_seed);

    // fit
    auto* c_fit = app.add_subcommand("fit", "rate-constant extraction (JSON report)");
    std::string fit_thermal, fit_heated, fit_single, fit_config, fit_out = "fit.json";
    double fit_f0 = 0.5, fit_ib2 = 5e-9, fit_ib3 = 2e-9;
    int fit_vcut = 2;
    c_fit->add_option("--thermal", fit_thermal, "thermal loss curve CSV");
    c_fit->add_option("--heated", fit_heated, "parametrically heated loss curve CSV");
    c_fit->add_option("--single", fit_single, "single-curve CSV (single-beta mode)");
    c_fit->add_option("--config", fit_config);
    c_fit->add_option("--out", fit_out);
    c_fit->add_option("--vcut", fit_vcut);
    c_fit->add_option("--heated-f0", fit_f0, "assumed ground fraction of the heated curve");
    c_fit->add_option("--init-beta2-cm2-per-s", fit_ib2);
    c_fit->add_option("--init-beta3-cm2-per-s", fit_ib3);

    // scan-dipole
    auto* c_scan = app.add_subcommand("scan-dipole", "rate constant vs induced dipole (CSV)");
    std::string scan_config, scan_out = "scan.csv", scan_mode = "3d";
    int scan_channel = 3, scan_points = 21;
    double scan_dmin = 0.0, scan_dmax = 0.2, scan_tnk = -1.0;
    double scan_wlo = 0.0, scan_whi = 0.0, scan_rabs = 1.0;
    c_scan->add_option("--config", scan_config)->required();
    c_scan->add_option("--channel", scan_channel)->check(CLI::Range(1, 3));
    c_scan->add_option("--d-min-debye", scan_dmin);
    c_scan->add_option("--d-max-debye", scan_dmax);
    c_scan->add_option("--points", scan_points);
    c_scan->add_option("--t-gas-nk", scan_tnk, "collision temperature; default config value");
    c_scan->add_option("--mode", scan_mode)->check(CLI::IsMember({"2d", "3d"}));
    c_scan->add_option("--window-lo-debye", scan_wlo, "slope-fit window low edge");
    c_scan->add_option("--window-hi-debye", scan_whi, "slope-fit window high edge");
    c_scan->add_option("--r-abs-nm", scan_rabs, "absorbing boundary radius");
    c_scan->add_option("--out", scan_out);

    // bandmap
    auto* c_band = app.add_subcommand("bandmap", "Brillouin-zone population extraction (JSON)");
    std::string band_image, band_trace, band_out = "populations.json", band_overlay;
    double band_calib = 0.0, band_rms = 10.0, band_sigma = -1.0;
    c_band->add_option("--image", band_image, "OD image (CSV matrix or STKIMG01 binary)");
    c_band->add_option("--trace", band_trace, "pre-averaged trace CSV (p_hbark, od)");
    c_band->add_option("--calib-hbark-per-px", band_calib, "momentum per pixel along z");
    c_band->add_option("--rms-width-px", band_rms, "transverse averaging half-window");
    c_band->add_option("--fixed-sigma-hbark", band_sigma, "pin the resolution instead of fitting");
    c_band->add_option("--out", band_out);
    c_band->add_option("--overlay", band_overlay, "fitted-model trace CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(c_ch)) {
            sk::PairConfiguration pair{ch_internal == "same", ch_v1, ch_v2};
            return run_channels(pair, ch_lmax, ch_mmax, ch_format, ch_out);
        }
        if (app.got_subcommand(c_occ))
            return run_occupancy(occ_config, occ_t_nk, occ_nu_khz, occ_vcut, occ_p, occ_out);
        if (app.got_subcommand(c_cloud)) return run_cloud(cloud_config, cloud_out);
        if (app.got_subcommand(c_sim))
            return run_simulate(sim_config, sim_rates, sim_out, sim_tmax, sim_points, sim_grid,
                                sim_vcut, sim_p, sim_f0, sim_noise, sim_seed);
        if (app.got_subcommand(c_fit))
            return run_fit(fit_thermal, fit_heated, fit_single, fit_config, fit_out, fit_vcut,
                           fit_f0, fit_ib2, fit_ib3);
        if (app.got_subcommand(c_scan))
            return run_scan_dipole(scan_config, scan_channel, scan_dmin, scan_dmax, scan_points,
                                   scan_tnk, scan_mode, scan_wlo, scan_whi, scan_rabs, scan_out);
        if (app.got_subcommand(c_band))
            return run_bandmap(band_image, band_trace, band_calib, band_rms, band_sigma, band_out,
                               band_overlay);
    } catch (const sk::integration_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const sk::io_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::out_of_range& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
