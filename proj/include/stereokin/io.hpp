#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stereokin/bandmap.hpp"
#include "stereokin/core.hpp"
#include "stereokin/fitting.hpp"
#include "stereokin/kinetics.hpp"

namespace stereokin {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace io {

using json = nlohmann::json;

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open file: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw io_error("malformed JSON in " + path.string() + ": " + e.what());
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write file: " + path.string());
    out << text;
}

// ---------------------------------------------------------------------------
// Experiment configuration. All keys carry explicit unit suffixes.
//
// {
//   "molecule": {"label": "KRb", "mass_u": 127, "c6_au": 16130},
//   "trap": {"nu_z_hz": 23000, "nu_r_hz": 36, "lattice_wavelength_nm": 1064},
//   "temperature_nk": 800,
//   "dipole_debye": 0.158,
//   "efield_v_per_m": 400000,          (optional, informational)
//   "total_molecules": 34000,
//   "stack": {"alpha0": 23},           (or {"rms_width_layers": 6.49})
//   "aho_reduced_mass": false          (optional)
// }
// ---------------------------------------------------------------------------

inline ExperimentConfig parse_experiment_config(const json& j) {
    ExperimentConfig cfg;
    try {
        if (j.contains("molecule")) {
            const json& m = j.at("molecule");
            if (m.contains("label")) cfg.molecule.label = m.at("label").get<std::string>();
            if (m.contains("mass_u"))
                cfg.molecule.mass = units::kg_from_u(m.at("mass_u").get<double>());
            if (m.contains("c6_au"))
                cfg.molecule.c6 = units::jm6_from_au(m.at("c6_au").get<double>());
        }
        if (j.contains("trap")) {
            const json& t = j.at("trap");
            if (t.contains("nu_z_hz")) cfg.trap.nu_z = t.at("nu_z_hz").get<double>();
            if (t.contains("nu_r_hz")) cfg.trap.nu_r = t.at("nu_r_hz").get<double>();
            if (t.contains("lattice_wavelength_nm"))
                cfg.trap.lattice_wavelength = t.at("lattice_wavelength_nm").get<double>() * 1e-9;
        }
        cfg.temperature = units::kelvin_from_nk(j.at("temperature_nk").get<double>());
        cfg.induced_dipole = units::cm_from_debye(j.value("dipole_debye", 0.0));
        cfg.efield = j.value("efield_v_per_m", 0.0);
        cfg.total_molecules = j.value("total_molecules", 0.0);
        if (j.contains("stack")) {
            const json& s = j.at("stack");
            cfg.stack.alpha0 = s.value("alpha0", 0.0);
            cfg.stack.rms_width_layers = s.value("rms_width_layers", 0.0);
        }
        cfg.aho_reduced_mass = j.value("aho_reduced_mass", false);
    } catch (const json::exception& e) {
        throw io_error(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return parse_experiment_config(read_json_file(path));
}

inline json experiment_config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["molecule"] = {{"label", cfg.molecule.label},
                     {"mass_u", units::u_from_kg(cfg.molecule.mass)},
                     {"c6_au", units::au_from_jm6(cfg.molecule.c6)}};
    j["trap"] = {{"nu_z_hz", cfg.trap.nu_z},
                 {"nu_r_hz", cfg.trap.nu_r},
                 {"lattice_wavelength_nm", cfg.trap.lattice_wavelength * 1e9}};
    j["temperature_nk"] = units::nk_from_kelvin(cfg.temperature);
    j["dipole_debye"] = units::debye_from_cm(cfg.induced_dipole);
    if (cfg.efield > 0.0) j["efield_v_per_m"] = cfg.efield;
    j["total_molecules"] = cfg.total_molecules;
    if (cfg.stack.configured()) {
        json s;
        if (cfg.stack.alpha0 > 0.0) s["alpha0"] = cfg.stack.alpha0;
        if (cfg.stack.rms_width_layers > 0.0) s["rms_width_layers"] = cfg.stack.rms_width_layers;
        j["stack"] = s;
    }
    j["aho_reduced_mass"] = cfg.aho_reduced_mass;
    return j;
}

// Rates JSON: {"beta1_cm2_per_s": ..., "beta2_cm2_per_s": ..., "beta3_cm2_per_s": ...}
inline RateConstants parse_rate_constants(const json& j) {
    RateConstants rc;
    try {
        rc.beta1 = units::m2ps_from_cm2ps(j.value("beta1_cm2_per_s", 0.0));
        rc.beta2 = units::m2ps_from_cm2ps(j.at("beta2_cm2_per_s").get<double>());
        rc.beta3 = units::m2ps_from_cm2ps(j.at("beta3_cm2_per_s").get<double>());
    } catch (const json::exception& e) {
        throw io_error(std::string("rates: ") + e.what());
    }
    rc.validate();
    return rc;
}

inline RateConstants load_rate_constants(const std::filesystem::path& path) {
    return parse_rate_constants(read_json_file(path));
}

// ---------------------------------------------------------------------------
// CSV helpers. Comma separated, one header row, '#' comment lines skipped.
// ---------------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open file: " + path.string());
    CsvTable table;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!have_header) {
            table.header = cells;
            have_header = true;
            continue;
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const std::string& c : cells) {
            try {
                row.push_back(std::stod(c));
            } catch (const std::exception&) {
                throw io_error(path.string() + ":" + std::to_string(lineno) +
                               ": non-numeric cell '" + c + "'");
            }
        }
        if (row.size() != table.header.size())
            throw io_error(path.string() + ":" + std::to_string(lineno) + ": ragged row");
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw io_error(path.string() + ": empty CSV");
    return table;
}

inline std::string csv_to_string(const std::vector<std::string>& header,
                                 const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        out += header[i];
        out += (i + 1 < header.size()) ? ',' : '\n';
    }
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += format_double(row[i]);
            out += (i + 1 < row.size()) ? ',' : '\n';
        }
    }
    return out;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    write_text_file(path, csv_to_string(header, rows));
}

// Loss-curve dataset: t_s, n_cm2, sigma_cm2 (sigma column optional)
inline TimeSeries load_time_series(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    const int ct = table.column("t_s"), cn = table.column("n_cm2"), cs = table.column("sigma_cm2");
    if (ct < 0 || cn < 0)
        throw io_error(path.string() + ": expected columns t_s, n_cm2[, sigma_cm2]");
    TimeSeries ts;
    ts.label = path.stem().string();
    for (const auto& row : table.rows) {
        TimeSeries::Sample s;
        s.t = row[static_cast<std::size_t>(ct)];
        s.n = units::per_m2_from_per_cm2(row[static_cast<std::size_t>(cn)]);
        s.sigma = cs >= 0 ? units::per_m2_from_per_cm2(row[static_cast<std::size_t>(cs)]) : 0.0;
        ts.samples.push_back(s);
    }
    ts.validate();
    return ts;
}

inline void save_time_series(const std::filesystem::path& path, const TimeSeries& ts) {
    std::vector<std::vector<double>> rows;
    rows.reserve(ts.samples.size());
    for (const auto& s : ts.samples)
        rows.push_back({s.t, units::per_cm2_from_per_m2(s.n), units::per_cm2_from_per_m2(s.sigma)});
    write_csv(path, {"t_s", "n_cm2", "sigma_cm2"}, rows);
}

inline void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
    std::vector<std::string> header = {"t_s"};
    const std::size_t levels = traj.samples.empty() ? 0 : traj.samples.front().n.size();
    for (std::size_t v = 0; v < levels; ++v) header.push_back("n" + std::to_string(v) + "_cm2");
    header.push_back("ntot_cm2");
    std::vector<std::vector<double>> rows;
    rows.reserve(traj.samples.size());
    for (const auto& s : traj.samples) {
        std::vector<double> row = {s.t};
        for (double nv : s.n) row.push_back(units::per_cm2_from_per_m2(nv));
        row.push_back(units::per_cm2_from_per_m2(s.total()));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

// ---------------------------------------------------------------------------
// OD images: plain CSV matrix, or the little-endian binary container
//   8-byte magic "STKIMG01", int64 rows, int64 cols, float64 row-major data.
// Calibration travels separately (CLI flags); the container is data only.
// ---------------------------------------------------------------------------

inline constexpr char kImageMagic[8] = {'S', 'T', 'K', 'I', 'M', 'G', '0', '1'};

inline ODImage read_image_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open file: " + path.string());
    ODImage img;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        int cols = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                img.data.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw io_error(path.string() + ":" + std::to_string(lineno) + ": bad cell");
            }
            ++cols;
        }
        if (img.rows == 0) img.cols = cols;
        else if (cols != img.cols)
            throw io_error(path.string() + ":" + std::to_string(lineno) + ": ragged matrix row");
        ++img.rows;
    }
    if (img.rows == 0) throw io_error(path.string() + ": empty image");
    return img;
}

inline ODImage read_image_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open file: " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kImageMagic, 8) != 0)
        throw io_error(path.string() + ": not a STKIMG01 image");
    std::int64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    if (!in || rows <= 0 || cols <= 0 || rows * cols > (1ll << 30))
        throw io_error(path.string() + ": bad image dimensions");
    ODImage img;
    img.rows = static_cast<int>(rows);
    img.cols = static_cast<int>(cols);
    img.data.resize(static_cast<std::size_t>(rows * cols));
    in.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size() * sizeof(double)));
    if (!in) throw io_error(path.string() + ": truncated image data");
    return img;
}

inline void write_image_binary(const std::filesystem::path& path, const ODImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write file: " + path.string());
    out.write(kImageMagic, 8);
    const std::int64_t rows = img.rows, cols = img.cols;
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size() * sizeof(double)));
}

inline ODImage read_image(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw io_error("cannot open file: " + path.string());
    char magic[8] = {};
    probe.read(magic, 8);
    probe.close();
    if (std::memcmp(magic, kImageMagic, 8) == 0) return read_image_binary(path);
    return read_image_csv(path);
}

// Momentum trace CSV: p_hbark, od
inline MomentumTrace load_trace(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    const int cp = table.column("p_hbark"), co = table.column("od");
    if (cp < 0 || co < 0) throw io_error(path.string() + ": expected columns p_hbark, od");
    MomentumTrace trace;
    for (const auto& row : table.rows) {
        trace.momentum.push_back(row[static_cast<std::size_t>(cp)]);
        trace.od.push_back(row[static_cast<std::size_t>(co)]);
    }
    trace.validate();
    return trace;
}

inline void save_trace(const std::filesystem::path& path, const MomentumTrace& trace) {
    std::vector<std::vector<double>> rows;
    rows.reserve(trace.momentum.size());
    for (std::size_t i = 0; i < trace.momentum.size(); ++i)
        rows.push_back({trace.momentum[i], trace.od[i]});
    write_csv(path, {"p_hbark", "od"}, rows);
}

}  // namespace io
}  // namespace stereokin
