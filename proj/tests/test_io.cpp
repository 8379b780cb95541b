#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "stereokin/io.hpp"
#include "stereokin/random.hpp"

using namespace stereokin;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("stereokin_test_" + std::to_string(std::rand()) + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("experiment config JSON") {
    TempDir tmp;
    const fs::path cfg_path = tmp.path / "config.json";
    std::ofstream(cfg_path) << R"({
      "molecule": {"label": "KRb", "mass_u": 127, "c6_au": 16130},
      "trap": {"nu_z_hz": 23000, "nu_r_hz": 36, "lattice_wavelength_nm": 1064},
      "temperature_nk": 800,
      "dipole_debye": 0.158,
      "total_molecules": 34000,
      "stack": {"alpha0": 23}
    })";

    const ExperimentConfig cfg = io::load_experiment_config(cfg_path);
    CHECK(cfg.molecule.label == "KRb");
    CHECK(units::u_from_kg(cfg.molecule.mass) == Catch::Approx(127.0));
    CHECK(units::au_from_jm6(cfg.molecule.c6) == Catch::Approx(16130.0));
    CHECK(cfg.trap.nu_z == 23000.0);
    CHECK(units::nk_from_kelvin(cfg.temperature) == Catch::Approx(800.0));
    CHECK(units::debye_from_cm(cfg.induced_dipole) == Catch::Approx(0.158));
    CHECK(cfg.stack.alpha0 == 23.0);

    SECTION("round trip through to_json") {
        const auto j = io::experiment_config_to_json(cfg);
        const ExperimentConfig back = io::parse_experiment_config(j);
        CHECK(back.molecule.mass == Catch::Approx(cfg.molecule.mass).epsilon(1e-12));
        CHECK(back.temperature == Catch::Approx(cfg.temperature).epsilon(1e-12));
        CHECK(back.induced_dipole == Catch::Approx(cfg.induced_dipole).epsilon(1e-12));
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(io::load_experiment_config(tmp.path / "nope.json"), io_error);
    }
    SECTION("malformed JSON") {
        const fs::path bad = tmp.path / "bad.json";
        std::ofstream(bad) << "{ not json";
        CHECK_THROWS_AS(io::load_experiment_config(bad), io_error);
    }
    SECTION("missing required field") {
        const fs::path bad = tmp.path / "missing.json";
        std::ofstream(bad) << R"({"trap": {"nu_z_hz": 23000}})";
        CHECK_THROWS_AS(io::load_experiment_config(bad), io_error);
    }
}

TEST_CASE("rate constants JSON") {
    TempDir tmp;
    const fs::path p = tmp.path / "rates.json";
    std::ofstream(p) << R"({"beta2_cm2_per_s": 8e-9, "beta3_cm2_per_s": 2e-9})";
    const RateConstants rc = io::load_rate_constants(p);
    CHECK(units::cm2ps_from_m2ps(rc.beta2) == Catch::Approx(8e-9));
    CHECK(units::cm2ps_from_m2ps(rc.beta3) == Catch::Approx(2e-9));
    CHECK(rc.beta1 == 0.0);

    const fs::path neg = tmp.path / "neg.json";
    std::ofstream(neg) << R"({"beta2_cm2_per_s": -1e-9, "beta3_cm2_per_s": 2e-9})";
    CHECK_THROWS_AS(io::load_rate_constants(neg), std::invalid_argument);
}

TEST_CASE("time series CSV") {
    TempDir tmp;
    const fs::path p = tmp.path / "curve.csv";

    TimeSeries ts;
    ts.samples = {{0.0, 1.15e11, 5e9}, {2.0, 9.7e10, 4.8e9}, {5.5, 7.2e10, 3.6e9}};
    io::save_time_series(p, ts);
    const TimeSeries back = io::load_time_series(p);
    REQUIRE(back.size() == ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        CHECK(back.samples[i].t == Catch::Approx(ts.samples[i].t).epsilon(1e-10));
        CHECK(back.samples[i].n == Catch::Approx(ts.samples[i].n).epsilon(1e-10));
        CHECK(back.samples[i].sigma == Catch::Approx(ts.samples[i].sigma).epsilon(1e-10));
    }

    SECTION("missing column") {
        const fs::path bad = tmp.path / "bad.csv";
        std::ofstream(bad) << "time,density\n0,1\n";
        CHECK_THROWS_AS(io::load_time_series(bad), io_error);
    }
    SECTION("non-numeric cell") {
        const fs::path bad = tmp.path / "nan.csv";
        std::ofstream(bad) << "t_s,n_cm2\n0,abc\n";
        CHECK_THROWS_AS(io::load_time_series(bad), io_error);
    }
    SECTION("empty file") {
        const fs::path bad = tmp.path / "empty.csv";
        std::ofstream(bad) << "";
        CHECK_THROWS_AS(io::load_time_series(bad), io_error);
    }
    SECTION("comments and blank lines are skipped") {
        const fs::path ok = tmp.path / "comments.csv";
        std::ofstream(ok) << "# loss curve\nt_s,n_cm2,sigma_cm2\n\n0,1.0e7,5e5\n1,9.0e6,4e5\n";
        CHECK(io::load_time_series(ok).size() == 2);
    }
}

TEST_CASE("image container round trip") {
    TempDir tmp;
    Rng rng(7);
    ODImage img;
    img.rows = 17;
    img.cols = 23;
    img.momentum_per_pixel = 0.1;
    for (int i = 0; i < 17 * 23; ++i) img.data.push_back(rng.normal());

    SECTION("binary") {
        const fs::path p = tmp.path / "img.bin";
        io::write_image_binary(p, img);
        const ODImage back = io::read_image(p);  // auto-detects the magic
        REQUIRE(back.rows == img.rows);
        REQUIRE(back.cols == img.cols);
        for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == img.data[i]);
    }
    SECTION("csv matrix") {
        const fs::path p = tmp.path / "img.csv";
        std::vector<std::vector<double>> rows;
        std::string text;
        for (int r = 0; r < img.rows; ++r) {
            for (int c = 0; c < img.cols; ++c)
                text += io::format_double(img.at(r, c)) + (c + 1 < img.cols ? "," : "");
            text += "\n";
        }
        io::write_text_file(p, text);
        const ODImage back = io::read_image(p);
        REQUIRE(back.rows == img.rows);
        REQUIRE(back.cols == img.cols);
        for (std::size_t i = 0; i < img.data.size(); ++i)
            CHECK(back.data[i] == Catch::Approx(img.data[i]).epsilon(1e-11));
    }
    SECTION("truncated binary") {
        const fs::path p = tmp.path / "trunc.bin";
        io::write_image_binary(p, img);
        fs::resize_file(p, fs::file_size(p) - 64);
        CHECK_THROWS_AS(io::read_image_binary(p), io_error);
    }
}

TEST_CASE("trajectory CSV carries unit-suffixed headers") {
    TempDir tmp;
    Trajectory traj;
    traj.samples = {{0.0, {1e11, 2e10, 1e10}}, {1.0, {9e10, 1.8e10, 0.9e10}}};
    const fs::path p = tmp.path / "traj.csv";
    io::save_trajectory(p, traj);
    const io::CsvTable table = io::read_csv(p);
    CHECK(table.column("t_s") == 0);
    CHECK(table.column("n0_cm2") == 1);
    CHECK(table.column("n1_cm2") == 2);
    CHECK(table.column("n2_cm2") == 3);
    CHECK(table.column("ntot_cm2") == 4);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0][4] == Catch::Approx(1.3e7));
}
