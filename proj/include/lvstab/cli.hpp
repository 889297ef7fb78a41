#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lvstab/grid.hpp"

namespace lvstab::cli {

/// Axes of a parameter sweep. An absent axis uses the scalar value from the
/// run configuration; a present but empty axis is an error ("empty sweep").
struct SweepAxes {
    std::optional<std::vector<double>> a;
    std::optional<std::vector<double>> b;
    std::optional<std::vector<double>> c;
    std::optional<std::vector<int>> n;
};

/// Everything a subcommand needs. Field names match the JSON config keys.
struct RunConfig {
    std::string domain = "interval:0:pi";
    int n = 200;
    int ny = 0;  ///< rectangle only; 0 means same as n
    std::string a = "2";
    double a0 = 2.0;
    double a1 = 0.0;
    double b = 0.5;
    double c = 1.0;
    double tol = 1e-10;
    int k = 6;
    std::string weight = "a-s-theta";
    double dt = 1e-3;
    double t_end = 20.0;
    double amplitude = 1e-3;
    std::string perturbation = "random";
    int store_every = 100;
    std::vector<double> snapshots;
    std::uint64_t seed = 0;
    std::string format = "csv";
    int workers = 1;
    bool timings = false;
    std::string out = "out";
    SweepAxes sweep;
};

/// "interval:x0:x1" or "rectangle:x0:x1:y0:y1"; endpoints accept "pi",
/// "2pi", "pi/2" style tokens.
Domain parse_domain(const std::string& spec, int n, int ny);

/// "v1,v2,..." or an inclusive range "start:stop:step".
std::vector<double> parse_list(const std::string& text);

/// Throws InvalidArgument on the first problem; runs no numerical work.
void validate(const RunConfig& config, const std::string& command);

Grid make_grid(const RunConfig& config);

/// Growth rate from the `a` descriptor: a number, "const[:v]", "sin" /
/// "profile:sin" (a0 + a1 sin(pi (x - x0) / L), tensorized in 2D) or
/// "file:<path>" (a Field CSV for the same grid).
Field make_growth(const RunConfig& config, const Grid& grid);

/// Overlays the keys of a JSON config file onto `config`.
void load_config_file(RunConfig& config, const std::filesystem::path& path);

/// Entry point. Exit codes: 0 success, 1 usage or solver error, 2 subcritical
/// growth rate (no positive steady state).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lvstab::cli
