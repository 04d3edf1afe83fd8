#pragma once

#include "dnlslab/dnls.hpp"

#include <filesystem>
#include <string>

namespace dnls {

// Flat key/value scenario config with one list section (`nonlinearity = [...]`).
// Unknown keys are rejected before any compute.
struct Scenario {
    GridSpec grid{1, 512, 16.0, 64};
    double s = 2.25;
    double sigma = 0.4;
    double C_scale = 1.0;
    double tol = 1e-4;
    std::uint64_t seed = 0;
    Nonlinearity nonlinearity;

    std::string data = "random";  // random | gaussian | zero | dnf1:<path>
    double data_kmax = 2.0;
    double data_amplitude = 1.0;

    // linear-solve extras (cmd_linear)
    double gamma = 0.5;
    double bump_width = 0.0; // 0: L/8

    static Scenario parse(const std::string& text);
    static Scenario load(const std::filesystem::path& path);

    PipelineConfig pipeline_config() const;
    Field make_datum() const;
};

} // namespace dnls
