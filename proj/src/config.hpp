#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "measure.hpp"

namespace freesing {

struct GridSpec {
    double lo = 0.0, hi = 0.0;
    int count = 0;
    std::vector<double> points() const;
};

struct McBudget {
    int replicas = 100;
    int bins = 61;
    double lo = 0.0, hi = 0.0;  // histogram range; lo == hi means cover the support
    int mcmc_steps = 0;         // 0: 10 n
    int burn_in = 0;            // 0: default sweeps
    // "quantiles" uses a deterministic M from the quantiles of mu0; "ue" samples
    // the unitary ensemble of the potential.
    std::string initial = "quantiles";
};

struct RunConfig {
    std::optional<Measure> measure;
    std::optional<Potential> potential;
    std::optional<SingularPoint> singular;  // already attached to *measure when set
    std::vector<double> tau;
    std::optional<double> t, tprime;
    std::vector<int> n;
    std::optional<GridSpec> grid;
    std::optional<std::pair<double, double>> window;
    McBudget mc;
    std::vector<double> times;  // NIBM observation times
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

// Numbers may be given as TOML numbers or as constant expressions ("1/(2*pi)").
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

GridSpec parse_grid(const std::string& text);                      // LO:HI:COUNT
std::pair<double, double> parse_window(const std::string& text);   // E1:E2

} // namespace freesing
