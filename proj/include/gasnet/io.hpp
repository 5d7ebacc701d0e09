#pragma once

#include "gasnet/network.hpp"
#include "gasnet/sensing.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace gasnet {

GasNetwork load_network(const std::filesystem::path& file);

/// Scenario: one verification experiment configuration.
struct Scenario {
    std::string name;
    std::string network_id;       // path or id resolved against the networks dir
    TopologyState h0_topology;
    TopologyState h1_topology;
    double rsd = 0.05;
    std::vector<int> T_a;
    double p_fa = 1e-3;
    int runs = 1000;
    uint64_t seed = 1;
    std::string placement = "standard";   // standard | all_pressure
    std::vector<int> flip_pipes;          // candidate orientation flips
    std::string algorithm = "relaxed";    // standard | relaxed | efficient | wald
    std::string threshold_mode = "asymptotic";  // asymptotic | calibrated
};

Scenario load_scenario(const std::filesystem::path& file, const GasNetwork& net);
Scenario load_scenario_with_network(const std::filesystem::path& file,
                                    const std::filesystem::path& networks_dir,
                                    std::unique_ptr<GasNetwork>& net_out);

SensorPlacement placement_by_name(const GasNetwork& net, const std::string& name);

struct CsvWriter {
    explicit CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header);
    ~CsvWriter();
    void row(const std::vector<std::string>& cells);
    static std::string num(double v);

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace gasnet
