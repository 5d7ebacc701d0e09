#include "gasnet/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace gasnet {

using nlohmann::json;

namespace {
json read_json(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw NetworkError("cannot open " + file.string());
    json j;
    in >> j;
    return j;
}
}  // namespace

GasNetwork load_network(const std::filesystem::path& file) {
    json j = read_json(file);
    const int ref = j.at("reference_node").get<int>();
    if (ref != 0) throw NetworkError("reference node must be node 0");
    const double p0 = j.at("p0").get<double>();
    std::map<int, double> inj;
    int max_node = 0;
    for (const auto& nd : j.at("nodes")) {
        int id = nd.at("id").get<int>();
        inj[id] = nd.at("injection").get<double>();
        max_node = std::max(max_node, id);
    }
    std::vector<Pipeline> pipes;
    for (const auto& pl : j.at("pipelines")) {
        Pipeline p;
        p.id = pl.at("id").get<std::string>();
        p.from_node = pl.at("from").get<int>();
        p.to_node = pl.at("to").get<int>();
        p.c = pl.at("c").get<double>();
        p.alpha = pl.value("alpha", 1.0);
        p.kind = pl.at("changeable").get<bool>() ? PipeKind::Changeable : PipeKind::Fixed;
        max_node = std::max({max_node, p.from_node, p.to_node});
        pipes.push_back(p);
    }
    // fixed pipelines first (paper convention); stable within groups
    std::stable_sort(pipes.begin(), pipes.end(), [](const Pipeline& a, const Pipeline& b) {
        return (a.kind == PipeKind::Fixed) > (b.kind == PipeKind::Fixed);
    });
    Vec q = Vec::Zero(max_node);
    for (const auto& [id, v] : inj)
        if (id > 0) q[id - 1] = v;
    std::string name = j.value("name", file.stem().string());
    return GasNetwork(name, max_node + 1, p0, std::move(pipes), std::move(q));
}

namespace {
TopologyState topo_from_json(const json& jt, const GasNetwork& net) {
    TopologyState t = TopologyState::all_closed(net);
    const auto& states = jt.at("states");
    if (static_cast<int>(states.size()) != net.L_changeable())
        throw NetworkError("topology states must cover every changeable pipeline");
    for (size_t k = 0; k < states.size(); ++k) {
        std::string s = states[k].get<std::string>();
        if (s == "closed") t.closed[k] = true;
        else if (s == "open") t.closed[k] = false;
        else throw NetworkError("topology state must be open or closed");
    }
    if (jt.contains("flipped_pipes"))
        for (const auto& fp : jt.at("flipped_pipes"))
            t.orientation[fp.get<size_t>()] = -1;
    t.normalize(net);
    return t;
}
}  // namespace

Scenario load_scenario(const std::filesystem::path& file, const GasNetwork& net) {
    json j = read_json(file);
    Scenario s;
    s.name = j.value("name", file.stem().string());
    s.network_id = j.at("network_id").get<std::string>();
    s.h0_topology = topo_from_json(j.at("h0_topology"), net);
    s.h1_topology = topo_from_json(j.at("h1_topology"), net);
    s.rsd = j.at("rsd").get<double>();
    if (j.at("T_a").is_array())
        for (const auto& t : j.at("T_a")) s.T_a.push_back(t.get<int>());
    else
        s.T_a.push_back(j.at("T_a").get<int>());
    s.p_fa = j.at("p_fa").get<double>();
    s.runs = j.at("runs").get<int>();
    s.seed = j.at("seed").get<uint64_t>();
    s.placement = j.value("placement", std::string("standard"));
    if (j.contains("flip_pipes"))
        for (const auto& fp : j.at("flip_pipes")) s.flip_pipes.push_back(fp.get<int>());
    s.algorithm = j.value("algorithm", std::string("relaxed"));
    s.threshold_mode = j.value("threshold_mode", std::string("asymptotic"));
    return s;
}

Scenario load_scenario_with_network(const std::filesystem::path& file,
                                    const std::filesystem::path& networks_dir,
                                    std::unique_ptr<GasNetwork>& net_out) {
    json j = read_json(file);
    std::string nid = j.at("network_id").get<std::string>();
    std::filesystem::path npath = nid;
    if (!std::filesystem::exists(npath)) npath = networks_dir / (nid + ".json");
    if (!std::filesystem::exists(npath))
        throw NetworkError("network file not found: " + nid);
    net_out = std::make_unique<GasNetwork>(load_network(npath));
    return load_scenario(file, *net_out);
}

SensorPlacement placement_by_name(const GasNetwork& net, const std::string& name) {
    if (name == "standard") return SensorPlacement::standard(net);
    if (name == "all_pressure") return SensorPlacement::all_pressure(net);
    throw NetworkError("unknown placement name: " + name);
}

struct CsvWriter::Impl {
    std::ofstream out;
};

CsvWriter::CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header)
    : impl_(new Impl) {
    std::filesystem::create_directories(file.parent_path());
    impl_->out.open(file);
    if (!impl_->out) throw NetworkError("cannot write " + file.string());
    for (size_t i = 0; i < header.size(); ++i)
        impl_->out << header[i] << (i + 1 < header.size() ? "," : "\n");
}

CsvWriter::~CsvWriter() = default;

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i)
        impl_->out << cells[i] << (i + 1 < cells.size() ? "," : "\n");
}

std::string CsvWriter::num(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace gasnet
