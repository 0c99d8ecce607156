#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "convoy/formation.hpp"
#include "convoy/memory.hpp"
#include "convoy/reasoning.hpp"
#include "convoy/scenario.hpp"
#include "convoy/trace.hpp"

namespace py = pybind11;
using namespace convoy;

namespace {

ScenarioKind scenario_arg(const std::string& name) {
    const auto k = scenario_from_string(name);
    if (!k) throw py::value_error("unknown scenario '" + name + "'");
    return *k;
}

std::string run_summary_json(const std::string& scenario, std::uint64_t seed, std::optional<int> density,
                             std::optional<double> max_sim_time) {
    auto cfg = default_scenario(scenario_arg(scenario), seed);
    if (density) cfg.env_vehicle_count = *density;
    if (max_sim_time) cfg.max_sim_time = *max_sim_time;
    cfg.record_trace = false;
    RunSummary s;
    {
        py::gil_scoped_release release;
        s = run_scenario(cfg);
    }
    auto j = summary_to_json(s);
    for (const auto& [id, series] : s.pe_series) j["pe_series"][std::to_string(id)] = series;
    for (const auto& [id, series] : s.speed_series) j["speed_series"][std::to_string(id)] = series;
    return j.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multi-lane highway convoy simulator core";

    py::register_exception<Error>(m, "ConvoyError");

    py::enum_<DecisionAction>(m, "DecisionAction")
        .value("IDLE", DecisionAction::idle)
        .value("LANE_LEFT", DecisionAction::lane_left)
        .value("LANE_RIGHT", DecisionAction::lane_right)
        .value("FASTER", DecisionAction::faster)
        .value("SLOWER", DecisionAction::slower);

    py::enum_<Task>(m, "Task")
        .value("none", Task::none)
        .value("avoid_obstacles", Task::avoid_obstacles)
        .value("join_convoy", Task::join_convoy)
        .value("leave_convoy", Task::leave_convoy)
        .value("escort_switch", Task::escort_switch)
        .value("protected", Task::protected_vehicle);

    py::class_<HighwayConfig>(m, "HighwayConfig")
        .def(py::init<>())
        .def_readwrite("length", &HighwayConfig::length)
        .def_readwrite("lane_count", &HighwayConfig::lane_count)
        .def_readwrite("lane_width", &HighwayConfig::lane_width)
        .def_readwrite("max_speed", &HighwayConfig::max_speed)
        .def_readwrite("comm_range", &HighwayConfig::comm_range);

    py::class_<ControlWeights>(m, "ControlWeights")
        .def(py::init<>())
        .def_readwrite("w_f", &ControlWeights::w_f)
        .def_readwrite("w_b", &ControlWeights::w_b)
        .def_readwrite("w_fl", &ControlWeights::w_fl)
        .def_readwrite("w_bl", &ControlWeights::w_bl)
        .def_readwrite("w_fr", &ControlWeights::w_fr)
        .def_readwrite("w_br", &ControlWeights::w_br)
        .def_readwrite("w_y", &ControlWeights::w_y)
        .def_readwrite("w_v", &ControlWeights::w_v)
        .def_readwrite("d_safe", &ControlWeights::d_safe)
        .def_readwrite("acc", &ControlWeights::acc)
        .def_readwrite("dec", &ControlWeights::dec)
        .def_readwrite("v_desired", &ControlWeights::v_desired);

    py::class_<VehicleState>(m, "VehicleState")
        .def(py::init([](VehicleId id, int lane, double x, double y, double v) {
                 VehicleState s;
                 s.id = id;
                 s.lane = lane;
                 s.x = x;
                 s.y = y;
                 s.v = v;
                 return s;
             }),
             py::arg("id"), py::arg("lane"), py::arg("x"), py::arg("y"), py::arg("v"))
        .def_readwrite("id", &VehicleState::id)
        .def_readwrite("lane", &VehicleState::lane)
        .def_readwrite("x", &VehicleState::x)
        .def_readwrite("y", &VehicleState::y)
        .def_readwrite("v", &VehicleState::v)
        .def_readwrite("vy", &VehicleState::vy)
        .def_readwrite("task", &VehicleState::task);

    py::class_<ActionTargets>(m, "ActionTargets")
        .def(py::init([](int lane, double speed) { return ActionTargets{lane, speed}; }), py::arg("target_lane"),
             py::arg("target_speed"))
        .def_readwrite("target_lane", &ActionTargets::target_lane)
        .def_readwrite("target_speed", &ActionTargets::target_speed);

    py::class_<NeighborSet>(m, "NeighborSet")
        .def("occupied", &NeighborSet::occupied)
        .def("as_dict", [](const NeighborSet& n) {
            py::dict d;
            for (SlotKind s : kAllSlots) {
                if (n[s]) d[py::str(std::string(to_string(s)))] = n[s]->id;
            }
            return d;
        });

    m.def(
        "compute_neighbors",
        [](const VehicleState& ego, const std::vector<VehicleState>& convoy, double comm_range) {
            return compute_neighbors(ego, convoy, comm_range);
        },
        py::arg("ego"), py::arg("convoy"), py::arg("comm_range") = 100.0);
    m.def("position_error", &position_error, py::arg("ego"), py::arg("neighbors"), py::arg("d_safe") = 10.0);
    m.def(
        "formation_velocity_command",
        [](const VehicleState& ego, const NeighborSet& nbrs, const ControlWeights& w, const ActionTargets& targets,
           const HighwayConfig& road) {
            const auto c = formation_velocity_command(ego, nbrs, w, targets, road);
            return py::make_tuple(c.vx, c.vy);
        },
        py::arg("ego"), py::arg("neighbors"), py::arg("weights"), py::arg("targets"), py::arg("road"));

    m.def(
        "decode_decision",
        [](const std::string& raw) { return decode_decision(raw); }, py::arg("raw"));
    m.def(
        "decode_action",
        [](DecisionAction a, const VehicleState& ego, const ActionTargets& current, const HighwayConfig& road,
           const ControlWeights& w, double speed_step) { return decode_action(a, ego, current, road, w, speed_step); },
        py::arg("action"), py::arg("ego"), py::arg("current"), py::arg("road"), py::arg("weights"),
        py::arg("speed_step") = 2.5);

    m.def(
        "assign_escort_slots",
        [](VehicleId protected_id, const std::vector<VehicleState>& members, const HighwayConfig& road,
           double d_safe) {
            std::map<VehicleId, std::pair<int, double>> out;
            for (const auto& [id, slot] : assign_escort_slots(protected_id, members, road, d_safe))
                out[id] = {slot.lane, slot.offset};
            return out;
        },
        py::arg("protected_id"), py::arg("members"), py::arg("road"), py::arg("d_safe") = 10.0);

    m.def(
        "cosine_similarity",
        [](const std::vector<double>& a, const std::vector<double>& b) { return cosine_similarity(a, b); },
        py::arg("a"), py::arg("b"));
    m.def(
        "pool_sizes",
        [](const std::string& path) {
            const auto pool = ExperiencePool::load(path);
            std::map<std::string, std::size_t> out;
            for (Task t : kTaskAreas) out[std::string(to_string(t))] = pool.size(t);
            return out;
        },
        py::arg("path"));

    m.def("_run_scenario_json", &run_summary_json, py::arg("scenario"), py::arg("seed") = 0,
          py::arg("density") = py::none(), py::arg("max_sim_time") = py::none());
}
