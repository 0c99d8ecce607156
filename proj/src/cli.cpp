#include "convoy/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "convoy/trace.hpp"

namespace convoy {

namespace {

using nlohmann::json;

template <typename T>
void read_field(const json& obj, const char* key, T& dst) {
    if (const auto it = obj.find(key); it != obj.end()) dst = it->get<T>();
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
    }
}

ScenarioKind parse_scenario(const std::string& s) {
    const auto k = scenario_from_string(s);
    if (!k) throw ConfigError("unknown scenario '" + s + "' (expected avoid, join, leave or escort)");
    return *k;
}

BackendKind parse_backend(const std::string& s) {
    const auto k = backend_kind_from_string(s);
    if (!k) throw ConfigError("unknown backend '" + s + "' (expected oracle or llm_http)");
    return *k;
}

}  // namespace

void apply_config_json(const json& j, CliConfig& cfg) {
    check_keys(j,
               {"scenario", "density", "seed", "seeds", "workers", "out", "dt", "decision_period", "max_sim_time",
                "trace_stride", "backend", "reasoning", "weights", "highway", "experience_pool", "per_task"},
               "");
    auto& sc = cfg.scenario;
    if (j.contains("scenario")) {
        sc.kind = parse_scenario(j["scenario"].get<std::string>());
        sc.env_vehicle_count = default_scenario(sc.kind).env_vehicle_count;
    }
    read_field(j, "density", sc.env_vehicle_count);
    read_field(j, "seed", sc.seed);
    read_field(j, "seeds", cfg.seeds);
    read_field(j, "workers", cfg.workers);
    read_field(j, "per_task", cfg.per_task);
    if (j.contains("out")) cfg.out = j["out"].get<std::string>();
    if (j.contains("experience_pool")) cfg.experience_pool = j["experience_pool"].get<std::string>();
    read_field(j, "dt", sc.dt);
    read_field(j, "decision_period", sc.decision_period);
    read_field(j, "max_sim_time", sc.max_sim_time);
    read_field(j, "trace_stride", sc.trace_stride);

    if (const auto it = j.find("backend"); it != j.end()) {
        const auto& b = *it;
        check_keys(b, {"kind", "endpoint", "model", "api_key_env", "timeout_s", "max_retries", "temperature"},
                   "backend");
        if (b.contains("kind")) sc.backend.kind = parse_backend(b["kind"].get<std::string>());
        read_field(b, "endpoint", sc.backend.endpoint);
        read_field(b, "model", sc.backend.model);
        read_field(b, "api_key_env", sc.backend.api_key_env);
        read_field(b, "timeout_s", sc.backend.timeout_s);
        read_field(b, "max_retries", sc.backend.max_retries);
        read_field(b, "temperature", sc.backend.temperature);
    }
    if (const auto it = j.find("reasoning"); it != j.end()) {
        check_keys(*it, {"speed_step", "few_shot_k", "max_prompt_chars"}, "reasoning");
        read_field(*it, "speed_step", sc.reasoning.speed_step);
        read_field(*it, "few_shot_k", sc.reasoning.few_shot_k);
        read_field(*it, "max_prompt_chars", sc.reasoning.max_prompt_chars);
    }
    if (const auto it = j.find("weights"); it != j.end()) {
        auto& w = sc.weights;
        check_keys(*it,
                   {"w_f", "w_b", "w_fl", "w_bl", "w_fr", "w_br", "w_y", "w_v", "d_safe", "acc", "dec", "v_desired",
                    "vy_max"},
                   "weights");
        read_field(*it, "w_f", w.w_f);
        read_field(*it, "w_b", w.w_b);
        read_field(*it, "w_fl", w.w_fl);
        read_field(*it, "w_bl", w.w_bl);
        read_field(*it, "w_fr", w.w_fr);
        read_field(*it, "w_br", w.w_br);
        read_field(*it, "w_y", w.w_y);
        read_field(*it, "w_v", w.w_v);
        read_field(*it, "d_safe", w.d_safe);
        read_field(*it, "acc", w.acc);
        read_field(*it, "dec", w.dec);
        read_field(*it, "v_desired", w.v_desired);
        read_field(*it, "vy_max", w.vy_max);
    }
    if (const auto it = j.find("highway"); it != j.end()) {
        auto& h = sc.highway;
        check_keys(*it, {"length", "lane_count", "lane_width", "max_speed", "comm_range", "spawn_region_end"},
                   "highway");
        read_field(*it, "length", h.length);
        read_field(*it, "lane_count", h.lane_count);
        read_field(*it, "lane_width", h.lane_width);
        read_field(*it, "max_speed", h.max_speed);
        read_field(*it, "comm_range", h.comm_range);
        read_field(*it, "spawn_region_end", h.spawn_region_end);
    }
}

ExperiencePool curate_seed_pool(std::span<const RunSummary> runs, int per_task) {
    ExperiencePool pool;
    if (per_task <= 0) return pool;
    for (Task area : kTaskAreas) {
        std::vector<std::vector<const Experience*>> by_action(std::size(kAllActions));
        for (const auto& r : runs) {
            if (!r.success) continue;
            for (const auto& e : r.experiences) {
                if (e.task == area && e.outcome == Outcome::success)
                    by_action[static_cast<std::size_t>(e.decision)].push_back(&e);
            }
        }
        const auto cap = static_cast<std::size_t>(per_task);
        // Evenly spaced picks within each action, then round-robin across actions.
        std::vector<std::vector<const Experience*>> picks(by_action.size());
        for (std::size_t a = 0; a < by_action.size(); ++a) {
            const auto& g = by_action[a];
            const std::size_t n = std::min(cap, g.size());
            for (std::size_t i = 0; i < n; ++i) picks[a].push_back(g[i * g.size() / n]);
        }
        std::size_t taken = 0;
        for (std::size_t round = 0; taken < cap; ++round) {
            bool any = false;
            for (const auto& p : picks) {
                if (round >= p.size() || taken >= cap) continue;
                pool.store(*p[round]);
                ++taken;
                any = true;
            }
            if (!any) break;
        }
    }
    return pool;
}

namespace {

struct Failure {
    const char* module;
    std::string message;
};

Failure describe(const std::exception& e) {
    if (dynamic_cast<const BackendError*>(&e)) return {"decision_backend", e.what()};
    if (dynamic_cast<const TraceFormatError*>(&e)) return {"cli (replay)", e.what()};
    if (dynamic_cast<const MalformedLineError*>(&e) || dynamic_cast<const IoError*>(&e))
        return {"shared_memory / io", e.what()};
    if (dynamic_cast<const PlacementError*>(&e)) return {"scenario_harness", e.what()};
    if (dynamic_cast<const SpawnCapacityError*>(&e) || dynamic_cast<const UnknownVehicleError*>(&e))
        return {"world_sim", e.what()};
    if (dynamic_cast<const Error*>(&e)) return {"convoy", e.what()};
    return {"runtime", e.what()};
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, int count) {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < count; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
    return seeds;
}

int worker_count(int requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

void write_run_outputs(const std::filesystem::path& dir, const RunSummary& s) {
    std::filesystem::create_directories(dir);
    write_trace_csv(dir / "trace.csv", s.trace);
    write_text_file(dir / "summary.json", summary_to_json(s).dump(2) + "\n");
}

void load_pool(CliConfig& cfg) {
    if (!cfg.experience_pool || cfg.scenario.backend.kind != BackendKind::llm_http) return;
    cfg.scenario.pool = std::make_shared<const ExperiencePool>(ExperiencePool::load(*cfg.experience_pool));
}

int do_run(CliConfig& cfg, std::ostream& out) {
    load_pool(cfg);
    const auto s = run_scenario(cfg.scenario);
    const auto dir = cfg.out.empty() ? std::filesystem::path("out") / std::string(short_name(cfg.scenario.kind)) /
                                           std::to_string(cfg.scenario.seed)
                                     : cfg.out;
    write_run_outputs(dir, s);
    out << summary_to_json(s).dump() << "\n";
    return 0;
}

int do_batch(CliConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.seeds < 1) throw ConfigError("--seeds must be >= 1");
    load_pool(cfg);
    const auto base_dir = (cfg.out.empty() ? std::filesystem::path("out") : cfg.out) /
                          std::string(short_name(cfg.scenario.kind));
    const bool traces = cfg.scenario.record_trace;
    const auto seeds = seed_range(cfg.scenario.seed, cfg.seeds);
    const int verbosity = cfg.verbosity;
    const auto on_run = [&](const RunSummary& s) {
        const auto dir = base_dir / std::to_string(s.seed);
        std::filesystem::create_directories(dir);
        if (traces) write_trace_csv(dir / "trace.csv", s.trace);
        write_text_file(dir / "summary.json", summary_to_json(s).dump(2) + "\n");
        if (verbosity > 0) {
            static std::mutex m;
            std::lock_guard lock(m);
            err << "seed " << s.seed << ": " << (s.success ? "success" : "failure") << "\n";
        }
    };
    const auto batch = run_batch(cfg.scenario, seeds, worker_count(cfg.workers), on_run);
    std::filesystem::create_directories(base_dir);
    const auto agg = batch_to_json(cfg.scenario, batch);
    write_text_file(base_dir / "aggregate.json", agg.dump(2) + "\n");
    std::ofstream csv(base_dir / "aggregate.csv", std::ios::binary);
    if (!csv) throw IoError("cannot open " + (base_dir / "aggregate.csv").string() + " for writing");
    write_batch_csv(csv, batch);
    out << "scenario " << to_string(cfg.scenario.kind) << ", env vehicles " << cfg.scenario.env_vehicle_count
        << ": " << batch.success_count << "/" << batch.runs.size() << " succeeded, aggregate at "
        << (base_dir / "aggregate.json").string() << "\n";
    return 0;
}

int do_seed_pool(CliConfig& cfg, std::ostream& out) {
    std::vector<RunSummary> runs;
    const auto seeds = seed_range(cfg.scenario.seed, cfg.seeds);
    for (ScenarioKind kind : kAllScenarios) {
        ScenarioConfig sc = cfg.scenario;
        sc.kind = kind;
        sc.env_vehicle_count = default_scenario(kind).env_vehicle_count;
        sc.backend = BackendConfig{};
        sc.record_trace = false;
        auto batch = run_batch(sc, seeds, worker_count(cfg.workers));
        for (auto& r : batch.runs) runs.push_back(std::move(r));
    }
    const auto pool = curate_seed_pool(runs, cfg.per_task);
    const auto path = cfg.out.empty() ? std::filesystem::path("data/seed_pool.jsonl") : cfg.out;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    pool.persist(path);
    out << "wrote " << pool.size() << " experiences to " << path.string() << "\n";
    return 0;
}

int do_replay(CliConfig& cfg, std::ostream& out) {
    const auto rows = read_trace_csv(cfg.trace_in);
    const auto stats = replay_to_json(replay_stats(rows));
    if (!cfg.out.empty()) write_text_file(cfg.out, stats.dump(2) + "\n");
    out << stats.dump() << "\n";
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-lane highway convoy simulator with pluggable decision backends", "convoy_cli"};
    app.require_subcommand(1);

    struct Flags {
        std::string scenario;
        int density = 0;
        std::uint64_t seed = 0;
        int seeds = 0;
        std::string backend;
        std::string out;
        std::string config;
        int workers = 0;
        double dt = 0;
        double decision_period = 0;
        double max_sim_time = 0;
        int trace_stride = 0;
        std::string endpoint;
        std::string model;
        std::string pool;
        int per_task = 0;
        std::string trace;
        bool no_trace = false;
    } f;
    int verbosity = 0;

    auto* run = app.add_subcommand("run", "Run one scenario and write trace.csv + summary.json");
    auto* batch = app.add_subcommand("batch", "Run a seed sweep and write per-seed outputs plus aggregate.json");
    auto* seed_pool = app.add_subcommand("seed-pool", "Generate a curated experience pool from oracle runs");
    auto* replay = app.add_subcommand("replay", "Recompute summary statistics from a trace CSV");

    std::map<std::string, CLI::Option*> opts;
    const auto common = [&](CLI::App* sub, bool scenario_flags) {
        opts["config"] = sub->add_option("--config", f.config, "JSON config file (flags override it)");
        opts["out"] = sub->add_option("--out", f.out, "Output directory (seed-pool: output file)");
        sub->add_flag("-v,--verbose", verbosity, "Verbose progress output");
        if (!scenario_flags) return;
        opts["scenario"] = sub->add_option("--scenario", f.scenario, "avoid | join | leave | escort");
        opts["density"] = sub->add_option("--density", f.density, "Number of environment vehicles");
        opts["seed"] = sub->add_option("--seed", f.seed, "Seed (batch: first seed)");
        opts["seeds"] = sub->add_option("--seeds", f.seeds, "Number of seeds");
        opts["backend"] = sub->add_option("--backend", f.backend, "oracle | llm_http");
        opts["workers"] = sub->add_option("--workers", f.workers, "Worker threads (default: CPU count)");
        opts["dt"] = sub->add_option("--dt", f.dt, "Simulation step, s");
        opts["decision-period"] = sub->add_option("--decision-period", f.decision_period, "Decision period, s");
        opts["max-sim-time"] = sub->add_option("--max-sim-time", f.max_sim_time, "Timeout, s");
        opts["trace-stride"] = sub->add_option("--trace-stride", f.trace_stride, "Record every n-th step");
        opts["endpoint"] = sub->add_option("--endpoint", f.endpoint, "Chat-completions endpoint URL");
        opts["model"] = sub->add_option("--model", f.model, "Model name");
        opts["pool"] = sub->add_option("--pool", f.pool, "Experience pool JSONL for few-shot prompting");
        sub->add_flag("--no-trace", f.no_trace, "Skip trace.csv output");
    };
    common(run, true);
    common(batch, true);
    common(seed_pool, true);
    opts["per-task"] = seed_pool->add_option("--per-task", f.per_task, "Experiences kept per task area");
    common(replay, false);
    replay->add_option("trace", f.trace, "Trace CSV to replay")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    const auto given = [&](const char* name) {
        for (CLI::App* sub : {run, batch, seed_pool, replay}) {
            if (!sub->parsed()) continue;
            const auto opt = sub->get_option_no_throw(std::string("--") + name);
            return opt != nullptr && opt->count() > 0;
        }
        return false;
    };

    CliConfig cfg;
    try {
        cfg.subcommand = run->parsed() ? Subcommand::run
                         : batch->parsed() ? Subcommand::batch
                         : seed_pool->parsed() ? Subcommand::seed_pool
                                               : Subcommand::replay;
        cfg.scenario.backend = apply_backend_env(cfg.scenario.backend);
        if (given("config")) {
            std::ifstream in(f.config);
            if (!in) throw ConfigError("cannot open config file " + f.config);
            const auto j = json::parse(in, nullptr, false);
            if (j.is_discarded()) throw ConfigError("config file " + f.config + " is not valid JSON");
            apply_config_json(j, cfg);
            cfg.config_path = f.config;
        }
        auto& sc = cfg.scenario;
        if (given("scenario")) {
            sc.kind = parse_scenario(f.scenario);
            sc.env_vehicle_count = default_scenario(sc.kind).env_vehicle_count;
        }
        if (given("density")) sc.env_vehicle_count = f.density;
        if (given("seed")) sc.seed = f.seed;
        if (given("seeds")) cfg.seeds = f.seeds;
        if (given("backend")) sc.backend.kind = parse_backend(f.backend);
        if (given("workers")) cfg.workers = f.workers;
        if (given("dt")) sc.dt = f.dt;
        if (given("decision-period")) sc.decision_period = f.decision_period;
        if (given("max-sim-time")) sc.max_sim_time = f.max_sim_time;
        if (given("trace-stride")) sc.trace_stride = f.trace_stride;
        if (given("endpoint")) sc.backend.endpoint = f.endpoint;
        if (given("model")) sc.backend.model = f.model;
        if (given("pool")) cfg.experience_pool = f.pool;
        if (given("per-task")) cfg.per_task = f.per_task;
        if (given("out")) cfg.out = f.out;
        if (f.no_trace) sc.record_trace = false;
        cfg.trace_in = f.trace;
        cfg.verbosity = verbosity;
        if (cfg.subcommand != Subcommand::replay) sc.validate();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n" << app.help() << "\n";
        return 1;
    }

    try {
        switch (cfg.subcommand) {
            case Subcommand::run: return do_run(cfg, out);
            case Subcommand::batch: return do_batch(cfg, out, err);
            case Subcommand::seed_pool: return do_seed_pool(cfg, out);
            case Subcommand::replay: return do_replay(cfg, out);
        }
    } catch (const std::exception& e) {
        const auto failure = describe(e);
        err << "error [" << failure.module << "]: " << failure.message << "\n";
        return 2;
    }
    return 0;
}

}  // namespace convoy
