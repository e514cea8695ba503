#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include <omp.h>

#include <CLI11.hpp>

#include "lpvmor/benchmark.hpp"
#include "lpvmor/pipeline.hpp"

namespace fs = std::filesystem;
using namespace lpvmor;

namespace {

json load_config(const std::string& path) { return path.empty() ? json() : read_json_file(path); }

// Files written by a command; removed again when the command fails.
struct Outputs {
    std::vector<fs::path> written;
    bool keep = false;

    void text(const fs::path& p, const std::string& s)
    {
        written.push_back(p);
        write_text_file(s, p);
    }
    void js(const fs::path& p, const json& j)
    {
        written.push_back(p);
        write_json_file(j, p);
    }
    void model(const fs::path& p, const ReducedLpvModel& m)
    {
        written.push_back(p);
        save_model(m, p);
    }
    void model(const fs::path& p, const GridLpvModel& m)
    {
        written.push_back(p);
        save_model(m, p);
    }
    ~Outputs()
    {
        if (keep) return;
        std::error_code ec;
        for (const auto& p : written) fs::remove(p, ec);
    }
};

void census(const GridLpvModel& m)
{
    const ModeTrajectorySet t = match_grid(decompose_grid(m), TrackingConfig{});
    std::map<std::string, int> c;
    for (auto k : t.mode_class) ++c[to_string(k)];
    for (const char* name : {"stable", "unstable", "mixed", "integrator"}) std::cout << name << ": " << c[name] << '\n';
}

int cmd_generate(const std::string& config, std::optional<std::uint64_t> seed, const fs::path& out)
{
    BenchmarkSpec spec = config.empty() ? BenchmarkSpec{} : spec_from_json(read_json_file(config));
    if (seed) spec.seed = *seed;
    const auto [model, truth] = generate_benchmark(spec);
    fs::create_directories(out);
    Outputs o;
    o.model(out / "model.json", model);
    o.js(out / "truth.json", truth_to_json(truth));
    o.keep = true;
    std::cout << "generated " << model.n_x << "-state model on " << model.size() << " grid points ("
              << truth.attempts << " attempt" << (truth.attempts == 1 ? "" : "s") << ")\n";
    return 0;
}

int cmd_reduce(const fs::path& model_path, const std::string& config, std::optional<std::uint64_t> seed,
               const fs::path& out)
{
    PipelineConfig cfg = config_from_json(load_config(config));
    if (seed) cfg.seed = *seed;
    const GridLpvModel model = load_model(model_path);
    const PipelineResult r = run_pipeline(model, cfg);
    fs::create_directories(out);
    Outputs o;
    o.model(out / "reduced.json", r.reduced);
    o.js(out / "report.json", report_json(r, cfg));
    o.text(out / "trajectories.csv", trajectories_csv(r.traj));
    for (std::size_t c = 0; c < r.clusters.size(); ++c)
        if (!r.clusters[c].factors.S.empty())
            o.text(out / ("singular_values_" + std::to_string(c) + ".csv"), singular_values_csv(r.clusters[c].factors));
    o.keep = true;
    std::cout << "reduced " << model.n_x << " -> " << r.reduced.n_x << " states (" << r.unstable_states
              << " unstable/mixed, " << r.integrators << " integrators kept)\n";
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    return 0;
}

int cmd_validate(const fs::path& full_path, const fs::path& reduced_path, const std::string& config, const fs::path& out)
{
    const PipelineConfig cfg = config_from_json(load_config(config));
    const GridLpvModel full = load_model(full_path);
    const ReducedLpvModel reduced = load_reduced_model(reduced_path);
    const ValidationReport v = validate_models(full, reduced, cfg.validation);
    fs::create_directories(out);
    Outputs o;
    o.js(out / "validation.json", validation_json(v));
    o.text(out / "gap_rho.csv", pointwise_gap_csv(v));
    o.text(out / "gap_omega.csv", frequencywise_gap_csv(v));
    o.text(out / "poles_full.csv", pole_map_csv(full));
    o.text(out / "poles_reduced.csv", pole_map_csv(reduced));
    o.keep = true;
    std::cout << "max nu-gap " << v.max_gap << " (bound " << cfg.validation.gap_bound << ")\n";
    for (const auto& w : v.warnings) std::cerr << "warning: " << w << '\n';
    return v.max_gap <= cfg.validation.gap_bound ? 0 : 3;
}

int cmd_info(const fs::path& path, const fs::path& out)
{
    if (is_reduced_model_file(path)) {
        const ReducedLpvModel m = load_reduced_model(path);
        std::cout << "reduced model: n_x " << m.n_x << ", n_u " << m.n_u << ", n_y " << m.n_y << '\n'
                  << "grid: " << m.size() << " points on [" << m.rho_min() << ", " << m.rho_max() << "], rate bound "
                  << m.rate_bound << '\n'
                  << "vertices: " << m.vertex_points.size() << '\n'
                  << "preserved: " << m.unstable_states << " unstable/mixed, " << m.integrators << " integrators\n";
        if (!out.empty()) write_text_file(pole_map_csv(m), out);
        return 0;
    }
    const GridLpvModel m = load_model(path);
    std::cout << "model: n_x " << m.n_x << ", n_u " << m.n_u << ", n_y " << m.n_y << '\n'
              << "grid: " << m.size() << " points on [" << m.rho_min() << ", " << m.rho_max() << "], rate bound "
              << m.rate_bound << '\n';
    census(m);
    if (!out.empty()) write_text_file(pole_map_csv(m), out);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Parameter-varying model order reduction"};
    app.require_subcommand(1);
    std::string config, out;
    std::optional<std::uint64_t> seed;
    int jobs = 0;
    app.add_option("--jobs", jobs, "worker threads (default: all cores)");

    auto* gen = app.add_subcommand("generate", "generate a benchmark model and its ground truth");
    gen->add_option("--config", config, "benchmark spec (JSON)");
    gen->add_option("--seed", seed, "random seed");
    gen->add_option("--out", out, "output directory")->required();

    std::string model, reduced;
    auto* red = app.add_subcommand("reduce", "reduce a grid model");
    red->add_option("model", model, "model file")->required();
    red->add_option("--config", config, "pipeline config (JSON)");
    red->add_option("--seed", seed, "seed echoed into the report");
    red->add_option("--out", out, "output directory")->required();

    auto* val = app.add_subcommand("validate", "compare a full and a reduced model");
    val->add_option("full", model, "full model file")->required();
    val->add_option("reduced", reduced, "reduced model file")->required();
    val->add_option("--config", config, "pipeline config (JSON)");
    val->add_option("--out", out, "output directory")->required();

    auto* info = app.add_subcommand("info", "summarise a model file");
    info->add_option("model", model, "model file")->required();
    info->add_option("--out", out, "pole-map CSV");

    for (auto* sub : {gen, red, val, info}) sub->add_option("--jobs", jobs, "worker threads");

    CLI11_PARSE(app, argc, argv);
    if (jobs > 0) omp_set_num_threads(jobs);

    try {
        if (*gen) return cmd_generate(config, seed, out);
        if (*red) return cmd_reduce(model, config, seed, out);
        if (*val) return cmd_validate(model, reduced, config, out);
        return cmd_info(model, out);
    } catch (const Error& e) {
        std::cerr << "error";
        if (!e.stage().empty()) std::cerr << " [" << e.stage() << "]";
        std::cerr << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
