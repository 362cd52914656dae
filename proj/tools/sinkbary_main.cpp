// Command-line front end: barycenter, compress, kmeans, propagate, bench,
// render. Every command reads/writes files under --out-dir and is
// byte-deterministic for a fixed seed and config.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sinkbary/analysis.hpp"
#include "sinkbary/io.hpp"
#include "sinkbary/parallel.hpp"
#include "sinkbary/tasks.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sinkbary;

namespace {

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t flag_value) {
    if (seed_opt != nullptr && seed_opt->count() > 0)
        return flag_value;
    if (const char* env = std::getenv("SINKBARY_SEED"))
        return std::strtoull(env, nullptr, 10);
    return 12345;
}

CostSpec parse_cost(const std::string& name) {
    CostSpec cost;
    if (name == "squared-euclidean")
        cost.kind = CostKind::squared_euclidean;
    else if (name == "euclidean")
        cost.kind = CostKind::euclidean;
    else
        throw MalformedInput("unknown cost kind: " + name);
    return cost;
}

std::string out_path(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

json measure_json(const DiscreteMeasure& m) {
    json pts = json::array();
    json w = json::array();
    for (int i = 0; i < m.size(); ++i) {
        json p = json::array();
        for (int t = 0; t < m.dim; ++t)
            p.push_back(m.xs[static_cast<size_t>(i) * m.dim + t]);
        pts.push_back(p);
        w.push_back(m.weights[static_cast<size_t>(i)]);
    }
    return json{{"dim", m.dim}, {"points", pts}, {"weights", w}};
}

void write_trace_csv(const FWState& state, int dim, const std::string& path) {
    std::vector<std::string> header = {"k", "objective", "gap", "sinkhorn_iters"};
    for (int t = 0; t < dim; ++t)
        header.push_back("x" + std::to_string(t));
    std::vector<std::vector<std::string>> rows;
    for (size_t k = 0; k < state.objective_trace.size(); ++k) {
        std::vector<std::string> row = {std::to_string(k), format_double(state.objective_trace[k]),
                                        format_double(state.gap_trace[k]),
                                        std::to_string(state.sinkhorn_iters[k])};
        for (int t = 0; t < dim; ++t)
            row.push_back(format_double(state.selected_points[k * static_cast<size_t>(dim) + t]));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

// High-accuracy objective recomputed with convergence flags; non-convergence
// of any final solve maps to exit code 3.
double checked_objective(const BarycenterProblem& p, const DiscreteMeasure& alpha, double epsilon,
                         double tolerance, int max_iterations, bool& converged) {
    SinkhornConfig cfg;
    cfg.epsilon = epsilon;
    cfg.tolerance = tolerance;
    cfg.max_iterations = max_iterations;
    converged = true;
    const SinkhornResult self = sinkhorn_knopp(alpha, alpha, p.cost, cfg);
    converged = converged && self.converged;
    double total = -0.5 * ot_value(self, alpha, alpha);
    for (size_t j = 0; j < p.measures.size(); ++j) {
        const SinkhornResult r = sinkhorn_knopp(alpha, p.measures[j], p.cost, cfg);
        const SinkhornResult rs = sinkhorn_knopp(p.measures[j], p.measures[j], p.cost, cfg);
        converged = converged && r.converged && rs.converged;
        total += p.weights[j] * (ot_value(r, alpha, p.measures[j]) -
                                 0.5 * ot_value(rs, p.measures[j], p.measures[j]));
    }
    return total;
}

struct SolveArgs {
    std::vector<std::string> inputs;
    std::vector<double> weights;
    std::string cost = "squared-euclidean";
    double epsilon = 0.1;
    double tolerance = 1e-7;
    int max_sink_iters = 5000;
    int iterations = 100;
    std::string minimize = "continuous";
    std::string grid_file;
    double merge_radius = 0.0;
    int workers = 0;
    std::string out_dir = "out";
    std::uint64_t seed = 12345;
    double pixel_extent = 0.0; // compress image input; 0 = 1 / max(w, h)
};

void add_common_flags(CLI::App* cmd, SolveArgs& a, CLI::Option*& seed_opt) {
    cmd->add_option("--epsilon", a.epsilon, "entropic regularization");
    cmd->add_option("--tol", a.tolerance, "final evaluation tolerance");
    cmd->add_option("--max-sink-iters", a.max_sink_iters, "inner sweep cap per solve");
    cmd->add_option("--iters", a.iterations, "outer iterations K");
    cmd->add_option("--minimize", a.minimize, "inner minimizer")
        ->check(CLI::IsMember({"grid", "continuous"}));
    cmd->add_option("--grid-file", a.grid_file, "extra grid candidates (CSV)");
    cmd->add_option("--merge-radius", a.merge_radius, "final atom merge radius");
    cmd->add_option("--workers", a.workers, "worker threads (0 = all cores)");
    cmd->add_option("--out-dir", a.out_dir, "output directory");
    seed_opt = cmd->add_option("--seed", a.seed, "rng seed (SINKBARY_SEED overrides default)");
}

FWConfig fw_config(const SolveArgs& a) {
    FWConfig cfg;
    cfg.epsilon = a.epsilon;
    cfg.iterations_K = a.iterations;
    cfg.minimize_mode = a.minimize == "grid" ? MinimizeMode::grid : MinimizeMode::continuous;
    cfg.merge_radius = a.merge_radius;
    cfg.max_sink_iterations = a.max_sink_iters;
    cfg.seed = a.seed;
    if (!a.grid_file.empty()) {
        int gdim = 0;
        cfg.grid_points = read_points_csv(a.grid_file, gdim);
    }
    return cfg;
}

int finish_solve(const BarycenterProblem& problem, const FWState& state, const SolveArgs& a,
                 const std::string& measure_name) {
    write_measure_json(state.iterate, out_path(a.out_dir, measure_name));
    write_trace_csv(state, state.iterate.dim, out_path(a.out_dir, "trace.csv"));

    bool converged = true;
    const int final_cap = std::max(20000, 4 * a.max_sink_iters);
    const double final_obj =
        checked_objective(problem, state.iterate, a.epsilon, a.tolerance, final_cap, converged);

    json summary;
    summary["epsilon"] = a.epsilon;
    summary["iterations"] = state.k;
    summary["seed"] = a.seed;
    summary["support_size"] = state.iterate.size();
    summary["final_objective"] = final_obj;
    summary["final_gap"] = state.gap_trace.empty() ? 0.0 : state.gap_trace.back();
    summary["final_evaluation_converged"] = converged;
    summary["minimize"] = a.minimize;
    summary["merge_radius"] = a.merge_radius;
    write_text_file(out_path(a.out_dir, "summary.json"), summary.dump(2) + "\n");

    if (!converged) {
        std::cerr << "final evaluation did not converge within " << final_cap << " sweeps\n";
        return 3;
    }
    return 0;
}

int run_barycenter(const SolveArgs& a) {
    BarycenterProblem problem;
    problem.cost = parse_cost(a.cost);
    for (const auto& path : a.inputs)
        problem.measures.push_back(read_measure(path));
    problem.weights = a.weights; // empty means uniform
    const FWConfig cfg = fw_config(a);
    const FWState state = barycenter(problem, cfg);
    return finish_solve(validate_problem(problem), state, a, "barycenter.json");
}

int run_compress(const SolveArgs& a) {
    const std::string& path = a.inputs.front();
    const std::string ext = fs::path(path).extension().string();
    DiscreteMeasure target;
    if (ext == ".pgm" || ext == ".png") {
        const GrayImage img = read_image(path);
        const double extent =
            a.pixel_extent > 0.0 ? a.pixel_extent : 1.0 / std::max(img.width, img.height);
        target = image_to_measure(img, extent);
    } else {
        target = read_measure(path);
    }
    const FWConfig cfg = fw_config(a);
    const FWState state = compress(target, parse_cost(a.cost), cfg);
    BarycenterProblem problem;
    problem.cost = parse_cost(a.cost);
    problem.measures = {target};
    problem.weights = {1.0};
    return finish_solve(problem, state, a, "compressed.json");
}

struct KMeansArgs {
    SolveArgs base;
    int k = 2;
    int lloyd_iters = 10;
};

int run_kmeans(const KMeansArgs& ka) {
    const SolveArgs& a = ka.base;
    std::vector<DiscreteMeasure> measures;
    for (const auto& path : a.inputs)
        measures.push_back(read_measure(path));

    KMeansConfig cfg;
    cfg.k = ka.k;
    cfg.lloyd_iterations = ka.lloyd_iters;
    cfg.epsilon = a.epsilon;
    cfg.assign_tolerance = a.tolerance;
    cfg.seed = a.seed;
    cfg.fw = fw_config(a);
    const ClusterModel model = kmeans(measures, parse_cost(a.cost), cfg);

    for (int c = 0; c < ka.k; ++c)
        write_measure_json(model.centroids[static_cast<size_t>(c)],
                           out_path(a.out_dir, "centroid_" + std::to_string(c) + ".json"));
    std::vector<std::vector<std::string>> rows;
    for (size_t i = 0; i < a.inputs.size(); ++i)
        rows.push_back({std::to_string(i), a.inputs[i], std::to_string(model.assignments[i])});
    write_csv(out_path(a.out_dir, "assignments.csv"), {"index", "file", "cluster"}, rows);
    rows.clear();
    for (size_t r = 0; r < model.inertia_trace.size(); ++r)
        rows.push_back({std::to_string(r), format_double(model.inertia_trace[r])});
    write_csv(out_path(a.out_dir, "inertia.csv"), {"round", "inertia"}, rows);

    json summary;
    summary["k"] = ka.k;
    summary["epsilon"] = a.epsilon;
    summary["seed"] = a.seed;
    summary["rounds"] = model.inertia_trace.size();
    summary["final_inertia"] = model.inertia_trace.empty() ? 0.0 : model.inertia_trace.back();
    write_text_file(out_path(a.out_dir, "summary.json"), summary.dump(2) + "\n");
    return 0;
}

struct PropagateArgs {
    SolveArgs base;
    int sweeps = 3;
    std::string weighting = "exp-kernel";
    double sigma = 1.0;
};

int run_propagate(const PropagateArgs& pa) {
    const SolveArgs& a = pa.base;
    const GraphSpec spec = read_graph_json(a.inputs.front());
    PropagationGraph graph;
    graph.vertices = spec.vertices;
    graph.edges = spec.edges;
    graph.known = spec.known;
    graph.unknown = spec.unknown;

    PropagateConfig cfg;
    cfg.sweeps = pa.sweeps;
    cfg.epsilon = a.epsilon;
    cfg.weighting = pa.weighting == "inverse-distance" ? EdgeWeighting::inverse_distance
                                                       : EdgeWeighting::exp_kernel;
    cfg.sigma = pa.sigma;
    cfg.objective_tolerance = a.tolerance;
    cfg.fw = fw_config(a);
    const PropagationResult res = propagate(graph, parse_cost(a.cost), cfg);

    for (const auto& [v, m] : res.fitted)
        write_measure_json(m, out_path(a.out_dir, "fitted_" + std::to_string(v) + ".json"));
    std::vector<std::vector<std::string>> rows;
    for (size_t s = 0; s < res.objective_trace.size(); ++s)
        rows.push_back({std::to_string(s), format_double(res.objective_trace[s])});
    write_csv(out_path(a.out_dir, "objective.csv"), {"sweep", "objective"}, rows);

    json summary;
    summary["sweeps"] = pa.sweeps;
    summary["epsilon"] = a.epsilon;
    summary["weighting"] = pa.weighting;
    summary["sigma"] = pa.sigma;
    summary["seed"] = a.seed;
    summary["unknown_vertices"] = graph.unknown.size();
    summary["final_objective"] = res.objective_trace.empty() ? 0.0 : res.objective_trace.back();
    write_text_file(out_path(a.out_dir, "summary.json"), summary.dump(2) + "\n");
    return 0;
}

struct BenchArgs {
    std::vector<std::string> suites;
    std::string out_dir = "out";
    int workers = 0;
    std::uint64_t seed = 12345;
};

int run_bench(const BenchArgs& ba) {
    std::vector<std::string> suites = ba.suites;
    if (suites.empty())
        suites = {"sinkhorn-rate", "potential-bounds", "lipschitz-tv", "mmd-concentration",
                  "sample-complexity"};

    json report;
    report["seed"] = ba.seed;
    bool all_pass = true;
    for (const auto& suite : suites) {
        ExperimentReport rep;
        if (suite == "sinkhorn-rate") {
            rep = sinkhorn_rate_check(40, ba.seed);
        } else if (suite == "potential-bounds") {
            rep = potential_bounds_check(100, ba.seed);
        } else if (suite == "lipschitz-tv") {
            rep = lipschitz_tv_check(60, 8, 1.0, ba.seed);
        } else if (suite == "mmd-concentration") {
            SamplerSpec sampler;
            sampler.kind = SamplerSpec::Kind::mixture;
            sampler.mixture.components = {{{0.25, 0.25}, {0.02, 0.0, 0.0, 0.02}},
                                          {{0.75, 0.75}, {0.02, 0.0, 0.0, 0.02}}};
            sampler.mixture.weights = {0.5, 0.5};
            KernelSpec kernel;
            rep = mmd_concentration_experiment(sampler, {25, 100, 400}, 30, 0.05, kernel, ba.seed);
        } else if (suite == "sample-complexity") {
            SamplerSpec alpha_spec;
            alpha_spec.gaussian = {{0.5, 0.5}, {0.04, 0.0, 0.0, 0.04}};
            const DiscreteMeasure alpha = sample_empirical(alpha_spec, 12, ba.seed ^ 0x5eedULL);
            SamplerSpec sampler;
            sampler.gaussian = {{0.4, 0.6}, {0.03, 0.005, 0.005, 0.02}};
            rep = sample_complexity_experiment(alpha, sampler, {16, 64, 256, 1024}, 30, 20000,
                                               1e-9, 1.0, ba.seed);
        } else if (suite == "mmd-lipschitz") {
            rep = mmd_lipschitz_check(40, 8, 0.5, ba.seed);
        } else {
            throw MalformedInput("unknown suite: " + suite);
        }
        write_csv(out_path(ba.out_dir, rep.name + ".csv"), rep.csv_header, rep.csv_rows);
        json entry;
        entry["pass"] = rep.pass;
        for (const auto& [key, value] : rep.stats)
            entry["stats"][key] = value;
        report["suites"][rep.name] = entry;
        all_pass = all_pass && rep.pass;
        std::cout << "[bench] " << rep.name << (rep.pass ? " PASS" : " FAIL") << "\n";
    }
    report["pass"] = all_pass;
    write_text_file(out_path(ba.out_dir, "report.json"), report.dump(2) + "\n");
    return all_pass ? 0 : 4;
}

struct RenderArgs {
    std::string input;
    int width = 32;
    int height = 32;
    std::vector<double> box; // lo..., hi...
    std::string out_dir = "out";
};

int run_render(const RenderArgs& ra) {
    const DiscreteMeasure m = read_measure(ra.input);
    std::vector<double> lo, hi;
    if (!ra.box.empty()) {
        if (ra.box.size() != 2 * static_cast<size_t>(m.dim))
            throw MalformedInput("--box needs 2 * dim values (lo..., hi...)");
        lo.assign(ra.box.begin(), ra.box.begin() + m.dim);
        hi.assign(ra.box.begin() + m.dim, ra.box.end());
    }
    const GrayImage img = render_measure(m, ra.width, ra.height, lo, hi);
    write_pgm(img, out_path(ra.out_dir, "render.pgm"));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sinkhorn-divergence barycenters with free support"};
    app.require_subcommand(1);

    SolveArgs bary_args;
    CLI::Option* bary_seed = nullptr;
    auto* bary = app.add_subcommand("barycenter", "barycenter of several measures");
    bary->add_option("inputs", bary_args.inputs, "measure files")->required()->expected(-1);
    bary->add_option("--weights", bary_args.weights, "barycentric weights (default uniform)");
    bary->add_option("--cost", bary_args.cost, "cost kind")
        ->check(CLI::IsMember({"squared-euclidean", "euclidean"}));
    add_common_flags(bary, bary_args, bary_seed);

    SolveArgs comp_args;
    CLI::Option* comp_seed = nullptr;
    auto* comp = app.add_subcommand("compress", "compress one measure or image");
    comp->add_option("input", comp_args.inputs, "measure or image file")->required()->expected(1);
    comp->add_option("--cost", comp_args.cost, "cost kind")
        ->check(CLI::IsMember({"squared-euclidean", "euclidean"}));
    comp->add_option("--pixel-extent", comp_args.pixel_extent,
                     "pixel size for image input (0 = fit unit box)");
    add_common_flags(comp, comp_args, comp_seed);

    KMeansArgs km_args;
    CLI::Option* km_seed = nullptr;
    auto* km = app.add_subcommand("kmeans", "cluster measures under the divergence");
    km->add_option("inputs", km_args.base.inputs, "measure files")->required()->expected(-1);
    km->add_option("--k", km_args.k, "number of clusters");
    km->add_option("--lloyd-iters", km_args.lloyd_iters, "Lloyd round cap");
    km->add_option("--cost", km_args.base.cost, "cost kind")
        ->check(CLI::IsMember({"squared-euclidean", "euclidean"}));
    add_common_flags(km, km_args.base, km_seed);

    PropagateArgs pr_args;
    CLI::Option* pr_seed = nullptr;
    auto* pr = app.add_subcommand("propagate", "fill unknown graph vertices");
    pr->add_option("graph", pr_args.base.inputs, "graph JSON file")->required()->expected(1);
    pr->add_option("--sweeps", pr_args.sweeps, "block-coordinate sweeps");
    pr->add_option("--weighting", pr_args.weighting, "edge weight transform")
        ->check(CLI::IsMember({"inverse-distance", "exp-kernel"}));
    pr->add_option("--sigma", pr_args.sigma, "exp-kernel scale");
    pr->add_option("--cost", pr_args.base.cost, "cost kind")
        ->check(CLI::IsMember({"squared-euclidean", "euclidean"}));
    add_common_flags(pr, pr_args.base, pr_seed);

    BenchArgs bench_args;
    CLI::Option* bench_seed = nullptr;
    auto* bench = app.add_subcommand("bench", "run the diagnostics suites");
    bench->add_option("--suite", bench_args.suites, "suites to run (default: all)");
    bench->add_option("--out-dir", bench_args.out_dir, "output directory");
    bench->add_option("--workers", bench_args.workers, "worker threads (0 = all cores)");
    bench_seed = bench->add_option("--seed", bench_args.seed, "rng seed");

    RenderArgs render_args;
    auto* render = app.add_subcommand("render", "rasterize a measure to PGM");
    render->add_option("input", render_args.input, "measure file")->required();
    render->add_option("--width", render_args.width, "output width in pixels");
    render->add_option("--height", render_args.height, "output height in pixels");
    render->add_option("--box", render_args.box, "explicit box: lo..., hi...");
    render->add_option("--out-dir", render_args.out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (bary->parsed()) {
            bary_args.seed = resolve_seed(bary_seed, bary_args.seed);
            if (bary_args.workers > 0)
                set_worker_count(bary_args.workers);
            return run_barycenter(bary_args);
        }
        if (comp->parsed()) {
            comp_args.seed = resolve_seed(comp_seed, comp_args.seed);
            if (comp_args.workers > 0)
                set_worker_count(comp_args.workers);
            return run_compress(comp_args);
        }
        if (km->parsed()) {
            km_args.base.seed = resolve_seed(km_seed, km_args.base.seed);
            if (km_args.base.workers > 0)
                set_worker_count(km_args.base.workers);
            return run_kmeans(km_args);
        }
        if (pr->parsed()) {
            pr_args.base.seed = resolve_seed(pr_seed, pr_args.base.seed);
            if (pr_args.base.workers > 0)
                set_worker_count(pr_args.base.workers);
            return run_propagate(pr_args);
        }
        if (bench->parsed()) {
            bench_args.seed = resolve_seed(bench_seed, bench_args.seed);
            if (bench_args.workers > 0)
                set_worker_count(bench_args.workers);
            return run_bench(bench_args);
        }
        if (render->parsed())
            return run_render(render_args);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
