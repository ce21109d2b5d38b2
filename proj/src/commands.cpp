#include "bifield/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "bifield/acceptance.hpp"
#include "bifield/bounds.hpp"
#include "bifield/cumulants.hpp"
#include "bifield/errors.hpp"
#include "bifield/kernels.hpp"
#include "bifield/master_equation.hpp"
#include "bifield/model.hpp"
#include "bifield/moment_hierarchy.hpp"
#include "bifield/simulator.hpp"

namespace bifield {

namespace {

const char* kVersion = "0.1.0";

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Collects artifacts in memory and flushes them from one place, so no two
// writers ever interleave on the same directory.
class ArtifactSink {
public:
    explicit ArtifactSink(std::string dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string content) {
        names_.push_back(name);
        contents_.push_back(std::move(content));
    }

    // Writes data files plus manifest.json; returns the artifact count.
    std::size_t flush(const std::string& verb, std::uint64_t seed,
                      double wall_seconds) {
        std::filesystem::create_directories(dir_);
        for (std::size_t i = 0; i < names_.size(); ++i)
            write_file(names_[i], contents_[i]);

        std::ostringstream m;
        m << "{\n"
          << "  \"verb\": \"" << verb << "\",\n"
          << "  \"seed\": " << seed << ",\n"
          << "  \"version\": \"" << kVersion << "\",\n"
          << "  \"wall_seconds\": " << fmt(wall_seconds) << ",\n"
          << "  \"artifacts\": [\n";
        for (std::size_t i = 0; i < names_.size(); ++i) {
            m << "    {\"file\": \"" << names_[i] << "\", \"bytes\": "
              << contents_[i].size() << ", \"fnv1a64\": \""
              << hex64(fnv1a64(contents_[i])) << "\"}"
              << (i + 1 < names_.size() ? "," : "") << "\n";
        }
        m << "  ]\n}\n";
        write_file("manifest.json", m.str());
        return names_.size();
    }

private:
    void write_file(const std::string& name, const std::string& content) {
        std::filesystem::path path = std::filesystem::path(dir_) / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorKind::io_error, "cannot write " + path.string());
        out << content;
        out.close();
        if (!out)
            throw Error(ErrorKind::io_error, "short write on " + path.string());
    }

    std::string dir_;
    std::vector<std::string> names_;
    std::vector<std::string> contents_;
};

std::vector<double> hierarchy_grid(const HierarchySettings& h) {
    std::vector<double> grid(h.steps + 1);
    for (int i = 0; i <= h.steps; ++i)
        grid[i] = h.t_max * static_cast<double>(i) / static_cast<double>(h.steps);
    return grid;
}

SimConfig sim_config(const ExperimentConfig& config) {
    SimConfig cfg;
    cfg.torus_side = config.sim.torus_side;
    cfg.t_max = config.sim.t_max;
    cfg.record_times = config.sim.record_times;
    cfg.seed = config.seed;
    return cfg;
}

std::string histogram_csv(const Histogram& h) {
    std::ostringstream out;
    out << "count,replicates,probability\n";
    for (std::size_t k = 0; k < h.bins.size(); ++k)
        out << k << "," << h.bins[k] << "," << fmt(h.probability(k)) << "\n";
    return out.str();
}

int cmd_validate(const ExperimentConfig& config, ArtifactSink& sink) {
    ValidatedModel model = validate(config.model);
    double production = 0.0;
    for (std::size_t i = 0; i < config.model.split_rates.size(); ++i)
        production += static_cast<double>(i + 1) * config.model.split_rates[i];
    std::ostringstream out;
    out << "{\n"
        << "  \"subcritical\": true,\n"
        << "  \"gap\": " << fmt(model.gap()) << ",\n"
        << "  \"offspring_production_rate\": " << fmt(production) << ",\n"
        << "  \"death_rate\": " << fmt(config.model.death_rate) << ",\n"
        << "  \"immigration_rate\": " << fmt(config.model.immigration_rate) << ",\n"
        << "  \"steady_mean_per_site\": "
        << fmt(config.model.immigration_rate / model.gap()) << "\n"
        << "}\n";
    sink.add("summary.json", out.str());
    std::cout << "model valid, gap " << model.gap() << "\n";
    return 0;
}

int cmd_kernel(const ExperimentConfig& config, ArtifactSink& sink) {
    ValidatedModel model = validate(config.model);
    std::ostringstream out;
    out << "t,site,mass\n";
    for (double t : config.sim.record_times) {
        std::vector<double> kernel = torus_propagator(
            *model.walk(), config.sim.torus_side, config.model.dimension, t);
        for (std::size_t x = 0; x < kernel.size(); ++x)
            out << fmt(t) << "," << x << "," << fmt(kernel[x]) << "\n";
    }
    sink.add("kernel.csv", out.str());
    std::cout << "kernel on side " << config.sim.torus_side << " at "
              << config.sim.record_times.size() << " times\n";
    return 0;
}

int cmd_simulate(const ExperimentConfig& config, ArtifactSink& sink) {
    if (config.sim.replicates <= 0)
        throw Error(ErrorKind::usage_error, "sim.replicates must be positive");
    ValidatedModel model = validate(config.model);
    std::cout << "seed " << config.seed << ", " << config.sim.replicates
              << " replicates\n";
    EnsembleStats stats = run_ensemble(model, sim_config(config),
                                       static_cast<std::size_t>(config.sim.replicates));

    std::ostringstream summary;
    summary << "{\n  \"origin\": [\n";
    for (std::size_t i = 0; i < config.sim.record_times.size(); ++i) {
        const Histogram& h = stats.histograms[i][0];
        char name[64];
        std::snprintf(name, sizeof name, "histogram_%zu.csv", i);
        sink.add(name, histogram_csv(h));
        summary << "    {\"t\": " << fmt(config.sim.record_times[i])
                << ", \"mean\": " << fmt(h.mean())
                << ", \"mean_se\": " << fmt(h.cumulant1_se())
                << ", \"chi2\": " << fmt(h.cumulant2())
                << ", \"chi2_se\": " << fmt(h.cumulant2_se()) << "}"
                << (i + 1 < config.sim.record_times.size() ? "," : "") << "\n";
        std::cout << "t " << config.sim.record_times[i] << ": mean "
                  << h.mean() << " +- " << h.cumulant1_se() << "\n";
    }
    summary << "  ]\n}\n";
    sink.add("summary.json", summary.str());
    return 0;
}

int cmd_moments(const ExperimentConfig& config, ArtifactSink& sink) {
    ValidatedModel model = validate(config.model);
    MomentTable table = solve_hierarchy(model, config.hierarchy.torus_side,
                                        config.hierarchy.max_order,
                                        hierarchy_grid(config.hierarchy));
    std::ostringstream out;
    write_csv(table, out);
    sink.add("moments.csv", out.str());
    std::cout << "orders 1.." << config.hierarchy.max_order << " on side "
              << config.hierarchy.torus_side << ", horizon "
              << config.hierarchy.t_max << "\n";
    return 0;
}

int cmd_cumulants(const ExperimentConfig& config, ArtifactSink& sink) {
    ValidatedModel model = validate(config.model);
    SteadyStateOptions opts;
    opts.torus_side = config.cumulants.torus_side;
    opts.initial_horizon = config.cumulants.initial_horizon;
    opts.max_doublings = config.cumulants.max_doublings;
    CumulantVector steady = steady_state_cumulants(
        model, config.cumulants.max_order, config.cumulants.tol, opts);
    std::ostringstream out;
    write_json(steady, out);
    sink.add("cumulants.json", out.str());
    for (std::size_t l = 0; l < steady.values.size(); ++l)
        std::cout << "chi_" << l + 1 << " = " << steady.values[l] << "\n";
    return 0;
}

int cmd_bounds(const ExperimentConfig& config, ArtifactSink& sink) {
    ValidatedModel model = validate(config.model);
    BoundCertificate cert = make_certificate(model, config.hierarchy.max_order);
    MomentTable table = solve_hierarchy(model, config.hierarchy.torus_side,
                                        config.hierarchy.max_order,
                                        hierarchy_grid(config.hierarchy));
    MarginReport report = verify_factorial_bound(table, cert, model);

    std::ostringstream out;
    out << "{\n  \"B\": " << fmt(cert.B) << ",\n  \"D\": [";
    for (std::size_t i = 0; i < cert.D.size(); ++i)
        out << (i ? ", " : "") << fmt(cert.D[i]);
    out << "],\n  \"growth_estimate\": " << fmt(cert.growth_estimate)
        << ",\n  \"growth_stabilized\": "
        << (cert.growth_stabilized ? "true" : "false")
        << ",\n  \"min_margin\": " << fmt(report.min_margin)
        << ",\n  \"argmin_order\": " << report.argmin_order
        << ",\n  \"argmin_time\": " << fmt(report.argmin_time)
        << ",\n  \"argmin_site\": " << report.argmin_site
        << ",\n  \"comparisons\": " << report.comparisons << "\n}\n";
    sink.add("certificate.json", out.str());
    std::cout << "bound holds, min margin " << report.min_margin << " over "
              << report.comparisons << " comparisons\n";
    return 0;
}

int cmd_oracle(const ExperimentConfig& config, ArtifactSink& sink) {
    ValidatedModel model = validate(config.model);
    TruncatedStateSpace space(config.model.dimension, config.oracle.torus_side,
                              config.oracle.cap);
    RateMatrix gen = build_generator(model, space);
    std::cout << space.states() << " states, " << gen.nonzeros()
              << " transitions\n";

    std::ostringstream summary;
    summary << "{\n  \"states\": " << space.states() << ",\n  \"times\": [\n";
    for (std::size_t i = 0; i < config.oracle.times.size(); ++i) {
        double t = config.oracle.times[i];
        std::vector<double> dist = distribution_at(gen, space, t);
        std::vector<double> marginal = origin_marginal(dist, space);
        std::ostringstream out;
        write_marginal_csv(out, marginal);
        char name[64];
        std::snprintf(name, sizeof name, "marginal_%zu.csv", i);
        sink.add(name, out.str());
        double ofl = overflow_mass(dist, space);
        summary << "    {\"t\": " << fmt(t) << ", \"overflow_mass\": " << fmt(ofl)
                << "}" << (i + 1 < config.oracle.times.size() ? "," : "") << "\n";
        std::cout << "t " << t << ": overflow mass " << ofl << "\n";
    }
    summary << "  ]\n}\n";
    sink.add("summary.json", summary.str());
    return 0;
}

int cmd_verify_all(const ExperimentConfig& config, ArtifactSink& sink) {
    std::cout << "seed " << config.seed << "\n";
    AcceptanceReport report = run_acceptance(std::cout, config.seed);
    std::ostringstream out;
    write_acceptance_json(report, out);
    sink.add("acceptance_report.json", out.str());
    return report.all_passed() ? 0 : 5;
}

}  // namespace

int run_command(const std::string& verb, const ExperimentConfig& config) {
    auto start = std::chrono::steady_clock::now();
    ArtifactSink sink(config.output_dir);
    sink.add("resolved_config.json", config_to_json(config));

    int code = 0;
    if (verb == "validate")
        code = cmd_validate(config, sink);
    else if (verb == "kernel")
        code = cmd_kernel(config, sink);
    else if (verb == "simulate")
        code = cmd_simulate(config, sink);
    else if (verb == "moments")
        code = cmd_moments(config, sink);
    else if (verb == "cumulants")
        code = cmd_cumulants(config, sink);
    else if (verb == "bounds")
        code = cmd_bounds(config, sink);
    else if (verb == "oracle")
        code = cmd_oracle(config, sink);
    else if (verb == "verify-all")
        code = cmd_verify_all(config, sink);
    else
        throw Error(ErrorKind::usage_error, "unknown verb '" + verb + "'");

    double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::size_t written = sink.flush(verb, config.seed, wall);
    std::cout << written << " artifacts + manifest in " << config.output_dir
              << "\n";
    return code;
}

}  // namespace bifield
