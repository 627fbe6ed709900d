#include <CLI11.hpp>

#include <tetrakit/tetrakit.hpp>

int main(int argc, char** argv) {
    using tetrakit::cli::JobSpec;
    JobSpec job;
    CLI::App app{"tetrakit: tetrablock contractions, fundamental operators and Douglas models"};
    app.set_version_flag("--version", tetrakit::cli::kVersion);
    app.require_subcommand(1);

    double tol = job.tolerances.eq_tol;
    std::string order;
    std::uint64_t seed = 0;
    int grid = 0;

    for (const auto& name : tetrakit::cli::commands()) {
        CLI::App* sub = app.add_subcommand(name);
        if (name != "generate") sub->add_option("input", job.input_path, "input JSON (tetrakit/io/v1)")->required();
        sub->add_option("--out", job.output_path, "report path (default: stdout)");
        sub->add_option("--tol", tol, "equality tolerance");
        sub->add_option("--grid", grid, "grid size");
        sub->add_option("--order", order, "truncation order N or 'auto'");
        sub->add_option("--seed", seed, "seed");
        sub->add_option("--mc-samples", job.mc_samples, "Monte Carlo samples in the certifier");
        sub->add_option("--class", job.gen_class, "generator class");
        sub->add_option("--dim", job.dim, "dimension for generate");
        sub->add_option("--boundary-grid", job.boundary_grid, "unit-circle samples in data sets");
        sub->add_option("--modes", job.fourier_modes, "Fourier modes for validate-special");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : tetrakit::cli::kInputError;
    }
    for (CLI::App* sub : app.get_subcommands()) {
        job.command = sub->get_name();
        if (sub->count("--tol")) job.tolerances.eq_tol = tol;
        if (sub->count("--seed")) job.seed = seed;
        if (sub->count("--grid")) {
            job.grid = grid;
            job.tolerances.grid_points = grid;
        }
        if (sub->count("--order")) {
            if (order == "auto") {
                job.order_auto = true;
            } else {
                try {
                    std::size_t pos = 0;
                    job.order_N = std::stoi(order, &pos);
                    if (pos != order.size()) throw std::invalid_argument(order);
                } catch (const std::exception&) {
                    std::cerr << "error: --order expects an integer or 'auto'\n";
                    return tetrakit::cli::kInputError;
                }
            }
        }
    }
    return tetrakit::cli::run(job);
}
