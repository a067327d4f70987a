#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "adiff/esf.hpp"
#include "adiff/filter.hpp"
#include "adiff/io.hpp"
#include "adiff/metrics.hpp"
#include "adiff/noise.hpp"
#include "adiff/nonlocal.hpp"
#include "adiff/phantom.hpp"
#include "adiff/volume.hpp"

namespace {

using namespace adiff;

// ---------------------------------------------------------------------------
// shared plumbing

enum class Variant { adf, wadf, nlwadf };

Variant parse_variant(const std::string& s) {
    if (s == "adf") return Variant::adf;
    if (s == "wadf") return Variant::wadf;
    if (s == "nlwadf") return Variant::nlwadf;
    throw std::invalid_argument(fmt::format("unknown variant '{}'", s));
}

BoundaryPolicy parse_boundary(const std::string& s) {
    if (s == "clamp") return BoundaryPolicy::count_in_bounds;
    if (s == "periodic") return BoundaryPolicy::periodic;
    throw std::invalid_argument(fmt::format("unknown boundary mode '{}'", s));
}

NoiseModel parse_model(const std::string& s) {
    if (s == "gaussian") return NoiseModel::gaussian;
    if (s == "rician") return NoiseModel::rician;
    throw std::invalid_argument(fmt::format("unknown noise model '{}'", s));
}

/// 0 means "pick for me": the largest standard neighborhood of the
/// volume's dimensionality.
AdjacencyRelation resolve_adjacency(int requested, int naxes) {
    const int size = requested != 0 ? requested : (naxes == 2 ? 8 : 26);
    return make_adjacency(naxes, size);
}

/// Output element type by container: PGM gets the full 16-bit range,
/// MetaImage keeps doubles so nothing is quantized.
ElementType element_for(FileFormat format) {
    return format == FileFormat::metaimage ? ElementType::float64 : ElementType::uint16;
}

void write_output(const Volume& v, const std::filesystem::path& path) {
    const FileFormat format = format_for_path(path);
    const std::size_t clamped = write_volume(v, path, format, element_for(format));
    if (clamped > 0)
        fmt::print(stderr, "note: {} samples clamped to the output range of {}\n", clamped,
                   path.string());
}

const char* stop_name(StopReason r) {
    return r == StopReason::gamma_threshold ? "gamma_threshold" : "max_iterations";
}

// ---------------------------------------------------------------------------
// sweep configuration file

/// Grid and protocol settings for cmd_sweep. The list-valued fields are the
/// grid axes; the scalar fields select the protocol a whole sweep runs
/// under. Every field can be overridden by a "key = v1, v2, ..." line.
struct SweepConfig {
    std::vector<double> gamma_retention{0.16, 0.32, 0.48, 0.64, 0.80, 0.96};
    std::vector<double> conservativeness{0.2, 0.4, 0.6, 0.8, 1.0};
    std::vector<double> sr{2.0, 3.0, 4.0};
    std::vector<double> pr{1.1, 1.5, 1.8, 1.9};
    std::vector<double> pd{0.5, 1.0, 2.0};
    std::vector<int> num_patches{1, 2};
    std::vector<double> noise_levels{0.01, 0.03, 0.05, 0.07, 0.09};
    std::string variant = "wadf";
    int adjacency = 0;  // 0 = pick by dimensionality
    std::string boundary = "clamp";
    std::string model = "gaussian";
    int realizations = 1;
    int max_iters = 1000;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_values(const std::string& s, int line_no) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string tok; std::getline(ss, tok, ',');) {
        tok = trim(tok);
        if (tok.empty())
            throw std::invalid_argument(fmt::format("config line {}: empty value in list", line_no));
        out.push_back(tok);
    }
    if (out.empty())
        throw std::invalid_argument(fmt::format("config line {}: no values given", line_no));
    return out;
}

double to_double(const std::string& tok, int line_no) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != tok.size())
        throw std::invalid_argument(fmt::format("config line {}: '{}' is not a number", line_no, tok));
    return v;
}

int to_int(const std::string& tok, int line_no) {
    std::size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(tok, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != tok.size())
        throw std::invalid_argument(fmt::format("config line {}: '{}' is not an integer", line_no, tok));
    return v;
}

std::vector<double> double_list(const std::string& s, int line_no) {
    std::vector<double> out;
    for (const auto& tok : split_values(s, line_no)) out.push_back(to_double(tok, line_no));
    return out;
}

std::vector<int> int_list(const std::string& s, int line_no) {
    std::vector<int> out;
    for (const auto& tok : split_values(s, line_no)) out.push_back(to_int(tok, line_no));
    return out;
}

std::string single_word(const std::string& s, int line_no) {
    const auto vals = split_values(s, line_no);
    if (vals.size() != 1)
        throw std::invalid_argument(
            fmt::format("config line {}: expected a single value, got {}", line_no, vals.size()));
    return vals[0];
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot open config file {}", path.string()));
    SweepConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(
                fmt::format("config line {}: expected 'key = values'", line_no));
        const std::string key = trim(line.substr(0, eq));
        const std::string rest = line.substr(eq + 1);
        if (key == "gamma_retention")
            cfg.gamma_retention = double_list(rest, line_no);
        else if (key == "conservativeness")
            cfg.conservativeness = double_list(rest, line_no);
        else if (key == "sr")
            cfg.sr = double_list(rest, line_no);
        else if (key == "pr")
            cfg.pr = double_list(rest, line_no);
        else if (key == "pd")
            cfg.pd = double_list(rest, line_no);
        else if (key == "num_patches")
            cfg.num_patches = int_list(rest, line_no);
        else if (key == "noise_levels")
            cfg.noise_levels = double_list(rest, line_no);
        else if (key == "variant")
            cfg.variant = single_word(rest, line_no);
        else if (key == "adjacency")
            cfg.adjacency = to_int(single_word(rest, line_no), line_no);
        else if (key == "boundary")
            cfg.boundary = single_word(rest, line_no);
        else if (key == "model")
            cfg.model = single_word(rest, line_no);
        else if (key == "realizations")
            cfg.realizations = to_int(single_word(rest, line_no), line_no);
        else if (key == "max_iters")
            cfg.max_iters = to_int(single_word(rest, line_no), line_no);
        else
            throw std::invalid_argument(fmt::format("config line {}: unknown key '{}'", line_no, key));
    }
    parse_variant(cfg.variant);  // fail fast on typos
    parse_boundary(cfg.boundary);
    parse_model(cfg.model);
    if (cfg.realizations < 1) throw std::invalid_argument("config: realizations must be >= 1");
    if (cfg.max_iters < 0) throw std::invalid_argument("config: max_iters must be >= 0");
    return cfg;
}

// ---------------------------------------------------------------------------
// sweep execution

/// One point of the filter-parameter grid. The non-local fields are only
/// meaningful when the sweep variant is nlwadf; r_index keys the retention
/// aggregates.
struct GridPoint {
    double c = 0.0;
    double retention = 0.0;
    int r_index = 0;
    double sr = 0.0;
    double pr = 0.0;
    double pd = 0.0;
    int np = -1;
};

struct RunResult {
    int iterations = 0;
    MetricsReport m;
};

std::vector<GridPoint> build_grid(const SweepConfig& cfg, Variant variant) {
    std::vector<GridPoint> pts;
    for (double c : cfg.conservativeness) {
        for (std::size_t ri = 0; ri < cfg.gamma_retention.size(); ++ri) {
            GridPoint g;
            g.c = c;
            g.retention = cfg.gamma_retention[ri];
            g.r_index = static_cast<int>(ri);
            if (variant != Variant::nlwadf) {
                pts.push_back(g);
                continue;
            }
            for (double sr : cfg.sr)
                for (double pr : cfg.pr)
                    for (double pd : cfg.pd)
                        for (int np : cfg.num_patches) {
                            g.sr = sr;
                            g.pr = pr;
                            g.pd = pd;
                            g.np = np;
                            pts.push_back(g);
                        }
        }
    }
    return pts;
}

std::string echo_point(const GridPoint& g, Variant variant, double level, int realization) {
    std::string s = fmt::format("noise_level={} realization={} c={} r={}", level, realization, g.c,
                                g.retention);
    if (variant == Variant::nlwadf)
        s += fmt::format(" sr={} pr={} pd={} patches={}", g.sr, g.pr, g.pd, g.np);
    return s;
}

RunResult run_point(const Volume& noisy, const Volume& truth, const GridPoint& g, Variant variant,
                    const AdjacencyRelation& adj, BoundaryPolicy bp, int max_iters,
                    double sigma_gs) {
    FilterParams p;
    p.adjacency = adj;
    p.boundary = bp;
    p.max_iterations = max_iters;
    p.schedule.retention = g.retention;
    p.schedule.gamma0 = g.c * sigma_gs;
    std::pair<Volume, FilterRunReport> out;
    if (variant == Variant::nlwadf) {
        NonLocalConfig cfg;
        cfg.search_radius = g.sr;
        cfg.patch_shape = patch_offsets(g.pr, noisy.naxes);
        cfg.patch_distance = g.pd;
        cfg.num_patches = g.np;
        out = run_nlwadf(noisy, p, cfg);
    } else {
        p.variant = variant == Variant::adf ? FilterVariant::adf : FilterVariant::wadf;
        if (p.variant == FilterVariant::adf)
            p.lambda = lambda_max(adj.naxes, static_cast<int>(adj.size()));
        out = run_filter(noisy, p);
    }
    return {out.second.iterations_run, compute_metrics(out.first, truth)};
}

int cmd_sweep(const std::filesystem::path& truth_path, const std::filesystem::path& config_path,
              const std::filesystem::path& csv_path, std::uint64_t seed) {
    const Volume truth = read_volume(truth_path);
    const SweepConfig cfg = load_sweep_config(config_path);
    const Variant variant = parse_variant(cfg.variant);
    const BoundaryPolicy bp = parse_boundary(cfg.boundary);
    const NoiseModel model = parse_model(cfg.model);
    const AdjacencyRelation adj = resolve_adjacency(cfg.adjacency, truth.naxes);

    const std::vector<GridPoint> grid = build_grid(cfg, variant);
    const std::size_t levels = cfg.noise_levels.size();
    const std::size_t reals = static_cast<std::size_t>(cfg.realizations);
    const std::size_t total = grid.size() * levels * reals;
    fmt::print("sweep: {} grid points x {} noise levels x {} realizations = {} runs\n", grid.size(),
               levels, cfg.realizations, total);

    std::vector<RunResult> results(total);
    for (std::size_t li = 0; li < levels; ++li) {
        for (std::size_t re = 0; re < reals; ++re) {
            // One noisy input per (level, realization), shared by every grid
            // point. The sub-seed is a pure function of the indices so the
            // sweep is reproducible run to run and config to config.
            NoiseSpec spec;
            spec.model = model;
            spec.level = cfg.noise_levels[li];
            spec.seed = derive_seed(seed, li * 1024 + re);
            const Volume noisy = add_noise(truth, spec);
            const double sigma_gs = estimate_sigma_gs(noisy, adj, bp);
            const std::size_t base = (li * reals + re) * grid.size();

            std::string first_error;
#pragma omp parallel for schedule(dynamic)
            for (long long gi = 0; gi < static_cast<long long>(grid.size()); ++gi) {
                try {
                    results[base + static_cast<std::size_t>(gi)] =
                        run_point(noisy, truth, grid[static_cast<std::size_t>(gi)], variant, adj,
                                  bp, cfg.max_iters, sigma_gs);
                } catch (const std::exception& e) {
#pragma omp critical
                    {
                        if (first_error.empty())
                            first_error = fmt::format(
                                "{} (at {})", e.what(),
                                echo_point(grid[static_cast<std::size_t>(gi)], variant,
                                           spec.level, static_cast<int>(re)));
                    }
                }
            }
            if (!first_error.empty()) throw std::runtime_error("sweep: " + first_error);
        }
    }

    // Buffered CSV, written in grid order no matter how the runs were
    // scheduled. Aggregate rows mean every run sharing a retention value.
    std::string csv =
        "row_type,variant,noise_level,realization,conservativeness,retention,"
        "sr,pr,pd,num_patches,iterations,mse,psnr,ssim,iqi\n";
    struct Accum {
        double iterations = 0, mse = 0, psnr = 0, ssim = 0, iqi = 0;
        std::size_t n = 0;
    };
    std::vector<Accum> by_retention(cfg.gamma_retention.size());
    for (std::size_t li = 0; li < levels; ++li) {
        for (std::size_t re = 0; re < reals; ++re) {
            const std::size_t base = (li * reals + re) * grid.size();
            for (std::size_t gi = 0; gi < grid.size(); ++gi) {
                const GridPoint& g = grid[gi];
                const RunResult& r = results[base + gi];
                std::string nl_cols = ",,,";
                if (variant == Variant::nlwadf)
                    nl_cols = fmt::format("{},{},{},{}", g.sr, g.pr, g.pd, g.np);
                csv += fmt::format("run,{},{},{},{},{},{},{},{},{},{},{}\n", cfg.variant,
                                   cfg.noise_levels[li], re, g.c, g.retention, nl_cols,
                                   r.iterations, r.m.mse, r.m.psnr, r.m.ssim, r.m.iqi);
                Accum& a = by_retention[static_cast<std::size_t>(g.r_index)];
                a.iterations += r.iterations;
                a.mse += r.m.mse;
                a.psnr += r.m.psnr;
                a.ssim += r.m.ssim;
                a.iqi += r.m.iqi;
                ++a.n;
            }
        }
    }
    for (std::size_t ri = 0; ri < by_retention.size(); ++ri) {
        const Accum& a = by_retention[ri];
        const double n = static_cast<double>(a.n);
        csv += fmt::format("retention_mean,{},,,,{},,,,,{},{},{},{},{}\n", cfg.variant,
                           cfg.gamma_retention[ri], a.iterations / n, a.mse / n, a.psnr / n,
                           a.ssim / n, a.iqi / n);
    }

    std::ofstream out(csv_path, std::ios::binary);
    out << csv;
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", csv_path.string()));
    fmt::print("sweep: wrote {} run rows + {} aggregate rows to {}\n", total, by_retention.size(),
               csv_path.string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D/3D diffusion denoising toolkit"};
    app.require_subcommand(1);

    // --- add-noise -----------------------------------------------------
    std::string n_in, n_out, n_model = "gaussian";
    double n_level = 0.0;
    std::uint64_t n_seed = 0;
    auto* noise_cmd = app.add_subcommand("add-noise", "Inject seeded noise into an image");
    noise_cmd->add_option("input", n_in, "Input image (PGM or MetaImage)")
        ->required()
        ->check(CLI::ExistingFile);
    noise_cmd->add_option("output", n_out, "Output image path")->required();
    noise_cmd->add_option("--model", n_model, "Noise model")
        ->check(CLI::IsMember({"gaussian", "rician"}));
    noise_cmd->add_option("--level", n_level, "Noise sigma as a fraction of the image maximum")
        ->required();
    noise_cmd->add_option("--seed", n_seed, "RNG seed");
    noise_cmd->callback([&] {
        NoiseSpec spec;
        spec.model = parse_model(n_model);
        spec.level = n_level;
        spec.seed = n_seed;
        write_output(add_noise(read_volume(n_in), spec), n_out);
    });

    // --- filter ---------------------------------------------------------
    std::string f_in, f_out, f_variant = "wadf", f_boundary = "clamp";
    double f_cons = 0.8, f_retention = 0.8, f_gamma0 = 0.0, f_lambda = 0.0;
    double f_sr = 4.0, f_pr = 1.1, f_pd = 0.5;
    int f_adjacency = 0, f_patches = 2, f_max_iters = 1000;
    auto* filter_cmd = app.add_subcommand("filter", "Run a diffusion filter until the stop rule");
    filter_cmd->add_option("input", f_in, "Input image")->required()->check(CLI::ExistingFile);
    filter_cmd->add_option("output", f_out, "Output image path")->required();
    filter_cmd->add_option("--variant", f_variant, "Filter variant")
        ->check(CLI::IsMember({"adf", "wadf", "nlwadf"}));
    auto* cons_opt = filter_cmd->add_option("--conservativeness", f_cons,
                                            "gamma0 = this * sigma_Gs of the input (default 0.8)");
    filter_cmd->add_option("--retention", f_retention, "Per-iteration gamma decay, in (0,1)");
    filter_cmd->add_option("--gamma0", f_gamma0, "Explicit initial gamma (skips estimation)")
        ->excludes(cons_opt);
    filter_cmd->add_option("--adjacency", f_adjacency,
                           "Neighborhood size (default: 8 in 2D, 26 in 3D)")
        ->check(CLI::IsMember({4, 8, 6, 18, 26}));
    filter_cmd->add_option("--boundary", f_boundary, "Border handling")
        ->check(CLI::IsMember({"clamp", "periodic"}));
    filter_cmd->add_option("--max-iters", f_max_iters, "Iteration cap")
        ->check(CLI::NonNegativeNumber);
    filter_cmd->add_option("--lambda", f_lambda,
                           "adf step size, in (0, lambda_max] (default: lambda_max)");
    filter_cmd->add_option("--sr", f_sr, "nlwadf search radius (default 4.0)");
    filter_cmd->add_option("--pr", f_pr, "nlwadf patch radius (default 1.1)");
    filter_cmd->add_option("--pd", f_pd, "nlwadf patch distance (default 0.5)");
    filter_cmd->add_option("--patches", f_patches, "nlwadf partners per pixel (default 2)")
        ->check(CLI::NonNegativeNumber);
    filter_cmd->callback([&] {
        const Variant variant = parse_variant(f_variant);
        if (variant != Variant::nlwadf)
            for (const char* flag : {"--sr", "--pr", "--pd", "--patches"})
                if (filter_cmd->count(flag) > 0)
                    throw CLI::ValidationError(
                        fmt::format("{} only applies to --variant nlwadf", flag));
        if (variant != Variant::adf && filter_cmd->count("--lambda") > 0)
            throw CLI::ValidationError("--lambda only applies to --variant adf");

        const Volume in = read_volume(f_in);
        FilterParams p;
        p.adjacency = resolve_adjacency(f_adjacency, in.naxes);
        p.boundary = parse_boundary(f_boundary);
        p.max_iterations = f_max_iters;
        p.schedule.retention = f_retention;
        p.schedule.gamma0 = filter_cmd->count("--gamma0") > 0
                                ? f_gamma0
                                : f_cons * estimate_sigma_gs(in, p.adjacency, p.boundary);

        std::pair<Volume, FilterRunReport> out;
        if (variant == Variant::nlwadf) {
            NonLocalConfig cfg;
            cfg.search_radius = f_sr;
            cfg.patch_shape = patch_offsets(f_pr, in.naxes);
            cfg.patch_distance = f_pd;
            cfg.num_patches = f_patches;
            out = run_nlwadf(in, p, cfg);
        } else {
            p.variant = variant == Variant::adf ? FilterVariant::adf : FilterVariant::wadf;
            if (p.variant == FilterVariant::adf)
                p.lambda = filter_cmd->count("--lambda") > 0
                               ? f_lambda
                               : lambda_max(p.adjacency.naxes, static_cast<int>(p.adjacency.size()));
            out = run_filter(in, p);
        }
        write_output(out.first, f_out);
        const auto& rep = out.second;
        const double final_gamma =
            rep.gamma_trace.empty() ? p.schedule.gamma0 : rep.gamma_trace.back();
        fmt::print("variant={} iterations={} final_gamma={} stopped_by={}\n", f_variant,
                   rep.iterations_run, final_gamma, stop_name(rep.stopped_by));
    });

    // --- metrics ---------------------------------------------------------
    std::string m_filtered, m_reference;
    auto* metrics_cmd = app.add_subcommand("metrics", "Print mse,psnr,ssim,iqi for an image pair");
    metrics_cmd->add_option("filtered", m_filtered, "Image under test")
        ->required()
        ->check(CLI::ExistingFile);
    metrics_cmd->add_option("reference", m_reference, "Reference image")
        ->required()
        ->check(CLI::ExistingFile);
    metrics_cmd->callback([&] {
        const MetricsReport r = compute_metrics(read_volume(m_filtered), read_volume(m_reference));
        fmt::print("{},{},{},{}\n", r.mse, r.psnr, r.ssim, r.iqi);
    });

    // --- phantom ---------------------------------------------------------
    std::string p_out;
    int p_nx = 128, p_ny = 128;
    double p_peak = 100.0;
    auto* phantom_cmd =
        app.add_subcommand("phantom", "Write the piecewise-constant test image (two nested disks)");
    phantom_cmd->add_option("output", p_out, "Output image path")->required();
    phantom_cmd->add_option("--nx", p_nx, "Width (default 128)")->check(CLI::PositiveNumber);
    phantom_cmd->add_option("--ny", p_ny, "Height (default 128)")->check(CLI::PositiveNumber);
    phantom_cmd->add_option("--peak", p_peak, "Peak intensity (default 100)")
        ->check(CLI::PositiveNumber);
    phantom_cmd->callback([&] { write_output(make_phantom(p_nx, p_ny, p_peak), p_out); });

    // --- sweep -----------------------------------------------------------
    std::string s_truth, s_config, s_csv;
    std::uint64_t s_seed = 0;
    auto* sweep_cmd =
        app.add_subcommand("sweep", "Run a filter-parameter grid over noisy copies of an image");
    sweep_cmd->add_option("ground_truth", s_truth, "Clean reference image")
        ->required()
        ->check(CLI::ExistingFile);
    sweep_cmd->add_option("config", s_config, "Grid config file, one 'key = v1, v2, ...' per line")
        ->required()
        ->check(CLI::ExistingFile);
    sweep_cmd->add_option("csv", s_csv, "Output CSV path")->required();
    sweep_cmd->add_option("--seed", s_seed, "Master RNG seed");
    sweep_cmd->callback([&] { cmd_sweep(s_truth, s_config, s_csv, s_seed); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        fmt::print(stderr, "adiff: {}\n", e.what());
        return 1;
    }
    return 0;
}
