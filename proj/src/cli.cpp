#include "mgeneo/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "mgeneo/error.hpp"
#include "mgeneo/parallel.hpp"
#include "mgeneo/pipeline.hpp"

namespace mgeneo::cli {

namespace {

namespace fs = std::filesystem;

void write_text(const std::string& path, const std::string& text, std::ostream& out)
{
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) throw Error("cannot write " + path);
}

std::string read_text(const fs::path& path)
{
    const auto bytes = img::read_file_bytes(path);
    return {bytes.begin(), bytes.end()};
}

struct BankOptions {
    std::string config;
    std::string kind = "mix-geneo";
    bool no_rescale = false;

    void add(CLI::App* app)
    {
        app->add_option("--bank", config, "Operator bank JSON file")->check(CLI::ExistingFile);
        app->add_option("--bank-kind", kind, "Built-in bank: multi-geneo, multi-dgeneo, mix-geneo, identity");
        app->add_flag("--no-rescale", no_rescale, "Keep raw operator outputs instead of mapping them to [0,255]");
    }

    geneo::OperatorBank bank() const
    {
        auto b = config.empty() ? geneo::default_bank(kind) : geneo::load_bank_config(config);
        if (no_rescale) b.rescale = false;
        return b;
    }
};

// Where a bifiltration comes from: an image and a bank, two explicit
// filtering functions, or a bifiltration text file.
struct BifiltSource {
    std::string input;
    std::string psi1;
    std::string psi2;
    std::string bifiltration;
    std::string rule = "square-max";
    int bins = 0;
    BankOptions bank;

    void add(CLI::App* app)
    {
        app->add_option("--input", input, "Image (PGM, or CSV matrix)")->check(CLI::ExistingFile);
        app->add_option("--psi1", psi1, "First filtering function (PGM or CSV)")->check(CLI::ExistingFile);
        app->add_option("--psi2", psi2, "Second filtering function (PGM or CSV)")->check(CLI::ExistingFile);
        app->add_option("--bifiltration", bifiltration, "Bifiltration text file")->check(CLI::ExistingFile);
        app->add_option("--rule", rule, "Triangle rule: square-max or simplex-max");
        app->add_option("--bins", bins, "Coarsen grades to this many bins per axis (0 = off)")->check(CLI::NonNegativeNumber);
        bank.add(app);
    }

    cx::Bifiltration build() const
    {
        const int given = !input.empty() + !bifiltration.empty() + (!psi1.empty() || !psi2.empty());
        if (given != 1) throw ConfigError("give exactly one of --input, --psi1/--psi2, --bifiltration");
        cx::Bifiltration b;
        if (!bifiltration.empty()) {
            b = cx::read_bifiltration_text(read_text(bifiltration));
        } else if (!input.empty()) {
            b = cx::build_bifiltration(img::load_image_file(input), bank.bank(), cx::parse_triangle_rule(rule));
        } else {
            if (psi1.empty() || psi2.empty()) throw ConfigError("--psi1 and --psi2 go together");
            b = cx::build_bifiltration(img::load_image_file(psi1), img::load_image_file(psi2),
                                       cx::parse_triangle_rule(rule));
        }
        if (bins > 0) b = cx::coarsen_bifiltration(b, bins);
        return b;
    }
};

struct GridOptions {
    std::vector<double> lo{0.0, 0.0};
    std::vector<double> hi{260.0, 260.0};
    double step = 10.0;
    std::string alignment = "centers";

    void add(CLI::App* app)
    {
        app->add_option("--lo", lo, "Grid lower corner x,y")->delimiter(',')->expected(2);
        app->add_option("--hi", hi, "Grid upper corner x,y")->delimiter(',')->expected(2);
        app->add_option("--step", step, "Grid step");
        app->add_option("--alignment", alignment, "Evaluation points: centers or corners");
    }

    mpl::GridSpec grid() const
    {
        if (alignment != "centers" && alignment != "corners") throw ConfigError("--alignment must be centers or corners");
        mpl::GridSpec g{{lo[0], lo[1]}, {hi[0], hi[1]}, step,
                        alignment == "centers" ? mpl::GridAlignment::Centers : mpl::GridAlignment::Corners};
        try {
            g.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
        return g;
    }
};

struct PiOptions {
    int resolution = 5;
    double sigma = 1.0;
    std::vector<double> range{0.0, 256.0};

    void add(CLI::App* app)
    {
        app->add_option("--pi-resolution", resolution, "Persistence image resolution");
        app->add_option("--pi-sigma", sigma, "Persistence image Gaussian sigma");
        app->add_option("--pi-range", range, "Persistence image range lo,hi")->delimiter(',')->expected(2);
    }

    vec::PersistenceImageParams params() const { return {resolution, sigma, {range[0], range[1]}}; }
};

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string tok; std::getline(ss, tok, ',');) {
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

std::string mnist_dir_default()
{
    if (const char* env = std::getenv("MGENEO_MNIST_DIR"); env && *env) return env;
    return "mnist";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Multiparameter persistence of GENEO-filtered images"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML/INI file with option defaults (command-line flags take precedence)");
    int threads = default_threads();
    app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    std::function<void()> action;

    // filter
    auto* filter = app.add_subcommand("filter", "Apply an operator bank to an image");
    std::string f_input;
    std::string f_out;
    BankOptions f_bank;
    filter->add_option("--input", f_input, "Image (PGM, or CSV matrix)")->required()->check(CLI::ExistingFile);
    filter->add_option("--out", f_out, "Output directory")->required();
    f_bank.add(filter);
    filter->callback([&] {
        action = [&] {
            const auto phi = img::load_image_file(f_input);
            const auto outputs = geneo::apply_bank(f_bank.bank(), phi);
            fs::create_directories(f_out);
            for (std::size_t i = 0; i < outputs.size(); ++i) {
                const auto stem = fs::path(f_out) / ("psi" + std::to_string(i + 1));
                const auto& o = outputs[i];
                const double lo = o.min_value();
                const double hi = o.max_value() > lo ? o.max_value() : lo + 1.0;
                img::write_pgm_file(stem.string() + ".pgm", o, std::min(lo, 0.0), std::max(hi, 255.0));
                write_text(stem.string() + ".csv", img::write_matrix_csv(o), out);
            }
            out << "wrote " << outputs.size() << " filtered images to " << f_out << "\n";
        };
    });

    // bifilt
    auto* bifilt = app.add_subcommand("bifilt", "Build the bifiltration of an image");
    BifiltSource b_src;
    std::string b_out;
    std::string b_rivet;
    b_src.add(bifilt);
    bifilt->add_option("--out", b_out, "Bifiltration text output (default stdout)");
    bifilt->add_option("--rivet", b_rivet, "Also write a RIVET bifiltration input file");
    bifilt->callback([&] {
        action = [&] {
            const auto b = b_src.build();
            write_text(b_out, cx::write_bifiltration_text(b), out);
            if (!b_rivet.empty()) write_text(b_rivet, cx::write_rivet_bifiltration(b), out);
        };
    });

    // pd
    auto* pd = app.add_subcommand("pd", "Persistence diagram of a one-parameter filtration");
    std::string p_input;
    std::string p_filtration = "lower";
    std::string p_out;
    std::string p_bifilt;
    std::vector<double> p_base;
    pd->add_option("--input", p_input, "Image (PGM, or CSV matrix)")->check(CLI::ExistingFile);
    pd->add_option("--filtration", p_filtration, "lower or upper");
    pd->add_option("--bifiltration", p_bifilt, "Bifiltration text file (with --basepoint)")->check(CLI::ExistingFile);
    pd->add_option("--basepoint", p_base, "Slice basepoint x,y")->delimiter(',')->expected(2);
    pd->add_option("--out", p_out, "Diagram CSV output (default stdout)");
    pd->callback([&] {
        action = [&] {
            ph::PersistenceDiagram d;
            if (!p_bifilt.empty()) {
                if (p_base.size() != 2) throw ConfigError("--bifiltration needs --basepoint x,y");
                const auto b = cx::read_bifiltration_text(read_text(p_bifilt));
                d = ph::compute_persistence(mpl::slice_filtration(b, {p_base[0], p_base[1]}));
            } else {
                if (p_input.empty()) throw ConfigError("give --input or --bifiltration");
                const auto f = pipeline::parse_filtration(p_filtration);
                if (pipeline::is_multiparameter(f)) throw ConfigError("pd takes --filtration lower or upper");
                d = pipeline::one_parameter_diagram(img::load_image_file(p_input), f);
            }
            write_text(p_out, ph::write_diagram_csv(d), out);
        };
    });

    // landscape
    auto* land = app.add_subcommand("landscape", "Multiparameter persistence landscape");
    BifiltSource l_src;
    GridOptions l_grid;
    int l_dim = 1;
    int l_kmax = 1;
    std::string l_out;
    std::string l_heatmap;
    l_src.add(land);
    l_grid.add(land);
    land->add_option("--dim", l_dim, "Homology dimension")->check(CLI::Range(0, 1));
    land->add_option("--k-max", l_kmax, "Number of landscape layers")->check(CLI::PositiveNumber);
    land->add_option("--out", l_out, "Landscape JSON output (default stdout)");
    land->add_option("--heatmap", l_heatmap, "PGM heatmap of layer 1 (min-max scaled)");
    land->callback([&] {
        action = [&] {
            const auto l = mpl::landscape(l_src.build(), l_dim, l_kmax, l_grid.grid());
            write_text(l_out, mpl::landscape_to_json(l).dump() + "\n", out);
            if (!l_heatmap.empty()) {
                const auto image = mpl::landscape_layer_image(l, 1);
                const double lo = image.min_value();
                img::write_pgm_file(l_heatmap, image, lo, image.max_value() > lo ? image.max_value() : lo + 1.0);
            }
        };
    });

    // hilbert
    auto* hilbert = app.add_subcommand("hilbert", "Hilbert function on a grid");
    BifiltSource h_src;
    GridOptions h_grid;
    int h_dim = 1;
    std::string h_out;
    h_src.add(hilbert);
    h_grid.add(hilbert);
    hilbert->add_option("--dim", h_dim, "Homology dimension")->check(CLI::Range(0, 1));
    hilbert->add_option("--out", h_out, "CSV output x,y,value (default stdout)");
    hilbert->callback([&] {
        action = [&] { write_text(h_out, mpl::write_hilbert_csv(mpl::hilbert_function(h_src.build(), h_dim, h_grid.grid())), out); };
    });

    // vectorize
    auto* vectorize = app.add_subcommand("vectorize", "Feature vectors for a list of images");
    std::vector<std::string> v_inputs;
    std::vector<int> v_labels;
    std::string v_filtration = "mix-G";
    std::string v_homology = "H0+H1";
    std::string v_out;
    std::string v_rule = "square-max";
    int v_bins = 10;
    int v_kmax = 1;
    GridOptions v_grid;
    PiOptions v_pi;
    std::string v_bank;
    vectorize->add_option("--input", v_inputs, "Images")->required()->check(CLI::ExistingFile);
    vectorize->add_option("--labels", v_labels, "Label per image (default -1)")->delimiter(',');
    vectorize->add_option("--filtration", v_filtration, "lower, upper, mul-G, mul-D, mix-G");
    vectorize->add_option("--homology", v_homology, "H0, H1 or H0+H1");
    vectorize->add_option("--rule", v_rule, "Triangle rule");
    vectorize->add_option("--bins", v_bins, "Bifiltration coarsening bins (0 = off)")->check(CLI::NonNegativeNumber);
    vectorize->add_option("--k-max", v_kmax, "Landscape layers")->check(CLI::PositiveNumber);
    vectorize->add_option("--bank", v_bank, "Operator bank JSON replacing the filtration's default")->check(CLI::ExistingFile);
    vectorize->add_option("--out", v_out, "Feature CSV output (default stdout)");
    v_grid.add(vectorize);
    v_pi.add(vectorize);
    vectorize->callback([&] {
        action = [&] {
            if (!v_labels.empty() && v_labels.size() != v_inputs.size()) throw ConfigError("--labels must match --input count");
            pipeline::FeatureParams params;
            params.pi = v_pi.params();
            params.grid = v_grid.grid();
            params.k_max = v_kmax;
            params.bins = v_bins;
            params.rule = cx::parse_triangle_rule(v_rule);
            if (!v_bank.empty()) params.bank = geneo::load_bank_config(v_bank);
            const auto f = pipeline::parse_filtration(v_filtration);
            const auto h = pipeline::parse_homology(v_homology);
            std::vector<img::GrayImage> images;
            for (const auto& p : v_inputs) images.push_back(img::load_image_file(p));
            const auto feats = pipeline::batch_features(images, f, params, {threads, std::nullopt, 1000});
            std::vector<vec::FeatureVector> rows;
            for (const auto& x : feats) rows.push_back(pipeline::select(x, h));
            if (v_labels.empty()) v_labels.assign(v_inputs.size(), -1);
            write_text(v_out, vec::write_feature_csv(v_labels, rows), out);
        };
    });

    // classify
    auto* classify = app.add_subcommand("classify", "Classification trials on a feature CSV");
    std::string c_features;
    std::string c_test;
    std::string c_methods = "L,PL,PS";
    std::string c_out;
    ml::SubsampleProtocol c_protocol;
    ml::ClassifierOptions c_opts;
    classify->add_option("--features", c_features, "Feature CSV (label column first)")->required()->check(CLI::ExistingFile);
    classify->add_option("--test", c_test, "Held-out feature CSV: train on --features, score on this once")->check(CLI::ExistingFile);
    classify->add_option("--methods", c_methods, "Comma list of L, PL, PS");
    classify->add_option("--per-class", c_protocol.per_class, "Samples per class per trial");
    classify->add_option("--trials", c_protocol.trials, "Number of trials")->check(CLI::PositiveNumber);
    classify->add_option("--train-fraction", c_protocol.train_fraction, "Training share of each class");
    classify->add_option("--seed", c_protocol.seed, "Seed");
    classify->add_option("--pca-components", c_opts.pca_components, "PCA components (0 = by explained variance)");
    classify->add_option("--svm-lambda", c_opts.svm.lambda, "SVM regularization");
    classify->add_option("--svm-epochs", c_opts.svm.epochs, "SVM epochs");
    classify->add_option("--out", c_out, "Report JSON (default stdout)");
    classify->callback([&] {
        action = [&] {
            std::vector<ml::Method> methods;
            for (const auto& m : split_list(c_methods)) methods.push_back(ml::parse_method(m));
            const auto table = vec::read_feature_csv(read_text(c_features));
            const auto data = ml::make_dataset(table.rows, table.labels);
            nlohmann::json cells = nlohmann::json::array();
            if (!c_test.empty()) {
                const auto t = vec::read_feature_csv(read_text(c_test));
                const auto test = ml::make_dataset(t.rows, t.labels);
                for (const auto m : methods) cells.push_back(ml::report_to_json(ml::run_official(data, test, m, c_opts, "")));
            } else {
                for (const auto& r : ml::run_trials(data, methods, c_protocol, c_opts, "", threads)) {
                    cells.push_back(ml::report_to_json(r));
                }
            }
            write_text(c_out, nlohmann::json{{"cells", cells}}.dump(2) + "\n", out);
        };
    });

    // experiment
    auto* experiment = app.add_subcommand("experiment", "End-to-end MNIST classification experiment");
    pipeline::ExperimentSpec e_spec;
    std::string e_filtration = "mix-G";
    std::string e_methods = "L,PL,PS";
    std::string e_homologies = "H0,H1,H0+H1";
    std::string e_rule = "square-max";
    std::string e_mnist = mnist_dir_default();
    std::string e_cache = ".mgeneo-cache";
    bool e_no_cache = false;
    std::string e_out;
    e_spec.protocol.trials = 100;
    experiment->add_option("--task", e_spec.task, "0vs1, 1vs3, 6vs9 or ten");
    experiment->add_option("--filtration", e_filtration, "lower, upper, mul-G, mul-D, mix-G");
    experiment->add_option("--scale", e_spec.scale, "sample500 (subsample of the training split) or full (official split)");
    experiment->add_option("--per-class", e_spec.per_class, "Samples per class for sample500")->check(CLI::PositiveNumber);
    experiment->add_option("--trials", e_spec.protocol.trials, "Trials for sample500")->check(CLI::PositiveNumber);
    experiment->add_option("--train-fraction", e_spec.protocol.train_fraction, "Training share per class");
    experiment->add_option("--seed", e_spec.protocol.seed, "Seed");
    experiment->add_option("--methods", e_methods, "Comma list of L, PL, PS");
    experiment->add_option("--homologies", e_homologies, "Comma list of H0, H1, H0+H1");
    experiment->add_option("--rule", e_rule, "Triangle rule");
    experiment->add_option("--bins", e_spec.features.bins, "Bifiltration coarsening bins (0 = off)")->check(CLI::NonNegativeNumber);
    experiment->add_option("--pca-components", e_spec.classifier.pca_components, "PCA components (0 = by explained variance)");
    experiment->add_option("--svm-lambda", e_spec.classifier.svm.lambda, "SVM regularization");
    experiment->add_option("--svm-epochs", e_spec.classifier.svm.epochs, "SVM epochs");
    experiment->add_option("--mnist-dir", e_mnist, "MNIST directory (default $MGENEO_MNIST_DIR)");
    experiment->add_option("--cache-dir", e_cache, "Feature cache directory");
    experiment->add_flag("--no-cache", e_no_cache, "Do not read or write the feature cache");
    experiment->add_option("--out", e_out, "Report JSON (default stdout)");
    experiment->callback([&] {
        action = [&] {
            e_spec.filtration = pipeline::parse_filtration(e_filtration);
            e_spec.features.rule = cx::parse_triangle_rule(e_rule);
            e_spec.methods.clear();
            for (const auto& m : split_list(e_methods)) e_spec.methods.push_back(ml::parse_method(m));
            e_spec.homologies.clear();
            for (const auto& h : split_list(e_homologies)) e_spec.homologies.push_back(pipeline::parse_homology(h));
            if (!fs::is_directory(e_mnist)) throw ConfigError("MNIST directory '" + e_mnist + "' not found");
            pipeline::BatchOptions batch{threads, std::nullopt, 1000};
            if (!e_no_cache) batch.cache_dir = fs::path(e_cache);
            const auto result = pipeline::run_experiment(e_spec, e_mnist, batch);
            write_text(e_out, result.report.dump(2) + "\n", out);
            err << "feature chunks: " << result.stats.chunks << ", served from cache: " << result.stats.cache_hits << "\n";
        };
    });

    // stability
    auto* stability = app.add_subcommand("stability", "Check landscape stability on random image pairs");
    pipeline::StabilitySpec s_spec;
    std::string s_out;
    stability->add_option("--pairs", s_spec.pairs, "Number of image pairs")->check(CLI::PositiveNumber);
    stability->add_option("--size", s_spec.size, "Image side")->check(CLI::PositiveNumber);
    stability->add_option("--bank-kind", s_spec.bank_kind, "multi-geneo, multi-dgeneo or mix-geneo");
    stability->add_option("--seed", s_spec.seed, "Seed");
    stability->add_option("--k-max", s_spec.k_max, "Landscape layers")->check(CLI::PositiveNumber);
    stability->add_option("--out", s_out, "Per-pair JSON report");
    int stability_code = kExitOk;
    stability->callback([&] {
        action = [&] {
            const auto r = pipeline::run_stability(s_spec, threads);
            if (!s_out.empty()) write_text(s_out, r.to_json().dump(2) + "\n", out);
            out << (r.violations == 0 ? "PASS" : "FAIL") << " bank=" << s_spec.bank_kind << " pairs=" << r.pairs.size()
                << " factor=" << r.factor << " violations=" << r.violations << " min_slack=" << r.min_slack << "\n";
            if (r.violations) stability_code = kExitFailure;
        };
    });

    // fixture
    auto* fixture = app.add_subcommand("fixture", "Write the 3x3 two-function example and its invariants");
    std::string x_out;
    fixture->add_option("--out", x_out, "Output directory")->required();
    fixture->callback([&] {
        action = [&] {
            fs::create_directories(x_out);
            const auto dir = fs::path(x_out);
            write_text((dir / "psi1.csv").string(), img::write_matrix_csv(pipeline::fixture_psi1()), out);
            write_text((dir / "psi2.csv").string(), img::write_matrix_csv(pipeline::fixture_psi2()), out);
            const mpl::GridSpec grid{{0.0, 0.0}, {10.0, 10.0}, 1.0, mpl::GridAlignment::Corners};
            for (const auto rule : {cx::TriangleRule::SquareMax, cx::TriangleRule::SimplexMax}) {
                const auto b = cx::build_bifiltration(pipeline::fixture_psi1(), pipeline::fixture_psi2(), rule);
                const auto name = cx::to_string(rule);
                write_text((dir / ("bifiltration-" + name + ".txt")).string(), cx::write_bifiltration_text(b), out);
                write_text((dir / ("rivet-" + name + ".txt")).string(), cx::write_rivet_bifiltration(b), out);
                write_text((dir / ("hilbert-h1-" + name + ".csv")).string(),
                           mpl::write_hilbert_csv(mpl::hilbert_function(b, 1, grid)), out);
                out << name << " sublevel(4,6):";
                for (const auto id : b.sublevel({4.0, 6.0})) out << ' ' << pipeline::fixture_simplex_name(b.complex->simplex(id));
                out << "\n";
            }
        };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (action) action();
        return stability_code;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InvalidArgument& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace mgeneo::cli
