#include <CLI11.hpp>
#include <boost/version.hpp>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>

#include "ndd/decomposition/decomposition.hpp"
#include "ndd/diffusion/diffusion.hpp"
#include "ndd/dist/empirical.hpp"
#include "ndd/dist/quantile.hpp"
#include "ndd/error.hpp"
#include "ndd/harness/harness.hpp"
#include "ndd/marl/train.hpp"
#include "ndd/noise/noise_model.hpp"
#include "ndd/numcore/checkpoint.hpp"

#ifndef NDD_VERSION
#define NDD_VERSION "0.0.0"
#endif

namespace ndd::harness {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// Canonical "name=value" lines for every option of a subcommand except the
// ones that only say where output goes.
std::string canonical_config(const CLI::App& sub) {
    std::string text = sub.get_name() + "\n";
    for (const CLI::Option* opt : sub.get_options()) {
        std::string name = opt->get_single_name();
        name.erase(0, name.find_first_not_of('-'));
        if (name.empty() || name == "help" || name == "config" || name == "out") continue;
        std::string value;
        if (opt->count() > 0) {
            for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
        } else {
            value = opt->get_default_str();
        }
        text += name + "=" + value + "\n";
    }
    return text;
}

void write_manifest(const fs::path& path, const CLI::App& sub, std::uint64_t seed, const std::vector<fs::path>& files) {
    const std::string config = canonical_config(sub);
    Json j;
    j["command"] = sub.get_name();
    j["config_hash"] = config_hash(config);
    j["seed"] = seed;
    Json cfg = Json::object();
    std::istringstream lines(config);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
        const auto eq = line.find('=');
        cfg[line.substr(0, eq)] = line.substr(eq + 1);
    }
    j["config"] = cfg;
    j["versions"] = {{"ndd", NDD_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"boost", BOOST_LIB_VERSION},
                     {"cli11", CLI11_VERSION},
                     {"compiler", __VERSION__}};
    Json out = Json::array();
    for (const auto& f : files) out.push_back(f.filename().string());
    j["outputs"] = out;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << j.dump(2) << '\n';
}

fs::path default_out(const std::string& out, const std::string& stem) {
    return out.empty() ? output_root() / stem : fs::path(out);
}

std::string stem_of(const std::string& preset) {
    return fs::path(preset).stem().string();
}

// --- constants -------------------------------------------------------------

struct ConstantsArgs {
    std::size_t k = 25;
    std::string out;
};

int constants_cmd(const CLI::App& sub, const ConstantsArgs& a) {
    const auto sched = diffusion::build_schedule(a.k);
    const auto c = diffusion::theorem_constants(sched);
    std::printf("sum_prod_gamma1 %.4f\nprod_gamma1 %.4e\napprox_coeff %.4f\nvariance_coeff %.4f\nmean_slack %.4f\n"
                "offset %.5f\n",
                c.sum_prod_gamma1, c.prod_gamma1, c.approx_coeff, c.variance_coeff, c.mean_slack, c.offset);
    const fs::path dir = default_out(a.out, "constants");
    Table t{{"k", "sum_prod_gamma1", "prod_gamma1", "approx_coeff", "variance_coeff", "mean_slack", "offset"},
            {{static_cast<double>(a.k), c.sum_prod_gamma1, c.prod_gamma1, c.approx_coeff, c.variance_coeff, c.mean_slack,
              c.offset}}};
    write_table(dir / "constants.csv", t);
    write_manifest(dir / "manifest.json", sub, 0, {dir / "constants.csv"});
    return 0;
}

// --- decompose -------------------------------------------------------------

struct DecomposeArgs {
    std::string preset;
    std::size_t components = 3;
    std::size_t samples = 100000;
    bool stratified = false;
    std::uint64_t seed = 1;
    decomposition::FitOptions fit = [] {
        // e drops under e_min long before the mixture settles; keep polishing
        decomposition::FitOptions o;
        o.min_rounds = 2000;
        o.lr_final_ratio = 0.01;
        return o;
    }();
    std::string out;
};

int decompose_cmd(const CLI::App& sub, const DecomposeArgs& a) {
    const auto model_noise = noise::resolve(a.preset);
    numcore::RandomSource rng(a.seed);
    const auto x = a.stratified ? noise::sample_noise_stratified(model_noise, rng, a.samples)
                                : noise::sample_noise(model_noise, rng, a.samples);
    const auto batch = decomposition::unconditional_batch(a.components, x);
    decomposition::DecompositionModel model(a.components, 1, rng);
    const auto r = decomposition::fit(model, batch, a.fit, rng);
    const auto g = decomposition::decompose(model, std::vector<Eigen::VectorXd>(a.components, Eigen::VectorXd::Ones(1)));
    const double w2 = dist::wasserstein(dist::quantile_of(g), [&](double t) { return model_noise.quantile(t); }, 2.0);

    Table t{{"seed", "samples", "rounds", "e", "converged", "wasserstein2"}, {}};
    std::vector<double> row = {static_cast<double>(a.seed), static_cast<double>(a.samples),
                               static_cast<double>(r.rounds), r.e, r.converged ? 1.0 : 0.0, w2};
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto s = std::to_string(i);
        t.header.insert(t.header.end(), {"weight" + s, "mean" + s, "variance" + s});
        row.insert(row.end(), {g.weights()[i], g.components()[i].mean, g.components()[i].variance});
    }
    t.rows.push_back(row);
    Table curve{{"evaluation", "e"}, {}};
    for (std::size_t i = 0; i < r.curve.size(); ++i) curve.rows.push_back({static_cast<double>(i), r.curve[i]});

    const fs::path dir = default_out(a.out, "decompose-" + stem_of(a.preset) + "-seed" + std::to_string(a.seed));
    write_table(dir / "decompose.csv", t);
    write_table(dir / "curve.csv", curve);
    write_manifest(dir / "manifest.json", sub, a.seed, {dir / "decompose.csv", dir / "curve.csv"});
    for (std::size_t i = 0; i < t.header.size(); ++i) std::cout << (i ? "," : "") << t.header[i];
    std::cout << '\n';
    for (std::size_t i = 0; i < row.size(); ++i) std::cout << (i ? "," : "") << format_value(row[i]);
    std::cout << '\n';
    return 0;
}

// --- diffuse ---------------------------------------------------------------

struct DiffuseArgs {
    std::string preset;
    std::size_t k = 25;
    std::size_t train_iters = 5000;
    std::size_t samples = 10000;
    std::size_t generate = 10000;
    std::size_t grid = 200;
    std::uint64_t seed = 1;
    std::string out;
};

int diffuse_cmd(const CLI::App& sub, const DiffuseArgs& a) {
    const auto law = noise::resolve(a.preset);
    numcore::RandomSource rng(a.seed);
    const auto real = noise::sample_noise(law, rng, a.samples);
    const auto sched = diffusion::build_schedule(a.k);
    diffusion::DenoiserStack stack(sched, rng);
    diffusion::TrainConfig tc;
    tc.iterations = a.train_iters;
    diffusion::train(stack, real, sched, tc, rng);
    const auto gen = diffusion::generate(stack, sched, a.generate, rng);

    fs::path samples_path, density_path, manifest_path;
    const fs::path base = default_out(a.out, "diffuse-" + stem_of(a.preset) + "-seed" + std::to_string(a.seed));
    if (base.extension() == ".csv") {
        samples_path = base;
        density_path = base.parent_path() / (base.stem().string() + "_density.csv");
        manifest_path = base.parent_path() / (base.stem().string() + "_manifest.json");
    } else {
        samples_path = base / "generated.csv";
        density_path = base / "density.csv";
        manifest_path = base / "manifest.json";
    }

    Table s{{"index", "generated"}, {}};
    for (std::size_t i = 0; i < gen.size(); ++i) s.rows.push_back({static_cast<double>(i), gen[i]});
    write_table(samples_path, s);

    const auto kde_real = dist::fit_empirical(real), kde_gen = dist::fit_empirical(gen);
    const double lo = law.quantile(1e-3), hi = law.quantile(1 - 1e-3);
    Table d{{"x", "real_kde", "generated_kde"}, {}};
    for (std::size_t g = 0; g < a.grid; ++g) {
        const double xv = lo + (hi - lo) * (static_cast<double>(g) + 0.5) / static_cast<double>(a.grid);
        d.rows.push_back({xv, kde_real.density(xv), kde_gen.density(xv)});
    }
    write_table(density_path, d);
    write_manifest(manifest_path, sub, a.seed, {samples_path, density_path});

    std::vector<double> sorted = gen;
    std::sort(sorted.begin(), sorted.end());
    const double w1 = dist::wasserstein([&](double t) { return dist::sample_quantile(sorted, t); },
                                        [&](double t) { return law.quantile(t); }, 1.0);
    std::printf("wasserstein1 %.4f\n", w1);
    return 0;
}

// --- train / risk-sweep ----------------------------------------------------

struct MarlArgs {
    marl::MarlConfig cfg;
    std::string env = "coop_spread";
    std::size_t grid = 5;
    std::size_t horizon = 25;
    std::uint64_t layout_seed = 0;
    std::string distortion = "expectation";
    std::string mode = "sampled";
    std::string dm = "off";
    std::string out;
};

void add_marl_options(CLI::App* sub, MarlArgs& a) {
    sub->add_option("--env", a.env, "Environment")->check(CLI::IsMember({"coop_spread"}));
    sub->add_option("--agents", a.cfg.agents, "Number of agents")->check(CLI::Range(1, 25));
    sub->add_option("--grid", a.grid, "Grid side length")->check(CLI::Range(2, 100));
    sub->add_option("--horizon", a.horizon, "Episode length")->check(CLI::PositiveNumber);
    sub->add_option("--layout-seed", a.layout_seed, "Seed for landmark placement");
    sub->add_option("--noise", a.cfg.noise, "Noise preset name or config file");
    sub->add_option("--mode", a.mode, "Local reward: sampled, mean, or global (naive)")
        ->check(CLI::IsMember({"sampled", "mean", "global"}));
    sub->add_option("--iters", a.cfg.iterations, "Outer iterations")->check(CLI::PositiveNumber);
    sub->add_option("--gamma", a.cfg.learner.gamma, "Discount")->check(CLI::Range(0.0, 0.999999));
    sub->add_option("--quantiles", a.cfg.learner.quantiles, "Quantiles per action")->check(CLI::PositiveNumber);
    sub->add_option("--kappa", a.cfg.learner.kappa, "Huber threshold")->check(CLI::NonNegativeNumber);
    sub->add_option("--lr", a.cfg.learner.adam.learning_rate, "Learner learning rate")->check(CLI::PositiveNumber);
    sub->add_option("--lambda", a.cfg.lambda, "Mean-spread penalty")->check(CLI::NonNegativeNumber);
    sub->add_option("--alpha", a.cfg.alpha, "Weight penalty")->check(CLI::NonNegativeNumber);
    sub->add_option("--e-min", a.cfg.e_min, "Decomposition stopping value")->check(CLI::PositiveNumber);
    sub->add_option("--fit-rounds", a.cfg.fit_rounds, "Decomposition rounds per iteration");
    sub->add_option("--buffer", a.cfg.buffer, "Buffer capacity")->check(CLI::PositiveNumber);
    sub->add_option("--batch", a.cfg.batch, "TD minibatch size")->check(CLI::PositiveNumber);
    sub->add_option("--updates", a.cfg.updates, "TD updates per iteration (0: one pass)");
    sub->add_option("--dm", a.dm, "Diffusion augmentation on/off")->check(CLI::IsMember({"on", "off"}));
    sub->add_option("--zeta", a.cfg.zeta, "Fraction of real data")->check(CLI::Range(1e-6, 1.0));
    sub->add_option("--dm-train-iters", a.cfg.dm_train_iters, "Diffusion training steps per iteration");
    sub->add_option("--eval-episodes", a.cfg.eval_episodes, "Evaluation episodes")->check(CLI::PositiveNumber);
    sub->add_option("--eval-every", a.cfg.eval_every, "Evaluation period")->check(CLI::PositiveNumber);
}

std::unique_ptr<marl::DecPomdpEnv> make_env(const MarlArgs& a) {
    return marl::coop_spread_env(a.cfg.agents, a.grid, a.layout_seed, a.horizon);
}

marl::MarlConfig resolved(const MarlArgs& a) {
    marl::MarlConfig c = a.cfg;
    c.distortion = distortion::parse_distortion(a.distortion);
    c.mode = marl::parse_reward_mode(a.mode);
    c.dm = a.dm == "on";
    return c;
}

Table metrics_table(const marl::TrainResult& r) {
    Table t{{"iteration", "eval_return", "wasserstein", "l_pdf"}, {}};
    for (const auto& m : r.log)
        t.rows.push_back({static_cast<double>(m.iteration), m.eval_return, m.wasserstein, m.l_pdf});
    return t;
}

double final_return(const marl::TrainResult& r) {
    for (auto it = r.log.rbegin(); it != r.log.rend(); ++it)
        if (!std::isnan(it->eval_return)) return it->eval_return;
    return std::numeric_limits<double>::quiet_NaN();
}

int train_cmd(const CLI::App& sub, const MarlArgs& a) {
    const auto env = make_env(a);
    const auto cfg = resolved(a);
    const fs::path dir = default_out(a.out, "train-seed" + std::to_string(cfg.seed));
    const auto r = marl::train(*env, cfg, [](const marl::IterationMetrics& m) {
        if (m.iteration % 25 == 0 && !std::isnan(m.eval_return))
            std::fprintf(stderr, "iteration %zu return %.3f\n", m.iteration, m.eval_return);
    });
    std::vector<fs::path> files{dir / "metrics.csv"};
    write_table(files.front(), metrics_table(r));
    fs::create_directories(dir / "checkpoints");
    for (std::size_t i = 0; i < r.learners.size(); ++i) {
        files.push_back(dir / "checkpoints" / ("agent" + std::to_string(i) + ".ndd"));
        numcore::save_checkpoint(files.back(), r.learners[i].net());
    }
    if (r.model)
        for (std::size_t i = 0; i < r.model->agents(); ++i) {
            files.push_back(dir / "checkpoints" / ("decomposition" + std::to_string(i) + ".ndd"));
            numcore::save_checkpoint(files.back(), r.model->net(i));
        }
    write_manifest(dir / "manifest.json", sub, cfg.seed, files);
    std::printf("final_return %.4f\n", final_return(r));
    return 0;
}

struct SweepArgs {
    MarlArgs marl;
    std::vector<std::string> distortions{"cpw:0.71", "cvar:0.25", "expectation"};
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

int risk_sweep_cmd(const CLI::App& sub, const SweepArgs& a) {
    const fs::path dir = default_out(a.marl.out, "risk-sweep");
    const auto env = make_env(a.marl);
    fs::create_directories(dir);
    const fs::path csv = dir / "risk_sweep.csv";
    std::ofstream out(csv, std::ios::binary);
    out << "distortion,seed,final_return\n";
    std::cout << "distortion,seed,final_return\n";
    for (const auto& spec : a.distortions) {
        MarlArgs m = a.marl;
        m.distortion = spec;
        auto cfg = resolved(m);
        std::string tag = distortion::to_string(cfg.distortion);
        std::replace(tag.begin(), tag.end(), ':', '_');
        for (auto seed : a.seeds) {
            cfg.seed = seed;
            const auto r = marl::train(*env, cfg);
            write_table(dir / tag / ("seed" + std::to_string(seed)) / "metrics.csv", metrics_table(r));
            const std::string line = distortion::to_string(cfg.distortion) + "," + std::to_string(seed) + "," +
                                     format_value(final_return(r));
            out << line << '\n';
            std::cout << line << std::endl;
        }
    }
    out.close();
    write_manifest(dir / "manifest.json", sub, a.seeds.empty() ? 0 : a.seeds.front(), {csv});
    return 0;
}

// --- report ----------------------------------------------------------------

struct ReportArgs {
    std::string dir;
    std::string out;
};

int report_cmd(const CLI::App& sub, const ReportArgs& a) {
    const fs::path out = a.out.empty() ? fs::path(a.dir) : fs::path(a.out);
    auto files = report(a.dir, out);
    write_manifest(out / "report_manifest.json", sub, 0, files);
    for (const auto& f : files) std::cout << f.string() << '\n';
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Noise distribution decomposition experiments", "ndd"};
    app.require_subcommand(1);
    app.set_version_flag("--version", NDD_VERSION);
    app.option_defaults()->always_capture_default();
    // Options may come from an INI/TOML file with one section per subcommand.
    app.set_config("--config", "", "Read options from an INI/TOML file ([train] section etc.)");
    app.allow_config_extras(CLI::config_extras_mode::error);
    std::function<int()> action;

    auto configure = [](CLI::App* sub) {
        sub->allow_config_extras(CLI::config_extras_mode::error);
        sub->option_defaults()->always_capture_default();
    };

    ConstantsArgs ca;
    auto* c = app.add_subcommand("constants", "Print the diffusion error-bound constants");
    configure(c);
    c->add_option("--k", ca.k, "Diffusion steps")->check(CLI::Range(2, 1000));
    c->add_option("--out", ca.out, "Output directory");
    c->callback([&] { action = [&] { return constants_cmd(*c, ca); }; });

    DecomposeArgs da;
    auto* d = app.add_subcommand("decompose", "Fit a Gaussian mixture decomposition to a noise law");
    configure(d);
    d->add_option("--preset", da.preset, "Noise preset name or config file")->required();
    d->add_option("--components", da.components, "Mixture components (agents)")->check(CLI::Range(1, 64));
    d->add_option("--samples", da.samples, "Noise samples")->check(CLI::Range(2, 100000000));
    d->add_flag("--stratified", da.stratified, "Exact per-component sample counts");
    d->add_option("--rounds", da.fit.max_rounds, "Maximum rounds")->check(CLI::PositiveNumber);
    d->add_option("--min-rounds", da.fit.min_rounds, "Rounds to run before stopping at e-min");
    d->add_option("--lambda", da.fit.lambda, "Mean-spread penalty")->check(CLI::NonNegativeNumber);
    d->add_option("--alpha", da.fit.alpha, "Weight penalty")->check(CLI::NonNegativeNumber);
    d->add_option("--lr", da.fit.adam.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
    d->add_option("--lr-final-ratio", da.fit.lr_final_ratio, "Final/initial learning rate")
        ->check(CLI::Range(1e-6, 1.0));
    d->add_option("--e-min", da.fit.e_min, "Stopping value")->check(CLI::PositiveNumber);
    d->add_option("--seed", da.seed, "Random seed");
    d->add_option("--out", da.out, "Output directory");
    d->callback([&] { action = [&] { return decompose_cmd(*d, da); }; });

    DiffuseArgs fa;
    auto* f = app.add_subcommand("diffuse", "Train the reward diffusion model and generate samples");
    configure(f);
    f->add_option("--preset", fa.preset, "Noise preset name or config file")->required();
    f->add_option("--k", fa.k, "Diffusion steps")->check(CLI::Range(2, 1000));
    f->add_option("--train-iters", fa.train_iters, "Training iterations")->check(CLI::PositiveNumber);
    f->add_option("--samples", fa.samples, "Training samples")->check(CLI::Range(32, 100000000));
    f->add_option("--generate", fa.generate, "Samples to generate")->check(CLI::Range(2, 100000000));
    f->add_option("--grid", fa.grid, "Density comparison points")->check(CLI::PositiveNumber);
    f->add_option("--seed", fa.seed, "Random seed");
    f->add_option("--out", fa.out, "Output CSV path or directory");
    f->callback([&] { action = [&] { return diffuse_cmd(*f, fa); }; });

    MarlArgs ta;
    auto* t = app.add_subcommand("train", "Train agents with decomposed noisy rewards");
    configure(t);
    add_marl_options(t, ta);
    t->add_option("--distortion", ta.distortion, "Distortion, e.g. cvar:0.25");
    t->add_option("--seed", ta.cfg.seed, "Random seed");
    t->add_option("--out", ta.out, "Output directory");
    t->callback([&] { action = [&] { return train_cmd(*t, ta); }; });

    SweepArgs sa;
    sa.marl.cfg.iterations = 100;
    auto* s = app.add_subcommand("risk-sweep", "Train under several distortions and seeds");
    configure(s);
    add_marl_options(s, sa.marl);
    s->add_option("--distortions", sa.distortions, "Comma-separated distortions")->delimiter(',');
    s->add_option("--seeds", sa.seeds, "Comma-separated seeds")->delimiter(',');
    s->add_option("--out", sa.marl.out, "Output directory");
    s->callback([&] { action = [&] { return risk_sweep_cmd(*s, sa); }; });

    ReportArgs ra;
    auto* r = app.add_subcommand("report", "Aggregate metrics.csv files into a summary and plots");
    configure(r);
    r->add_option("dir", ra.dir, "Run directory")->required();
    r->add_option("--out", ra.out, "Output directory (default: the run directory)");
    r->callback([&] { action = [&] { return report_cmd(*r, ra); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        return action ? action() : 2;
    } catch (const ConfigError& e) {
        std::cerr << "ndd: configuration error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "ndd: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ndd: " << e.what() << '\n';
        return 1;
    }
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"ndd"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace ndd::harness
