// Command-line front end: every experiment is a subcommand writing
// reproducible, file-based outputs (manifest.json + CSV + PGM/PPM).
// `pgrad rerun <manifest.json>` re-executes a recorded run.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pg/am.hpp"
#include "pg/analysis.hpp"
#include "pg/io.hpp"
#include "pg/netspec.hpp"
#include "pg/toy_problems.hpp"
#include "pg/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// per-subcommand configs (serialized into the manifest, consumed by rerun)
// ---------------------------------------------------------------------------

struct ToyCmd {
    std::string problem = "f1";
    std::string mode = "relu"; // relu | lrelu | proxygrad
    double slope_fwd = 0.0;
    double slope_bwd = 0.0;
    double p = 0.2;
    int height = 32;
    int width = 32;
    int iters = 200;
    double lr = 0.2;
    bool normalize = false;
    double blur_sigma = 0.0;
    int blur_kernel = 3;
    double rot_deg = 0.0;
    double init_background = 0.0;
    double init_noise = 0.25;
    std::uint64_t seed = 1;
    int frame_stride = 0;
    std::string outdir = "out";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ToyCmd, problem, mode, slope_fwd, slope_bwd, p,
                                   height, width, iters, lr, normalize, blur_sigma,
                                   blur_kernel, rot_deg, init_background, init_noise,
                                   seed, frame_stride, outdir)

struct AmCmd {
    std::string net_spec;      // path given on the command line
    std::string net_spec_json; // resolved content (kept for reruns)
    std::string mode = "relu";
    double slope_fwd = 0.0;
    double slope_bwd = 0.0;
    int iters = 100;
    double lr = 25.0;
    bool normalize = true;
    double blur_sigma = 0.0;
    int blur_kernel = 3;
    double rot_deg = 0.0;
    double init_background = 0.0;
    double init_noise = 0.01;
    std::uint64_t seed = 1;
    std::uint64_t weights_seed = 0;
    int frame_stride = 0;
    std::string outdir = "out";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(AmCmd, net_spec, net_spec_json, mode, slope_fwd,
                                   slope_bwd, iters, lr, normalize, blur_sigma,
                                   blur_kernel, rot_deg, init_background, init_noise,
                                   seed, weights_seed, frame_stride, outdir)

struct MomentsCmd {
    double slope_min = 0.0;
    double slope_max = 1.0;
    double slope_step = 0.1;
    std::uint64_t mc_n = 1000000;
    std::uint64_t seed = 1;
    std::string outdir = "out";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MomentsCmd, slope_min, slope_max, slope_step, mc_n,
                                   seed, outdir)

struct GradmagCmd {
    std::vector<double> slopes{0.0, 0.3, 0.6, 0.9};
    std::string mode = "leaky";
    bool bn = true;
    double bn_eps = 1e-5;
    double bn_momentum = 0.1;
    std::string profile = "grad"; // grad | bnstd
    int seeds = 20;
    int batch = 8;
    std::vector<std::string> probes{"s1b1.conv1"};
    int data_classes = 5;
    int data_per_class = 20;
    int image_size = 16;
    std::uint64_t seed = 1;
    std::string outdir = "out";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GradmagCmd, slopes, mode, bn, bn_eps,
                                   bn_momentum, profile, seeds, batch, probes,
                                   data_classes, data_per_class, image_size, seed,
                                   outdir)

struct TrainCmd {
    std::string dataset = "synthetic"; // synthetic | idx
    std::string idx_train_images, idx_train_labels;
    std::string idx_test_images, idx_test_labels;
    int classes = 5;
    int per_class = 200;
    int test_per_class = 50;
    int image_size = 16;
    std::string mode = "relu";
    double slope_fwd = 0.0;
    double slope_bwd = 0.0;
    bool batchnorm = true;
    double bn_eps = 1e-5;
    double bn_momentum = 0.1;
    int epochs = 30;
    int batch = 32;
    double lr = 0.01;
    double lr_decay = 0.1;
    std::vector<int> milestones;
    double weight_decay = 0.0;
    std::string optimizer = "sgd"; // sgd | adam
    double momentum = 0.9;
    bool augment = false;
    std::uint64_t seed = 1;
    std::string outdir = "out";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TrainCmd, dataset, idx_train_images,
                                   idx_train_labels, idx_test_images, idx_test_labels,
                                   classes, per_class, test_per_class, image_size, mode,
                                   slope_fwd, slope_bwd, batchnorm, bn_eps,
                                   bn_momentum, epochs, batch, lr, lr_decay,
                                   milestones, weight_decay, optimizer, momentum,
                                   augment, seed, outdir)

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

pg::ActivationRule rule_from_mode(const std::string& mode, double slope_fwd,
                                  double slope_bwd) {
    if (mode == "relu") {
        if (slope_fwd != 0.0)
            throw std::invalid_argument("mode relu requires --slope-fwd 0");
        return pg::ActivationRule::relu();
    }
    if (mode == "lrelu") return pg::ActivationRule::leaky(slope_fwd);
    if (mode == "proxygrad") return pg::ActivationRule::proxy(slope_fwd, slope_bwd);
    throw std::invalid_argument("unknown mode '" + mode +
                                "' (expected relu, lrelu or proxygrad)");
}

std::vector<pg::Regularizer> regularizers_from(double blur_sigma, int blur_kernel,
                                               double rot_deg) {
    std::vector<pg::Regularizer> regs;
    if (blur_sigma > 0.0) regs.push_back(pg::BlurSpec{blur_sigma, blur_kernel});
    if (rot_deg > 0.0) regs.push_back(pg::RotateSpec{rot_deg});
    return regs;
}

void write_manifest(const std::string& outdir, const std::string& subcommand,
                    std::uint64_t seed, const json& config,
                    const std::vector<std::string>& outputs) {
    fs::create_directories(outdir);
    json manifest;
    manifest["tool"] = "pgrad";
    manifest["version"] = kToolVersion;
    manifest["subcommand"] = subcommand;
    manifest["seed"] = seed;
    manifest["config"] = config;
    manifest["outputs"] = outputs;
    pg::write_file(outdir + "/manifest.json", manifest.dump(2) + "\n");
}

std::vector<std::string> trajectory_outputs(int iters, int frame_stride) {
    std::vector<std::string> outputs{"trajectory.csv", "init.pgm", "final.pgm"};
    if (frame_stride > 0)
        for (int k = 0; k <= iters; k += frame_stride)
            outputs.push_back("frame_" + std::to_string(k) + ".pgm");
    return outputs;
}

void write_trajectory(const std::string& outdir, const pg::AmTrajectory& traj,
                      int frame_stride) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t k = 0; k < traj.objective.size(); ++k)
        rows.push_back({std::to_string(k), pg::csv_double(traj.objective[k]),
                        pg::csv_double(traj.grad_norm[k])});
    pg::write_csv(outdir + "/trajectory.csv", {"iteration", "objective", "grad_norm"},
                  rows);
    if (!traj.frames.empty()) {
        for (std::size_t f = 0; f < traj.frames.size(); ++f) {
            const int k = static_cast<int>(f) * frame_stride;
            pg::write_pgm(outdir + "/frame_" + std::to_string(k) + ".pgm",
                          traj.frames[f]);
        }
    }
    pg::write_pgm(outdir + "/final.pgm", traj.final_image);
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

void run_toy(const ToyCmd& cmd) {
    using PK = pg::WhiteImageProblem::Kind;
    const PK kind = pg::problem_kind_from_name(cmd.problem);
    const pg::ActivationRule rule =
        rule_from_mode(cmd.mode, cmd.slope_fwd, cmd.slope_bwd);

    pg::WhiteImageProblem problem;
    switch (kind) {
    case PK::F1: problem = pg::WhiteImageProblem::f1(cmd.height, cmd.width); break;
    case PK::F2:
        problem = pg::WhiteImageProblem::f2(cmd.slope_fwd, cmd.height, cmd.width);
        break;
    case PK::F3:
        problem = pg::WhiteImageProblem::f3(cmd.slope_fwd, cmd.p, cmd.height, cmd.width);
        break;
    case PK::Conv:
        problem =
            pg::WhiteImageProblem::conv(cmd.slope_fwd, cmd.p, cmd.height, cmd.width);
        break;
    }

    pg::AmConfig config;
    config.learning_rate = cmd.lr;
    config.iterations = cmd.iters;
    config.normalize_gradient = cmd.normalize;
    config.regularizers =
        regularizers_from(cmd.blur_sigma, cmd.blur_kernel, cmd.rot_deg);
    config.init = {cmd.init_background, cmd.init_noise};
    config.seed = cmd.seed;
    config.frame_stride = cmd.frame_stride;

    write_manifest(cmd.outdir, "toy", cmd.seed, json(cmd),
                   trajectory_outputs(cmd.iters, cmd.frame_stride));

    pg::Rng init_rng(cmd.seed, "init");
    const pg::Tensor init =
        pg::init_image(problem.image_shape(), config.init, init_rng);
    pg::write_pgm(cmd.outdir + "/init.pgm", init);

    const pg::AmTrajectory traj = pg::run_am(problem, rule, config, init);
    write_trajectory(cmd.outdir, traj, cmd.frame_stride);
    std::cout << "toy " << cmd.problem << " mode=" << cmd.mode
              << " final objective=" << traj.objective.back()
              << " optimum=" << pg::optimum(problem).f_star << "\n";
}

void run_am_cmd(AmCmd cmd) {
    if (cmd.net_spec_json.empty()) {
        if (cmd.net_spec.empty())
            throw std::invalid_argument("am: --net-spec is required");
        cmd.net_spec_json = pg::read_file(cmd.net_spec);
    }
    const pg::ActivationRule rule =
        rule_from_mode(cmd.mode, cmd.slope_fwd, cmd.slope_bwd);

    pg::Rng weights_rng(cmd.weights_seed, "weights");
    pg::Graph graph = pg::graph_from_netspec_json(cmd.net_spec_json, weights_rng);
    graph.set_all_activation_rules(rule);

    pg::AmConfig config;
    config.learning_rate = cmd.lr;
    config.iterations = cmd.iters;
    config.normalize_gradient = cmd.normalize;
    config.regularizers =
        regularizers_from(cmd.blur_sigma, cmd.blur_kernel, cmd.rot_deg);
    config.init = {cmd.init_background, cmd.init_noise};
    config.seed = cmd.seed;
    config.frame_stride = cmd.frame_stride;

    write_manifest(cmd.outdir, "am", cmd.seed, json(cmd),
                   trajectory_outputs(cmd.iters, cmd.frame_stride));

    // the graph input is (1,C,H,W); frames drop the batch dim for the writers
    const pg::Node& input = graph.node(0);
    pg::Rng init_rng(cmd.seed, "init");
    pg::Tensor init = pg::init_image(input.shape, config.init, init_rng);

    pg::AmTrajectory traj = pg::run_am(graph, config, init);

    const auto squeeze = [](const pg::Tensor& t) {
        std::vector<int> s = t.shape();
        if (s.size() == 4 && s[0] == 1)
            return pg::Tensor::from_data(
                {s[1], s[2], s[3]},
                std::vector<double>(t.data(), t.data() + t.numel()));
        return t;
    };
    pg::write_pgm(cmd.outdir + "/init.pgm", squeeze(init));
    for (auto& frame : traj.frames) frame = squeeze(frame);
    traj.final_image = squeeze(traj.final_image);
    write_trajectory(cmd.outdir, traj, cmd.frame_stride);
    std::cout << "am iterations=" << cmd.iters
              << " final objective=" << traj.objective.back() << "\n";
}

void run_moments(const MomentsCmd& cmd) {
    write_manifest(cmd.outdir, "moments", cmd.seed, json(cmd), {"moments.csv"});
    std::vector<std::vector<std::string>> rows;
    int idx = 0;
    for (double s = cmd.slope_min; s <= cmd.slope_max + 1e-12; s += cmd.slope_step) {
        const double slope = s > 1.0 ? 1.0 : s;
        pg::Rng rng(cmd.seed + static_cast<std::uint64_t>(idx++), "moments");
        const pg::McMoments mc =
            pg::monte_carlo_moments_detailed(slope, cmd.mc_n, rng);
        rows.push_back({pg::csv_double(slope),
                        pg::csv_double(pg::rectified_gaussian_mean(slope)),
                        pg::csv_double(pg::rectified_gaussian_var(slope)),
                        pg::csv_double(mc.moments.mean),
                        pg::csv_double(mc.moments.variance),
                        pg::csv_double(mc.se_mean), pg::csv_double(mc.se_var)});
    }
    pg::write_csv(cmd.outdir + "/moments.csv",
                  {"slope", "closed_mean", "closed_var", "mc_mean", "mc_var", "se_mean",
                   "se_var"},
                  rows);
    std::cout << "moments: wrote " << rows.size() << " slopes\n";
}

void run_gradmag(const GradmagCmd& cmd) {
    write_manifest(cmd.outdir, "gradmag", cmd.seed, json(cmd), {"profile.csv"});

    pg::Rng data_rng(cmd.seed, "dataset");
    const pg::Dataset data = pg::synthetic_shapes(cmd.data_per_class, cmd.data_classes,
                                                  cmd.image_size, data_rng);

    pg::TrendConfig trend;
    trend.net.classes = cmd.data_classes;
    trend.net.input_shape = {1, cmd.image_size, cmd.image_size};
    trend.net.bn_eps = cmd.bn_eps;
    trend.net.bn_momentum = cmd.bn_momentum;
    trend.slopes = cmd.slopes;
    trend.mode = pg::slope_mode_from_name(cmd.mode);
    trend.batchnorm = cmd.bn;
    trend.seeds = cmd.seeds;
    trend.batch_size = cmd.batch;
    trend.base_seed = cmd.seed;
    trend.probes = cmd.probes;

    std::vector<std::vector<std::string>> rows;
    if (cmd.profile == "grad") {
        for (const auto& r : pg::layer_gradient_magnitude(trend, data))
            rows.push_back({r.mode, pg::csv_double(r.slope), r.batchnorm ? "1" : "0",
                            r.layer, pg::csv_double(r.mean_abs_grad),
                            pg::csv_double(r.std_dev), std::to_string(r.n_seeds)});
        pg::write_csv(cmd.outdir + "/profile.csv",
                      {"mode", "slope", "bn", "layer", "mean_abs_grad", "std",
                       "n_seeds"},
                      rows);
    } else if (cmd.profile == "bnstd") {
        trend.net.batchnorm = true;
        trend.batchnorm = true;
        for (const auto& r : pg::bn_input_std_profile(trend, data))
            rows.push_back({r.mode, pg::csv_double(r.slope), "1", r.layer,
                            pg::csv_double(r.mean_std), pg::csv_double(r.std_dev),
                            std::to_string(r.n_seeds)});
        pg::write_csv(cmd.outdir + "/profile.csv",
                      {"mode", "slope", "bn", "layer", "mean_std", "std", "n_seeds"},
                      rows);
    } else {
        throw std::invalid_argument("gradmag: profile must be grad|bnstd");
    }
    std::cout << "gradmag: wrote " << rows.size() << " rows\n";
}

void run_train(const TrainCmd& cmd) {
    write_manifest(cmd.outdir, "train", cmd.seed, json(cmd), {"history.csv"});

    pg::Dataset train_set, test_set;
    if (cmd.dataset == "synthetic") {
        pg::Rng train_rng(cmd.seed, "train-data");
        pg::Rng test_rng(cmd.seed, "test-data");
        train_set = pg::synthetic_shapes(cmd.per_class, cmd.classes, cmd.image_size,
                                         train_rng);
        test_set = pg::synthetic_shapes(cmd.test_per_class, cmd.classes,
                                        cmd.image_size, test_rng);
    } else if (cmd.dataset == "idx") {
        train_set = pg::load_idx(cmd.idx_train_images, cmd.idx_train_labels);
        test_set = pg::load_idx(cmd.idx_test_images, cmd.idx_test_labels);
    } else {
        throw std::invalid_argument("train: dataset must be synthetic|idx");
    }

    pg::TinyResNetSpec spec;
    spec.classes = train_set.classes;
    spec.input_shape = {train_set.images.extent(1), train_set.images.extent(2),
                        train_set.images.extent(3)};
    spec.rule = rule_from_mode(cmd.mode, cmd.slope_fwd, cmd.slope_bwd);
    spec.batchnorm = cmd.batchnorm;
    spec.bn_eps = cmd.bn_eps;
    spec.bn_momentum = cmd.bn_momentum;

    pg::Rng weights_rng(cmd.seed, "weights");
    pg::Graph graph = pg::build_tiny_resnet(spec, weights_rng);

    pg::TrainConfig config;
    config.epochs = cmd.epochs;
    config.batch_size = cmd.batch;
    config.lr = {cmd.lr, cmd.lr_decay, cmd.milestones};
    config.weight_decay = cmd.weight_decay;
    config.optimizer = cmd.optimizer == "adam" ? pg::OptimizerKind::Adam
                                               : pg::OptimizerKind::SgdMomentum;
    config.momentum = cmd.momentum;
    config.augment = cmd.augment;
    config.seed = cmd.seed;

    const pg::TrainHistory history = pg::train(graph, train_set, test_set, config);

    std::vector<std::vector<std::string>> rows;
    for (const auto& e : history)
        rows.push_back({std::to_string(e.epoch), pg::csv_double(e.loss),
                        pg::csv_double(e.train_acc), pg::csv_double(e.test_acc)});
    pg::write_csv(cmd.outdir + "/history.csv",
                  {"epoch", "loss", "train_acc", "test_acc"}, rows);
    std::cout << "train: final test accuracy " << history.back().test_acc << "\n";
}

void run_rerun(const std::string& manifest_path, const std::string& outdir_override) {
    const json manifest = json::parse(pg::read_file(manifest_path));
    const std::string sub = manifest.at("subcommand").get<std::string>();
    json config = manifest.at("config");
    if (!outdir_override.empty()) config["outdir"] = outdir_override;

    if (sub == "toy") {
        run_toy(config.get<ToyCmd>());
    } else if (sub == "am") {
        run_am_cmd(config.get<AmCmd>());
    } else if (sub == "moments") {
        run_moments(config.get<MomentsCmd>());
    } else if (sub == "gradmag") {
        run_gradmag(config.get<GradmagCmd>());
    } else if (sub == "train") {
        run_train(config.get<TrainCmd>());
    } else {
        throw std::invalid_argument("rerun: unknown subcommand '" + sub + "'");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"proxy-gradient activation-maximization laboratory"};
    app.require_subcommand(1);

    ToyCmd toy;
    auto* toy_app = app.add_subcommand("toy", "white-image toy problems");
    toy_app->add_option("--problem", toy.problem, "f1|f2|f3|conv");
    toy_app->add_option("--mode", toy.mode, "relu|lrelu|proxygrad");
    toy_app->add_option("--slope-fwd", toy.slope_fwd);
    toy_app->add_option("--slope-bwd", toy.slope_bwd);
    toy_app->add_option("--p", toy.p, "second-branch scale (f3/conv)");
    toy_app->add_option("--height", toy.height);
    toy_app->add_option("--width", toy.width);
    toy_app->add_option("--iters", toy.iters);
    toy_app->add_option("--lr", toy.lr);
    toy_app->add_flag("--normalize", toy.normalize, "normalize gradients");
    toy_app->add_option("--blur-sigma", toy.blur_sigma);
    toy_app->add_option("--blur-kernel", toy.blur_kernel);
    toy_app->add_option("--rot-deg", toy.rot_deg);
    toy_app->add_option("--init-background", toy.init_background);
    toy_app->add_option("--init-noise", toy.init_noise);
    toy_app->add_option("--seed", toy.seed);
    toy_app->add_option("--frame-stride", toy.frame_stride);
    toy_app->add_option("--outdir", toy.outdir);

    AmCmd am;
    auto* am_app = app.add_subcommand("am", "activation maximization on a JSON net");
    am_app->add_option("--net-spec", am.net_spec, "network spec JSON file");
    am_app->add_option("--mode", am.mode, "relu|lrelu|proxygrad");
    am_app->add_option("--slope-fwd", am.slope_fwd);
    am_app->add_option("--slope-bwd", am.slope_bwd);
    am_app->add_option("--iters", am.iters);
    am_app->add_option("--lr", am.lr);
    am_app->add_flag("--normalize,!--no-normalize", am.normalize);
    am_app->add_option("--blur-sigma", am.blur_sigma);
    am_app->add_option("--blur-kernel", am.blur_kernel);
    am_app->add_option("--rot-deg", am.rot_deg);
    am_app->add_option("--init-background", am.init_background);
    am_app->add_option("--init-noise", am.init_noise);
    am_app->add_option("--seed", am.seed);
    am_app->add_option("--weights-seed", am.weights_seed);
    am_app->add_option("--frame-stride", am.frame_stride);
    am_app->add_option("--outdir", am.outdir);

    MomentsCmd moments;
    auto* moments_app =
        app.add_subcommand("moments", "rectified-Gaussian moments: closed form vs MC");
    moments_app->add_option("--slope-min", moments.slope_min);
    moments_app->add_option("--slope-max", moments.slope_max);
    moments_app->add_option("--slope-step", moments.slope_step);
    moments_app->add_option("--mc-n", moments.mc_n);
    moments_app->add_option("--seed", moments.seed);
    moments_app->add_option("--outdir", moments.outdir);

    GradmagCmd gradmag;
    auto* gradmag_app =
        app.add_subcommand("gradmag", "per-layer gradient / BN-input-std profiles");
    gradmag_app->add_option("--slopes", gradmag.slopes);
    gradmag_app->add_option("--mode", gradmag.mode, "leaky|proxygrad");
    gradmag_app->add_flag("--bn,!--no-bn", gradmag.bn);
    gradmag_app->add_option("--profile", gradmag.profile, "grad|bnstd");
    gradmag_app->add_option("--seeds", gradmag.seeds);
    gradmag_app->add_option("--batch", gradmag.batch);
    gradmag_app->add_option("--probe", gradmag.probes);
    gradmag_app->add_option("--data-classes", gradmag.data_classes);
    gradmag_app->add_option("--data-per-class", gradmag.data_per_class);
    gradmag_app->add_option("--image-size", gradmag.image_size);
    gradmag_app->add_option("--seed", gradmag.seed);
    gradmag_app->add_option("--outdir", gradmag.outdir);

    TrainCmd traincmd;
    auto* train_app = app.add_subcommand("train", "small-scale training comparison");
    train_app->add_option("--dataset", traincmd.dataset, "synthetic|idx");
    train_app->add_option("--idx-train-images", traincmd.idx_train_images);
    train_app->add_option("--idx-train-labels", traincmd.idx_train_labels);
    train_app->add_option("--idx-test-images", traincmd.idx_test_images);
    train_app->add_option("--idx-test-labels", traincmd.idx_test_labels);
    train_app->add_option("--classes", traincmd.classes);
    train_app->add_option("--per-class", traincmd.per_class);
    train_app->add_option("--test-per-class", traincmd.test_per_class);
    train_app->add_option("--image-size", traincmd.image_size);
    train_app->add_option("--mode", traincmd.mode, "relu|lrelu|proxygrad");
    train_app->add_option("--slope-fwd", traincmd.slope_fwd);
    train_app->add_option("--slope-bwd", traincmd.slope_bwd);
    train_app->add_flag("--bn,!--no-bn", traincmd.batchnorm);
    train_app->add_option("--epochs", traincmd.epochs);
    train_app->add_option("--batch", traincmd.batch);
    train_app->add_option("--lr", traincmd.lr);
    train_app->add_option("--lr-decay", traincmd.lr_decay);
    train_app->add_option("--milestones", traincmd.milestones);
    train_app->add_option("--weight-decay", traincmd.weight_decay);
    train_app->add_option("--optimizer", traincmd.optimizer, "sgd|adam");
    train_app->add_option("--momentum", traincmd.momentum);
    train_app->add_flag("--augment", traincmd.augment);
    train_app->add_option("--seed", traincmd.seed);
    train_app->add_option("--outdir", traincmd.outdir);

    std::string rerun_manifest, rerun_outdir;
    auto* rerun_app = app.add_subcommand("rerun", "re-execute a recorded manifest");
    rerun_app->add_option("manifest", rerun_manifest, "path to manifest.json")
        ->required();
    rerun_app->add_option("--outdir", rerun_outdir, "override output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (toy_app->parsed()) run_toy(toy);
        if (am_app->parsed()) run_am_cmd(am);
        if (moments_app->parsed()) run_moments(moments);
        if (gradmag_app->parsed()) run_gradmag(gradmag);
        if (train_app->parsed()) run_train(traincmd);
        if (rerun_app->parsed()) run_rerun(rerun_manifest, rerun_outdir);
    } catch (const std::domain_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
