// gen: train, sample and inspect geometric enclosing networks.

#include "gen/cli.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    using namespace gen::cli;
    CLI::App app{"Enclosing-ball generative model: train, generate, eval, contour, check"};
    app.require_subcommand(1);

    std::string config, ckpt, out_path, truth, grid;
    bool resume = false;
    Eigen::Index n = 10000;
    std::uint64_t seed = 0;

    auto* train = app.add_subcommand("train", "Train from a JSON config (output dir overridable via GEN_OUTPUT_DIR)");
    train->add_option("config", config, "Config file")->required();
    train->add_flag("--resume", resume, "Continue from the checkpoint in the output directory");

    auto* generate = app.add_subcommand("generate", "Write generated samples as CSV");
    generate->add_option("checkpoint", ckpt)->required();
    generate->add_option("--n", n, "Number of samples")->default_val(10000);
    generate->add_option("--out", out_path, "Output CSV")->required();
    generate->add_option("--seed", seed, "Noise seed")->default_val(0);

    auto* eval = app.add_subcommand("eval", "Symmetric KL, Wasserstein and mode coverage against a truth spec");
    eval->add_option("checkpoint", ckpt)->required();
    eval->add_option("--truth", truth, "Truth spec JSON");
    eval->add_option("--out", out_path, "Output CSV")->required();
    eval->add_option("--seed", seed, "Evaluation seed")->default_val(0);

    auto* contour = app.add_subcommand("contour", "Decision values of the learned ball on a 2-D grid");
    contour->add_option("checkpoint", ckpt)->required();
    contour->add_option("--grid", grid, "x0,x1,y0,y1,res")->required();
    contour->add_option("--out", out_path, "Output CSV")->required();

    auto* check = app.add_subcommand("check", "Report the bijectivity conditions for a checkpoint or config");
    check->add_option("path", ckpt, "Checkpoint or config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    if (*train) return cmd_train(config, resume, std::cout, std::cerr);
    if (*generate) return cmd_generate(ckpt, n, out_path, seed, std::cout, std::cerr);
    if (*eval) return cmd_eval(ckpt, truth, out_path, seed, std::cout, std::cerr);
    if (*contour) return cmd_contour(ckpt, grid, out_path, std::cout, std::cerr);
    if (*check) return cmd_check(ckpt, std::cout, std::cerr);
    return failure;
}
