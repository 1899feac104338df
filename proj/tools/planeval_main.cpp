#include <CLI11.hpp>

#include <cstdint>
#include <string>

#include "planeval/evaluation.hpp"

int main(int argc, char** argv) {
  CLI::App app{"planning-aware evaluation of trajectory predictions"};
  app.require_subcommand(1);

  std::string preset;
  std::uint64_t seed = 0;
  int count = 1;
  std::string out_path;
  CLI::App* simulate = app.add_subcommand("simulate", "generate synthetic scenes");
  simulate->add_option("--preset", preset, "head_on, passing, or random")->required();
  simulate->add_option("--seed", seed, "base seed; scene i uses seed + i");
  simulate->add_option("--count", count, "number of scenes");
  simulate->add_option("--out", out_path, "output JSONL path")->required();

  std::string scenes_path;
  CLI::App* learn = app.add_subcommand("learn", "fit cost weights to recorded scenes");
  learn->add_option("--scenes", scenes_path, "input JSONL path")->required();
  learn->add_option("--out", out_path, "output weights JSON path")->required();

  std::string weights_path;
  std::string metrics = "ade,fde";
  std::string scheme = "gt_excess";
  CLI::App* eval = app.add_subcommand("eval", "score prediction candidates");
  eval->add_option("--scenes", scenes_path, "input JSONL path")->required();
  eval->add_option("--weights", weights_path, "learned weights JSON path")->required();
  eval->add_option("--metrics", metrics, "comma-separated metric names");
  eval->add_option("--scheme", scheme, "norm, softmax, or gt_excess");
  eval->add_option("--out", out_path, "output CSV path")->required();

  std::string in_path;
  CLI::App* report = app.add_subcommand("report", "render an evaluation CSV as SVG");
  report->add_option("--in", in_path, "input CSV path")->required();
  report->add_option("--out", out_path, "output SVG path")->required();

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) {
    return planeval::cmd_simulate(preset, seed, count, out_path);
  }
  if (learn->parsed()) {
    return planeval::cmd_learn(scenes_path, out_path);
  }
  if (eval->parsed()) {
    return planeval::cmd_eval(scenes_path, weights_path, metrics, scheme, out_path);
  }
  return planeval::cmd_report(in_path, out_path);
}
