#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mog/checks/decomposition.hpp"
#include "mog/core/expr.hpp"
#include "mog/sim/order_sim.hpp"
#include "mog/train/trainer.hpp"

using namespace mog;

namespace {

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::string metrics_json(const train::EvalMetrics& m) {
  nlohmann::json j = {{"token_acc", m.token_acc}, {"seq_acc", m.seq_acc}, {"bleu", m.bleu}};
  if (!m.gate_means.empty()) j["gate_means"] = m.gate_means;
  return j.dump(2) + "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-order graph toolkit: order simulators, decomposition checks, graph encoder training"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, data_path, out_path, format = "json", suite = "all", expr, regime = "san";
  std::size_t beam = 0, seeds = 100, layers = 3, len = 16, probe = 0;
  double alpha = -1.0;
  bool quiet = false;

  auto* train_cmd = app.add_subcommand("train", "train one model from a config file");
  train_cmd->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
  train_cmd->add_flag("--quiet", quiet, "no progress lines");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--ckpt", ckpt_path, "checkpoint.json")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", data_path, "prefix of <data>.src/<data>.tgt; default is the run's eval split");
  eval_cmd->add_option("--beam", beam, "beam width (default: from the checkpoint config)");
  eval_cmd->add_option("--alpha", alpha, "length penalty (default: from the checkpoint config)");

  auto* ablate_cmd = app.add_subcommand("ablate-pe", "train with sinusoidal, none and random position tables");
  ablate_cmd->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
  ablate_cmd->add_flag("--quiet", quiet, "no progress lines");

  auto* gate_cmd = app.add_subcommand("gate-trace", "mean gate weight per layer and source-length bucket");
  gate_cmd->add_option("--ckpt", ckpt_path, "checkpoint.json of a weight-gate model")->required()->check(CLI::ExistingFile);
  auto* gate_data = gate_cmd->add_option("--data", data_path, "prefix of <data>.src/<data>.tgt");
  gate_cmd->add_option("--probe", probe, "instead of --data, N random sentences per bucket")->excludes(gate_data);
  gate_cmd->add_option("--out", out_path, "CSV path (default: stdout)");

  auto* sim_cmd = app.add_subcommand("simulate", "subgraph orders reachable per layer");
  sim_cmd->add_option("--regime", regime, "san, rnn or split")->check(CLI::IsMember({"san", "rnn", "split"}));
  sim_cmd->add_option("--layers", layers, "layer count")->check(CLI::Range(1, 64));
  sim_cmd->add_option("--len", len, "sentence length")->check(CLI::Range(1, 4096));
  sim_cmd->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  auto* check_cmd = app.add_subcommand("check", "numerical decomposition identities");
  check_cmd->add_option("--suite", suite, "all, gate, bilinear, four-part or distlaw")
      ->check(CLI::IsMember({"all", "gate", "bilinear", "four-part", "distlaw"}));
  check_cmd->add_option("--seeds", seeds, "random instances per identity")->check(CLI::Range(1, 100000));
  check_cmd->add_option("--format", format, "json")->check(CLI::IsMember({"json"}));

  auto* dump_cmd = app.add_subcommand("dump", "evaluate an extension expression and print its graph as JSON");
  dump_cmd->add_option("--expr", expr, "expression, e.g. \"({a})->a U ({b})->b\"")->required();

  auto* task_cmd = app.add_subcommand("make-task", "write a synthetic corpus as <out>.src/<out>.tgt");
  std::string task = "reverse";
  train::TaskParams tp;
  task_cmd->add_option("--task", task, "copy, reverse or sort")->check(CLI::IsMember({"copy", "reverse", "sort"}));
  task_cmd->add_option("--vocab", tp.vocab_size, "content tokens");
  task_cmd->add_option("--min-len", tp.min_len, "shortest sentence");
  task_cmd->add_option("--max-len", tp.max_len, "longest sentence");
  task_cmd->add_option("--size", tp.size, "sentence pairs");
  task_cmd->add_option("--seed", tp.seed, "random seed");
  task_cmd->add_option("--out", out_path, "output prefix")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const auto cfg = train::load_config(config_path);
      const auto r = train::train(cfg, {true, quiet ? nullptr : &std::cerr});
      std::cerr << "wrote " << cfg.output_dir << "/{metrics.csv,manifest.json,checkpoint.json} in " << r.seconds
                << " s\n";
      if (!r.records.empty()) std::cout << metrics_json(r.records.back().eval);
    } else if (*eval_cmd) {
      const auto ck = train::load_checkpoint(ckpt_path);
      const train::Corpus corpus = data_path.empty() ? train::prepare_data(ck.config).eval
                                                     : train::load_parallel(data_path, &ck.vocab);
      const auto m = train::evaluate(*ck.model, ck.vocab, corpus, beam ? beam : ck.config.beam,
                                     alpha >= 0 ? alpha : ck.config.alpha);
      std::cout << metrics_json(m);
    } else if (*ablate_cmd) {
      const auto cfg = train::load_config(config_path);
      const auto rows = train::pe_ablation(cfg, {true, quiet ? nullptr : &std::cerr});
      std::cout << train::ablation_csv(rows);
    } else if (*gate_cmd) {
      const auto ck = train::load_checkpoint(ckpt_path);
      train::Corpus corpus;
      if (probe > 0)
        corpus = train::bucket_probe(ck.vocab, probe, ck.model->config().max_len - 1, ck.config.seed + 2);
      else if (!data_path.empty())
        corpus = train::load_parallel(data_path, &ck.vocab);
      else
        throw std::invalid_argument("gate-trace needs --data or --probe");
      write_or_print(out_path, train::gate_trace_csv(train::gate_trace(*ck.model, corpus)));
    } else if (*sim_cmd) {
      const auto trace = sim::simulate(sim::parse_regime(regime), layers, len);
      std::cout << (format == "csv" ? sim::to_csv(trace) : sim::to_json(trace).dump(2) + "\n");
    } else if (*check_cmd) {
      nlohmann::json out = nlohmann::json::array();
      bool ok = true;
      for (const auto& r : checks::run_suite(suite, seeds)) {
        out.push_back(r.to_json());
        ok = ok && r.pass == r.expect_pass;
      }
      std::cout << out.dump(2) << "\n";
      return ok ? 0 : 1;
    } else if (*dump_cmd) {
      const auto r = core::eval_expr(core::parse_expr(expr));
      std::cout << r.graph.to_json().dump(2) << "\n";
    } else if (*task_cmd) {
      train::write_parallel(train::make_task(task, tp), out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
