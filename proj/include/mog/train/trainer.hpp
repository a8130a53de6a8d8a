#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "mog/nn/encoder.hpp"
#include "mog/train/config.hpp"
#include "mog/train/corpus.hpp"
#include "mog/train/decode.hpp"

namespace mog::train {

struct Datasets {
  Corpus train, eval;
};

/// Synthetic tasks draw the eval set from seed + 1 and drop any eval source
/// from the training set; the file task holds out its last eval_size lines.
Datasets prepare_data(const ExperimentConfig& cfg);

nn::ModelConfig model_config(const ExperimentConfig& cfg, const Vocab& vocab);

struct EvalMetrics {
  double token_acc = 0.0;  // teacher-forced argmax over target tokens and <eos>
  double seq_acc = 0.0;    // decoded output equals the reference
  double bleu = 0.0;
  std::vector<double> gate_means;  // per layer, weight-gate models only
};

struct MetricsRecord {
  std::size_t step = 0;
  double loss = 0.0;  // mean training loss since the previous record
  double lr = 0.0;
  EvalMetrics eval;
};

std::string metrics_header(std::size_t layers);
std::string metrics_row(const MetricsRecord& rec, std::size_t layers);

EvalMetrics evaluate(const nn::Seq2Seq& model, const Corpus& corpus, std::size_t beam, double alpha);
/// Same, after checking that `corpus` uses the model's vocabulary.
EvalMetrics evaluate(const nn::Seq2Seq& model, const Vocab& vocab, const Corpus& corpus, std::size_t beam,
                     double alpha);

struct Checkpoint {
  ExperimentConfig config;
  Vocab vocab;
  std::size_t step = 0;
  std::unique_ptr<nn::Seq2Seq> model;
};

nlohmann::json checkpoint_json(const ExperimentConfig& cfg, const Vocab& vocab, std::size_t step,
                               const nn::Seq2Seq& model);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::string& path, const nlohmann::json& ckpt);
Checkpoint load_checkpoint(const std::string& path);

struct TrainOptions {
  bool write_files = true;  // metrics.csv, manifest.json, checkpoint.json under output_dir
  std::ostream* log = nullptr;
};

struct TrainResult {
  std::vector<MetricsRecord> records;
  Checkpoint checkpoint;
  double seconds = 0.0;
};

/// Cross-entropy training with Adam and the warmup schedule. Throws
/// std::runtime_error naming the step if the loss stops being finite.
TrainResult train(const ExperimentConfig& cfg, const TrainOptions& opts = {});

struct AblationRow {
  nn::PositionKind kind;
  EvalMetrics final;
};

/// Trains one model per position-encoding kind (sinusoidal, none, random)
/// under `<output_dir>/pe-<kind>` and writes `<output_dir>/pe_ablation.csv`.
std::vector<AblationRow> pe_ablation(const ExperimentConfig& cfg, const TrainOptions& opts = {});
std::string ablation_csv(const std::vector<AblationRow>& rows);

struct GateTraceRow {
  std::size_t layer = 0;
  std::string bucket;  // "0-10", "10-20", ..., "50+"
  double mean_w = 0.0;
  std::size_t sentences = 0;
};

/// Source-length bucket of a sentence.
std::string length_bucket(std::size_t len);
const std::vector<std::string>& length_buckets();

/// Mean weight-gate activation per layer and source-length bucket. Empty
/// buckets produce no rows. Requires a graph encoder with weight-gate fusion.
std::vector<GateTraceRow> gate_trace(const nn::Seq2Seq& model, const Corpus& corpus);
std::string gate_trace_csv(const std::vector<GateTraceRow>& rows);
std::vector<GateTraceRow> parse_gate_trace_csv(const std::string& text);

/// Random sentences over `vocab`'s content tokens with `per_bucket` sources
/// in every length bucket, the longest being `longest` tokens.
Corpus bucket_probe(const Vocab& vocab, std::size_t per_bucket, std::size_t longest, std::uint64_t seed);

}  // namespace mog::train
