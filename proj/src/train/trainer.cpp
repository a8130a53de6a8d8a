#include "mog/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mog/train/bleu.hpp"
#include "mog/train/optim.hpp"

namespace mog::train {

using nn::Batch;
using nn::Binder;
using num::Tape;
using num::Tensor;

Datasets prepare_data(const ExperimentConfig& cfg) {
  Datasets d;
  if (cfg.task == "file") {
    Corpus all = load_parallel(cfg.data);
    if (all.size() <= cfg.eval_size) throw std::invalid_argument("corpus '" + cfg.data + "' is smaller than eval_size");
    const std::size_t cut = all.size() - cfg.eval_size;
    d.train.vocab = d.eval.vocab = all.vocab;
    d.train.src.assign(all.src.begin(), all.src.begin() + cut);
    d.train.tgt.assign(all.tgt.begin(), all.tgt.begin() + cut);
    d.eval.src.assign(all.src.begin() + cut, all.src.end());
    d.eval.tgt.assign(all.tgt.begin() + cut, all.tgt.end());
    return d;
  }
  TaskParams tp{cfg.vocab_size, cfg.min_len, cfg.max_len, cfg.train_size, cfg.seed};
  Corpus train = make_task(cfg.task, tp);
  tp.size = cfg.eval_size;
  tp.seed = cfg.seed + 1;
  d.eval = make_task(cfg.task, tp);
  const std::set<std::vector<int>> held(d.eval.src.begin(), d.eval.src.end());
  d.train.vocab = train.vocab;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (held.count(train.src[i])) continue;
    d.train.src.push_back(train.src[i]);
    d.train.tgt.push_back(train.tgt[i]);
  }
  if (d.train.size() == 0) throw std::invalid_argument("no training pairs left after removing eval sources");
  return d;
}

nn::ModelConfig model_config(const ExperimentConfig& cfg, const Vocab& vocab) {
  nn::ModelConfig m;
  m.encoder = cfg.encoder;
  m.encoder.seed = cfg.seed;
  m.vocab_size = vocab.size();
  m.max_len = std::max<std::size_t>(64, 2 * cfg.max_len + 12);
  return m;
}

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

struct TeacherBatch {
  Batch src, tgt_in;
  std::vector<int> targets;
};

TeacherBatch teacher_batch(const Corpus& c, const std::vector<std::size_t>& idx) {
  std::vector<std::vector<int>> src, in, out;
  for (std::size_t i : idx) {
    src.push_back(c.src[i]);
    in.push_back({Vocab::bos});
    in.back().insert(in.back().end(), c.tgt[i].begin(), c.tgt[i].end());
    out.push_back(c.tgt[i]);
    out.back().push_back(Vocab::eos);
  }
  TeacherBatch b{Batch::pack(src, Vocab::pad), Batch::pack(in, Vocab::pad), {}};
  b.targets = Batch::pack(out, Vocab::pad).ids;
  return b;
}

std::vector<std::vector<std::size_t>> make_batches(const Corpus& c, std::size_t tokens, std::mt19937_64& rng) {
  std::vector<std::size_t> order(c.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  std::size_t used = 0;
  for (std::size_t i : order) {
    const std::size_t n = std::max(c.src[i].size(), c.tgt[i].size() + 1);
    if (!cur.empty() && used + n > tokens) {
      out.push_back(std::move(cur));
      cur.clear();
      used = 0;
    }
    cur.push_back(i);
    used += n;
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

nlohmann::json eval_json(const EvalMetrics& m) {
  return {{"token_acc", m.token_acc}, {"seq_acc", m.seq_acc}, {"bleu", m.bleu}, {"gate_means", m.gate_means}};
}

}  // namespace

std::string metrics_header(std::size_t layers) {
  std::string h = "step,loss,lr,token_acc,seq_acc,bleu";
  for (std::size_t i = 1; i <= layers; ++i) h += ",gate_l" + std::to_string(i);
  return h + "\n";
}

std::string metrics_row(const MetricsRecord& r, std::size_t layers) {
  std::string s = std::to_string(r.step) + "," + fmt(r.loss) + "," + fmt(r.lr) + "," + fmt(r.eval.token_acc) + "," +
                  fmt(r.eval.seq_acc) + "," + fmt(r.eval.bleu);
  for (std::size_t i = 0; i < layers; ++i) s += "," + (i < r.eval.gate_means.size() ? fmt(r.eval.gate_means[i]) : "");
  return s + "\n";
}

EvalMetrics evaluate(const nn::Seq2Seq& model, const Corpus& corpus, std::size_t beam, double alpha) {
  if (corpus.size() == 0) throw std::invalid_argument("evaluate: empty corpus");
  corpus.validate();
  if (corpus.vocab.size() != model.config().vocab_size)
    throw std::invalid_argument("evaluate: corpus vocabulary size " + std::to_string(corpus.vocab.size()) +
                                " does not match the model's " + std::to_string(model.config().vocab_size));
  EvalMetrics m;
  std::size_t correct = 0, total = 0;
  std::vector<double> gate_sum;
  std::size_t gate_tokens = 0;
  constexpr std::size_t kChunk = 64;
  for (std::size_t i = 0; i < corpus.size(); i += kChunk) {
    std::vector<std::size_t> idx;
    for (std::size_t j = i; j < std::min(corpus.size(), i + kChunk); ++j) idx.push_back(j);
    const TeacherBatch b = teacher_batch(corpus, idx);
    Tape tape;
    Binder p(tape, model.params(), false);
    const nn::EncoderOutput mem = model.encode(p, b.src, {});
    const Tensor logits = model.decode(p, mem, b.tgt_in, {}).value();
    for (std::size_t r = 0; r < logits.rows(); ++r) {
      if (b.targets[r] == Vocab::pad) continue;
      const auto row = logits.row(r);
      correct += int(std::max_element(row.begin(), row.end()) - row.begin()) == b.targets[r];
      ++total;
    }
    std::size_t tokens = 0;
    for (std::size_t len : b.src.layout.lengths) tokens += len;
    gate_sum.resize(mem.gates.size(), 0.0);
    for (std::size_t g = 0; g < mem.gates.size(); ++g) gate_sum[g] += mem.gates[g].mean_w * double(tokens);
    gate_tokens += tokens;
  }
  m.token_acc = double(correct) / double(total);
  for (double s : gate_sum) m.gate_means.push_back(s / double(gate_tokens));

  DecodeOptions opts;
  opts.beam = beam;
  opts.alpha = alpha;
  const auto hyps = decode_all(model, corpus.src, opts);
  std::vector<Sentence> h, r;
  std::size_t exact = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    exact += hyps[i] == corpus.tgt[i];
    h.push_back(corpus.vocab.decode(hyps[i]));
    r.push_back(corpus.vocab.decode(corpus.tgt[i]));
  }
  m.seq_acc = double(exact) / double(hyps.size());
  m.bleu = bleu(h, r);
  return m;
}

EvalMetrics evaluate(const nn::Seq2Seq& model, const Vocab& vocab, const Corpus& corpus, std::size_t beam,
                     double alpha) {
  if (!(vocab == corpus.vocab)) throw std::invalid_argument("evaluate: corpus vocabulary differs from the model's");
  return evaluate(model, corpus, beam, alpha);
}

nlohmann::json checkpoint_json(const ExperimentConfig& cfg, const Vocab& vocab, std::size_t step,
                               const nn::Seq2Seq& model) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, t] : model.params().all())
    params[name] = {{"shape", t.shape()}, {"data", std::vector<double>(t.data().begin(), t.data().end())}};
  return {{"version", 1}, {"config", to_json(cfg)}, {"vocab", vocab.content()}, {"step", step}, {"params", params}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("version", 0) != 1) throw std::runtime_error("unsupported checkpoint version");
  Checkpoint c;
  c.config = config_from_json(j.at("config"));
  c.vocab = Vocab(j.at("vocab").get<std::vector<std::string>>());
  c.step = j.at("step").get<std::size_t>();
  c.model = std::make_unique<nn::Seq2Seq>(model_config(c.config, c.vocab));
  auto& store = c.model->params().all();
  const auto& params = j.at("params");
  if (params.size() != store.size()) throw std::runtime_error("checkpoint parameter count does not match its config");
  for (auto& [name, t] : store) {
    if (!params.contains(name)) throw std::runtime_error("checkpoint lacks parameter '" + name + "'");
    const auto& e = params.at(name);
    if (e.at("shape").get<num::Shape>() != t.shape())
      throw std::runtime_error("checkpoint parameter '" + name + "' has the wrong shape");
    const auto data = e.at("data").get<std::vector<double>>();
    if (data.size() != t.size()) throw std::runtime_error("checkpoint parameter '" + name + "' has the wrong size");
    std::copy(data.begin(), data.end(), t.data().begin());
  }
  return c;
}

void save_checkpoint(const std::string& path, const nlohmann::json& ckpt) { write_text(path, ckpt.dump()); }

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  return checkpoint_from_json(nlohmann::json::parse(in));
}

TrainResult train(const ExperimentConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Datasets data = prepare_data(cfg);
  auto model = std::make_unique<nn::Seq2Seq>(model_config(cfg, data.train.vocab));
  const std::size_t layers = cfg.encoder.layers, d = cfg.encoder.model_dim;

  std::filesystem::path dir(cfg.output_dir);
  std::ofstream csv;
  if (opts.write_files) {
    std::filesystem::create_directories(dir);
    csv.open(dir / "metrics.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write metrics under '" + dir.string() + "'");
    csv << metrics_header(layers) << std::flush;
  }

  TrainResult result;
  Adam adam;
  std::mt19937_64 batch_rng(cfg.seed * 1000003 + 17), drop_rng(cfg.seed * 1000003 + 31);
  std::vector<std::vector<std::size_t>> epoch;
  std::size_t next_batch = 0;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  const nn::RunMode mode{true, cfg.encoder.dropout, &drop_rng};

  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    if (next_batch == epoch.size()) {
      epoch = make_batches(data.train, cfg.batch_tokens, batch_rng);
      next_batch = 0;
    }
    const TeacherBatch b = teacher_batch(data.train, epoch[next_batch++]);
    const double lr = learning_rate(step, d, cfg.warmup);
    {
      Tape tape;
      Binder p(tape, model->params());
      const nn::EncoderOutput mem = model->encode(p, b.src, mode);
      num::Var loss = num::cross_entropy(model->decode(p, mem, b.tgt_in, mode), b.targets, Vocab::pad);
      const double value = loss.value()[0];
      if (!std::isfinite(value))
        throw std::runtime_error("non-finite loss " + fmt(value) + " at step " + std::to_string(step) +
                                 " (lr " + fmt(lr) + ")");
      tape.backward(loss);
      std::map<std::string, Tensor> grads;
      for (const auto& [name, v] : p.bound()) grads.emplace(name, tape.grad(v));
      adam.step(model->params(), grads, lr);
      loss_sum += value;
      ++loss_count;
    }
    if (step % cfg.eval_interval == 0 || step == cfg.max_steps) {
      MetricsRecord rec{step, loss_sum / double(loss_count), lr, evaluate(*model, data.eval, cfg.beam, cfg.alpha)};
      loss_sum = 0.0;
      loss_count = 0;
      if (opts.write_files) csv << metrics_row(rec, layers) << std::flush;
      if (opts.log) {
        *opts.log << "step " << step << " loss " << fmt(rec.loss) << " token_acc " << fmt(rec.eval.token_acc)
                  << " seq_acc " << fmt(rec.eval.seq_acc) << " bleu " << fmt(rec.eval.bleu) << "\n"
                  << std::flush;
      }
      result.records.push_back(std::move(rec));
    }
  }

  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (opts.write_files) {
    save_checkpoint((dir / "checkpoint.json").string(), checkpoint_json(cfg, data.train.vocab, cfg.max_steps, *model));
    nlohmann::json manifest = {{"config", to_json(cfg)},
                               {"train_pairs", data.train.size()},
                               {"eval_pairs", data.eval.size()},
                               {"parameters", model->params().count()},
                               {"steps", cfg.max_steps},
                               {"metrics", "metrics.csv"},
                               {"checkpoint", "checkpoint.json"}};
    if (!result.records.empty()) {
      manifest["final"] = eval_json(result.records.back().eval);
      manifest["final"]["loss"] = result.records.back().loss;
    }
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  }
  result.checkpoint.config = cfg;
  result.checkpoint.vocab = data.train.vocab;
  result.checkpoint.step = cfg.max_steps;
  result.checkpoint.model = std::move(model);
  return result;
}

std::vector<AblationRow> pe_ablation(const ExperimentConfig& cfg, const TrainOptions& opts) {
  std::vector<AblationRow> rows;
  for (auto kind : {nn::PositionKind::sinusoidal, nn::PositionKind::none, nn::PositionKind::random}) {
    ExperimentConfig c = cfg;
    c.encoder.position_encoding = kind;
    c.output_dir = (std::filesystem::path(cfg.output_dir) / ("pe-" + nn::to_string(kind))).string();
    if (opts.log) *opts.log << "position encoding: " << nn::to_string(kind) << "\n";
    TrainResult r = train(c, opts);
    if (r.records.empty()) throw std::invalid_argument("pe_ablation needs max_steps >= 1");
    rows.push_back({kind, r.records.back().eval});
  }
  if (opts.write_files) write_text(std::filesystem::path(cfg.output_dir) / "pe_ablation.csv", ablation_csv(rows));
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string s = "position_encoding,token_acc,seq_acc,bleu\n";
  for (const auto& r : rows)
    s += nn::to_string(r.kind) + "," + fmt(r.final.token_acc) + "," + fmt(r.final.seq_acc) + "," + fmt(r.final.bleu) + "\n";
  return s;
}

const std::vector<std::string>& length_buckets() {
  static const std::vector<std::string> names = {"0-10", "10-20", "20-30", "30-40", "40-50", "50+"};
  return names;
}

std::string length_bucket(std::size_t len) { return length_buckets()[std::min<std::size_t>(len / 10, 5)]; }

std::vector<GateTraceRow> gate_trace(const nn::Seq2Seq& model, const Corpus& corpus) {
  const auto& enc = model.config().encoder;
  if (enc.architecture != nn::Architecture::graph || enc.fusion != nn::Fusion::weight_gate)
    throw std::invalid_argument("gate_trace needs a graph encoder with weight-gate fusion, got " +
                                nn::to_string(enc.architecture) + "/" + nn::to_string(enc.fusion));
  if (corpus.size() == 0) throw std::invalid_argument("gate_trace: empty corpus");
  const auto& names = length_buckets();
  // [layer][bucket] running sums of per-sentence means
  std::vector<std::vector<double>> sum(enc.layers, std::vector<double>(names.size(), 0.0));
  std::vector<std::size_t> count(names.size(), 0);
  constexpr std::size_t kChunk = 32;
  for (std::size_t i = 0; i < corpus.size(); i += kChunk) {
    std::vector<std::vector<int>> src(corpus.src.begin() + i, corpus.src.begin() + std::min(corpus.size(), i + kChunk));
    Tape tape;
    Binder p(tape, model.params(), false);
    const nn::EncoderOutput mem = model.encode(p, Batch::pack(src, Vocab::pad), {});
    for (std::size_t s = 0; s < src.size(); ++s) {
      const std::size_t bucket = std::min<std::size_t>(src[s].size() / 10, 5);
      ++count[bucket];
      for (const auto& g : mem.gates) sum[g.layer - 1][bucket] += g.per_sentence[s];
    }
  }
  std::vector<GateTraceRow> rows;
  for (std::size_t l = 0; l < enc.layers; ++l)
    for (std::size_t b = 0; b < names.size(); ++b)
      if (count[b] > 0) rows.push_back({l + 1, names[b], sum[l][b] / double(count[b]), count[b]});
  return rows;
}

std::string gate_trace_csv(const std::vector<GateTraceRow>& rows) {
  std::string s = "layer,bucket,mean_w\n";
  for (const auto& r : rows) s += std::to_string(r.layer) + "," + r.bucket + "," + fmt(r.mean_w) + "\n";
  return s;
}

std::vector<GateTraceRow> parse_gate_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "layer,bucket,mean_w") throw std::invalid_argument("gate trace: bad header");
  std::vector<GateTraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string layer, bucket, w;
    if (!std::getline(ls, layer, ',') || !std::getline(ls, bucket, ',') || !std::getline(ls, w))
      throw std::invalid_argument("gate trace: malformed row '" + line + "'");
    rows.push_back({std::stoul(layer), bucket, std::stod(w), 0});
  }
  return rows;
}

Corpus bucket_probe(const Vocab& vocab, std::size_t per_bucket, std::size_t longest, std::uint64_t seed) {
  const std::size_t content = vocab.size() - 4;
  if (content == 0) throw std::invalid_argument("bucket_probe: vocabulary has no content tokens");
  if (longest < 50) throw std::invalid_argument("bucket_probe: longest must reach the 50+ bucket");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> tok(4, int(vocab.size()) - 1);
  Corpus c;
  c.vocab = vocab;
  for (std::size_t b = 0; b < length_buckets().size(); ++b) {
    const std::size_t lo = std::max<std::size_t>(1, b * 10), hi = b == 5 ? longest : b * 10 + 9;
    std::uniform_int_distribution<std::size_t> len(lo, hi);
    for (std::size_t k = 0; k < per_bucket; ++k) {
      std::vector<int> s(len(rng));
      for (int& x : s) x = tok(rng);
      c.src.push_back(s);
      std::reverse(s.begin(), s.end());
      c.tgt.push_back(s);
    }
  }
  return c;
}

}  // namespace mog::train
