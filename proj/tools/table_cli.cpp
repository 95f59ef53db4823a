#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "table/datagen/corpus.hpp"
#include "table/datagen/vocabulary.hpp"
#include "table/evalcli/evaluate.hpp"
#include "table/fusion/model.hpp"
#include "table/trainer/trainer.hpp"

namespace {

using namespace table;

void print_report_table(const evalcli::EvalResult& result) {
  std::printf("%-4s %8s %8s %8s %8s %8s\n", "dir", "R@1", "R@5", "R@10", "MdR", "MnR");
  for (const auto* r : {&result.text_to_video, &result.video_to_text}) {
    std::printf("%-4s %8.2f %8.2f %8.2f %8.1f %8.2f\n",
                evalcli::direction_name(r->direction).c_str(), r->r1, r->r5, r->r10,
                r->median_rank, r->mean_rank);
  }
}

int gen_data(std::size_t num, std::uint64_t seed, float sigma, const std::string& out) {
  const auto corpus = datagen::generate_corpus(num, seed, sigma);
  datagen::write_jsonl(out, corpus);
  std::printf("wrote %zu records to %s\n", corpus.size(), out.c_str());
  return 0;
}

int train(const std::string& config_path, const std::string& data, const std::string& out,
          std::optional<std::uint64_t> seed) {
  trainer::TrainConfig config;
  if (!config_path.empty()) config = trainer::load_train_config(config_path);
  if (seed) config.seed = *seed;
  const auto corpus = datagen::read_jsonl(data);
  trainer::TrainOptions options;
  options.out_dir = std::filesystem::path(out);
  options.on_epoch = [](const trainer::EpochMetrics& m) {
    std::printf("epoch %zu  L_con %.4f  L_vtm %.4f  L_mlm %.4f  val_R@1 %.2f\n", m.epoch,
                m.contrastive, m.vtm, m.mlm, m.val_r1);
    std::fflush(stdout);
  };
  trainer::train(corpus, datagen::Vocabulary::standard(), config, options);
  std::printf("checkpoint: %s\n", (std::filesystem::path(out) / "checkpoint.tbl").c_str());
  return 0;
}

/// Records of the requested split, using the split stored with the checkpoint.
std::vector<datagen::VideoRecord> pick_split(const std::vector<datagen::VideoRecord>& corpus,
                                             const nlohmann::json& meta, const std::string& split,
                                             std::optional<std::uint64_t> seed) {
  if (split == "all") return corpus;
  trainer::TrainConfig config;
  if (meta.contains("train_config")) config = meta.at("train_config").get<trainer::TrainConfig>();
  if (seed) config.seed = *seed;
  const auto parts = datagen::split_corpus(corpus.size(), config.train_frac, config.seed);
  return datagen::select(corpus, split == "train" ? parts.train : parts.test);
}

int eval(const std::string& checkpoint_path, const std::string& data, bool dsl, double dsl_temp,
         const std::string& split, bool json, std::optional<std::uint64_t> seed) {
  const auto checkpoint = fusion::load_checkpoint(checkpoint_path);
  const auto corpus = pick_split(datagen::read_jsonl(data), checkpoint.meta, split, seed);
  const auto result = evalcli::evaluate(checkpoint.params, checkpoint.vocab, corpus,
                                        evalcli::EvalOptions{dsl, dsl_temp});
  if (json) {
    const nlohmann::json out{{"records", corpus.size()},
                             {"split", split},
                             {"dsl", dsl},
                             {"reports", {result.text_to_video, result.video_to_text}}};
    std::cout << out.dump(2) << '\n';
  } else {
    std::printf("%zu records, split %s%s\n", corpus.size(), split.c_str(), dsl ? ", dsl" : "");
    print_report_table(result);
  }
  return 0;
}

int rollout(const std::string& checkpoint_path, const std::string& data,
            const std::string& record_id, const std::string& out) {
  const auto checkpoint = fusion::load_checkpoint(checkpoint_path);
  const auto corpus = datagen::read_jsonl(data);
  const auto it = std::find_if(corpus.begin(), corpus.end(),
                               [&](const datagen::VideoRecord& r) { return r.id == record_id; });
  if (it == corpus.end()) throw std::runtime_error("no record with id " + record_id);
  const auto trace = evalcli::trace_record(checkpoint.params, checkpoint.vocab, *it);
  const auto matrix = evalcli::attention_rollout(trace);
  evalcli::render_attention(matrix, trace, it->id + ": " + it->caption, out);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tag-anchored video-text retrieval: data, training, evaluation"};
  app.require_subcommand(1);

  std::size_t num = 512;
  std::uint64_t seed = 7;
  float sigma = 0.5f;
  std::string out, data, config_path, checkpoint, split = "test", record_id;
  bool dsl = false, json = false;
  double dsl_temp = 100.0;
  std::optional<std::uint64_t> seed_override;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic corpus as JSON Lines");
  gen->add_option("--num", num, "Number of records")->capture_default_str();
  gen->add_option("--seed", seed, "Corpus seed")->capture_default_str();
  gen->add_option("--sigma", sigma, "Frame noise standard deviation")->capture_default_str();
  gen->add_option("--out", out, "Output .jsonl path")->required();

  auto* tr = app.add_subcommand("train", "Train a model and write checkpoints");
  tr->add_option("--config", config_path, "Training config JSON (defaults if omitted)");
  tr->add_option("--data", data, "Corpus .jsonl")->required();
  tr->add_option("--out", out, "Output directory")->required();
  tr->add_option("--seed", seed_override, "Override the config seed");

  auto* ev = app.add_subcommand("eval", "Retrieval metrics of a checkpoint");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  ev->add_option("--data", data, "Corpus .jsonl")->required();
  ev->add_flag("--dsl", dsl, "Apply dual-softmax revision");
  ev->add_option("--dsl-temp", dsl_temp, "Dual-softmax temperature")->capture_default_str();
  ev->add_option("--split", split, "Records to evaluate")
      ->check(CLI::IsMember({"all", "train", "test"}))
      ->capture_default_str();
  ev->add_flag("--json", json, "Emit JSON instead of a table");
  ev->add_option("--seed", seed_override, "Split seed (default: the training seed)");

  auto* ro = app.add_subcommand("rollout", "Render attention rollout of one record as SVG");
  ro->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  ro->add_option("--data", data, "Corpus .jsonl")->required();
  ro->add_option("--record-id", record_id, "Record id")->required();
  ro->add_option("--out", out, "Output .svg path")->required();
  ro->add_option("--seed", seed_override, "Unused; accepted for a uniform interface");

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return gen_data(num, seed, sigma, out);
    if (tr->parsed()) return train(config_path, data, out, seed_override);
    if (ev->parsed()) return eval(checkpoint, data, dsl, dsl_temp, split, json, seed_override);
    if (ro->parsed()) return rollout(checkpoint, data, record_id, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
