#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "oshg/ablation.hpp"
#include "oshg/adapter.hpp"
#include "oshg/augment.hpp"
#include "oshg/dataio.hpp"
#include "oshg/error.hpp"
#include "oshg/hypergraph.hpp"
#include "oshg/infotheory.hpp"
#include "oshg/log.hpp"
#include "oshg/retrieval.hpp"
#include "oshg/synthetic.hpp"
#include "oshg/training.hpp"

namespace oshg::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kRuntimeFailure = 3 };

// Thrown for bad flag combinations found after CLI11 parsing.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string flag_for_key(std::string key) {
  for (char& ch : key)
    if (ch == '_') ch = '-';
  return "--" + key;
}

/// Turns a JSON config object into argv tokens for `sub`. Unknown keys are rejected.
inline std::vector<std::string> config_tokens(const nlohmann::json& cfg, CLI::App& sub) {
  if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");
  std::vector<std::string> out;
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = flag_for_key(key);
    if (key == "config") throw UsageError("config files cannot nest --config");
    CLI::Option* opt = sub.get_option_no_throw(flag);
    if (!opt) throw UsageError("unknown config key '" + key + "' for '" + sub.get_name() + "'");
    if (value.is_boolean()) {
      if (opt->get_type_size() != 0) {
        out.push_back(flag);
        out.push_back(value.get<bool>() ? "true" : "false");
      } else if (value.get<bool>()) {
        out.push_back(flag);
      }
    } else if (value.is_string()) {
      out.push_back(flag);
      out.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      out.push_back(flag);
      out.push_back(value.dump());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ',';
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      out.push_back(flag);
      out.push_back(joined);
    } else {
      throw UsageError("config key '" + key + "' has an unsupported value type");
    }
  }
  return out;
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("bad seed '" + tok + "' in --seeds");
    }
  }
  if (out.empty()) throw UsageError("--seeds is empty");
  return out;
}

inline void print_json(std::ostream& out, const nlohmann::json& j) { out << j.dump(2) << "\n"; }

}  // namespace detail

// Options shared by the training-flavoured subcommands.
struct TrainFlags {
  TrainConfig cfg;
  std::string alpha_mode = "nmi";
  std::string kernel = "hypergraph";
  std::string activation = "relu";
  std::string pool = "max";
  std::optional<double> beta;

  void attach(CLI::App* sub) {
    sub->add_option("--epochs", cfg.epochs, "Training epochs")->check(CLI::PositiveNumber);
    sub->add_option("--batch", cfg.batch, "Images per batch")->check(CLI::Range(2, 1 << 30));
    sub->add_option("--lr", cfg.lr, "SGD learning rate")->check(CLI::PositiveNumber);
    sub->add_option("--margin", cfg.margin, "Triplet margin")->check(CLI::PositiveNumber);
    sub->add_option("--alpha-mode", alpha_mode, "fixed | nmi")->check(CLI::IsMember({"fixed", "nmi"}));
    sub->add_option("--alpha", cfg.alpha, "Text fusion ratio (alpha-mode fixed)")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--beta", beta, "Vision fusion ratio (default: follow alpha)")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--l", cfg.l, "Synonym slots per caption")->check(CLI::PositiveNumber);
    sub->add_option("--knn-k", cfg.knn_k, "Text hyperedge neighbours (0 = auto)");
    sub->add_option("--vision-knn-k", cfg.vision_knn_k, "Vision hyperedge neighbours (0 = auto)");
    sub->add_option("--kernel", kernel, "hypergraph | avg_pool | max_pool | pairwise_graph")
        ->check(CLI::IsMember({"hypergraph", "avg_pool", "max_pool", "pairwise_graph", "avg", "max", "gcn"}));
    sub->add_option("--activation", activation, "relu | identity")->check(CLI::IsMember({"relu", "identity"}));
    sub->add_option("--text-layers", cfg.text_layers, "Text convolution layers")->check(CLI::PositiveNumber);
    sub->add_option("--vision-layers", cfg.vision_layers, "Vision recurrence steps")->check(CLI::PositiveNumber);
    sub->add_option("--init-gain", cfg.init_gain, "Glorot gain around the identity init");
    sub->add_option("--bins", cfg.bins, "Histogram bins for NMI")->check(CLI::Range(2, 1 << 20));
    sub->add_option("--pool", pool, "Region pooling: max | mean")->check(CLI::IsMember({"max", "mean"}));
    sub->add_option("--eval-every", cfg.eval_every, "Evaluate every N epochs (0 = last only)");
  }

  TrainConfig resolve(std::uint64_t seed) const {
    TrainConfig out = cfg;
    out.seed = seed;
    out.alpha_mode = parse_alpha_mode(alpha_mode);
    out.kernel = parse_kernel(kernel);
    out.activation = parse_activation(activation);
    out.pool = pool == "mean" ? PoolMode::mean : PoolMode::max;
    out.beta = beta;
    return out;
  }
};

/// Runs one `oshg` invocation; returns the process exit code.
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Hypergraph adapters for image-text retrieval", "oshg"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  bool json = false;
  std::uint64_t seed = 0;
  std::string config_path;
  auto common = [&](CLI::App* sub) {
    sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_flag("--json", json, "Emit JSON instead of a table");
    sub->add_option("--config", config_path, "JSON file with option values (flags win)");
    sub->add_option("--seed", seed, "RNG seed (gradcheck defaults to 7)");
  };

  // augment
  auto* aug = app.add_subcommand("augment", "Attach synonym lists to a captions JSONL");
  AugmentConfig aug_cfg;
  std::string aug_in, aug_out, aug_mode = "offline", aug_offline, aug_cache;
  common(aug);
  aug->add_option("--captions", aug_in, "Input captions JSONL")->required();
  aug->add_option("--out", aug_out, "Output JSONL")->required();
  aug->add_option("--mode", aug_mode, "offline | http")->check(CLI::IsMember({"offline", "http"}));
  aug->add_option("--offline", aug_offline, "Augmented captions JSONL for offline mode");
  aug->add_option("--endpoint", aug_cfg.endpoint_url, "Completion endpoint (default $OSHG_LLM_ENDPOINT)");
  aug->add_option("--token-env", aug_cfg.auth_token_env, "Env var holding the bearer token");
  aug->add_option("--l", aug_cfg.l, "Synonyms per caption")->check(CLI::PositiveNumber);
  aug->add_option("--timeout-ms", aug_cfg.timeout_ms, "Request timeout");
  aug->add_option("--retries", aug_cfg.retries, "Retries per request");
  aug->add_option("--max-in-flight", aug_cfg.max_in_flight, "Concurrent requests")->check(CLI::PositiveNumber);
  aug->add_option("--cache-dir", aug_cache, "Response cache directory");

  // embed
  auto* emb = app.add_subcommand("embed", "Build a corpus directory from captions and region features");
  std::string emb_captions, emb_images, emb_ids, emb_out;
  std::size_t emb_regions = 1, emb_b = 0, emb_c = 0, emb_l = 4;
  bool emb_binary = false;
  common(emb);
  emb->add_option("--captions", emb_captions, "Captions JSONL (with synonyms)")->required();
  emb->add_option("--images", emb_images, "Region features EMB, regions grouped per image")->required();
  emb->add_option("--regions-per-image", emb_regions, "Rows per image in --images")->check(CLI::PositiveNumber);
  emb->add_option("--image-ids", emb_ids, "File with one image id per line (default: caption order)");
  emb->add_option("--b", emb_b, "Caption embedding dim (default: region dim)");
  emb->add_option("--c", emb_c, "Synonym embedding dim (default: b)");
  emb->add_option("--l", emb_l, "Synonym slots")->check(CLI::PositiveNumber);
  emb->add_option("--out", emb_out, "Output corpus directory")->required();
  emb->add_flag("--binary", emb_binary, "Write binary EMB files");

  // build-hg
  auto* bhg = app.add_subcommand("build-hg", "Build text and vision hypergraphs for a corpus");
  std::string bhg_data, bhg_out;
  std::size_t bhg_k = 0, bhg_vk = 0, bhg_l = 4;
  common(bhg);
  bhg->add_option("--data", bhg_data, "Corpus directory")->required();
  bhg->add_option("--knn-k", bhg_k, "Text neighbours (0 = auto)");
  bhg->add_option("--vision-knn-k", bhg_vk, "Vision neighbours (0 = auto)");
  bhg->add_option("--l", bhg_l, "Synonym slots")->check(CLI::PositiveNumber);
  bhg->add_option("--out", bhg_out, "Write hypergraphs as JSON");

  // train
  auto* trn = app.add_subcommand("train", "Train the adapters with SGD");
  TrainFlags train_flags;
  std::string trn_data, trn_out, trn_log;
  bool trn_off = false;
  common(trn);
  train_flags.attach(trn);
  trn->add_option("--data", trn_data, "Corpus directory")->required();
  trn->add_option("--out", trn_out, "Checkpoint directory")->required();
  trn->add_option("--log", trn_log, "Per-epoch CSV (default <out>/train_log.csv)");
  trn->add_flag("--no-adapter", trn_off, "Train nothing; evaluate raw features");

  // eval
  auto* evl = app.add_subcommand("eval", "Recall@K and RSUM on a corpus");
  std::string evl_data, evl_ckpt;
  common(evl);
  evl->add_option("--data", evl_data, "Corpus directory");
  evl->add_option("--checkpoint", evl_ckpt, "Checkpoint directory (omit for raw features)");

  // entropy
  auto* ent = app.add_subcommand("entropy", "Information content of captions, synonyms and images");
  std::string ent_captions, ent_images;
  std::size_t ent_bins = kDefaultBins;
  bool ent_items = false;
  common(ent);
  ent->add_option("--captions", ent_captions, "Captions JSONL")->required();
  ent->add_option("--images", ent_images, "Image feature EMB");
  ent->add_option("--bins", ent_bins, "Histogram bins")->check(CLI::Range(2, 1 << 20));
  ent->add_flag("--items", ent_items, "Include per-caption values");

  // gradcheck
  auto* gck = app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradients");
  GradCheckSetup gc_setup;
  common(gck);
  gck->add_option("--step", gc_setup.h, "Finite-difference step h")->check(CLI::Range(1e-8, 1e-4));
  gck->add_option("--tol", gc_setup.tol, "Relative tolerance")->check(CLI::PositiveNumber);
  gck->add_option("--per-block", gc_setup.per_block, "Coordinates per block")->check(CLI::PositiveNumber);
  gck->add_option("--corrupt", gc_setup.corrupt, "Scale analytic gradients (detector sanity)");

  // bench
  auto* bch = app.add_subcommand("bench", "Synthetic retrieval benchmark: adapter on vs off");
  BenchConfig bench = default_bench_config();
  std::string bch_seeds = "1,2,3";
  bool bch_no_zero = false;
  common(bch);
  bch->add_option("--seeds", bch_seeds, "Comma-separated seeds");
  bch->add_option("--epochs", bench.train.epochs, "Epochs per run")->check(CLI::PositiveNumber);
  bch->add_option("--lr", bench.train.lr, "SGD learning rate")->check(CLI::PositiveNumber);
  bch->add_option("--batch", bench.train.batch, "Images per batch")->check(CLI::Range(2, 1 << 30));
  bch->add_option("--images", bench.data.n_images, "Synthetic images")->check(CLI::Range(2, 1 << 20));
  bch->add_option("--gap", bench.data.gap, "Modality-gap strength");
  bch->add_flag("--skip-beta-zero", bch_no_zero, "Skip the beta=0 comparison run");

  // --config is spliced in right after the subcommand so explicit flags override it.
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  try {
    std::size_t sub_pos = args.size();
    for (std::size_t i = 0; i < args.size(); ++i)
      if (app.get_subcommand_no_throw(args[i])) {
        sub_pos = i;
        break;
      }
    std::optional<std::string> cfg_file;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) cfg_file = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) cfg_file = args[i].substr(9);
    }
    if (cfg_file && sub_pos < args.size()) {
      nlohmann::json cfg;
      try {
        cfg = nlohmann::json::parse(read_file(*cfg_file));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(*cfg_file + ": " + e.what());
      }
      auto tokens = detail::config_tokens(cfg, *app.get_subcommand(args[sub_pos]));
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, tokens.begin(), tokens.end());
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  }

  log_config().level = verbose ? LogLevel::info : LogLevel::warning;

  try {
    if (*aug) {
      aug_cfg.mode = parse_augment_mode(aug_mode);
      aug_cfg.offline_path = aug_offline;
      aug_cfg.cache_dir = aug_cache;
      const auto records = augment_captions(aug_cfg, load_captions_jsonl(aug_in));
      write_file(aug_out, format_captions_jsonl(records));
      std::size_t with = 0;
      for (const auto& r : records) with += !r.synonyms.empty();
      if (json) {
        detail::print_json(out, {{"captions", records.size()}, {"with_synonyms", with}, {"out", aug_out}});
      } else {
        out << "augmented " << records.size() << " captions (" << with << " with synonyms) -> " << aug_out << "\n";
      }
    } else if (*emb) {
      Corpus corpus;
      corpus.captions = load_captions_jsonl(emb_captions);
      const Matrix stacked = parse_emb_file(emb_images);
      corpus.regions = split_regions(stacked, emb_regions);
      if (!emb_ids.empty()) {
        std::stringstream ss(read_file(emb_ids));
        for (std::string line; std::getline(ss, line);)
          if (!line.empty()) corpus.image_ids.push_back(line);
      } else {
        for (const auto& rec : corpus.captions)
          if (std::find(corpus.image_ids.begin(), corpus.image_ids.end(), rec.image_id) ==
              corpus.image_ids.end())
            corpus.image_ids.push_back(rec.image_id);
      }
      if (corpus.image_ids.size() != corpus.regions.size()) {
        throw ParseError("embed: " + std::to_string(corpus.image_ids.size()) + " image ids but " +
                         std::to_string(corpus.regions.size()) + " images in " + emb_images);
      }
      const std::size_t b = emb_b ? emb_b : stacked.cols();
      const std::size_t c = emb_c ? emb_c : b;
      corpus.caption_emb = Matrix(corpus.captions.size(), b);
      corpus.synonym_slots.assign(emb_l, Matrix(corpus.captions.size(), c));
      std::size_t truncated = 0;
      for (std::size_t i = 0; i < corpus.captions.size(); ++i) {
        const auto& rec = corpus.captions[i];
        const Vector t = hash_embed(rec.text, b, seed);
        std::copy(t.begin(), t.end(), corpus.caption_emb.row(i).begin());
        truncated += rec.synonyms.size() > emb_l;
        for (std::size_t s = 0; s < std::min(emb_l, rec.synonyms.size()); ++s) {
          const Vector v = hash_embed(rec.synonyms[s], c, seed);
          std::copy(v.begin(), v.end(), corpus.synonym_slots[s].row(i).begin());
        }
      }
      if (truncated) log_warning(std::to_string(truncated) + " captions had more than l synonyms; extras dropped");
      corpus.caption_to_image = map_captions_to_images(corpus.captions, corpus.image_ids);
      save_corpus(corpus, emb_out);
      if (emb_binary) {
        write_emb_file(std::filesystem::path(emb_out) / "images.emb", stack_regions(corpus.regions), true);
        write_emb_file(std::filesystem::path(emb_out) / "captions.emb", corpus.caption_emb, true);
        write_emb_file(std::filesystem::path(emb_out) / "synonyms.emb", stack_synonym_slots(corpus.synonym_slots), true);
      }
      if (json) {
        detail::print_json(out, {{"images", corpus.n_images()}, {"captions", corpus.n_captions()},
                                 {"b", b}, {"c", c}, {"l", emb_l}, {"out", emb_out}});
      } else {
        out << "corpus: " << corpus.n_images() << " images, " << corpus.n_captions()
            << " captions, b=" << b << " c=" << c << " l=" << emb_l << " -> " << emb_out << "\n";
      }
    } else if (*bhg) {
      const Corpus corpus = load_corpus(bhg_data);
      const auto slots = resize_slots(corpus.synonym_slots, bhg_l, corpus.n_captions(), corpus.c());
      const Matrix fused = extend_matrix(corpus.caption_emb, slots);
      const std::size_t k = bhg_k ? bhg_k : auto_k(corpus.b(), corpus.c(), corpus.n_captions());
      const Hypergraph text = build_text_hypergraph(fused, slots, k);
      const Matrix pooled = pool_regions(corpus.regions);
      const std::size_t vk = bhg_vk ? bhg_vk : std::min(corpus.d(), corpus.n_images() - 1);
      const Hypergraph vision = knn_hyperedges(pooled, vk);
      nlohmann::json summary{{"text", {{"vertices", text.n_vertices()}, {"edges", text.n_edges()}, {"k", k}, {"blocks", bhg_l + 1}}},
                             {"vision", {{"vertices", vision.n_vertices()}, {"edges", vision.n_edges()}, {"k", vk}}}};
      if (!bhg_out.empty()) {
        write_file(bhg_out, nlohmann::json{{"text", hypergraph_to_json(text)},
                                           {"vision", hypergraph_to_json(vision)}}.dump() + "\n");
      }
      if (json) {
        detail::print_json(out, summary);
      } else {
        out << "text hypergraph:   " << text.n_vertices() << " vertices, " << text.n_edges()
            << " hyperedges (k=" << k << ", " << bhg_l + 1 << " blocks)\n"
            << "vision hypergraph: " << vision.n_vertices() << " vertices, " << vision.n_edges()
            << " hyperedges (k=" << vk << ")\n";
      }
    } else if (*trn) {
      const Corpus corpus = load_corpus(trn_data);
      TrainConfig cfg = train_flags.resolve(seed);
      cfg.adapter = !trn_off;
      const TrainResult result = train(cfg, corpus, [&](const EpochLog& e) {
        log_info("epoch " + std::to_string(e.epoch) + " loss=" + format_double(e.loss) +
                 " rsum=" + format_double(e.rsum) + " grad_dev=" + format_double(e.grad_dev) +
                 " alpha=" + format_double(e.alpha));
      });
      save_checkpoint(result.checkpoint, trn_out);
      const std::filesystem::path log_path =
          trn_log.empty() ? std::filesystem::path(trn_out) / "train_log.csv" : std::filesystem::path(trn_log);
      write_file(log_path, format_epoch_csv(result.epochs));
      if (json) {
        auto epochs = nlohmann::json::array();
        for (const auto& e : result.epochs)
          epochs.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"rsum", e.rsum},
                            {"grad_dev", e.grad_dev}, {"alpha", e.alpha}, {"beta", e.beta}});
        detail::print_json(out, {{"checkpoint", trn_out}, {"log", log_path.string()},
                                 {"initial", to_json(result.initial_report)},
                                 {"final", to_json(result.final_report)}, {"epochs", epochs}});
      } else {
        out << format_table({{"before training", result.initial_report}, {"after training", result.final_report}});
        out << "alpha=" << format_double(result.checkpoint.alpha) << " beta=" << format_double(result.checkpoint.beta)
            << "  checkpoint -> " << trn_out << "\n";
      }
    } else if (*evl) {
      if (evl_data.empty()) {
        err << "eval: --data is required\n" << evl->help();
        return kUsage;
      }
      const Corpus corpus = load_corpus(evl_data);
      EvalReport rep;
      std::string name = "raw features";
      if (evl_ckpt.empty()) {
        TrainConfig cfg;
        cfg.adapter = false;
        rep = Model::build(corpus, cfg).evaluate();
      } else {
        rep = Model::from_checkpoint(corpus, load_checkpoint(evl_ckpt)).evaluate();
        name = "checkpoint";
      }
      if (json) {
        detail::print_json(out, to_json(rep));
      } else {
        out << format_table({{name, rep}});
      }
    } else if (*ent) {
      const auto captions = load_captions_jsonl(ent_captions);
      const Matrix images = ent_images.empty() ? Matrix() : parse_emb_file(ent_images);
      const EntropyReport rep = modality_entropy_report(captions, images, ent_bins);
      detail::print_json(out, to_json(rep, ent_items));
    } else if (*gck) {
      if (gck->get_option("--seed")->count() == 0) seed = 7;
      const GradCheckReport rep = default_gradcheck(seed, gc_setup);
      if (json) {
        detail::print_json(out, to_json(rep));
      } else {
        for (const auto& b : rep.blocks) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "%-16s checked=%-3zu nonzero=%-3zu excluded=%-3zu max_rel=%.3e %s\n",
                        b.name.c_str(), b.checked, b.nonzero, b.excluded, b.max_rel_error,
                        b.pass ? "ok" : "FAIL");
          out << buf;
        }
        out << (rep.pass ? "gradcheck passed" : "gradcheck FAILED") << " (h=" << format_double(rep.h)
            << ", tol=" << format_double(rep.tolerance) << ")\n";
      }
      return rep.pass ? kOk : kRuntimeFailure;
    } else if (*bch) {
      bench.seeds = detail::parse_seed_list(bch_seeds);
      bench.compare_beta_zero = !bch_no_zero;
      const BenchResult res = run_bench(bench);
      if (json) {
        detail::print_json(out, to_json(res));
      } else {
        std::vector<std::pair<std::string, EvalReport>> rows;
        for (const auto& r : res.seeds) {
          rows.push_back({"seed " + std::to_string(r.seed) + " adapter off", r.off});
          rows.push_back({"seed " + std::to_string(r.seed) + " adapter on", r.on});
        }
        out << format_table(rows);
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "mean RSUM off %.2f, on %.2f, delta %+.2f\nmean final grad_dev: beta=alpha %.4f, beta=0 %.4f\n",
                      res.mean_rsum_off, res.mean_rsum_on, res.mean_delta, res.mean_grad_dev_tied,
                      res.mean_grad_dev_zero);
        out << buf;
      }
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::invalid_argument& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kOk;
}

}  // namespace oshg::cli
