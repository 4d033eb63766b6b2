// Command-line front end: corpus generation, training, noise injection,
// detection, single-input denoising and full evaluation.
//
// Exit codes: 0 success, 1 usage error, 2 backend or protocol failure,
// 3 parse failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "codedenoise/harness/config.hpp"
#include "codedenoise/harness/corpus.hpp"
#include "codedenoise/harness/noise.hpp"
#include "codedenoise/harness/pipeline.hpp"
#include "codedenoise/harness/synthetic.hpp"
#include "codedenoise/model/mcip.hpp"
#include "codedenoise/model/protocol.hpp"
#include "codedenoise/model/toy_classifier.hpp"

using namespace codedenoise;
namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::usage, "cannot open " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::usage, path.string() + " is not valid JSON");
  return j;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::usage, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// Whatever the pipeline reads, owned in one place.
struct LoadedModels {
  std::unique_ptr<ToyClassifier> toy;
  std::unique_ptr<protocol::SubprocessBackend> remote;
  std::unique_ptr<McipModel> mcip;
  std::unique_ptr<McipModel> mip;
  std::optional<Vocabulary> vocabulary;

  PipelineModels view() const {
    PipelineModels m;
    m.classifier = remote ? static_cast<const ClassifierBackend*>(remote.get()) : toy.get();
    m.mcip = mcip.get();
    if (m.mcip == nullptr && remote && remote->has_capability("mask_fill")) m.mcip = remote.get();
    m.mip = mip.get();
    m.vocabulary = vocabulary ? &*vocabulary : nullptr;
    return m;
  }
};

LoadedModels load_models(const PipelineConfig& config, const std::string& model_dir,
                         const std::string& vocab_path) {
  LoadedModels out;
  const fs::path dir(model_dir);
  if (config.backend == BackendKind::subprocess) {
    out.remote = std::make_unique<protocol::SubprocessBackend>(config.backend_command);
  } else {
    if (model_dir.empty()) throw Error(ErrorKind::usage, "--model is required for the toy backend");
    out.toy = std::make_unique<ToyClassifier>(ToyClassifier::from_json(read_json(dir / "toy.json")));
  }
  if (!model_dir.empty()) {
    if (fs::exists(dir / "mcip.json")) {
      out.mcip = std::make_unique<McipModel>(McipModel::from_json(read_json(dir / "mcip.json")));
    }
    if (fs::exists(dir / "mip.json")) {
      out.mip = std::make_unique<McipModel>(McipModel::from_json(read_json(dir / "mip.json")));
    }
  }
  if (!vocab_path.empty()) out.vocabulary = Vocabulary::load(vocab_path);
  return out;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  return path.empty() ? parse_config("") : load_config(path);
}

std::string read_source(const std::string& path) {
  if (path.empty() || path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), {});
  }
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::usage, "cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::syntax:
      return 3;
    case ErrorKind::transport:
    case ErrorKind::protocol:
    case ErrorKind::capability:
    case ErrorKind::no_candidate:
      return 2;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Denoise identifier-induced mispredictions of code classifiers"};
  app.require_subcommand(1);

  // generate
  SyntheticConfig synth;
  std::string gen_split = "train", gen_out;
  auto* generate = app.add_subcommand("generate", "write a synthetic labeled corpus");
  generate->add_option("--out", gen_out, "output .ndjson file")->required();
  generate->add_option("--split", gen_split, "split tag, also the id prefix");
  generate->add_option("--per-class", synth.per_class, "snippets per class");
  generate->add_option("--marker-rate", synth.marker_rate, "chance a name is a class marker");
  generate->add_option("--label-noise", synth.label_noise, "chance a name is another class's marker");
  generate->add_option("--class-statement-rate", synth.class_statement_rate,
                       "chance of a class-specific statement");
  generate->add_option("--seed", synth.seed, "generator seed");

  // train
  ToyConfig toy_config;
  McipConfig mcip_config;
  std::string train_path, model_out;
  auto* train = app.add_subcommand("train", "train the toy classifier and identifier models");
  train->add_option("--train", train_path, "train split .ndjson")->required();
  train->add_option("--out", model_out, "model directory")->required();
  train->add_option("--epochs", toy_config.epochs);
  train->add_option("--dim", toy_config.dim);
  train->add_option("--learning-rate", toy_config.learning_rate);
  train->add_option("--seed", toy_config.seed);
  train->add_option("--radius", mcip_config.radius, "identifier model context radius");

  // vocab
  std::string vocab_in, vocab_out;
  auto* vocab = app.add_subcommand("vocab", "build the identifier vocabulary");
  vocab->add_option("--train", vocab_in, "corpus .ndjson")->required();
  vocab->add_option("--out", vocab_out, "vocabulary file")->required();

  // inject
  std::string inject_in, inject_train, inject_out, manifest_out;
  double rate = 0.3, purity = 0.8;
  std::uint64_t inject_seed = 0;
  auto* inject = app.add_subcommand("inject", "rename identifiers to wrong-class markers");
  inject->add_option("--input", inject_in, "clean corpus .ndjson")->required();
  inject->add_option("--train", inject_train, "train split for marker pools")->required();
  inject->add_option("--out", inject_out, "noisy corpus .ndjson")->required();
  inject->add_option("--manifest", manifest_out, "injection manifest .ndjson");
  inject->add_option("--rate", rate, "fraction of records to rename")->check(CLI::Range(0.0, 1.0));
  inject->add_option("--seed", inject_seed);
  inject->add_option("--purity", purity, "marker purity threshold");

  // shared by detect, denoise, evaluate
  std::string config_path, model_dir, vocab_path;
  auto add_model_options = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--model", model_dir, "model directory from `train`");
    sub->add_option("--vocab", vocab_path, "vocabulary file from `vocab`");
  };

  std::string detect_in;
  std::uint64_t detect_seed = 0;
  auto* detect = app.add_subcommand("detect", "print detector verdicts");
  add_model_options(detect);
  detect->add_option("--input", detect_in, "corpus .ndjson")->required();
  detect->add_option("--seed", detect_seed);

  std::string denoise_in;
  std::uint64_t denoise_seed = 0;
  auto* denoise = app.add_subcommand("denoise", "denoise one snippet and print its trace");
  add_model_options(denoise);
  denoise->add_option("file", denoise_in, "source file, '-' or absent for stdin");
  denoise->add_option("--seed", denoise_seed);

  std::string eval_test, eval_out;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "run the pipeline over a test split");
  add_model_options(evaluate_cmd);
  evaluate_cmd->add_option("--test", eval_test, "test split .ndjson")->required();
  evaluate_cmd->add_option("--out", eval_out, "directory for report.json and outcomes.ndjson")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*generate) {
      save_corpus(gen_out, generate_synthetic(synth, gen_split, gen_split));
    } else if (*train) {
      const Corpus corpus = load_corpus(train_path, "train");
      toy_config.classes = std::max<std::size_t>(2, corpus.class_count());
      corpus.validate(toy_config.classes);
      ToyTrainReport report;
      const ToyClassifier model = train_toy(corpus.records, toy_config, &report);
      McipTrainReport mcip_report;
      const McipModel mcip = train_mcip(corpus.records, model, mcip_config, &mcip_report);
      const McipModel mip = train_mip(corpus.records, mcip_config);
      fs::create_directories(model_out);
      write_json(fs::path(model_out) / "toy.json", model.to_json());
      write_json(fs::path(model_out) / "mcip.json", mcip.to_json());
      write_json(fs::path(model_out) / "mip.json", mip.to_json());
      std::cout << nlohmann::json{{"training_accuracy", report.training_accuracy},
                                  {"mcip_retained", mcip_report.retained},
                                  {"mcip_discarded", mcip_report.discarded}}
                       .dump()
                << '\n';
      if (mcip_report.empty_warning) std::cerr << "warning: identifier model is empty\n";
    } else if (*vocab) {
      const VocabularyBuild build = build_vocabulary(load_corpus(vocab_in, "train").sources(), vocab_in);
      build.vocabulary.save(vocab_out);
      std::cout << nlohmann::json{{"names", build.vocabulary.size()}, {"skipped", build.skipped}}.dump()
                << '\n';
      if (build.empty_warning) std::cerr << "warning: vocabulary is empty\n";
    } else if (*inject) {
      const Corpus clean = load_corpus(inject_in, "test");
      const Corpus reference = load_corpus(inject_train, "train");
      const MarkerPools pools = class_marker_pools(
          reference, std::max(clean.class_count(), reference.class_count()), purity);
      Rng rng(inject_seed);
      const Injection injection = inject_noise(clean, pools, rate, rng);
      save_corpus(inject_out, injection.corpus);
      if (!manifest_out.empty()) {
        std::ofstream out(manifest_out);
        if (!out) throw Error(ErrorKind::usage, "cannot write " + manifest_out);
        for (const auto& e : injection.manifest) out << to_json(e).dump() << '\n';
      }
      std::cout << nlohmann::json{{"renamed", injection.manifest.size()},
                                  {"skipped", injection.skipped}}
                       .dump()
                << '\n';
    } else if (*detect) {
      PipelineConfig config = load_pipeline_config(config_path);
      const LoadedModels models = load_models(config, model_dir, vocab_path);
      const PipelineModels view = models.view();
      const Corpus corpus = load_corpus(detect_in, "test");
      for (const auto& r : corpus.records) {
        nlohmann::json line{{"id", r.id}};
        if (config.detector == DetectorKind::deepgini) {
          const Prediction p = classify(*view.classifier, r.code);
          const double u = deepgini_uncertainty(p);
          line["label"] = p.label();
          line["uncertainty"] = u;
          line["flagged"] = config.gini.flags(u);
        } else {
          if (view.vocabulary == nullptr) throw Error(ErrorKind::usage, "--vocab is required");
          SmoothingConfig sc = config.smoothing;
          sc.seed = derive_seed(detect_seed, r.id);
          const DetectionVerdict v = identify_mispredicted(r.code, *view.classifier, *view.vocabulary, sc);
          line["label"] = v.original.label();
          line["majority"] = v.majority;
          line["flagged"] = v.flagged;
          line["samples"] = v.sample_labels;
          if (!v.reason.empty()) line["reason"] = v.reason;
        }
        std::cout << line.dump() << '\n';
      }
    } else if (*denoise) {
      PipelineConfig config = load_pipeline_config(config_path);
      const LoadedModels models = load_models(config, model_dir, vocab_path);
      const CodeSnippet snippet = CodeSnippet::parse(read_source(denoise_in));
      const InputResult r = denoise_input(snippet, config, models.view(), denoise_seed);
      OutcomeRecord rec = to_record(LabeledSnippet{"input", snippet, r.original.label()}, 0, r);
      nlohmann::json out = to_json(rec);
      out.erase("label");
      out.erase("repetition");
      out.erase("id");
      out["elapsed_seconds"] = r.elapsed_seconds;
      std::cout << out.dump(2) << '\n';
    } else if (*evaluate_cmd) {
      PipelineConfig config = load_pipeline_config(config_path);
      const LoadedModels models = load_models(config, model_dir, vocab_path);
      const Corpus test = load_corpus(eval_test, "test");
      const MetricsReport report = evaluate(test, config, models.view());
      fs::create_directories(eval_out);
      write_json(fs::path(eval_out) / "report.json", to_json(report));
      std::ofstream out(fs::path(eval_out) / "outcomes.ndjson");
      if (!out) throw Error(ErrorKind::usage, "cannot write outcomes.ndjson");
      for (const auto& r : report.outcomes) out << to_json(r).dump() << '\n';
      std::cout << to_json(report).dump(2) << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "codedenoise: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "codedenoise: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
