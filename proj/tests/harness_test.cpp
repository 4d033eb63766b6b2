#include <gtest/gtest.h>

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "codedenoise/harness/config.hpp"
#include "codedenoise/harness/corpus.hpp"
#include "codedenoise/harness/metrics.hpp"
#include "codedenoise/harness/noise.hpp"
#include "codedenoise/harness/pipeline.hpp"
#include "codedenoise/harness/synthetic.hpp"
#include "codedenoise/model/mcip.hpp"
#include "codedenoise/model/scripted_backend.hpp"
#include "codedenoise/model/toy_classifier.hpp"
#include "fixtures.hpp"

using namespace codedenoise;

namespace {

OutcomeRecord outcome(std::size_t label, std::size_t before, std::size_t after) {
  OutcomeRecord r;
  r.label = label;
  r.original_label = before;
  r.final_label = after;
  r.flagged = before != after;
  return r;
}

// 4 mispredicted (2 corrected), 6 correct (1 broken).
std::vector<OutcomeRecord> ten_inputs() {
  return {outcome(0, 1, 0), outcome(0, 1, 0), outcome(0, 1, 1), outcome(0, 1, 1),
          outcome(1, 1, 0), outcome(1, 1, 1), outcome(1, 1, 1), outcome(1, 1, 1),
          outcome(1, 1, 1), outcome(1, 1, 1)};
}

Corpus small_corpus() {
  SyntheticConfig config;
  config.per_class = 10;
  return generate_synthetic(config, "test", "t");
}

std::string outcomes_text(const MetricsReport& report) {
  std::string out;
  for (const auto& r : report.outcomes) out += to_json(r).dump() + "\n";
  return out;
}

}  // namespace

TEST(Config, DefaultsAndEveryKey) {
  const PipelineConfig d = parse_config("");
  EXPECT_EQ(d.detector, DetectorKind::smoothing);
  EXPECT_EQ(d.smoothing.theta, 1u);
  EXPECT_EQ(d.smoothing.multiplier, 1u);
  EXPECT_EQ(d.repetitions, 5u);

  const PipelineConfig c = parse_config(
      "# comment\n"
      "detector.kind = deepgini\n"
      "detector.theta = 3\n"
      "detector.n_multiplier = 2\n"
      "detector.zeta = 0.25\n"
      "localizer.kind = random\n"
      "cleanser.strategy = mip\n"
      "backend.kind = subprocess\n"
      "backend.command = ./serve --fast\n"
      "repetitions = 2\n"
      "seed = 42\n"
      "workers = 4\n");
  EXPECT_EQ(c.detector, DetectorKind::deepgini);
  EXPECT_EQ(c.smoothing.theta, 3u);
  EXPECT_EQ(c.smoothing.multiplier, 2u);
  EXPECT_DOUBLE_EQ(c.gini.zeta, 0.25);
  EXPECT_EQ(c.localizer, LocalizerKind::random);
  EXPECT_EQ(c.cleanse.strategy, CleanseStrategy::mip);
  EXPECT_EQ(c.backend, BackendKind::subprocess);
  EXPECT_EQ(c.backend_command, "./serve --fast");
  EXPECT_EQ(c.repetitions, 2u);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.workers, 4u);
}

TEST(Config, RejectsBadInput) {
  auto kind = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::usage;
  };
  EXPECT_EQ(kind("detector.kinds = smoothing\n"), ErrorKind::validation);
  EXPECT_EQ(kind("detector.theta = -1\n"), ErrorKind::validation);
  EXPECT_EQ(kind("detector.theta = 0\n"), ErrorKind::validation);
  EXPECT_EQ(kind("detector.zeta = 1.0\n"), ErrorKind::validation);
  EXPECT_EQ(kind("repetitions = 0\n"), ErrorKind::validation);
  EXPECT_EQ(kind("seed = 12abc\n"), ErrorKind::validation);
  EXPECT_EQ(kind("backend.kind = subprocess\n"), ErrorKind::validation);
  EXPECT_EQ(kind("no equals sign\n"), ErrorKind::validation);
  EXPECT_THROW(load_config("/nonexistent/config.txt"), Error);
}

TEST(Corpus, RoundTripsThroughNdjson) {
  const Corpus corpus = small_corpus();
  std::stringstream buffer;
  write_corpus(buffer, corpus);
  const Corpus back = read_corpus(buffer, "test");
  ASSERT_EQ(back.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(back.records[i].id, corpus.records[i].id);
    EXPECT_EQ(back.records[i].label, corpus.records[i].label);
    EXPECT_EQ(back.records[i].code.source(), corpus.records[i].code.source());
  }
  EXPECT_EQ(back.class_count(), 4u);
  EXPECT_NO_THROW(back.validate(4));
}

TEST(Corpus, ReportsBadRecords) {
  std::stringstream garbage("{\"id\": \"a\", \"code\": \"x = 1\", \"label\": 0}\nnot json\n");
  EXPECT_THROW(read_corpus(garbage, "test"), Error);

  std::stringstream broken("{\"id\": \"r7\", \"code\": \"def f(:\", \"label\": 0}\n");
  try {
    read_corpus(broken, "test");
    FAIL() << "expected a syntax error";
  } catch (const SyntaxError& e) {
    EXPECT_NE(std::string(e.what()).find("r7"), std::string::npos);
  }

  Corpus dup{"test", {}};
  dup.records.push_back({"a", CodeSnippet::parse("x = 1"), 0});
  dup.records.push_back({"a", CodeSnippet::parse("y = 1"), 1});
  EXPECT_THROW(dup.validate(2), Error);
  dup.records[1].id = "b";
  EXPECT_THROW(dup.validate(1), Error);
}

TEST(Metrics, TenInputScenario) {
  const RepetitionMetrics m = compute_metrics(ten_inputs());
  EXPECT_EQ(m.mispredicted, 4u);
  EXPECT_EQ(m.corrected, 2u);
  EXPECT_EQ(m.correct, 6u);
  EXPECT_EQ(m.broken, 1u);
  EXPECT_DOUBLE_EQ(*m.csr, 0.5);
  EXPECT_DOUBLE_EQ(*m.mcr, 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(m.accuracy_before, 0.6);
  EXPECT_DOUBLE_EQ(m.accuracy_after, 0.7);
}

TEST(Metrics, ZeroDenominatorsAreAbsent) {
  const RepetitionMetrics all_right = compute_metrics({outcome(0, 0, 0), outcome(1, 1, 1)});
  EXPECT_FALSE(all_right.csr.has_value());
  EXPECT_DOUBLE_EQ(*all_right.mcr, 0.0);
  const RepetitionMetrics all_wrong = compute_metrics({outcome(0, 1, 1)});
  EXPECT_FALSE(all_wrong.mcr.has_value());
  EXPECT_TRUE(to_json(all_wrong)["mcr"].is_null());
  const RepetitionMetrics none = compute_metrics({});
  EXPECT_FALSE(none.csr.has_value());
  EXPECT_FALSE(none.mcr.has_value());
}

TEST(Metrics, FailuresAreExcludedFromRates) {
  auto records = ten_inputs();
  OutcomeRecord failed = outcome(0, 0, 0);
  failed.error = "transport: broken pipe";
  records.push_back(failed);
  const RepetitionMetrics m = compute_metrics(records);
  EXPECT_EQ(m.failures, 1u);
  EXPECT_EQ(m.total, 10u);
  EXPECT_DOUBLE_EQ(m.accuracy_after, 0.7);
}

TEST(Metrics, AccuracyIdentityAndAveraging) {
  const RepetitionMetrics m = compute_metrics(ten_inputs());
  const double n = static_cast<double>(m.total);
  EXPECT_DOUBLE_EQ(m.accuracy_after,
                   m.accuracy_before + (static_cast<double>(m.corrected) -
                                        static_cast<double>(m.broken)) / n);

  MetricsReport report;
  report.repetitions.push_back(m);
  report.repetitions.push_back(compute_metrics({outcome(0, 0, 0), outcome(1, 0, 1)}));
  summarize(report);
  EXPECT_DOUBLE_EQ(*report.csr, (0.5 + 1.0) / 2);
  EXPECT_DOUBLE_EQ(*report.mcr, (1.0 / 6.0 + 0.0) / 2);
  EXPECT_DOUBLE_EQ(report.accuracy_after, (0.7 + 1.0) / 2);
}

TEST(Metrics, OutcomeJsonHasNoTiming) {
  OutcomeRecord r = outcome(0, 1, 0);
  r.elapsed_seconds = 1.25;
  r.trace.push_back({"a", "b", StepAction::flipped, 0.7, 0.2});
  const auto j = to_json(r);
  EXPECT_FALSE(j.contains("elapsed_seconds"));
  EXPECT_EQ(j["trace"][0]["action"], "flipped");
}

TEST(Synthetic, DeterministicAndBalanced) {
  const Corpus a = small_corpus();
  const Corpus b = small_corpus();
  ASSERT_EQ(a.size(), 40u);
  std::vector<std::size_t> per_class(4, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.records[i].code.source(), b.records[i].code.source());
    ++per_class[a.records[i].label];
    EXPECT_EQ(a.records[i].code.identifiers().size(), 4u);
  }
  EXPECT_EQ(per_class, std::vector<std::size_t>(4, 10));
}

TEST(Noise, MarkerPoolsRespectPurity) {
  Corpus train{"train", {}};
  auto add = [&](const std::string& code, std::size_t label) {
    train.records.push_back({"r" + std::to_string(train.size()), CodeSnippet::parse(code), label});
  };
  for (int i = 0; i < 3; ++i) add("def f(pivot):\n    return pivot\n", 0);
  for (int i = 0; i < 3; ++i) add("def g(words):\n    return words\n", 1);
  add("def g(pivot):\n    return pivot\n", 1);
  const MarkerPools pools = class_marker_pools(train, 2, 0.9, 3);
  // pivot is 3/4 class 0: below purity. f is only in class 0, g is 4/4 class 1.
  EXPECT_EQ(pools.by_class[0], std::vector<std::string>{"f"});
  EXPECT_EQ(pools.by_class[1], (std::vector<std::string>{"g", "words"}));
}

TEST(Noise, RateZeroIsIdentity) {
  const Corpus clean = small_corpus();
  const MarkerPools pools = class_marker_pools(clean, 4, 0.8, 1);
  Rng rng(5);
  const Injection inj = inject_noise(clean, pools, 0.0, rng);
  EXPECT_TRUE(inj.manifest.empty());
  std::stringstream a, b;
  write_corpus(a, clean);
  write_corpus(b, inj.corpus);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Noise, RateOneRenamesOncePerRecord) {
  const Corpus clean = small_corpus();
  const MarkerPools pools = class_marker_pools(clean, 4, 0.8, 1);
  Rng rng(5);
  const Injection inj = inject_noise(clean, pools, 1.0, rng);
  EXPECT_EQ(inj.manifest.size() + inj.skipped, clean.size());
  EXPECT_GT(inj.manifest.size(), 0u);
  std::size_t m = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const auto& before = clean.records[i].code;
    const auto& after = inj.corpus.records[i].code;
    if (m < inj.manifest.size() && inj.manifest[m].id == clean.records[i].id) {
      const InjectionEntry& e = inj.manifest[m++];
      EXPECT_NE(e.target_class, clean.records[i].label);
      const auto& pool = pools.by_class[e.target_class];
      EXPECT_NE(std::find(pool.begin(), pool.end(), e.injected_name), pool.end());
      EXPECT_EQ(after.source(), rename_identifier(before, e.original_name, e.injected_name).source());
      EXPECT_EQ(structural_digest(after), structural_digest(before));
    } else {
      EXPECT_EQ(after.source(), before.source());
    }
  }
  Rng again(5);
  EXPECT_THROW(inject_noise(clean, pools, 1.5, again), Error);
}

TEST(Pipeline, PassThroughMatchesDirectClassify) {
  const ToyClassifier model = train_toy(small_corpus().records, ToyConfig{});
  const Vocabulary vocab = build_vocabulary(small_corpus().sources(), "test").vocabulary;
  const McipModel mcip = train_mcip(small_corpus().records, model);
  PipelineConfig config;
  const PipelineModels models{&model, &mcip, nullptr, &vocab};
  for (const auto& r : small_corpus().records) {
    const InputResult out = denoise_input(r.code, config, models, 9);
    if (!out.flagged) {
      EXPECT_EQ(out.final_label, model.classify(r.code).label());
      EXPECT_FALSE(out.outcome.has_value());
    }
  }

  const InputResult empty = denoise_input(CodeSnippet::parse("print(1 + 2)\n"), config, models, 9);
  EXPECT_FALSE(empty.flagged);
  EXPECT_EQ(empty.reason, "no identifiers");
}

TEST(Pipeline, DisabledDetectorChangesNothing) {
  const Corpus test = small_corpus();
  const ToyClassifier model = train_toy(test.records, ToyConfig{});
  PipelineConfig config;
  config.detector = DetectorKind::none;
  config.repetitions = 2;
  const MetricsReport report = evaluate(test, config, PipelineModels{&model, nullptr, nullptr, nullptr});
  EXPECT_DOUBLE_EQ(report.accuracy_after, report.accuracy_before);
  EXPECT_DOUBLE_EQ(report.csr.value_or(0.0), 0.0);
  EXPECT_DOUBLE_EQ(report.mcr.value_or(0.0), 0.0);
  EXPECT_EQ(report.outcomes.size(), 2 * test.size());
}

TEST(Pipeline, FallsBackToRandomRankingWithoutAttention) {
  const ScriptedBackend backend([](const CodeSnippet& s) {
    return s.identifiers().contains("a1_selection") ? std::vector<double>{0.3, 0.7}
                                                    : std::vector<double>{0.8, 0.2};
  });
  const ScriptedFiller filler([](const MaskedSnippet&) { return std::string("count"); });
  PipelineConfig config;
  config.detector = DetectorKind::deepgini;
  config.gini.zeta = 0.1;
  const InputResult r = denoise_input(CodeSnippet::parse(fixtures::bubble_sort_noisy()), config,
                                      PipelineModels{&backend, &filler, nullptr, nullptr}, 1);
  EXPECT_TRUE(r.flagged);
  EXPECT_TRUE(r.localization_fallback);
  EXPECT_EQ(r.final_label, 0u);
}

TEST(Pipeline, PerInputFailuresAreRecorded) {
  const ScriptedBackend backend([](const CodeSnippet& s) -> std::vector<double> {
    if (s.identifiers().contains("boom")) throw Error(ErrorKind::transport, "backend died");
    return {0.6, 0.4};
  });
  Corpus test{"test", {}};
  test.records.push_back({"ok", CodeSnippet::parse("x = 1\n"), 0});
  test.records.push_back({"bad", CodeSnippet::parse("boom = 1\n"), 0});
  PipelineConfig config;
  config.detector = DetectorKind::none;
  config.repetitions = 1;
  const MetricsReport report = evaluate(test, config, PipelineModels{&backend, nullptr, nullptr, nullptr});
  ASSERT_EQ(report.outcomes.size(), 2u);
  EXPECT_FALSE(report.outcomes[0].failed());
  EXPECT_NE(report.outcomes[1].error.find("backend died"), std::string::npos);
  EXPECT_EQ(report.repetitions[0].failures, 1u);
  EXPECT_DOUBLE_EQ(report.accuracy_before, 1.0);
}

TEST(Pipeline, ReproducibleAndWorkerIndependent) {
  const Corpus train = small_corpus();
  const ToyClassifier model = train_toy(train.records, ToyConfig{});
  const Vocabulary vocab = build_vocabulary(train.sources(), "train").vocabulary;
  const McipModel mcip = train_mcip(train.records, model);
  Rng rng(3);
  const Corpus test = inject_noise(train, class_marker_pools(train, 4, 0.8, 1), 0.5, rng).corpus;
  const PipelineModels models{&model, &mcip, nullptr, &vocab};
  PipelineConfig config;
  config.repetitions = 2;
  config.seed = 11;
  const std::string first = outcomes_text(evaluate(test, config, models));
  EXPECT_EQ(first, outcomes_text(evaluate(test, config, models)));
  config.workers = 3;
  EXPECT_EQ(first, outcomes_text(evaluate(test, config, models)));
}
