// Reference backend process for the wire protocol. Serves the toy classifier
// and an identifier model over stdin/stdout, optionally misbehaving in one
// of a few ways so clients can be tested against faulty servers.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "codedenoise/model/mcip.hpp"
#include "codedenoise/model/protocol.hpp"
#include "codedenoise/model/scripted_backend.hpp"
#include "codedenoise/model/toy_classifier.hpp"

using namespace codedenoise;

namespace {

class WithoutAttention : public ClassifierBackend {
 public:
  explicit WithoutAttention(const ClassifierBackend& inner) : inner_(inner) {}
  Prediction classify(const CodeSnippet& s) const override { return inner_.classify(s); }

 private:
  const ClassifierBackend& inner_;
};

nlohmann::json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

// Splits every token into two sub-tokens (when it has >= 2 characters) and
// prepends a zero-width special token, the way subword tokenizers do.
void split_subtokens(nlohmann::json& response) {
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json spans = nlohmann::json::array();
  spans.push_back({0, 0});
  for (const auto& [b, e] : response["token_spans"].get<std::vector<std::pair<std::size_t, std::size_t>>>()) {
    if (e - b >= 2) {
      const std::size_t mid = b + (e - b) / 2;
      spans.push_back({b, mid});
      spans.push_back({mid, e});
    } else {
      spans.push_back({b, e});
    }
  }
  for (const auto& layer : response["weights"]) {
    nlohmann::json row = nlohmann::json::array();
    row.push_back(0.5);
    const auto original = response["token_spans"];
    for (std::size_t i = 0; i < original.size(); ++i) {
      const std::size_t len = original[i][1].get<std::size_t>() - original[i][0].get<std::size_t>();
      const double w = layer[i].get<double>();
      if (len >= 2) {
        // The max of the two halves equals the token's own weight.
        row.push_back(w / 2);
        row.push_back(w);
      } else {
        row.push_back(w);
      }
    }
    weights.push_back(std::move(row));
  }
  response["weights"] = std::move(weights);
  response["token_spans"] = std::move(spans);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wire-protocol backend serving the toy classifier"};
  std::string model_path, mcip_path, fault = "none";
  std::size_t exit_after = 0;
  app.add_option("--model", model_path, "toy classifier JSON (default: seeded random)");
  app.add_option("--mcip", mcip_path, "identifier model JSON (default: always 'count')");
  app.add_option("--fault", fault, "none|bad-sum|wrong-id|garbage|subtoken|no-attention|no-mask-fill")
      ->check(CLI::IsMember({"none", "bad-sum", "wrong-id", "garbage", "subtoken",
                             "no-attention", "no-mask-fill"}));
  app.add_option("--exit-after", exit_after, "exit after answering this many requests");
  CLI11_PARSE(app, argc, argv);

  try {
    ToyConfig config;
    const ToyClassifier toy = model_path.empty()
                                  ? ToyClassifier(config)
                                  : ToyClassifier::from_json(read_file(model_path));
    const WithoutAttention plain(toy);
    const ClassifierBackend* classifier =
        fault == "no-attention" ? static_cast<const ClassifierBackend*>(&plain) : &toy;

    std::unique_ptr<MaskFiller> filler;
    if (!mcip_path.empty()) {
      filler = std::make_unique<McipModel>(McipModel::from_json(read_file(mcip_path)));
    } else {
      filler = std::make_unique<ScriptedFiller>([](const MaskedSnippet&) { return "count"; });
    }
    const MaskFiller* served_filler = fault == "no-mask-fill" ? nullptr : filler.get();

    std::vector<std::string> caps{"classify"};
    if (classifier->supports_attention()) caps.emplace_back("attention");
    if (served_filler != nullptr) caps.emplace_back("mask_fill");
    std::cout << protocol::handshake(caps).dump() << '\n' << std::flush;

    std::string line;
    std::size_t answered = 0;
    while (std::getline(std::cin, line)) {
      if (line.empty()) continue;
      const nlohmann::json request = nlohmann::json::parse(line, nullptr, false);
      nlohmann::json response =
          request.is_discarded()
              ? protocol::error_response(nullptr, "malformed request")
              : protocol::handle_request(request, classifier, served_filler);
      const bool ok = response.value("ok", false);
      if (fault == "bad-sum" && ok && response.contains("probabilities")) {
        for (auto& p : response["probabilities"]) p = p.get<double>() * 0.8;
      } else if (fault == "wrong-id" && response["id"].is_number()) {
        response["id"] = response["id"].get<std::int64_t>() + 1000;
      } else if (fault == "subtoken" && ok && response.contains("weights")) {
        split_subtokens(response);
      }
      if (fault == "garbage") {
        std::cout << "this is not json\n" << std::flush;
      } else {
        std::cout << response.dump() << '\n' << std::flush;
      }
      if (exit_after != 0 && ++answered >= exit_after) return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "loopback: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
