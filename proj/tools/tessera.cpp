// Command-line front end: annotate, train, evaluate, models.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tessera/doc/bio.hpp"
#include "tessera/doc/conllu.hpp"
#include "tessera/error.hpp"
#include "tessera/eval/evaluator.hpp"
#include "tessera/pipeline/pipeline.hpp"
#include "tessera/pipeline/registry.hpp"
#include "tessera/pipeline/training.hpp"
#include "tessera/pipeline/wire.hpp"

using namespace tessera;

namespace {

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream s;
    s << std::cin.rdbuf();
    return s.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  try {
    auto j = nlohmann::json::parse(read_input(path));
    if (!j.is_object()) throw Error(path + ": config must be a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

std::optional<std::string> optional_flag(const std::string& value) {
  return value.empty() ? std::nullopt : std::optional<std::string>(value);
}

void print_report(const eval::MetricReport& report, const std::string& format) {
  if (format == "json") {
    std::cout << eval::to_json(report).dump(2) << "\n";
  } else {
    std::cout << eval::format_text(report);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tessera: neural NLP pipeline"};
  app.require_subcommand(1);
  std::string registry_root;
  app.add_option("--registry", registry_root, "Model registry root (default $TESSERA_MODELS or ./tessera_models)");

  // annotate
  auto* annotate = app.add_subcommand("annotate", "Annotate raw text");
  std::string lang, processors, input = "-", output = "conllu";
  annotate->add_option("--lang", lang, "Language code")->required();
  annotate->add_option("--processors", processors, "Comma-separated processors (default: all installed)");
  annotate->add_option("--input", input, "Input text file, - for stdin");
  annotate->add_option("--output", output, "Output format")->check(CLI::IsMember({"conllu", "json"}));

  // train
  auto* train = app.add_subcommand("train", "Train one processor");
  std::string processor, train_file, eval_file, gold_file, output_file, config_file;
  train->add_option("processor", processor, "tokenize, mwt, pos, lemma, depparse or ner")->required();
  train->add_option("--train_file", train_file, "Training data (CoNLL-U; BIO also accepted for ner)")->required();
  train->add_option("--eval_file", eval_file, "Development input (default: hold out 20% of training sentences)");
  train->add_option("--gold_file", gold_file, "Development gold (default: the development input)");
  train->add_option("--output_file", output_file, "Where to write development predictions");
  train->add_option("--config", config_file, "JSON hyper-parameters; \"model_file\" sets the output model path");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score system output against gold");
  std::string system_file, gold_eval, format = "text";
  evaluate->add_option("--system", system_file, "System file (CoNLL-U or BIO)")->required();
  evaluate->add_option("--gold", gold_eval, "Gold file (CoNLL-U or BIO)")->required();
  evaluate->add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "json"}));

  // models
  auto* models = app.add_subcommand("models", "Manage installed models");
  models->require_subcommand(1);
  auto* fetch = models->add_subcommand("fetch", "Install a language's models");
  std::string fetch_lang, source, sha;
  fetch->add_option("--lang", fetch_lang, "Language code")->required();
  fetch->add_option("--source", source, "Archive file, model directory or http:// URL")->required();
  fetch->add_option("--sha256", sha, "Expected SHA-256 of the archive");
  auto* list = models->add_subcommand("list", "List installed languages and processors");
  auto* verify = models->add_subcommand("verify", "Check installed files against their hashes");
  std::string verify_lang;
  verify->add_option("--lang", verify_lang, "Only this language");
  auto* pack = models->add_subcommand("pack", "Write an archive from a directory of <processor>.model files");
  std::string pack_lang, pack_dir, pack_out;
  pack->add_option("--lang", pack_lang, "Language code")->required();
  pack->add_option("--dir", pack_dir, "Directory of model files")->required();
  pack->add_option("--output", pack_out, "Archive to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const pipeline::Registry registry(registry_root.empty() ? pipeline::Registry::default_root() : std::filesystem::path(registry_root));

    if (*annotate) {
      pipeline::PipelineConfig config;
      config.language = lang;
      config.processors = pipeline::split_processors(processors);
      const auto p = pipeline::Pipeline::build(config, registry);
      const Document doc = p.run(read_input(input));
      if (output == "json") {
        std::cout << wire::canonical(wire::to_json(doc)) << "\n";
      } else {
        std::cout << conllu::serialize(doc);
      }
    } else if (*train) {
      pipeline::TrainRequest r;
      r.processor = processor;
      r.train_file = train_file;
      r.eval_file = optional_flag(eval_file);
      r.gold_file = optional_flag(gold_file);
      r.output_file = optional_flag(output_file);
      r.config = read_config(config_file);
      const auto result = pipeline::train_processor(r, &std::cerr);
      std::cerr << "saved " << result.model_file << " (" << result.train_sentences << " training, "
                << result.dev_sentences << " development sentences)\n";
      print_report(result.report, "text");
    } else if (*evaluate) {
      eval::MetricReport report;
      if (pipeline::is_bio_file(gold_eval)) {
        report[eval::kEntities] = eval::score_ner(bio::read_file(system_file), bio::read_file(gold_eval));
      } else {
        report = eval::align_and_score(conllu::read_file(system_file), conllu::read_file(gold_eval));
      }
      print_report(report, format);
    } else if (*fetch) {
      const auto m = registry.fetch(fetch_lang, source, optional_flag(sha));
      std::cout << "installed " << m.processors.size() << " models for " << fetch_lang << " in "
                << registry.root().string() << "\n";
    } else if (*list) {
      for (const auto& language : registry.languages()) {
        const auto manifest = registry.manifest(language);
        std::vector<std::string> procs;
        for (const auto& [name, entry] : manifest->processors) procs.push_back(name);
        std::cout << language << "\t" << pipeline::join(procs) << "\n";
      }
    } else if (*verify) {
      const auto languages = verify_lang.empty() ? registry.languages() : std::vector<std::string>{verify_lang};
      bool ok = true;
      for (const auto& language : languages) {
        const auto problems = registry.verify(language);
        std::cout << language << "\t" << (problems.empty() ? "ok" : "FAILED") << "\n";
        for (const auto& p : problems) std::cout << "  " << p << "\n";
        ok = ok && problems.empty();
      }
      return ok ? 0 : 1;
    } else if (*pack) {
      const auto m = pipeline::pack_directory(pack_lang, pack_dir, pack_out);
      std::cout << "wrote " << pack_out << " with " << m.processors.size() << " models\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
