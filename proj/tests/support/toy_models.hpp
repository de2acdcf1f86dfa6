#pragma once

// Tiny models for every processor, trained once per process on the toy
// treebank and saved as <processor>.model in a scratch directory. Quality is
// irrelevant; they exercise loading, wiring and serialization.

#include <filesystem>
#include <string>
#include <unistd.h>

#include "support/fixtures.hpp"
#include "tessera/depparse/parser.hpp"
#include "tessera/lemma/lemmatizer.hpp"
#include "tessera/mwt/expander.hpp"
#include "tessera/ner/tagger.hpp"
#include "tessera/pos/tagger.hpp"
#include "tessera/tokenize/tokenizer.hpp"

namespace tessera::testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("tessera_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline const std::filesystem::path& toy_model_dir() {
  static const std::filesystem::path dir = [] {
    const auto out = scratch_dir("toy_models");
    const auto corpus = toy_corpus();
    tokenize::Config tc;
    tc.embed_dim = 8;
    tc.hidden = 8;
    tc.epochs = 2;
    tokenize::Tokenizer::train(corpus, tc).save((out / "tokenize.model").string());
    mwt::TrainConfig mc;
    mc.epochs = 0;
    mwt::Expander::train(corpus, mc).save((out / "mwt.model").string());
    pos::Config pc;
    pc.word_dim = 8;
    pc.char_dim = 4;
    pc.char_hidden = 4;
    pc.hidden = 8;
    pc.upos_dim = 4;
    pc.epochs = 2;
    pos::Tagger::train(corpus, pc).save((out / "pos.model").string());
    lemma::Config lc;
    lc.model.embed_dim = 4;
    lc.model.hidden = 8;
    lc.epochs = 1;
    lemma::Lemmatizer::train(corpus, lc).save((out / "lemma.model").string());
    depparse::Config dc;
    dc.word_dim = 8;
    dc.upos_dim = 4;
    dc.feat_dim = 4;
    dc.hidden = 8;
    dc.layers = 1;
    dc.arc_dim = 8;
    dc.label_dim = 4;
    dc.epochs = 2;
    depparse::Parser::train(corpus, dc).save((out / "depparse.model").string());
    ner::Config nc;
    nc.word_dim = 8;
    nc.hidden = 8;
    nc.epochs = 2;
    nc.charlm.embed_dim = 4;
    nc.charlm.hidden = 8;
    nc.charlm.epochs = 1;
    ner::NerTagger::train(ner::tagged_sentences(corpus), nc).save((out / "ner.model").string());
    return out;
  }();
  return dir;
}

}  // namespace tessera::testing
