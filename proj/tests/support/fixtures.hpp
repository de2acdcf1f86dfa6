#pragma once

#include <string>
#include <vector>

#include "tessera/doc/conllu.hpp"

namespace tessera::testing {

inline std::string data_path(const std::string& name) { return std::string(TESSERA_TEST_DATA) + "/" + name; }

inline std::vector<Document> toy_corpus() { return conllu::read_file(data_path("toy_fr.conllu")); }

}  // namespace tessera::testing
