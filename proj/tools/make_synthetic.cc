// Writes the bundled data: the synthetic corpus (train/validation/test splits
// and its base schema) and the MultiWOZ base schema.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dsdst/corpus.h"
#include "dsdst/synthetic.h"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_synthetic <data-dir>\n";
    return 2;
  }
  const std::filesystem::path root = argv[1];
  const std::filesystem::path dir = root / "synthetic";
  std::filesystem::create_directories(dir);
  struct Split {
    const char* name;
    int count;
    std::uint64_t seed;
    const char* prefix;
  };
  for (const Split& s : {Split{"train", 30, 7, "TRN"}, Split{"validation", 10, 11, "VAL"},
                         Split{"test", 10, 13, "TST"}}) {
    std::ofstream out(dir / (std::string(s.name) + ".json"));
    out << dsdst::corpus::synthetic_dialogues(s.count, s.seed, s.prefix).dump(2) << '\n';
  }
  dsdst::corpus::save_schema(dsdst::corpus::synthetic_schema(), dir / "schema.json");
  dsdst::corpus::save_schema(dsdst::corpus::multiwoz_schema(), root / "multiwoz21_schema.json");
  return 0;
}
