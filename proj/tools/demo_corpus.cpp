// Writes a labeled synthetic practice corpus for trying out the toolchain.

#include <iostream>

#include <CLI11.hpp>

#include "care/corpus.hpp"
#include "care/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic labeled corpus (JSONL)"};
  std::string out;
  care::synthetic::Options opt;
  app.add_option("--out", out, "Output corpus file")->required();
  app.add_option("--per-strategy", opt.conversations_per_strategy, "Conversations per strategy")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", opt.seed)->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  try {
    const auto corpus = care::synthetic::make_corpus(opt);
    care::save_corpus(out, corpus);
    std::cerr << "wrote " << corpus.size() << " conversations to " << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
