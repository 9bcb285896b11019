#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "care/classify.hpp"
#include "care/errors.hpp"
#include "care/generate.hpp"

// On-disk model bundle:
//   manifest.json       {version, backend, vocab_size, strategies[], generator{...}}
//   vocab.tsv           term \t index
//   weights/<s>.f32     little-endian float32 x (vocab_size + 1), bias last
//   index.jsonl         one generator entry per line
//   idf.tsv             term \t idf
//   safety/             optional lexicon directory

namespace care {

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + p.string());
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void put_f32_le(std::string& out, float f) {
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((bits >> (8 * k)) & 0xFFu));
}

inline float get_f32_le(const std::string& in, std::size_t at) {
  std::uint32_t bits = 0;
  for (int k = 0; k < 4; ++k) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + k])) << (8 * k);
  }
  return std::bit_cast<float>(bits);
}

inline std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

inline std::vector<std::pair<std::string, std::string>> read_tsv(const std::filesystem::path& p) {
  std::istringstream in(read_file(p));
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(lineno, p.filename().string() + ": missing tab");
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return rows;
}

}  // namespace detail

// ---- Serialization to strings (also used for byte-stability checks) ---------

inline std::string vocab_tsv(const Vocabulary& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += v.terms()[i];
    out += '\t';
    out += std::to_string(i);
    out += '\n';
  }
  return out;
}

inline std::string weights_bytes(const LinearScorer& s) {
  std::string out;
  out.reserve((s.weights.size() + 1) * 4);
  for (float w : s.weights) detail::put_f32_le(out, w);
  detail::put_f32_le(out, s.bias);
  return out;
}

inline LinearScorer parse_weights(const std::string& bytes, std::size_t vocab_size) {
  if (bytes.size() != (vocab_size + 1) * 4) {
    throw ParseError(0, "weight file size " + std::to_string(bytes.size()) +
                            " does not match vocab_size " + std::to_string(vocab_size));
  }
  LinearScorer s;
  s.weights.resize(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) s.weights[i] = detail::get_f32_le(bytes, i * 4);
  s.bias = detail::get_f32_le(bytes, vocab_size * 4);
  return s;
}

inline std::string index_jsonl(const GeneratorIndex& index) {
  std::string out;
  for (const IndexEntry& e : index.entries()) {
    Json features = Json::object();
    for (const auto& [i, w] : e.features.entries) features[index.terms()[i]] = w;
    out += Json{{"strategy", to_string(e.strategy)}, {"response", e.response}, {"features", features}}
               .dump();
    out += '\n';
  }
  return out;
}

inline std::string idf_tsv(const GeneratorIndex& index) {
  std::string out;
  for (std::size_t i = 0; i < index.terms().size(); ++i) {
    out += index.terms()[i];
    out += '\t';
    out += detail::format_double(index.idf()[i]);
    out += '\n';
  }
  return out;
}

// ---- Bundle -----------------------------------------------------------------

struct ModelBundle {
  StrategyPredictor predictor;
  GeneratorIndex index;
  std::optional<std::filesystem::path> safety_dir;

  static constexpr const char* kBackend = "logreg";
};

inline Json bundle_manifest(const StrategyPredictor& p, const GeneratorIndex& idx) {
  Json strategies = Json::array();
  for (Strategy s : kAllStrategies) strategies.push_back(to_string(s));
  return Json{{"version", p.version()},
              {"backend", ModelBundle::kBackend},
              {"vocab_size", p.vocabulary().size()},
              {"strategies", strategies},
              {"generator",
               {{"version", idx.version()}, {"entries", idx.entries().size()},
                {"terms", idx.terms().size()}}}};
}

/// Writes every bundle file under `dir` (created if needed). When
/// `lexicon_dir` is given, its three lexicon files are copied to safety/.
inline void save_bundle(const std::filesystem::path& dir, const StrategyPredictor& predictor,
                        const GeneratorIndex& index,
                        const std::optional<std::filesystem::path>& lexicon_dir = std::nullopt) {
  namespace fs = std::filesystem;
  if (!predictor.trained()) throw ModelNotTrained();
  std::error_code ec;
  fs::create_directories(dir / "weights", ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  detail::write_file(dir / "manifest.json", bundle_manifest(predictor, index).dump(2) + "\n");
  detail::write_file(dir / "vocab.tsv", vocab_tsv(predictor.vocabulary()));
  for (Strategy s : kAllStrategies) {
    detail::write_file(dir / "weights" / (std::string(to_string(s)) + ".f32"),
                       weights_bytes(predictor.scorer(s)));
  }
  detail::write_file(dir / "index.jsonl", index_jsonl(index));
  detail::write_file(dir / "idf.tsv", idf_tsv(index));

  if (lexicon_dir) {
    fs::create_directories(dir / "safety", ec);
    for (const char* name : {"abusive.txt", "profanity.txt", "personal_info.txt"}) {
      detail::write_file(dir / "safety" / name, detail::read_file(*lexicon_dir / name));
    }
  }
}

inline ModelBundle load_bundle(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("model bundle not found: " + dir.string());
  const Json manifest = [&] {
    try {
      return Json::parse(detail::read_file(dir / "manifest.json"));
    } catch (const Json::exception& e) {
      throw ParseError(0, std::string("manifest.json: ") + e.what());
    }
  }();
  if (manifest.value("backend", "") != ModelBundle::kBackend) {
    throw ParseError(0, "unsupported backend in manifest.json");
  }
  const std::size_t vocab_size = manifest.at("vocab_size").get<std::size_t>();

  std::vector<std::string> terms;
  for (auto& [term, idx] : detail::read_tsv(dir / "vocab.tsv")) {
    if (idx != std::to_string(terms.size())) throw ParseError(terms.size() + 1, "vocab.tsv index out of order");
    terms.push_back(term);
  }
  if (terms.size() != vocab_size) throw ParseError(0, "vocab.tsv size disagrees with manifest");

  PerStrategy<LinearScorer> scorers;
  for (Strategy s : kAllStrategies) {
    scorers[s] = parse_weights(
        detail::read_file(dir / "weights" / (std::string(to_string(s)) + ".f32")), vocab_size);
  }
  StrategyPredictor predictor(Vocabulary(std::move(terms)), std::move(scorers),
                              manifest.at("version").get<std::string>());

  std::vector<std::string> idx_terms;
  std::vector<double> idf;
  std::unordered_map<std::string, std::uint32_t> term_id;
  for (auto& [term, value] : detail::read_tsv(dir / "idf.tsv")) {
    term_id.emplace(term, static_cast<std::uint32_t>(idx_terms.size()));
    idx_terms.push_back(term);
    idf.push_back(std::stod(value));
  }
  std::vector<IndexEntry> entries;
  {
    std::istringstream in(detail::read_file(dir / "index.jsonl"));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        const Json j = Json::parse(line);
        IndexEntry e;
        auto st = parse_strategy(j.at("strategy").get<std::string>());
        if (!st) throw std::invalid_argument("unknown strategy");
        e.strategy = *st;
        e.response = j.at("response").get<std::string>();
        for (auto& [term, w] : j.at("features").items()) {
          e.features.entries.emplace_back(term_id.at(term), w.get<double>());
        }
        std::sort(e.features.entries.begin(), e.features.entries.end());
        entries.push_back(std::move(e));
      } catch (const std::exception& ex) {
        throw ParseError(lineno, std::string("index.jsonl: ") + ex.what());
      }
    }
  }
  const std::string gen_version =
      manifest.contains("generator") ? manifest["generator"].value("version", "retrieval-1")
                                     : "retrieval-1";
  ModelBundle b{std::move(predictor),
                GeneratorIndex(std::move(idx_terms), std::move(idf), std::move(entries), gen_version),
                std::nullopt};
  if (fs::is_directory(dir / "safety")) b.safety_dir = dir / "safety";
  return b;
}

}  // namespace care
