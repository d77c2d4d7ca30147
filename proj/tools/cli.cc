// tools/cli.cc

#include "cli.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "ctclm/arpa.h"
#include "ctclm/corpus_pipeline.h"
#include "ctclm/ctc_decoder.h"
#include "ctclm/error.h"
#include "ctclm/eval_metrics.h"
#include "ctclm/file_util.h"
#include "ctclm/ngram_lm.h"
#include "ctclm/text_normalizer.h"
#include "ctclm/tuner.h"

namespace ctclm {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct Globals {
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

std::string Num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Empty path or "-" means stdout.
void Emit(const std::string &path, const std::string &content,
          std::ostream &out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    WriteFileAtomic(path, content);
  }
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The exception from the
// lowest failing index is rethrown so failures are reported deterministically.
template <typename Fn>
void ParallelFor(std::size_t n, int jobs, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) guarded(i);
      });
    }
    for (auto &t : pool) t.join();
  }
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// --- keyed text files -------------------------------------------------------

struct KeyedLine {
  std::string id;
  std::string text;
};

bool AllTabbed(const std::vector<std::string> &lines) {
  if (lines.empty()) return false;
  return std::all_of(lines.begin(), lines.end(), [](const std::string &l) {
    return l.find('\t') != std::string::npos;
  });
}

std::vector<KeyedLine> ParseTsv(const std::vector<std::string> &lines,
                                const std::string &path) {
  std::vector<KeyedLine> out;
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t tab = lines[i].find('\t');
    if (tab == std::string::npos) {
      throw ParseError(i + 1, path + ": expected id<TAB>text");
    }
    KeyedLine kl{lines[i].substr(0, tab), lines[i].substr(tab + 1)};
    if (kl.id.empty()) throw ParseError(i + 1, path + ": empty id");
    if (!seen.emplace(kl.id, i).second) {
      throw ParseError(i + 1, path + ": duplicate id '" + kl.id + "'");
    }
    out.push_back(std::move(kl));
  }
  return out;
}

enum class TextFormat { kAuto, kLines, kTsv };

std::vector<EvalPair> PairUp(const std::string &refs_path,
                             const std::string &hyps_path, TextFormat fmt) {
  const auto refs = ReadLines(refs_path);
  const auto hyps = ReadLines(hyps_path);
  if (fmt == TextFormat::kAuto) {
    fmt = AllTabbed(refs) && AllTabbed(hyps) ? TextFormat::kTsv
                                              : TextFormat::kLines;
  }
  std::vector<EvalPair> pairs;
  if (fmt == TextFormat::kLines) {
    if (refs.size() != hyps.size()) {
      throw ConfigError("line count mismatch: " + refs_path + " has " +
                        std::to_string(refs.size()) + ", " + hyps_path +
                        " has " + std::to_string(hyps.size()));
    }
    for (std::size_t i = 0; i < refs.size(); ++i) {
      pairs.push_back({refs[i], hyps[i]});
    }
    return pairs;
  }
  const auto r = ParseTsv(refs, refs_path);
  const auto h = ParseTsv(hyps, hyps_path);
  std::map<std::string, const std::string *> by_id;
  for (const auto &kl : h) by_id[kl.id] = &kl.text;
  if (r.size() != h.size()) {
    throw ConfigError("id count mismatch: " + std::to_string(r.size()) +
                      " references vs " + std::to_string(h.size()) +
                      " hypotheses");
  }
  for (const auto &kl : r) {
    auto it = by_id.find(kl.id);
    if (it == by_id.end()) {
      throw ConfigError("no hypothesis for id '" + kl.id + "'");
    }
    pairs.push_back({kl.text, *it->second});
  }
  return pairs;
}

// --- logits -----------------------------------------------------------------

struct LogitFile {
  std::string id;
  std::string path;
};

std::vector<LogitFile> ListLogits(const std::string &path) {
  std::vector<LogitFile> files;
  if (fs::is_directory(path)) {
    for (const auto &e : fs::directory_iterator(path)) {
      if (!e.is_regular_file()) continue;
      const std::string name = e.path().filename().string();
      if (name.empty() || name[0] == '.') continue;
      files.push_back({e.path().stem().string(), e.path().string()});
    }
    std::sort(files.begin(), files.end(),
              [](const LogitFile &a, const LogitFile &b) {
                return a.path < b.path;
              });
  } else {
    files.push_back({fs::path(path).stem().string(), path});
  }
  for (std::size_t i = 1; i < files.size(); ++i) {
    if (files[i].id == files[i - 1].id) {
      throw ConfigError("two logit files share the id '" + files[i].id + "'");
    }
  }
  return files;
}

std::vector<LogitMatrix> LoadAllLogits(
    const std::vector<LogitFile> &files,
    const std::shared_ptr<const TokenInventory> &inv, int jobs) {
  std::vector<std::optional<LogitMatrix>> slots(files.size());
  ParallelFor(files.size(), jobs,
              [&](std::size_t i) { slots[i] = LoadLogits(files[i].path, inv); });
  std::vector<LogitMatrix> out;
  out.reserve(files.size());
  for (auto &s : slots) out.push_back(std::move(*s));
  return out;
}

// Keeps the files named by the first column of `ids_path`, in that order.
std::vector<LogitFile> SelectIds(const std::vector<LogitFile> &files,
                                 const std::string &ids_path) {
  std::map<std::string, const LogitFile *> by_id;
  for (const auto &f : files) by_id[f.id] = &f;
  std::vector<LogitFile> out;
  const auto lines = ReadLines(ids_path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string id = lines[i].substr(0, lines[i].find('\t'));
    if (id.empty()) continue;
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw ParseError(i + 1, ids_path + ": no logits for id '" + id + "'");
    }
    out.push_back(*it->second);
  }
  return out;
}

struct DecodeFlags {
  int beam_width = DecodeConfig{}.beam_width;
  double beta = DecodeConfig{}.beta;
  double token_min_logprob = DecodeConfig{}.token_min_logprob;
  int top_k = DecodeConfig{}.top_k_tokens;
  std::string partial_final = "on";

  void Add(CLI::App *sub) {
    sub->add_option("--beam-width", beam_width, "Beam width")
        ->check(CLI::PositiveNumber);
    sub->add_option("--top-k", top_k, "Non-blank candidates per frame")
        ->check(CLI::PositiveNumber);
    sub->add_option("--token-min-logprob", token_min_logprob,
                    "Skip non-blank tokens below this natural-log prob");
    sub->add_option("--score-partial-final", partial_final,
                    "Score a trailing partial word at the end")
        ->check(CLI::IsMember({"on", "off"}));
  }

  DecodeConfig Config() const {
    DecodeConfig cfg;
    cfg.beam_width = beam_width;
    cfg.beta = beta;
    cfg.token_min_logprob = token_min_logprob;
    cfg.top_k_tokens = top_k;
    cfg.score_partial_final = partial_final == "on";
    return cfg;
  }
};

// --- subcommands --------------------------------------------------------------

struct NormalizeCmd {
  std::string in, out, rules;
  bool tsv = false;

  int Run(const Globals &, std::ostream &out_s, std::ostream &) const {
    const NormalizationRules r = rules.empty() ? DefaultRules() : LoadRules(rules);
    const auto lines = ReadLines(in);
    std::string text;
    if (tsv) {
      for (const auto &kl : ParseTsv(lines, in)) {
        text += kl.id + '\t' + NormalizeTranscript(kl.text, r) + '\n';
      }
    } else {
      for (const auto &line : lines) {
        text += NormalizeTranscript(line, r);
        text += '\n';
      }
    }
    Emit(out, text, out_s);
    return 0;
  }
};

struct InventoryCmd {
  std::string corpus, out;
  std::vector<std::string> extra;
  bool no_unk = false;

  int Run(const Globals &, std::ostream &out_s, std::ostream &) const {
    const auto inv = BuildTokenInventory(ReadLines(corpus), extra, !no_unk);
    Emit(out, inv.ToJson(), out_s);
    return 0;
  }
};

struct FilterCmd {
  std::string metadata, out, transcripts_out;
  double min_duration = 1.0;
  double max_duration = 20.0;

  int Run(const Globals &, std::ostream &out_s, std::ostream &err) const {
    std::istringstream in(ReadFile(metadata));
    std::vector<SampleMetadata> rows;
    try {
      rows = ReadMetadataTsv(in);
    } catch (const ParseError &e) {
      throw ParseError(e.line(), metadata + ": " + e.what());
    }
    const auto kept = FilterSamples(rows, min_duration, max_duration);
    std::ostringstream ss;
    WriteMetadataTsv(ss, kept);
    Emit(out, ss.str(), out_s);
    if (!transcripts_out.empty()) {
      std::string t;
      for (const auto &m : kept) t += m.id + '\t' + m.transcript + '\n';
      WriteFileAtomic(transcripts_out, t);
    }
    err << "kept " << kept.size() << " of " << rows.size() << " samples\n";
    return 0;
  }
};

struct TrainLmCmd {
  std::string corpus, out, rules;
  int order = 3;
  bool no_normalize = false;
  bool unk_from_singletons = false;
  double unk_floor = -7.0;

  int Run(const Globals &, std::ostream &out_s, std::ostream &err) const {
    if (no_normalize && !rules.empty()) {
      throw ConfigError("--rules and --no-normalize are mutually exclusive");
    }
    std::vector<std::string> lines = ReadLines(corpus);
    if (!no_normalize) {
      const NormalizationRules r =
          rules.empty() ? DefaultRules() : LoadRules(rules);
      for (auto &l : lines) l = NormalizeTranscript(l, r);
    }
    UnkPolicy unk;
    unk.from_singletons = unk_from_singletons;
    unk.floor_log10 = unk_floor;
    const NGramModel model = TrainModel(lines, order, unk);
    if (model.discount_fallback()) {
      err << "warning: degenerate counts-of-counts; fallback discount "
          << kFallbackDiscount << " used for at least one order\n";
    }
    std::ostringstream ss;
    WriteArpa(model, ss);
    Emit(out, ss.str(), out_s);
    return 0;
  }
};

struct DecodeCmd {
  std::string logits, inventory, lm, out, ids;
  double alpha = DecodeConfig{}.alpha;
  bool greedy = false;
  DecodeFlags flags;
  const CLI::App *app = nullptr;

  int Run(const Globals &g, std::ostream &out_s, std::ostream &) const {
    auto inv = std::make_shared<const TokenInventory>(
        TokenInventory::Load(inventory));
    auto files = ListLogits(logits);
    if (!ids.empty()) files = SelectIds(files, ids);
    if (files.empty()) throw ConfigError("no logit files in '" + logits + "'");

    DecodeConfig cfg = flags.Config();
    // Without a model the default is plain acoustic search.
    cfg.alpha = app->count("--alpha") > 0 ? alpha : (lm.empty() ? 0.0 : alpha);
    if (greedy && !lm.empty()) {
      throw ConfigError("--greedy does not use a language model");
    }
    if (!greedy) cfg.Validate();
    if (!greedy && lm.empty() && cfg.alpha > 0.0) {
      throw ConfigError("--alpha > 0 needs --lm");
    }
    std::optional<NGramModel> model;
    if (!lm.empty()) model.emplace(LoadArpa(lm));

    const auto mats = LoadAllLogits(files, inv, g.jobs);
    std::vector<std::string> texts(mats.size());
    ParallelFor(mats.size(), g.jobs, [&](std::size_t i) {
      texts[i] = greedy ? GreedyDecode(mats[i]).text
                        : BeamDecode(mats[i], cfg,
                                     model ? &*model : nullptr)
                              .text;
    });
    std::string text;
    for (std::size_t i = 0; i < files.size(); ++i) {
      text += files[i].id + '\t' + texts[i] + '\n';
    }
    Emit(out, text, out_s);
    return 0;
  }
};

TextFormat ParseFormat(const std::string &s) {
  return s == "lines" ? TextFormat::kLines
         : s == "tsv" ? TextFormat::kTsv
                      : TextFormat::kAuto;
}

struct EvaluateCmd {
  std::string refs, hyps, report, rules, format = "auto", lev_unit = "char";
  bool normalize = false;

  int Run(const Globals &g, std::ostream &out_s, std::ostream &) const {
    auto pairs = PairUp(refs, hyps, ParseFormat(format));
    if (normalize) {
      const NormalizationRules r =
          rules.empty() ? DefaultRules() : LoadRules(rules);
      for (auto &p : pairs) {
        p.reference = NormalizeTranscript(p.reference, r);
        p.hypothesis = NormalizeTranscript(p.hypothesis, r);
      }
    } else if (!rules.empty()) {
      throw ConfigError("--rules needs --normalize");
    }
    EvalReport rep = CorpusReport(pairs, Granularity::kBoth, g.jobs);
    if (lev_unit == "word") {
      rep.mean_levenshtein = static_cast<double>(rep.total_word_edits) /
                             static_cast<double>(rep.num_pairs);
    }
    std::ostringstream kv;
    kv << "wer=" << Num(*rep.wer) << '\n'
       << "cer=" << Num(*rep.cer) << '\n'
       << "mean_levenshtein=" << Num(rep.mean_levenshtein) << '\n'
       << "num_pairs=" << rep.num_pairs << '\n'
       << "ref_words=" << rep.total_ref_words << '\n'
       << "word_edits=" << rep.total_word_edits << '\n'
       << "ref_chars=" << rep.total_ref_chars << '\n'
       << "char_edits=" << rep.total_char_edits << '\n';
    if (g.seed) kv << "seed=" << *g.seed << '\n';
    out_s << kv.str();

    if (!report.empty()) {
      Json j;
      j["wer"] = *rep.wer;
      j["cer"] = *rep.cer;
      j["mean_levenshtein"] = rep.mean_levenshtein;
      j["levenshtein_unit"] = lev_unit;
      j["pooling"] = "corpus totals";
      j["normalized"] = normalize;
      j["num_pairs"] = rep.num_pairs;
      j["totals"] = {{"ref_words", rep.total_ref_words},
                     {"word_edits", rep.total_word_edits},
                     {"ref_chars", rep.total_ref_chars},
                     {"char_edits", rep.total_char_edits}};
      Json rows = Json::array();
      for (std::size_t i = 0; i < rep.per_sentence.size(); ++i) {
        const auto &s = rep.per_sentence[i];
        rows.push_back({{"index", i},
                        {"ref_words", s.ref_words},
                        {"word_edits", s.word_edits},
                        {"ref_chars", s.ref_chars},
                        {"char_edits", s.char_edits}});
      }
      j["per_sentence"] = std::move(rows);
      j["seed"] = g.seed ? Json(*g.seed) : Json(nullptr);
      WriteFileAtomic(report, j.dump(2) + "\n");
    }
    return 0;
  }
};

struct TuneCmd {
  std::string logits_dir, refs, lm, inventory, eval_refs, out, format = "auto";
  std::vector<double> alphas, betas;
  DecodeFlags flags;

  int Run(const Globals &g, std::ostream &out_s, std::ostream &err) const {
    if (!eval_refs.empty()) {
      std::error_code ec;
      if (fs::equivalent(refs, eval_refs, ec)) {
        err << "warning: tuning and evaluation use the same reference set ("
            << refs << "); the reported score is optimistic\n";
      }
    }
    const GridSpec defaults = GridSpec::Default();
    const GridSpec grid(alphas.empty() ? defaults.alphas() : alphas,
                        betas.empty() ? defaults.betas() : betas);

    auto inv = std::make_shared<const TokenInventory>(
        TokenInventory::Load(inventory));
    const auto files = ListLogits(logits_dir);
    if (files.empty()) {
      throw ConfigError("no logit files in '" + logits_dir + "'");
    }
    const auto ref_lines = ReadLines(refs);
    TextFormat fmt = ParseFormat(format);
    if (fmt == TextFormat::kAuto) {
      fmt = AllTabbed(ref_lines) ? TextFormat::kTsv : TextFormat::kLines;
    }
    std::vector<std::string> ref_texts;
    if (fmt == TextFormat::kTsv) {
      std::map<std::string, std::string> by_id;
      for (auto &kl : ParseTsv(ref_lines, refs)) by_id[kl.id] = kl.text;
      for (const auto &f : files) {
        auto it = by_id.find(f.id);
        if (it == by_id.end()) {
          throw ConfigError("no reference for logits id '" + f.id + "'");
        }
        ref_texts.push_back(it->second);
      }
    } else {
      if (ref_lines.size() != files.size()) {
        throw ConfigError(refs + " has " + std::to_string(ref_lines.size()) +
                          " lines but there are " +
                          std::to_string(files.size()) + " logit files");
      }
      ref_texts = ref_lines;
    }

    const NGramModel model = LoadArpa(lm);
    auto mats = LoadAllLogits(files, inv, g.jobs);
    std::vector<DevUtterance> dev;
    for (std::size_t i = 0; i < mats.size(); ++i) {
      dev.push_back({std::move(mats[i]), ref_texts[i]});
    }
    DecodeConfig base = flags.Config();
    base.alpha = grid.alphas().front();
    base.Validate();

    const TuneResult res = GridSearch(dev, model, grid, base, g.jobs);
    std::string table = "alpha\tbeta\twer\tcer\n";
    for (const auto &[key, cell] : res.table) {
      table += Num(key.first) + '\t' + Num(key.second) + '\t';
      if (cell.error) {
        table += "error\terror\n";
        err << "cell alpha=" << Num(key.first) << " beta=" << Num(key.second)
            << " failed: " << *cell.error << '\n';
      } else {
        table += Num(cell.wer) + '\t' + Num(cell.cer) + '\n';
      }
    }
    if (!out.empty()) WriteFileAtomic(out, table);
    std::ostringstream ss;
    ss << table << "best_alpha=" << Num(res.best_alpha) << '\n'
       << "best_beta=" << Num(res.best_beta) << '\n'
       << "best_wer=" << Num(res.best_wer) << '\n';
    if (g.seed) ss << "seed=" << *g.seed << '\n';
    out_s << ss.str();
    return 0;
  }
};

struct LmStatsCmd {
  std::string lm;

  int Run(const Globals &, std::ostream &out_s, std::ostream &) const {
    const std::string text = ReadFile(lm);
    ArpaStats stats;
    try {
      std::istringstream full(text);
      ReadArpa(full);
      std::istringstream again(text);
      stats = ReadArpaStats(again);
    } catch (const InputError &e) {
      throw FormatError(lm + ": " + e.what());
    }
    std::ostringstream ss;
    ss << "order=" << stats.order << '\n';
    std::size_t total = 0;
    for (int k = 1; k <= stats.order; ++k) {
      ss << "ngram" << k << '=' << stats.actual[k - 1] << '\n';
      total += stats.actual[k - 1];
    }
    ss << "total_ngrams=" << total << '\n'
       << "file_bytes=" << text.size() << '\n';
    out_s << ss.str();
    return 0;
  }
};

struct PerplexityCmd {
  std::string lm, text;

  int Run(const Globals &, std::ostream &out_s, std::ostream &) const {
    const NGramModel model = LoadArpa(lm);
    out_s << "perplexity=" << Num(Perplexity(model, ReadLines(text))) << '\n';
    return 0;
  }
};

struct PrepAudioCmd {
  std::string in, out, encoding = "float32";
  int rate = kDefaultTargetRateHz;
  bool no_zscore = false;

  int Run(const Globals &, std::ostream &, std::ostream &) const {
    AudioBuffer buf = Resample(LoadWav(in), rate);
    if (!no_zscore) buf = ZscoreNormalize(buf);
    const auto bytes = EncodeWav(
        buf, encoding == "pcm16" ? WavEncoding::kPcm16 : WavEncoding::kFloat32);
    WriteFileAtomic(out, std::string(bytes.begin(), bytes.end()));
    return 0;
  }
};

}  // namespace

int RunCli(const std::vector<std::string> &args, std::ostream &out,
           std::ostream &err) {
  CLI::App app{"CTC decoding, n-gram language modeling and ASR evaluation"};
  app.name("ctclm");
  app.set_version_flag("--version", std::string("ctclm ") + kVersion);
  app.require_subcommand(1);

  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Recorded in reports; output is deterministic");
  app.add_option("--jobs", g.jobs, "Worker threads")
      ->check(CLI::PositiveNumber);

  NormalizeCmd norm;
  auto *s_norm = app.add_subcommand("normalize", "Normalize transcripts");
  s_norm->add_option("--in", norm.in, "Input text, one transcript per line")
      ->required()
      ->check(CLI::ExistingFile);
  s_norm->add_option("--out", norm.out, "Output path (default stdout)");
  s_norm->add_option("--rules", norm.rules, "Rules JSON (default built-in)")
      ->check(CLI::ExistingFile);
  s_norm->add_flag("--tsv", norm.tsv,
                   "Lines are id<TAB>text; only the text is normalized");

  InventoryCmd invc;
  auto *s_inv = app.add_subcommand("inventory", "Build a token inventory");
  s_inv->add_option("--corpus", invc.corpus, "Normalized transcripts")
      ->required()
      ->check(CLI::ExistingFile);
  s_inv->add_option("--out", invc.out, "Output path (default stdout)");
  s_inv->add_option("--extra", invc.extra, "Additional tokens");
  s_inv->add_flag("--no-unk", invc.no_unk, "Omit the <unk> token");

  FilterCmd filt;
  auto *s_filt = app.add_subcommand("filter", "Filter metadata rows");
  s_filt->add_option("--metadata", filt.metadata, "Metadata TSV")
      ->required()
      ->check(CLI::ExistingFile);
  s_filt->add_option("--out", filt.out, "Output path (default stdout)");
  s_filt->add_option("--transcripts-out", filt.transcripts_out,
                     "Also write id<TAB>transcript of kept rows");
  s_filt->add_option("--min-duration", filt.min_duration, "Seconds");
  s_filt->add_option("--max-duration", filt.max_duration, "Seconds");

  TrainLmCmd train;
  auto *s_train = app.add_subcommand("train-lm", "Train a KN n-gram model");
  s_train->add_option("--corpus", train.corpus, "One sentence per line")
      ->required()
      ->check(CLI::ExistingFile);
  s_train->add_option("--order", train.order, "N-gram order")
      ->check(CLI::Range(1, 64));
  s_train->add_option("--out", train.out, "ARPA output (default stdout)");
  s_train->add_option("--rules", train.rules, "Normalization rules JSON")
      ->check(CLI::ExistingFile);
  s_train->add_flag("--no-normalize", train.no_normalize,
                    "Train on the corpus as-is");
  s_train->add_flag("--unk-from-singletons", train.unk_from_singletons,
                    "Give <unk> the mass of singleton words");
  s_train->add_option("--unk-floor", train.unk_floor,
                      "log10 P(<unk>) when not using singletons")
      ->check(CLI::Range(-98.0, -0.001));

  DecodeCmd dec;
  auto *s_dec = app.add_subcommand("decode", "Decode logits");
  dec.app = s_dec;
  s_dec->add_option("--logits", dec.logits, "Logit file or directory")
      ->required()
      ->check(CLI::ExistingPath);
  s_dec->add_option("--inventory", dec.inventory, "Token inventory JSON")
      ->required()
      ->check(CLI::ExistingFile);
  s_dec->add_option("--lm", dec.lm, "ARPA language model")
      ->check(CLI::ExistingFile);
  s_dec->add_option("--alpha", dec.alpha, "LM weight");
  s_dec->add_option("--beta", dec.flags.beta, "Word insertion bonus");
  s_dec->add_flag("--greedy", dec.greedy, "Best-path decoding");
  s_dec->add_option("--ids", dec.ids,
                    "Decode only these ids (first column), in this order")
      ->check(CLI::ExistingFile);
  s_dec->add_option("--out", dec.out, "id<TAB>text output (default stdout)");
  dec.flags.Add(s_dec);

  EvaluateCmd ev;
  auto *s_ev = app.add_subcommand("evaluate", "Score hypotheses");
  s_ev->add_option("--refs", ev.refs, "References")
      ->required()
      ->check(CLI::ExistingFile);
  s_ev->add_option("--hyps", ev.hyps, "Hypotheses")
      ->required()
      ->check(CLI::ExistingFile);
  s_ev->add_option("--format", ev.format, "lines, tsv or auto")
      ->check(CLI::IsMember({"auto", "lines", "tsv"}));
  s_ev->add_option("--report", ev.report, "JSON report path");
  s_ev->add_flag("--normalize", ev.normalize,
                 "Normalize both sides before scoring");
  s_ev->add_option("--rules", ev.rules, "Rules JSON for --normalize")
      ->check(CLI::ExistingFile);
  s_ev->add_option("--levenshtein-unit", ev.lev_unit,
                   "Unit of mean_levenshtein: char or word")
      ->check(CLI::IsMember({"char", "word"}));

  TuneCmd tune;
  auto *s_tune = app.add_subcommand("tune", "Grid search alpha and beta");
  s_tune->add_option("--logits-dir", tune.logits_dir, "Dev logits")
      ->required()
      ->check(CLI::ExistingDirectory);
  s_tune->add_option("--refs", tune.refs, "Dev references")
      ->required()
      ->check(CLI::ExistingFile);
  s_tune->add_option("--lm", tune.lm, "ARPA language model")
      ->required()
      ->check(CLI::ExistingFile);
  s_tune->add_option("--inventory", tune.inventory, "Token inventory JSON")
      ->required()
      ->check(CLI::ExistingFile);
  s_tune->add_option("--alphas", tune.alphas, "Comma-separated alphas")
      ->delimiter(',');
  s_tune->add_option("--betas", tune.betas, "Comma-separated betas")
      ->delimiter(',');
  s_tune->add_option("--eval-refs", tune.eval_refs,
                     "Evaluation references; warns if same as --refs");
  s_tune->add_option("--format", tune.format, "lines, tsv or auto")
      ->check(CLI::IsMember({"auto", "lines", "tsv"}));
  s_tune->add_option("--out", tune.out, "Also write the table here");
  tune.flags.Add(s_tune);

  LmStatsCmd stats;
  auto *s_stats = app.add_subcommand("lm-stats", "ARPA size report");
  s_stats->alias("stats");
  s_stats->add_option("--lm", stats.lm, "ARPA file")
      ->required()
      ->check(CLI::ExistingFile);

  PerplexityCmd ppl;
  auto *s_ppl = app.add_subcommand("perplexity", "Perplexity of a text");
  s_ppl->add_option("--lm", ppl.lm, "ARPA file")
      ->required()
      ->check(CLI::ExistingFile);
  s_ppl->add_option("--text", ppl.text, "One sentence per line")
      ->required()
      ->check(CLI::ExistingFile);

  PrepAudioCmd prep;
  auto *s_prep = app.add_subcommand("prep-audio", "Resample and z-score a WAV");
  s_prep->add_option("--in", prep.in, "Input WAV")
      ->required()
      ->check(CLI::ExistingFile);
  s_prep->add_option("--out", prep.out, "Output WAV")->required();
  s_prep->add_option("--rate", prep.rate, "Target sample rate")
      ->check(CLI::PositiveNumber);
  s_prep->add_flag("--no-zscore", prep.no_zscore, "Skip normalization");
  s_prep->add_option("--encoding", prep.encoding, "float32 or pcm16")
      ->check(CLI::IsMember({"float32", "pcm16"}));

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  if (app.count("--seed") > 0) g.seed = seed;

  try {
    if (s_norm->parsed()) return norm.Run(g, out, err);
    if (s_inv->parsed()) return invc.Run(g, out, err);
    if (s_filt->parsed()) return filt.Run(g, out, err);
    if (s_train->parsed()) return train.Run(g, out, err);
    if (s_dec->parsed()) return dec.Run(g, out, err);
    if (s_ev->parsed()) return ev.Run(g, out, err);
    if (s_tune->parsed()) return tune.Run(g, out, err);
    if (s_stats->parsed()) return stats.Run(g, out, err);
    if (s_ppl->parsed()) return ppl.Run(g, out, err);
    if (s_prep->parsed()) return prep.Run(g, out, err);
  } catch (const InputError &e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace ctclm
