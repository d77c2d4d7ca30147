// src/arpa.cc

#include "ctclm/arpa.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "ctclm/error.h"

namespace ctclm {

namespace {

std::string FormatLog10(double v) {
  if (!(v >= kLog10Zero)) v = kLog10Zero;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.7f", v);
  if (std::string_view(buf) == "-0.0000000") return "0.0000000";
  return buf;
}

void StripCr(std::string &line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool IsBlank(const std::string &line) {
  return line.find_first_not_of(" \t") == std::string::npos;
}

std::vector<std::string> SplitWhitespace(const std::string &s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double ParseNumber(const std::string &s, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (s.empty() || used != s.size()) {
    throw ParseError(line, "expected a number, got '" + s + "'");
  }
  return v;
}

// Parses "\k-grams:" and returns k, or 0.
int SectionOrder(const std::string &line) {
  if (line.size() < 9 || line.front() != '\\') return 0;
  const std::string suffix = "-grams:";
  if (line.compare(line.size() - suffix.size(), suffix.size(), suffix) != 0) {
    return 0;
  }
  const std::string num = line.substr(1, line.size() - 1 - suffix.size());
  if (num.empty() ||
      !std::all_of(num.begin(), num.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return 0;
  }
  return std::stoi(num);
}

struct RawEntry {
  std::vector<std::string> words;
  double log10_prob;
  bool has_backoff;
  double log10_backoff;
};

// Walks an ARPA stream and hands each entry to `sink`. Validates structure
// and header/body agreement.
std::vector<std::size_t> ParseArpa(
    std::istream &in,
    const std::function<void(int, const RawEntry &, std::size_t)> &sink) {
  std::string line;
  std::size_t lineno = 0;

  bool found_data = false;
  while (std::getline(in, line)) {
    ++lineno;
    StripCr(line);
    if (line == "\\data\\") {
      found_data = true;
      break;
    }
  }
  if (!found_data) throw ParseError(lineno, "missing \\data\\ header");

  std::vector<std::size_t> declared;
  while (std::getline(in, line)) {
    ++lineno;
    StripCr(line);
    if (IsBlank(line)) {
      if (declared.empty()) continue;
      break;
    }
    if (line.rfind("ngram ", 0) != 0) {
      throw ParseError(lineno, "expected 'ngram k=count', got '" + line + "'");
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(lineno, "expected 'ngram k=count', got '" + line + "'");
    }
    const double k = ParseNumber(line.substr(6, eq - 6), lineno);
    const double n = ParseNumber(line.substr(eq + 1), lineno);
    if (k != static_cast<double>(declared.size() + 1) || n < 0 ||
        n != std::floor(n)) {
      throw ParseError(lineno, "bad ngram count line '" + line + "'");
    }
    declared.push_back(static_cast<std::size_t>(n));
  }
  if (declared.empty()) throw ParseError(lineno, "no ngram count lines");
  const int order = static_cast<int>(declared.size());

  std::vector<std::size_t> actual(order, 0);
  int current = 0;
  std::string current_name;
  bool ended = false;
  auto close_section = [&](std::size_t at) {
    if (current > 0 && actual[current - 1] != declared[current - 1]) {
      throw ParseError(at, "section " + current_name + " declares " +
                               std::to_string(declared[current - 1]) +
                               " entries but contains " +
                               std::to_string(actual[current - 1]));
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    StripCr(line);
    if (IsBlank(line)) continue;
    if (line == "\\end\\") {
      close_section(lineno);
      ended = true;
      break;
    }
    if (line.front() == '\\') {
      const int k = SectionOrder(line);
      if (k != current + 1 || k > order) {
        throw ParseError(lineno, "unexpected section header '" + line + "'");
      }
      close_section(lineno);
      current = k;
      current_name = line;
      continue;
    }
    if (current == 0) {
      throw ParseError(lineno, "entry outside of an n-gram section");
    }

    RawEntry e;
    std::vector<std::string> fields;
    {
      std::size_t start = 0;
      while (true) {
        const auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string::npos
                                                ? std::string::npos
                                                : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
      }
    }
    if (fields.size() == 2 || fields.size() == 3) {
      e.log10_prob = ParseNumber(fields[0], lineno);
      e.words = SplitWhitespace(fields[1]);
      e.has_backoff = fields.size() == 3;
      e.log10_backoff = e.has_backoff ? ParseNumber(fields[2], lineno) : 0.0;
    } else {
      // Space separated variant.
      const auto toks = SplitWhitespace(line);
      if (toks.size() != static_cast<std::size_t>(current) + 1 &&
          toks.size() != static_cast<std::size_t>(current) + 2) {
        throw ParseError(lineno, "wrong number of fields for " + current_name);
      }
      e.log10_prob = ParseNumber(toks[0], lineno);
      e.words.assign(toks.begin() + 1, toks.begin() + 1 + current);
      e.has_backoff = toks.size() == static_cast<std::size_t>(current) + 2;
      e.log10_backoff = e.has_backoff ? ParseNumber(toks.back(), lineno) : 0.0;
    }
    if (e.words.size() != static_cast<std::size_t>(current)) {
      throw ParseError(lineno, "expected " + std::to_string(current) +
                                   " words in " + current_name);
    }
    if (e.has_backoff && current == order) {
      throw ParseError(lineno, "highest-order entries cannot carry a backoff");
    }
    ++actual[current - 1];
    sink(current, e, lineno);
  }
  if (!ended) throw ParseError(lineno, "missing \\end\\ terminator");
  if (current != order) {
    throw ParseError(lineno, "expected " + std::to_string(order) +
                                 " n-gram sections, found " +
                                 std::to_string(current));
  }
  return declared;
}

}  // namespace

void WriteArpa(const NGramModel &model, std::ostream &out) {
  const Vocabulary &vocab = model.vocab();
  out << "\\data\\\n";
  for (int k = 1; k <= model.order(); ++k) {
    out << "ngram " << k << "=" << model.NumEntries(k) << "\n";
  }
  for (int k = 1; k <= model.order(); ++k) {
    struct Row {
      std::vector<std::string> words;
      NGramModel::Entry entry;
    };
    std::vector<Row> rows;
    rows.reserve(model.NumEntries(k));
    model.ForEachEntry(k, [&](const NGram &g, const NGramModel::Entry &e) {
      Row r;
      for (WordId w : g) r.words.push_back(vocab.Word(w));
      r.entry = e;
      rows.push_back(std::move(r));
    });
    std::sort(rows.begin(), rows.end(),
              [](const Row &a, const Row &b) { return a.words < b.words; });

    out << "\n\\" << k << "-grams:\n";
    for (const auto &r : rows) {
      out << FormatLog10(r.entry.log10_prob) << '\t';
      for (std::size_t i = 0; i < r.words.size(); ++i) {
        if (i) out << ' ';
        out << r.words[i];
      }
      if (r.entry.has_backoff && k < model.order()) {
        out << '\t' << FormatLog10(r.entry.log10_backoff);
      }
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

NGramModel ReadArpa(std::istream &in, double unk_floor_log10) {
  std::vector<std::pair<int, RawEntry>> entries;
  const auto declared = ParseArpa(
      in, [&](int k, const RawEntry &e, std::size_t) {
        entries.emplace_back(k, e);
      });
  const int order = static_cast<int>(declared.size());

  Vocabulary vocab;
  for (const auto &[k, e] : entries) {
    if (k == 1) vocab.Intern(e.words[0]);
  }
  NGramModel model(order, std::move(vocab));
  bool have_unk = false;
  NGram g;
  for (const auto &[k, e] : entries) {
    g.clear();
    for (const auto &w : e.words) {
      const auto id = model.vocab().Find(w);
      if (!id) {
        throw FormatError("arpa: word '" + w + "' in " + std::to_string(k) +
                          "-gram is missing from the unigrams");
      }
      g.push_back(*id);
    }
    model.Set(g, e.log10_prob);
    if (e.has_backoff) model.SetBackoff(g, e.log10_backoff);
    if (k == 1 && g[0] == Vocabulary::kUnk) have_unk = true;
  }
  if (!have_unk) {
    const NGram unk{Vocabulary::kUnk};
    model.Set(unk, unk_floor_log10);
  }
  if (!model.Find(NGram{Vocabulary::kBos})) {
    model.Set(NGram{Vocabulary::kBos}, kLog10Zero);
  }
  return model;
}

NGramModel LoadArpa(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open ARPA file '" + path + "'");
  return ReadArpa(in);
}

ArpaStats ReadArpaStats(std::istream &in) {
  ArpaStats stats;
  stats.declared = ParseArpa(in, [](int, const RawEntry &, std::size_t) {});
  stats.order = static_cast<int>(stats.declared.size());
  // ParseArpa already enforced declared == actual.
  stats.actual = stats.declared;
  return stats;
}

}  // namespace ctclm
