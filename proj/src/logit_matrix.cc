// src/logit_matrix.cc

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ctclm/ctc_decoder.h"
#include "ctclm/error.h"

namespace ctclm {

namespace {

constexpr char kMagic[4] = {'C', 'T', 'C', 'L'};
constexpr std::uint8_t kVersion = 1;

std::uint32_t ReadU32(const unsigned char *p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void WriteU32(std::ostream &out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>((v >> 8) & 0xFF),
                              static_cast<unsigned char>((v >> 16) & 0xFF),
                              static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char *>(b), 4);
}

}  // namespace

LogitMatrix::LogitMatrix(int num_frames, std::vector<float> values,
                         std::shared_ptr<const TokenInventory> inventory,
                         std::optional<double> frame_duration_s)
    : num_frames_(num_frames),
      vocab_size_(inventory ? inventory->size() : 0),
      values_(std::move(values)),
      inventory_(std::move(inventory)),
      frame_duration_s_(frame_duration_s) {
  if (!inventory_) throw ConfigError("logits: missing token inventory");
  if (num_frames_ < 1) throw ConfigError("logits: need at least one frame");
  if (values_.size() != static_cast<std::size_t>(num_frames_) * vocab_size_) {
    throw ConfigError("logits: expected " + std::to_string(num_frames_) +
                      " x " + std::to_string(vocab_size_) + " values, got " +
                      std::to_string(values_.size()));
  }
  for (float v : values_) {
    if (!std::isfinite(v)) throw ConfigError("logits: non-finite value");
  }
}

std::vector<double> LogitMatrix::LogSoftmax() const {
  std::vector<double> out(values_.size());
  for (int t = 0; t < num_frames_; ++t) {
    const auto row = frame(t);
    double mx = row[0];
    for (float v : row) mx = std::max(mx, static_cast<double>(v));
    double sum = 0.0;
    for (float v : row) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    for (int v = 0; v < vocab_size_; ++v) {
      out[t * vocab_size_ + v] = row[v] - lse;
    }
  }
  return out;
}

LogitMatrix ReadLogitsBinary(std::istream &in,
                             std::shared_ptr<const TokenInventory> inventory) {
  unsigned char header[13];
  if (!in.read(reinterpret_cast<char *>(header), sizeof(header))) {
    throw FormatError("logits: truncated CTCL header");
  }
  if (std::memcmp(header, kMagic, 4) != 0) {
    throw FormatError("logits: bad magic (expected CTCL)");
  }
  if (header[4] != kVersion) {
    throw UnsupportedError("logits: CTCL version " +
                           std::to_string(header[4]));
  }
  const std::uint32_t frames = ReadU32(header + 5);
  const std::uint32_t vocab = ReadU32(header + 9);
  if (!inventory) throw ConfigError("logits: missing token inventory");
  if (static_cast<int>(vocab) != inventory->size()) {
    throw FormatError("logits: V=" + std::to_string(vocab) +
                      " but the inventory has " +
                      std::to_string(inventory->size()) + " tokens");
  }
  if (frames == 0) throw FormatError("logits: T=0");

  const std::size_t count = static_cast<std::size_t>(frames) * vocab;
  std::vector<unsigned char> raw(count * 4);
  if (!in.read(reinterpret_cast<char *>(raw.data()),
               static_cast<std::streamsize>(raw.size()))) {
    throw FormatError("logits: truncated body (expected " +
                      std::to_string(count) + " floats)");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("logits: trailing bytes after body");
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t u = ReadU32(raw.data() + 4 * i);
    std::memcpy(&values[i], &u, sizeof(float));
  }
  try {
    return LogitMatrix(static_cast<int>(frames), std::move(values),
                       std::move(inventory));
  } catch (const ConfigError &e) {
    throw FormatError(e.what());
  }
}

void WriteLogitsBinary(std::ostream &out, const LogitMatrix &logits) {
  out.write(kMagic, 4);
  out.put(static_cast<char>(kVersion));
  WriteU32(out, static_cast<std::uint32_t>(logits.num_frames()));
  WriteU32(out, static_cast<std::uint32_t>(logits.vocab_size()));
  for (float v : logits.values()) {
    std::uint32_t u;
    std::memcpy(&u, &v, sizeof(u));
    WriteU32(out, u);
  }
}

LogitMatrix ReadLogitsText(std::istream &in,
                           std::shared_ptr<const TokenInventory> inventory) {
  if (!inventory) throw ConfigError("logits: missing token inventory");
  std::vector<float> values;
  int frames = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    std::string tok;
    int cols = 0;
    while (row >> tok) {
      std::size_t used = 0;
      float v = 0.0f;
      try {
        v = std::stof(tok, &used);
      } catch (const std::exception &) {
        used = 0;
      }
      if (used != tok.size()) {
        throw ParseError(lineno, "not a number: '" + tok + "'");
      }
      values.push_back(v);
      ++cols;
    }
    if (cols != inventory->size()) {
      throw ParseError(lineno, "frame has " + std::to_string(cols) +
                                   " values but the inventory has " +
                                   std::to_string(inventory->size()) +
                                   " tokens");
    }
    ++frames;
  }
  if (frames == 0) throw FormatError("logits: no frames");
  try {
    return LogitMatrix(frames, std::move(values), std::move(inventory));
  } catch (const ConfigError &e) {
    throw FormatError(e.what());
  }
}

LogitMatrix LoadLogits(const std::string &path,
                       std::shared_ptr<const TokenInventory> inventory) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open logits file '" + path + "'");
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  const bool binary = in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0;
  in.clear();
  in.seekg(0);
  try {
    return binary ? ReadLogitsBinary(in, std::move(inventory))
                  : ReadLogitsText(in, std::move(inventory));
  } catch (const InputError &e) {
    throw FormatError(path + ": " + e.what());
  }
}

void SaveLogits(const std::string &path, const LogitMatrix &logits) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  WriteLogitsBinary(out, logits);
}

}  // namespace ctclm
