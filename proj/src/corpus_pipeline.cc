// src/corpus_pipeline.cc

#include "ctclm/corpus_pipeline.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "ctclm/error.h"

namespace ctclm {

std::vector<SampleMetadata> FilterSamples(
    const std::vector<SampleMetadata> &samples, double min_dur_s,
    double max_dur_s) {
  std::vector<SampleMetadata> out;
  for (const auto &s : samples) {
    if (s.downvotes > s.upvotes) continue;
    if (s.duration_s < min_dur_s || s.duration_s > max_dur_s) continue;
    out.push_back(s);
  }
  return out;
}

namespace {

const char *const kMetadataColumns[] = {"id",      "path",      "transcript",
                                        "upvotes", "downvotes", "duration_s"};

std::vector<std::string> SplitTabs(const std::string &line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::int64_t ParseVotes(const std::string &s, std::size_t line,
                        const char *what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) {
    throw ParseError(line, std::string(what) + " must be a non-negative "
                                               "integer, got '" + s + "'");
  }
  return v;
}

double ParseDuration(const std::string &s, std::size_t line) {
  double v = 0.0;
  std::size_t used = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(v) || v < 0.0) {
    throw ParseError(line, "duration_s must be a non-negative number, got '" +
                               s + "'");
  }
  return v;
}

}  // namespace

std::vector<SampleMetadata> ReadMetadataTsv(std::istream &in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = SplitTabs(line);
  if (header.size() != 6 ||
      !std::equal(header.begin(), header.end(), std::begin(kMetadataColumns))) {
    throw ParseError(1,
                     "header must be: id path transcript upvotes downvotes "
                     "duration_s (tab separated)");
  }

  std::vector<SampleMetadata> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = SplitTabs(line);
    if (f.size() != 6) {
      throw ParseError(lineno, "expected 6 tab-separated fields, got " +
                                   std::to_string(f.size()));
    }
    SampleMetadata m;
    m.id = f[0];
    m.audio_path = f[1];
    m.transcript = f[2];
    m.upvotes = ParseVotes(f[3], lineno, "upvotes");
    m.downvotes = ParseVotes(f[4], lineno, "downvotes");
    m.duration_s = ParseDuration(f[5], lineno);
    rows.push_back(std::move(m));
  }
  return rows;
}

void WriteMetadataTsv(std::ostream &out,
                      const std::vector<SampleMetadata> &samples) {
  out << "id\tpath\ttranscript\tupvotes\tdownvotes\tduration_s\n";
  for (const auto &s : samples) {
    // Shortest representation that parses back to the same double.
    char dur[64];
    auto [ptr, ec] = std::to_chars(dur, dur + sizeof(dur), s.duration_s);
    out << s.id << '\t' << s.audio_path << '\t' << s.transcript << '\t'
        << s.upvotes << '\t' << s.downvotes << '\t'
        << std::string_view(dur, ptr - dur) << '\n';
  }
}

// --- WAV -------------------------------------------------------------------

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t ReadU16(const std::uint8_t *p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t ReadU32(const std::uint8_t *p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void PutU16(std::vector<std::uint8_t> &out, std::uint16_t v) {
  out.push_back(v & 0xFF);
  out.push_back(v >> 8);
}

void PutU32(std::vector<std::uint8_t> &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF);
}

void PutTag(std::vector<std::uint8_t> &out, const char *tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

AudioBuffer ParseWav(const std::vector<std::uint8_t> &bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("wav: missing RIFF/WAVE header");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  const std::uint8_t *data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t *chunk = bytes.data() + pos;
    const std::uint32_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) {
      throw FormatError("wav: chunk extends past end of file");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("wav: fmt chunk too short");
      const std::uint8_t *f = bytes.data() + body;
      format = ReadU16(f);
      channels = ReadU16(f + 2);
      rate = ReadU32(f + 4);
      block_align = ReadU16(f + 12);
      bits = ReadU16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw FormatError("wav: extensible fmt chunk too short");
        // First two bytes of the sub-format GUID carry the real format tag.
        format = ReadU16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1);
  }

  if (!have_fmt) throw FormatError("wav: no fmt chunk");
  if (data == nullptr) throw FormatError("wav: no data chunk");
  if (rate == 0) throw FormatError("wav: sample rate is zero");
  if (channels < 1 || channels > 2) {
    throw UnsupportedError("wav: " + std::to_string(channels) +
                           " channels (only mono or stereo)");
  }
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw UnsupportedError("wav: format tag " + std::to_string(format) +
                           " with " + std::to_string(bits) +
                           " bits per sample");
  }
  const std::size_t bytes_per_sample = bits / 8;
  if (block_align != bytes_per_sample * channels) {
    throw FormatError("wav: block_align inconsistent with channels/bits");
  }

  AudioBuffer buf;
  buf.sample_rate_hz = static_cast<int>(rate);
  const std::size_t frames = data_size / block_align;
  buf.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const std::uint8_t *p = data + i * block_align + c * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<std::int16_t>(ReadU16(p)) / 32768.0;
      } else {
        float v;
        const std::uint32_t u = ReadU32(p);
        std::memcpy(&v, &u, sizeof(v));
        acc += v;
      }
    }
    buf.samples[i] = acc / channels;
  }
  return buf;
}

AudioBuffer LoadWav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open wav file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return ParseWav(bytes);
}

std::vector<std::uint8_t> EncodeWav(const AudioBuffer &buf,
                                    WavEncoding encoding) {
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(buf.samples.size() * (bits / 8));
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  PutTag(out, "RIFF");
  PutU32(out, 36 + data_size);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  PutU32(out, 16);
  PutU16(out, pcm16 ? kFormatPcm : kFormatFloat);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(buf.sample_rate_hz));
  PutU32(out, static_cast<std::uint32_t>(buf.sample_rate_hz) * (bits / 8));
  PutU16(out, bits / 8);
  PutU16(out, bits);
  PutTag(out, "data");
  PutU32(out, data_size);
  for (double s : buf.samples) {
    if (pcm16) {
      const double scaled = std::round(s * 32768.0);
      const auto v = static_cast<std::int16_t>(
          std::clamp(scaled, -32768.0, 32767.0));
      PutU16(out, static_cast<std::uint16_t>(v));
    } else {
      const float v = static_cast<float>(s);
      std::uint32_t u;
      std::memcpy(&u, &v, sizeof(u));
      PutU32(out, u);
    }
  }
  return out;
}

void SaveWav(const std::string &path, const AudioBuffer &buf,
             WavEncoding encoding) {
  const auto bytes = EncodeWav(buf, encoding);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

// --- resampling ------------------------------------------------------------

namespace {

constexpr int kTapsPerPhase = 16;
constexpr double kKaiserBeta = 6.0;
// Fraction of the output Nyquist band the low-pass keeps.
constexpr double kCutoffScale = 0.95;

// Zeroth-order modified Bessel function of the first kind (power series).
double BesselI0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

double Sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

}  // namespace

AudioBuffer Resample(const AudioBuffer &buf, int target_hz) {
  if (target_hz <= 0) throw ConfigError("resample: target rate must be > 0");
  if (buf.sample_rate_hz <= 0) {
    throw ConfigError("resample: input rate must be > 0");
  }
  if (target_hz == buf.sample_rate_hz) return buf;

  const std::int64_t src = buf.sample_rate_hz;
  const std::int64_t dst = target_hz;
  const std::int64_t g = std::gcd(src, dst);
  const std::int64_t up = dst / g;    // L
  const std::int64_t down = src / g;  // M
  const std::int64_t in_len = static_cast<std::int64_t>(buf.samples.size());
  const std::int64_t out_len = (in_len * dst * 2 + src) / (2 * src);

  // Cutoff relative to the input Nyquist frequency.
  const double fc =
      kCutoffScale * std::min(1.0, static_cast<double>(dst) / src);
  // Taps are counted at the lower of the two rates, so a decimating filter
  // spans proportionally more input samples.
  const int stretch =
      static_cast<int>(std::max<std::int64_t>(1, (src + dst - 1) / dst));
  const int taps = kTapsPerPhase * stretch;
  const int half = taps / 2;
  const double i0_beta = BesselI0(kKaiserBeta);

  // One filter per phase; tap j covers input index base - half + 1 + j.
  std::vector<double> bank(static_cast<std::size_t>(up) * taps);
  for (std::int64_t p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / up;
    double sum = 0.0;
    double *h = &bank[p * taps];
    for (int j = 0; j < taps; ++j) {
      const double t = (j - half + 1) - frac;
      const double r = t / half;
      const double w =
          std::abs(r) >= 1.0
              ? 0.0
              : BesselI0(kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
      h[j] = fc * Sinc(fc * t) * w;
      sum += h[j];
    }
    for (int j = 0; j < taps; ++j) h[j] /= sum;
  }

  AudioBuffer out;
  out.sample_rate_hz = target_hz;
  out.samples.resize(static_cast<std::size_t>(out_len));
  for (std::int64_t n = 0; n < out_len; ++n) {
    const std::int64_t num = n * down;
    const std::int64_t base = num / up;
    const std::int64_t phase = num % up;
    const double *h = &bank[phase * taps];
    double acc = 0.0;
    for (int j = 0; j < taps; ++j) {
      const std::int64_t idx = base - half + 1 + j;
      if (idx >= 0 && idx < in_len) acc += h[j] * buf.samples[idx];
    }
    out.samples[n] = acc;
  }
  return out;
}

AudioBuffer ZscoreNormalize(const AudioBuffer &buf) {
  const std::size_t n = buf.samples.size();
  if (n < 2) throw ConfigError("z-score needs at least two samples");
  double mean = 0.0;
  for (double s : buf.samples) mean += s;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double s : buf.samples) var += (s - mean) * (s - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);

  AudioBuffer out;
  out.sample_rate_hz = buf.sample_rate_hz;
  out.samples.assign(n, 0.0);
  // Constant input up to rounding noise in the mean.
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) return out;
  for (std::size_t i = 0; i < n; ++i) {
    out.samples[i] = (buf.samples[i] - mean) / sd;
  }
  return out;
}

}  // namespace ctclm
