// include/ctclm/corpus_pipeline.h
//
// Dataset metadata filtering and audio preparation: WAV ingestion,
// resampling and z-score normalization.

#ifndef CTCLM_CORPUS_PIPELINE_H_
#define CTCLM_CORPUS_PIPELINE_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace ctclm {

struct SampleMetadata {
  std::string id;
  std::string audio_path;
  std::string transcript;
  std::int64_t upvotes = 0;
  std::int64_t downvotes = 0;
  double duration_s = 0.0;

  bool operator==(const SampleMetadata &) const = default;
};

inline constexpr double kDefaultMinDurationS = 1.0;
inline constexpr double kDefaultMaxDurationS = 20.0;

// Keeps a sample iff downvotes <= upvotes and min <= duration <= max.
// Order is preserved.
std::vector<SampleMetadata> FilterSamples(
    const std::vector<SampleMetadata> &samples,
    double min_dur_s = kDefaultMinDurationS,
    double max_dur_s = kDefaultMaxDurationS);

// Tab-separated, header `id path transcript upvotes downvotes duration_s`.
// Throws ParseError naming the offending line.
std::vector<SampleMetadata> ReadMetadataTsv(std::istream &in);
void WriteMetadataTsv(std::ostream &out,
                      const std::vector<SampleMetadata> &samples);

struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = 0;
};

// PCM s16le or f32le, one or two channels; stereo is averaged to mono.
// Throws FormatError for a malformed RIFF structure and UnsupportedError for
// other encodings.
AudioBuffer LoadWav(const std::string &path);
AudioBuffer ParseWav(const std::vector<std::uint8_t> &bytes);

enum class WavEncoding { kPcm16, kFloat32 };

// Mono writer, mostly for fixtures and the prep-audio command.
std::vector<std::uint8_t> EncodeWav(const AudioBuffer &buf,
                                    WavEncoding encoding);
void SaveWav(const std::string &path, const AudioBuffer &buf,
             WavEncoding encoding);

inline constexpr int kDefaultTargetRateHz = 16000;

// Polyphase windowed-sinc resampler (Kaiser window, 16 taps per phase).
// Output length is round(len * target / rate). Same-rate input is returned
// unchanged.
AudioBuffer Resample(const AudioBuffer &buf,
                     int target_hz = kDefaultTargetRateHz);

// Zero mean, unit population standard deviation. A constant signal maps to
// all zeros. Throws ConfigError for fewer than two samples.
AudioBuffer ZscoreNormalize(const AudioBuffer &buf);

}  // namespace ctclm

#endif  // CTCLM_CORPUS_PIPELINE_H_
