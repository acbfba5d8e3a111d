#pragma once

// EEG conditioning and time-frequency features.

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fuzzvad {

/// Multichannel recording, channel-major (channel c occupies
/// data[c * samples, (c + 1) * samples)).
class EegRecording {
public:
    EegRecording() = default;
    EegRecording(std::size_t channels, std::size_t samples, double sample_rate);
    EegRecording(std::size_t channels, std::size_t samples, double sample_rate, std::vector<double> data);

    std::size_t channel_count() const noexcept { return channels_; }
    std::size_t sample_count() const noexcept { return samples_; }
    double sample_rate() const noexcept { return sample_rate_; }
    double duration() const noexcept { return static_cast<double>(samples_) / sample_rate_; }

    std::span<double> channel(std::size_t c) { return {data_.data() + c * samples_, samples_}; }
    std::span<const double> channel(std::size_t c) const { return {data_.data() + c * samples_, samples_}; }
    double& at(std::size_t c, std::size_t t) { return data_[c * samples_ + t]; }
    double at(std::size_t c, std::size_t t) const { return data_[c * samples_ + t]; }
    const std::vector<double>& data() const noexcept { return data_; }

    /// Samples [begin, begin + length) of every channel.
    EegRecording slice(std::size_t begin, std::size_t length) const;

    bool operator==(const EegRecording&) const = default;

private:
    std::size_t channels_ = 0;
    std::size_t samples_ = 0;
    double sample_rate_ = 250.0;
    std::vector<double> data_;
};

/// Subtracts the instantaneous cross-channel mean. Needs >= 2 channels.
EegRecording average_rereference(const EegRecording& rec);

/// Direct-form II transposed biquad: b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

class SosFilter {
public:
    SosFilter() = default;
    explicit SosFilter(std::vector<Biquad> sections) : sections_(std::move(sections)) {}

    const std::vector<Biquad>& sections() const noexcept { return sections_; }

    /// Complex frequency response at frequency_hz.
    std::complex<double> response(double frequency_hz, double sample_rate) const;

    /// Poles of every section (two per section).
    std::vector<std::complex<double>> poles() const;

    /// One causal pass from zero initial state.
    std::vector<double> filter(std::span<const double> x) const;
    /// Forward pass followed by a time-reversed pass.
    std::vector<double> filter_zero_phase(std::span<const double> x) const;

private:
    std::vector<Biquad> sections_;
};

/// Butterworth bandpass from an order-n analog prototype: lowpass-to-bandpass
/// transform of pre-warped band edges, then the bilinear transform. The
/// result has n sections (order 2n overall) and unit gain at band centre.
SosFilter design_butterworth_bandpass(int order, double low_hz, double high_hz, double sample_rate);

struct BandpassConfig {
    double low_hz = 1.0;
    double high_hz = 40.0;
    int order = 5;
    bool zero_phase = false;
};

EegRecording butterworth_bandpass(const EegRecording& rec, const BandpassConfig& cfg = {});

struct SegmentConfig {
    double baseline_start = 10.0;
    double baseline_end = 70.0;
    double event_start_offset = -6.0;
    double event_end_offset = 1.0;
};

struct Segments {
    EegRecording baseline;
    /// True when the recording ended before the baseline window did.
    bool baseline_truncated = false;
    std::vector<EegRecording> events;
};

/// Event window of one click, sample exact. Throws DomainError naming the
/// click when the window leaves the recording.
EegRecording extract_event(const EegRecording& rec, double click_time, const SegmentConfig& cfg = {});

/// Baseline window clipped to the recording end.
EegRecording extract_baseline(const EegRecording& rec, const SegmentConfig& cfg, bool* truncated = nullptr);

Segments extract_segments(const EegRecording& rec, std::span<const double> click_times, const SegmentConfig& cfg = {});

enum class WindowKind { Hann, Hamming, Rectangular };

struct StftConfig {
    std::size_t window_length = 128;
    std::size_t hop = 64;
    WindowKind window = WindowKind::Hann;
    std::size_t fft_length = 128;

    void validate() const;
};

/// Periodic taper of the given length.
std::vector<double> make_window(WindowKind kind, std::size_t length);

/// Column-major bins x frames complex matrix.
struct ComplexSpectrum {
    std::size_t bins = 0;
    std::size_t frames = 0;
    std::vector<std::complex<double>> values;  // values[frame * bins + bin]

    std::complex<double> at(std::size_t bin, std::size_t frame) const { return values[frame * bins + bin]; }
};

/// One-sided STFT: frames start every hop samples, the partial last frame is
/// dropped, each frame is tapered then transformed with fft_length points.
ComplexSpectrum stft(std::span<const double> signal, const StftConfig& cfg = {});

/// Channel-stacked power spectrograms, channel-major l x m x n
/// (channels x frequency bins x frames).
struct SpectrogramStack {
    std::size_t channels = 0;
    std::size_t bins = 0;
    std::size_t frames = 0;
    double bin_width = 0.0;
    std::vector<double> frame_times;  // frame centres, seconds
    std::vector<double> values;

    double at(std::size_t c, std::size_t m, std::size_t n) const { return values[(c * bins + m) * frames + n]; }
};

/// |STFT|^2 per channel, bins above max_hz dropped.
SpectrogramStack spectrogram_stack(const EegRecording& segment, const StftConfig& cfg = {}, double max_hz = 40.0);

struct ChannelQc {
    std::size_t channel = 0;
    double peak_abs = 0.0;
    bool flagged = false;
};

/// Peak absolute amplitude per channel, flagged above threshold.
std::vector<ChannelQc> amplitude_qc(const EegRecording& rec, double threshold);

// Binary segment files. All integers little-endian u32, payload little-endian
// float32, channel-major.
//   "EEGS" | channels | samples | sample_rate_hz | data
//   "SPGS" | channels | bins    | sample_rate_hz | frames | data
void write_segment(const std::string& path, const EegRecording& rec);
EegRecording read_segment(const std::string& path);
void write_spectrogram(const std::string& path, const SpectrogramStack& stack, double sample_rate);
SpectrogramStack read_spectrogram(const std::string& path);

}  // namespace fuzzvad
