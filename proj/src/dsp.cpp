#include "fuzzvad/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>
#include <fmt/format.h>

#include "fuzzvad/error.hpp"

namespace fuzzvad {

EegRecording::EegRecording(std::size_t channels, std::size_t samples, double sample_rate)
    : EegRecording(channels, samples, sample_rate, std::vector<double>(channels * samples, 0.0)) {}

EegRecording::EegRecording(std::size_t channels, std::size_t samples, double sample_rate, std::vector<double> data)
    : channels_(channels), samples_(samples), sample_rate_(sample_rate), data_(std::move(data)) {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
        throw DomainError(fmt::format("sample rate must be positive, got {}", sample_rate));
    }
    if (data_.size() != channels * samples) {
        throw DomainError(fmt::format("recording data has {} values, expected {} x {}", data_.size(), channels, samples));
    }
}

EegRecording EegRecording::slice(std::size_t begin, std::size_t length) const {
    if (begin + length > samples_) throw DomainError("slice exceeds recording");
    EegRecording out(channels_, length, sample_rate_);
    for (std::size_t c = 0; c < channels_; ++c) {
        const auto src = channel(c).subspan(begin, length);
        std::copy(src.begin(), src.end(), out.channel(c).begin());
    }
    return out;
}

EegRecording average_rereference(const EegRecording& rec) {
    const std::size_t channels = rec.channel_count();
    if (channels < 2) throw DomainError("average re-reference needs at least two channels");
    EegRecording out = rec;
    for (std::size_t t = 0; t < rec.sample_count(); ++t) {
        double mean = 0.0;
        for (std::size_t c = 0; c < channels; ++c) mean += rec.at(c, t);
        mean /= static_cast<double>(channels);
        for (std::size_t c = 0; c < channels; ++c) out.at(c, t) = rec.at(c, t) - mean;
    }
    return out;
}

std::complex<double> SosFilter::response(double frequency_hz, double sample_rate) const {
    const double w = 2.0 * std::numbers::pi * frequency_hz / sample_rate;
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    std::complex<double> h{1.0, 0.0};
    for (const auto& s : sections_) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    return h;
}

std::vector<std::complex<double>> SosFilter::poles() const {
    std::vector<std::complex<double>> out;
    for (const auto& s : sections_) {
        // z^2 + a1 z + a2 = 0
        const std::complex<double> disc = std::sqrt(std::complex<double>(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
        out.push_back((-s.a1 + disc) / 2.0);
        out.push_back((-s.a1 - disc) / 2.0);
    }
    return out;
}

std::vector<double> SosFilter::filter(std::span<const double> x) const {
    std::vector<double> y(x.begin(), x.end());
    for (const auto& s : sections_) {
        double z1 = 0.0;
        double z2 = 0.0;
        for (double& v : y) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
    return y;
}

std::vector<double> SosFilter::filter_zero_phase(std::span<const double> x) const {
    auto y = filter(x);
    std::reverse(y.begin(), y.end());
    y = filter(y);
    std::reverse(y.begin(), y.end());
    return y;
}

SosFilter design_butterworth_bandpass(int order, double low_hz, double high_hz, double sample_rate) {
    using cplx = std::complex<double>;
    const double nyquist = sample_rate / 2.0;
    if (order < 1) throw DomainError(fmt::format("filter order must be >= 1, got {}", order));
    if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist)) {
        throw DomainError(
            fmt::format("invalid band [{}, {}] Hz for sample rate {} Hz", low_hz, high_hz, sample_rate));
    }
    const double pi = std::numbers::pi;
    const double fs2 = 2.0 * sample_rate;
    const double w_low = fs2 * std::tan(pi * low_hz / sample_rate);
    const double w_high = fs2 * std::tan(pi * high_hz / sample_rate);
    const double bw = w_high - w_low;
    const double w0sq = w_low * w_high;

    std::vector<cplx> complex_poles;  // one of each conjugate pair (imag > 0)
    std::vector<double> real_poles;
    for (int k = 0; k < order; ++k) {
        const cplx proto = std::polar(1.0, pi * (2.0 * k + order + 1) / (2.0 * order));
        const cplx half = proto * bw / 2.0;
        const cplx disc = std::sqrt(half * half - w0sq);
        for (const cplx s : {half + disc, half - disc}) {
            const cplx z = (fs2 + s) / (fs2 - s);
            if (std::abs(z.imag()) < 1e-12) real_poles.push_back(z.real());
            else if (z.imag() > 0.0) complex_poles.push_back(z);
        }
    }
    std::sort(real_poles.begin(), real_poles.end());

    std::vector<Biquad> sections;
    for (const cplx p : complex_poles) {
        sections.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
    }
    for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
        const double p = real_poles[i];
        const double q = real_poles[i + 1];
        sections.push_back({1.0, 0.0, -1.0, -(p + q), p * q});
    }
    if (sections.size() != static_cast<std::size_t>(order)) {
        throw NumericError("butterworth design: unexpected pole layout");
    }

    // Unit gain per section at the digital image of the analog centre frequency.
    const double centre_hz = sample_rate / pi * std::atan(std::sqrt(w0sq) / fs2);
    for (auto& s : sections) {
        const double g = std::abs(SosFilter({s}).response(centre_hz, sample_rate));
        s.b0 /= g;
        s.b1 /= g;
        s.b2 /= g;
    }
    return SosFilter(std::move(sections));
}

EegRecording butterworth_bandpass(const EegRecording& rec, const BandpassConfig& cfg) {
    const auto sos = design_butterworth_bandpass(cfg.order, cfg.low_hz, cfg.high_hz, rec.sample_rate());
    EegRecording out = rec;
    for (std::size_t c = 0; c < rec.channel_count(); ++c) {
        const auto y = cfg.zero_phase ? sos.filter_zero_phase(rec.channel(c)) : sos.filter(rec.channel(c));
        std::copy(y.begin(), y.end(), out.channel(c).begin());
    }
    return out;
}

namespace {

long to_sample(double seconds, double fs) { return std::lround(seconds * fs); }

}  // namespace

EegRecording extract_event(const EegRecording& rec, double click_time, const SegmentConfig& cfg) {
    const double fs = rec.sample_rate();
    const long begin = to_sample(click_time + cfg.event_start_offset, fs);
    const long length = to_sample(cfg.event_end_offset - cfg.event_start_offset, fs);
    if (!std::isfinite(click_time) || begin < 0 || begin + length > static_cast<long>(rec.sample_count())) {
        throw DomainError(fmt::format("click at {} s: window [{}, {}) s is outside the {} s recording", click_time,
                                      click_time + cfg.event_start_offset, click_time + cfg.event_end_offset,
                                      rec.duration()));
    }
    return rec.slice(static_cast<std::size_t>(begin), static_cast<std::size_t>(length));
}

EegRecording extract_baseline(const EegRecording& rec, const SegmentConfig& cfg, bool* truncated) {
    const double fs = rec.sample_rate();
    const long begin = to_sample(cfg.baseline_start, fs);
    long end = to_sample(cfg.baseline_end, fs);
    const auto total = static_cast<long>(rec.sample_count());
    if (begin < 0 || begin >= total || end <= begin) {
        throw DomainError(fmt::format("baseline window starts at {} s, past the {} s recording", cfg.baseline_start,
                                      rec.duration()));
    }
    if (truncated) *truncated = end > total;
    end = std::min(end, total);
    return rec.slice(static_cast<std::size_t>(begin), static_cast<std::size_t>(end - begin));
}

Segments extract_segments(const EegRecording& rec, std::span<const double> click_times, const SegmentConfig& cfg) {
    Segments out;
    out.baseline = extract_baseline(rec, cfg, &out.baseline_truncated);
    for (double t : click_times) out.events.push_back(extract_event(rec, t, cfg));
    return out;
}

void StftConfig::validate() const {
    if (window_length == 0) throw DomainError("stft window length must be positive");
    if (hop != window_length / 2) {
        throw DomainError(fmt::format("stft hop must be half the window ({}), got {}", window_length / 2, hop));
    }
    if (hop == 0) throw DomainError("stft hop must be positive");
    if (window_length > fft_length) throw DomainError("stft window longer than fft length");
}

std::vector<double> make_window(WindowKind kind, std::size_t length) {
    std::vector<double> w(length, 1.0);
    const double n = static_cast<double>(length);
    for (std::size_t k = 0; k < length; ++k) {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(k) / n;
        switch (kind) {
            case WindowKind::Hann: w[k] = 0.5 - 0.5 * std::cos(phase); break;
            case WindowKind::Hamming: w[k] = 0.54 - 0.46 * std::cos(phase); break;
            case WindowKind::Rectangular: break;
        }
    }
    return w;
}

ComplexSpectrum stft(std::span<const double> signal, const StftConfig& cfg) {
    cfg.validate();
    if (signal.size() < cfg.window_length) {
        throw DomainError(
            fmt::format("stft: signal of {} samples is shorter than the {}-sample window", signal.size(), cfg.window_length));
    }
    const auto window = make_window(cfg.window, cfg.window_length);
    ComplexSpectrum out;
    out.bins = cfg.fft_length / 2 + 1;
    out.frames = (signal.size() - cfg.window_length) / cfg.hop + 1;
    out.values.resize(out.bins * out.frames);

    Eigen::FFT<double> fft;
    std::vector<double> frame(cfg.fft_length, 0.0);
    std::vector<std::complex<double>> spectrum;
    for (std::size_t n = 0; n < out.frames; ++n) {
        const std::size_t start = n * cfg.hop;
        for (std::size_t k = 0; k < cfg.window_length; ++k) frame[k] = signal[start + k] * window[k];
        fft.fwd(spectrum, frame);
        std::copy_n(spectrum.begin(), out.bins, out.values.begin() + static_cast<std::ptrdiff_t>(n * out.bins));
    }
    return out;
}

SpectrogramStack spectrogram_stack(const EegRecording& segment, const StftConfig& cfg, double max_hz) {
    cfg.validate();
    SpectrogramStack out;
    out.channels = segment.channel_count();
    out.bin_width = segment.sample_rate() / static_cast<double>(cfg.fft_length);
    const std::size_t all_bins = cfg.fft_length / 2 + 1;
    out.bins = std::min(all_bins, static_cast<std::size_t>(std::floor(max_hz / out.bin_width + 1e-9)) + 1);
    if (segment.sample_count() < cfg.window_length) {
        throw DomainError(fmt::format("spectrogram: segment of {} samples is shorter than the window",
                                      segment.sample_count()));
    }
    out.frames = (segment.sample_count() - cfg.window_length) / cfg.hop + 1;
    for (std::size_t n = 0; n < out.frames; ++n) {
        out.frame_times.push_back(static_cast<double>(n * cfg.hop + cfg.window_length / 2) / segment.sample_rate());
    }
    out.values.resize(out.channels * out.bins * out.frames);
    for (std::size_t c = 0; c < out.channels; ++c) {
        const auto spec = stft(segment.channel(c), cfg);
        for (std::size_t m = 0; m < out.bins; ++m) {
            for (std::size_t n = 0; n < out.frames; ++n) {
                out.values[(c * out.bins + m) * out.frames + n] = std::norm(spec.at(m, n));
            }
        }
    }
    return out;
}

std::vector<ChannelQc> amplitude_qc(const EegRecording& rec, double threshold) {
    std::vector<ChannelQc> out;
    for (std::size_t c = 0; c < rec.channel_count(); ++c) {
        double peak = 0.0;
        for (double v : rec.channel(c)) peak = std::max(peak, std::abs(v));
        out.push_back({c, peak, peak > threshold});
    }
    return out;
}

}  // namespace fuzzvad
