#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "fuzzvad/dsp.hpp"
#include "fuzzvad/error.hpp"

namespace fuzzvad {

namespace {

static_assert(sizeof(float) == 4);

std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    v = to_le(v);
    out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), 4)) throw IoError(fmt::format("{}: truncated header", path));
    return to_le(v);
}

void put_floats(std::ostream& out, const std::vector<double>& values) {
    std::vector<std::uint32_t> buf(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) buf[i] = to_le(std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
}

std::vector<double> get_floats(std::istream& in, std::size_t count, const std::string& path) {
    std::vector<std::uint32_t> buf(count);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * 4))) {
        throw IoError(fmt::format("{}: payload shorter than {} values", path, count));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw IoError(fmt::format("{}: trailing bytes after payload", path));
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<float>(to_le(buf[i]));
    return out;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > 0xffffffffu) throw DomainError(fmt::format("{} does not fit in 32 bits", what));
    return static_cast<std::uint32_t>(v);
}

std::uint32_t rate_field(double sample_rate) {
    const double r = std::round(sample_rate);
    if (r != sample_rate || r < 1.0 || r > 0xffffffffu) {
        throw DomainError(fmt::format("sample rate {} Hz cannot be stored as an integer", sample_rate));
    }
    return static_cast<std::uint32_t>(r);
}

std::ifstream open_with_magic(const std::string& path, const char (&magic)[5]) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path));
    std::array<char, 4> got{};
    if (!in.read(got.data(), 4) || std::memcmp(got.data(), magic, 4) != 0) {
        throw IoError(fmt::format("{}: missing '{}' magic", path, magic));
    }
    return in;
}

std::ofstream create(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot create '{}'", path));
    return out;
}

}  // namespace

void write_segment(const std::string& path, const EegRecording& rec) {
    auto out = create(path);
    out.write("EEGS", 4);
    put_u32(out, checked_u32(rec.channel_count(), "channel count"));
    put_u32(out, checked_u32(rec.sample_count(), "sample count"));
    put_u32(out, rate_field(rec.sample_rate()));
    put_floats(out, rec.data());
    if (!out) throw IoError(fmt::format("write failed for '{}'", path));
}

EegRecording read_segment(const std::string& path) {
    auto in = open_with_magic(path, "EEGS");
    const std::size_t channels = get_u32(in, path);
    const std::size_t samples = get_u32(in, path);
    const std::uint32_t rate = get_u32(in, path);
    if (rate == 0) throw IoError(fmt::format("{}: zero sample rate", path));
    return EegRecording(channels, samples, rate, get_floats(in, channels * samples, path));
}

void write_spectrogram(const std::string& path, const SpectrogramStack& stack, double sample_rate) {
    auto out = create(path);
    out.write("SPGS", 4);
    put_u32(out, checked_u32(stack.channels, "channel count"));
    put_u32(out, checked_u32(stack.bins, "bin count"));
    put_u32(out, rate_field(sample_rate));
    put_u32(out, checked_u32(stack.frames, "frame count"));
    put_floats(out, stack.values);
    if (!out) throw IoError(fmt::format("write failed for '{}'", path));
}

SpectrogramStack read_spectrogram(const std::string& path) {
    auto in = open_with_magic(path, "SPGS");
    SpectrogramStack s;
    s.channels = get_u32(in, path);
    s.bins = get_u32(in, path);
    get_u32(in, path);  // sample rate; bin width needs the fft length, which is not stored
    s.frames = get_u32(in, path);
    s.values = get_floats(in, s.channels * s.bins * s.frames, path);
    return s;
}

}  // namespace fuzzvad
