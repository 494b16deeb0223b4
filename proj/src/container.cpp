// SPDX-License-Identifier: Apache-2.0
#include "rtbpa/container.hpp"

#include "rtbpa/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rtbpa {

namespace {

constexpr std::uint8_t kMeasurementKind = 1;
constexpr std::uint8_t kImageKind = 2;

class Writer {
public:
    void raw(const void *p, std::size_t n) { out_.append(static_cast<const char *>(p), n); }

    template <class U>
    void le(U v)
    {
        for (std::size_t i = 0; i < sizeof(U); ++i)
            out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }

    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u64(std::uint64_t v) { le(v); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
    void vec(const Vec3 &v)
    {
        f64(v.x);
        f64(v.y);
        f64(v.z);
    }
    void c64(const cdouble &c)
    {
        f32(static_cast<float>(c.real()));
        f32(static_cast<float>(c.imag()));
    }

    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Cursor {
public:
    explicit Cursor(const std::string &bytes) : b_(bytes) {}

    void need(std::size_t n) const
    {
        if (b_.size() - pos_ < n)
            throw ParseError("truncated container at byte " + std::to_string(pos_), "container");
    }

    template <class U>
    U le()
    {
        need(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i)
            v |= static_cast<U>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
        pos_ += sizeof(U);
        return v;
    }

    std::uint8_t u8() { return le<std::uint8_t>(); }
    std::uint64_t u64() { return le<std::uint64_t>(); }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
    float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
    Vec3 vec()
    {
        const double x = f64(), y = f64(), z = f64();
        return {x, y, z};
    }
    cdouble c64()
    {
        const float re = f32(), im = f32();
        return {re, im};
    }

    // Guards allocations against absurd counts in corrupt headers.
    std::size_t count(std::uint64_t n, std::size_t item_bytes) const
    {
        if (item_bytes && n > (b_.size() - pos_) / item_bytes)
            throw ParseError("container header declares more data than present", "container");
        return static_cast<std::size_t>(n);
    }

    void header(std::uint8_t kind)
    {
        need(sizeof(kContainerMagic));
        if (std::memcmp(b_.data(), kContainerMagic, sizeof(kContainerMagic)) != 0)
            throw ParseError("not an RTBPA1 container", "magic");
        pos_ = sizeof(kContainerMagic);
        if (u8() != kind)
            throw ParseError("unexpected container kind", "kind");
    }

    void done() const
    {
        if (pos_ != b_.size())
            throw ParseError("trailing bytes after container payload", "container");
    }

private:
    const std::string &b_;
    std::size_t pos_ = 0;
};

} // namespace

std::string encode_measurement(const MeasurementSet &data)
{
    data.validate();
    Writer w;
    w.raw(kContainerMagic, sizeof(kContainerMagic));
    w.u8(kMeasurementKind);
    w.u8(data.mode == MeasurementMode::Scattering ? 1 : 0);
    w.u64(data.n_tx());
    w.u64(data.n_rx());
    w.u64(data.n_k());
    w.vec(data.copol);
    w.f64(data.sweep.f_start);
    w.f64(data.sweep.f_stop);
    w.f64(data.sweep.step);
    for (const auto &p : data.tx_positions)
        w.vec(p);
    for (const auto &p : data.rx_positions)
        w.vec(p);
    for (std::size_t k = 0; k < data.n_k(); ++k)
        w.f64(data.sweep.wavenumber(k));
    for (const auto &s : data.samples)
        w.c64(s);
    return w.take();
}

MeasurementSet decode_measurement(const std::string &bytes)
{
    Cursor c(bytes);
    c.header(kMeasurementKind);
    MeasurementSet data;
    const std::uint8_t mode = c.u8();
    if (mode > 1)
        throw ParseError("unknown measurement mode", "mode");
    data.mode = mode ? MeasurementMode::Scattering : MeasurementMode::Radiation;
    const std::size_t n_tx = c.count(c.u64(), 24);
    const std::size_t n_rx = c.count(c.u64(), 24);
    const std::size_t n_k = c.count(c.u64(), 8);
    data.copol = c.vec();
    data.sweep.f_start = c.f64();
    data.sweep.f_stop = c.f64();
    data.sweep.step = c.f64();
    for (std::size_t i = 0; i < n_tx; ++i)
        data.tx_positions.push_back(c.vec());
    for (std::size_t i = 0; i < n_rx; ++i)
        data.rx_positions.push_back(c.vec());
    for (std::size_t k = 0; k < n_k; ++k)
        c.f64(); // k table is derived from the sweep; kept for external readers
    try {
        data.sweep.validate();
    } catch (const std::invalid_argument &e) {
        throw ParseError(e.what(), "sweep");
    }
    if (data.sweep.count() != n_k)
        throw ShapeMismatch("k table length does not match the sweep");
    const std::size_t n = c.count(static_cast<std::uint64_t>(n_tx) * n_rx * n_k, 8);
    data.samples.resize(n);
    for (auto &s : data.samples)
        s = c.c64();
    c.done();
    data.validate();
    return data;
}

std::string encode_image(const ImageGrid &image)
{
    image.validate();
    if (image.values.size() != image.size())
        throw ShapeMismatch("image has no values");
    Writer w;
    w.raw(kContainerMagic, sizeof(kContainerMagic));
    w.u8(kImageKind);
    w.u8(0);
    for (auto d : image.dims)
        w.u64(d);
    w.vec(image.origin);
    for (const auto &a : image.axes)
        w.vec(a);
    for (double s : image.spacing)
        w.f64(s);
    for (const auto &v : image.values)
        w.c64(v);
    return w.take();
}

ImageGrid decode_image(const std::string &bytes)
{
    Cursor c(bytes);
    c.header(kImageKind);
    c.u8();
    ImageGrid g;
    for (auto &d : g.dims)
        d = static_cast<std::size_t>(c.u64());
    g.origin = c.vec();
    for (auto &a : g.axes)
        a = c.vec();
    for (auto &s : g.spacing)
        s = c.f64();
    const std::size_t n = c.count(static_cast<std::uint64_t>(g.dims[0]) * g.dims[1] * g.dims[2], 8);
    g.values.resize(n);
    for (auto &v : g.values)
        v = c.c64();
    c.done();
    try {
        g.validate();
    } catch (const std::invalid_argument &e) {
        throw ParseError(e.what(), "grid");
    }
    return g;
}

std::string read_text_file(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << text;
    if (!out)
        throw IoError("write failed for " + path.string());
}

void write_measurement(const MeasurementSet &data, const std::filesystem::path &path)
{
    write_text_file(path, encode_measurement(data));
}

MeasurementSet read_measurement(const std::filesystem::path &path)
{
    return decode_measurement(read_text_file(path));
}

void write_image(const ImageGrid &image, const std::filesystem::path &path)
{
    write_text_file(path, encode_image(image));
}

ImageGrid read_image(const std::filesystem::path &path) { return decode_image(read_text_file(path)); }

} // namespace rtbpa
