// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include "tfd/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "tfd/error.hpp"

namespace tfd {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
    bool done() const { return pos_ == b_.size(); }
    std::size_t pos() const { return pos_; }

    template <typename T>
    T get() {
        need(sizeof(T));
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, b_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        pos_ += sizeof(T);
        T v;
        std::memcpy(&v, raw, sizeof(T));
        return v;
    }

    std::string bytes(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n) {
        if (b_.size() - pos_ < n) throw ParseError("checkpoint: truncated record", pos_);
    }
    const std::vector<std::uint8_t>& b_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParamStore& params) {
    std::vector<std::uint8_t> out{'T', 'F', 'D', '1'};
    for (const Param& p : params) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
        out.insert(out.end(), p.name.begin(), p.name.end());
        const auto& dims = p.value.shape().dims();
        put<std::uint32_t>(out, static_cast<std::uint32_t>(dims.size()));
        for (int d : dims) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
        for (double v : p.value.data()) put<double>(out, v);
    }
    return out;
}

std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "TFD1", 4) != 0) throw ParseError("checkpoint: bad magic", 0);
    Reader r(bytes);
    r.bytes(4);
    std::vector<NamedTensor> out;
    while (!r.done()) {
        const auto start = r.pos();
        const auto len = r.get<std::uint32_t>();
        std::string name = r.bytes(len);
        const auto rank = r.get<std::uint32_t>();
        if (rank > 8) throw ParseError("checkpoint: implausible rank for " + name, start);
        std::vector<int> dims;
        std::size_t count = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            const auto d = r.get<std::uint64_t>();
            if (d > (1u << 30)) throw ParseError("checkpoint: implausible extent for " + name, start);
            dims.push_back(static_cast<int>(d));
            count *= d;
        }
        if ((bytes.size() - r.pos()) / 8 < count) throw ParseError("checkpoint: truncated values for " + name, r.pos());
        std::vector<double> values(count);
        for (auto& v : values) v = r.get<double>();
        out.push_back({std::move(name), Tensor(Shape(std::move(dims)), std::move(values))});
    }
    return out;
}

void save_checkpoint(const ParamStore& params, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(params);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

void restore(ParamStore& params, const std::vector<NamedTensor>& entries) {
    std::set<std::string> seen;
    for (const auto& e : entries) {
        Param* p = params.find(e.name);
        if (!p) throw DataError("checkpoint: unexpected parameter " + e.name);
        if (p->value.shape() != e.value.shape())
            throw DataError("checkpoint: " + e.name + " has shape " + e.value.shape().str() + ", model expects " +
                            p->value.shape().str());
        if (!seen.insert(e.name).second) throw DataError("checkpoint: duplicate parameter " + e.name);
    }
    if (seen.size() != params.size()) throw DataError("checkpoint: parameter set does not match the model");
    for (const auto& e : entries) params.get(e.name).value = e.value.detach();
}

}  // namespace tfd
