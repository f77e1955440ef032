// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#include "dtir/checkpoint.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>

#include "dtir/error.hpp"

namespace dtir {

namespace {

constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char((v >> 8) & 0xff));
    out.push_back(char((v >> 16) & 0xff));
    out.push_back(char((v >> 24) & 0xff));
}

void put_f32(std::string& out, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

struct Reader {
    const unsigned char* p;
    size_t n;
    size_t pos = 0;

    uint32_t u32() {
        if (pos + 4 > n) throw MalformedContainer("checkpoint: truncated field");
        uint32_t v = uint32_t(p[pos]) | uint32_t(p[pos + 1]) << 8 | uint32_t(p[pos + 2]) << 16 |
                     uint32_t(p[pos + 3]) << 24;
        pos += 4;
        return v;
    }
    uint8_t u8() {
        if (pos + 1 > n) throw MalformedContainer("checkpoint: truncated field");
        return p[pos++];
    }
    std::string bytes(size_t len) {
        if (pos + len > n) throw MalformedContainer("checkpoint: truncated field");
        std::string s(reinterpret_cast<const char*>(p + pos), len);
        pos += len;
        return s;
    }
    float f32() {
        uint32_t v = u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
};

void write_atomic(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw CheckpointError("checkpoint: cannot open '" + tmp + "'");
        f.write(bytes.data(), std::streamsize(bytes.size()));
        if (!f) throw Error("checkpoint: write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("checkpoint: rename failed for '" + path + "'");
}

}  // namespace

void atomic_write_text(const std::string& path, const std::string& text) { write_atomic(path, text); }

void save_entries(const std::string& path, const std::vector<std::pair<std::string, Tensor>>& entries) {
    std::string out;
    out += "DTIR";
    put_u32(out, kVersion);
    put_u32(out, uint32_t(entries.size()));
    std::set<std::string> seen;
    for (const auto& [name, t] : entries) {
        if (!seen.insert(name).second) throw ContractError("checkpoint: duplicate entry '" + name + "'");
        if (!t.defined()) throw ContractError("checkpoint: undefined tensor for '" + name + "'");
        put_u32(out, uint32_t(name.size()));
        out += name;
        out.push_back(char(0));  // dtype f32
        put_u32(out, uint32_t(t.rank()));
        for (size_t i = 0; i < t.rank(); ++i) {
            if (t.dim(i) < 0 || t.dim(i) > int64_t(UINT32_MAX))
                throw ContractError("checkpoint: dimension out of range for '" + name + "'");
            put_u32(out, uint32_t(t.dim(i)));
        }
        for (int64_t i = 0; i < t.numel(); ++i) put_f32(out, t.data()[i]);
    }
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(out.data()), uInt(out.size()));
    put_u32(out, uint32_t(crc));
    write_atomic(path, out);
}

std::vector<std::pair<std::string, Tensor>> load_entries(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("checkpoint: cannot open '" + path + "'");
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 16) throw MalformedContainer("checkpoint: file too small");
    Reader r{reinterpret_cast<const unsigned char*>(buf.data()), buf.size() - 4};
    if (r.bytes(4) != "DTIR") throw MalformedContainer("checkpoint: bad magic");
    if (r.u32() != kVersion) throw MalformedContainer("checkpoint: unsupported version");
    const uint32_t count = r.u32();
    std::vector<std::pair<std::string, Tensor>> entries;
    entries.reserve(count);
    std::set<std::string> seen;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = r.u32();
        const std::string name = r.bytes(name_len);
        if (!seen.insert(name).second) throw MalformedContainer("checkpoint: duplicate entry '" + name + "'");
        if (r.u8() != 0) throw MalformedContainer("checkpoint: unsupported dtype for '" + name + "'");
        const uint32_t rank = r.u32();
        if (rank > 8) throw MalformedContainer("checkpoint: absurd rank for '" + name + "'");
        Shape shape(rank);
        int64_t numel = 1;
        for (uint32_t d = 0; d < rank; ++d) {
            shape[d] = int64_t(r.u32());
            numel *= shape[d];
        }
        if (numel < 0 || size_t(numel) * 4 > r.n - r.pos)
            throw MalformedContainer("checkpoint: payload overruns file for '" + name + "'");
        std::vector<float> data(static_cast<size_t>(numel));
        for (int64_t k = 0; k < numel; ++k) data[size_t(k)] = r.f32();
        entries.emplace_back(name, Tensor::from_data(shape, std::move(data)));
    }
    if (r.pos != r.n) throw MalformedContainer("checkpoint: trailing bytes before checksum");
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), uInt(buf.size() - 4));
    Reader tail{reinterpret_cast<const unsigned char*>(buf.data()) + buf.size() - 4, 4};
    if (uint32_t(crc) != tail.u32()) throw CrcMismatch("checkpoint: checksum mismatch in '" + path + "'");
    return entries;
}

void save_checkpoint(const ParamStore& params, const std::string& path) {
    std::vector<std::pair<std::string, Tensor>> entries;
    for (const auto& [name, e] : params) entries.emplace_back(name, e.tensor);
    save_entries(path, entries);
}

ParamStore load_checkpoint(const std::string& path) {
    ParamStore ps;
    for (auto& [name, t] : load_entries(path)) ps.add(name, std::move(t), 0, ParamGroup::Backbone);
    return ps;
}

void save_model_checkpoint(const ParamStore& params, const ModelSpec& spec, bool use_moe, const std::string& path) {
    std::vector<std::pair<std::string, Tensor>> entries;
    entries.emplace_back("__spec__",
                         Tensor::from_data({7}, {float(spec.in_channels), float(spec.base_channels),
                                                 float(spec.depth), float(spec.embed_dim), float(spec.n_experts),
                                                 float(spec.adapter_dim), use_moe ? 1.0f : 0.0f}));
    for (const auto& [name, e] : params) entries.emplace_back(name, e.tensor);
    save_entries(path, entries);
}

LoadedModel load_model_checkpoint(const std::string& path) {
    auto entries = load_entries(path);
    LoadedModel out;
    bool have_spec = false;
    for (auto& [name, t] : entries) {
        if (name != "__spec__") continue;
        if (t.numel() != 7) throw MalformedContainer("checkpoint: bad geometry entry");
        out.spec.in_channels = int(t.data()[0]);
        out.spec.base_channels = int(t.data()[1]);
        out.spec.depth = int(t.data()[2]);
        out.spec.embed_dim = int(t.data()[3]);
        out.spec.n_experts = int(t.data()[4]);
        out.spec.adapter_dim = int(t.data()[5]);
        out.use_moe = t.data()[6] != 0.0f;
        have_spec = true;
    }
    if (!have_spec) throw MalformedContainer("checkpoint: missing geometry entry (not a model checkpoint)");
    out.params = build_model(out.spec, /*seed=*/0);
    size_t loaded = 0;
    for (auto& [name, t] : entries) {
        if (name == "__spec__") continue;
        if (!out.params.contains(name))
            throw MalformedContainer("checkpoint: entry '" + name + "' does not fit the stored geometry");
        ParamEntry& e = out.params.at(name);
        if (e.tensor.shape() != t.shape())
            throw MalformedContainer("checkpoint: shape mismatch for '" + name + "'");
        std::copy(t.data(), t.data() + t.numel(), e.tensor.data());
        ++loaded;
    }
    if (loaded != out.params.size())
        throw MalformedContainer("checkpoint: parameter set incomplete for the stored geometry");
    return out;
}

void save_importance(const ImportanceState& imp, const std::string& path) {
    std::vector<std::pair<std::string, Tensor>> entries;
    for (const auto& [name, t] : imp.grad_accum) entries.emplace_back("imp/" + name, t);
    for (const auto& [name, t] : imp.theta0) entries.emplace_back("theta0/" + name, t);
    save_entries(path, entries);
}

ImportanceState load_importance(const std::string& path) {
    ImportanceState imp;
    for (auto& [name, t] : load_entries(path)) {
        if (name.rfind("imp/", 0) == 0)
            imp.grad_accum[name.substr(4)] = std::move(t);
        else if (name.rfind("theta0/", 0) == 0)
            imp.theta0[name.substr(7)] = std::move(t);
        else
            throw MalformedContainer("checkpoint: unexpected entry '" + name + "' in importance file");
    }
    return imp;
}

}  // namespace dtir
