// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#include "dtir/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "dtir/error.hpp"

namespace dtir {

void write_image(const std::string& path, const Tensor& chw) {
    if (!chw.defined() || chw.rank() != 3) throw ShapeError("write_image: expected [C,H,W]");
    const int64_t C = chw.dim(0), H = chw.dim(1), W = chw.dim(2);
    if (C != 1 && C != 3) throw ShapeError("write_image: only 1 or 3 channels supported");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("write_image: cannot open '" + path + "'");
    f << (C == 1 ? "P5" : "P6") << "\n" << W << " " << H << "\n255\n";
    std::vector<unsigned char> row(size_t(W * C));
    for (int64_t y = 0; y < H; ++y) {
        for (int64_t x = 0; x < W; ++x)
            for (int64_t c = 0; c < C; ++c) {
                const double v = std::min(1.0, std::max(0.0, double(chw.data()[(c * H + y) * W + x])));
                row[size_t(x * C + c)] = static_cast<unsigned char>(std::lround(v * 255.0));
            }
        f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    if (!f) throw Error("write_image: write failed for '" + path + "'");
}

namespace {
// PNM token reader: skips whitespace (comments are not emitted by us but are
// tolerated on read).
std::string next_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(char(ch));
    }
    return tok;
}
}  // namespace

Tensor read_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("read_image: cannot open '" + path + "'");
    const std::string magic = next_token(f);
    int64_t C;
    if (magic == "P5")
        C = 1;
    else if (magic == "P6")
        C = 3;
    else
        throw Error("read_image: unsupported magic '" + magic + "'");
    int64_t W = 0, H = 0, maxval = 0;
    try {
        W = std::stoll(next_token(f));
        H = std::stoll(next_token(f));
        maxval = std::stoll(next_token(f));
    } catch (...) {
        throw Error("read_image: malformed header in '" + path + "'");
    }
    if (W < 1 || H < 1 || maxval != 255) throw Error("read_image: bad dimensions or maxval in '" + path + "'");
    std::vector<unsigned char> buf(size_t(W * H * C));
    f.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    if (f.gcount() != std::streamsize(buf.size())) throw Error("read_image: truncated pixel data in '" + path + "'");
    Tensor img = Tensor::zeros({C, H, W});
    for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x)
            for (int64_t c = 0; c < C; ++c)
                img.data()[(c * H + y) * W + x] = float(buf[size_t((y * W + x) * C + c)]) / 255.0f;
    return img;
}

}  // namespace dtir
