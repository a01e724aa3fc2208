#include "ddcl/png_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace ddcl::imgio {

namespace {

using Bytes = std::vector<unsigned char>;

Bytes read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    return Bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

// ---- checksums ----

std::uint32_t crc32(const unsigned char* p, std::size_t n, std::uint32_t crc = 0) {
    static std::uint32_t table[256];
    static bool ready = false;
    if (!ready) {
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int j = 0; j < 8; ++j) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            table[i] = c;
        }
        ready = true;
    }
    crc ^= 0xffffffffu;
    for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ p[i]) & 0xffu] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

std::uint32_t adler32(const unsigned char* p, std::size_t n) {
    std::uint32_t a = 1, b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        a = (a + p[i]) % 65521u;
        b = (b + a) % 65521u;
    }
    return (b << 16) | a;
}

// ---- inflate (RFC 1951) ----

struct BitReader {
    const unsigned char* data;
    std::size_t size, pos = 0;
    std::uint32_t bitbuf = 0;
    int bitcnt = 0;

    int bits(int need) {
        while (bitcnt < need) {
            if (pos >= size) throw IoError("inflate: out of input");
            bitbuf |= std::uint32_t(data[pos++]) << bitcnt;
            bitcnt += 8;
        }
        const int v = static_cast<int>(bitbuf & ((1u << need) - 1));
        bitbuf >>= need;
        bitcnt -= need;
        return v;
    }
    void align() {
        bitbuf = 0;
        bitcnt = 0;
    }
};

struct Huffman {
    int count[16] = {};
    std::vector<int> symbol;
};

Huffman build_huffman(const int* lengths, int n) {
    Huffman h;
    for (int i = 0; i < n; ++i) h.count[lengths[i]]++;
    h.count[0] = 0;
    int offs[16] = {};
    for (int len = 1; len < 15; ++len) offs[len + 1] = offs[len] + h.count[len];
    h.symbol.assign(offs[15] + h.count[15], 0);
    int cursor[16];
    std::memcpy(cursor, offs, sizeof(offs));
    for (int i = 0; i < n; ++i)
        if (lengths[i] != 0) h.symbol[cursor[lengths[i]]++] = i;
    return h;
}

int decode(BitReader& br, const Huffman& h) {
    int code = 0, first = 0, index = 0;
    for (int len = 1; len <= 15; ++len) {
        code |= br.bits(1);
        const int count = h.count[len];
        if (code - first < count) return h.symbol[index + (code - first)];
        index += count;
        first += count;
        first <<= 1;
        code <<= 1;
    }
    throw IoError("inflate: invalid huffman code");
}

constexpr int kLenBase[29] = {3,  4,  5,  6,  7,  8,  9,  10, 11,  13,  15,  17,  19, 23, 27,
                              31, 35, 43, 51, 59, 67, 83, 99, 115, 131, 163, 195, 227, 258};
constexpr int kLenExtra[29] = {0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2,
                               2, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5, 5, 0};
constexpr int kDistBase[30] = {1,    2,    3,    4,    5,    7,     9,     13,   17,   25,
                               33,   49,   65,   97,   129,  193,   257,   385,  513,  769,
                               1025, 1537, 2049, 3073, 4097, 6145,  8193,  12289, 16385, 24577};
constexpr int kDistExtra[30] = {0, 0, 0, 0, 1, 1, 2, 2,  3,  3,  4,  4,  5,  5,  6,
                                6, 7, 7, 8, 8, 9, 9, 10, 10, 11, 11, 12, 12, 13, 13};

Bytes inflate(const unsigned char* data, std::size_t size) {
    BitReader br{data, size};
    Bytes out;
    for (;;) {
        const int bfinal = br.bits(1);
        const int btype = br.bits(2);
        if (btype == 0) {
            br.align();
            if (br.pos + 4 > br.size) throw IoError("inflate: truncated stored block");
            const unsigned len = br.data[br.pos] | (unsigned(br.data[br.pos + 1]) << 8);
            const unsigned nlen = br.data[br.pos + 2] | (unsigned(br.data[br.pos + 3]) << 8);
            br.pos += 4;
            if ((len ^ 0xffffu) != nlen) throw IoError("inflate: stored block length check failed");
            if (br.pos + len > br.size) throw IoError("inflate: truncated stored data");
            out.insert(out.end(), br.data + br.pos, br.data + br.pos + len);
            br.pos += len;
        } else if (btype == 1 || btype == 2) {
            Huffman litlen, dist;
            if (btype == 1) {
                int ll[288], dl[30];
                for (int i = 0; i < 144; ++i) ll[i] = 8;
                for (int i = 144; i < 256; ++i) ll[i] = 9;
                for (int i = 256; i < 280; ++i) ll[i] = 7;
                for (int i = 280; i < 288; ++i) ll[i] = 8;
                for (int i = 0; i < 30; ++i) dl[i] = 5;
                litlen = build_huffman(ll, 288);
                dist = build_huffman(dl, 30);
            } else {
                static const int order[19] = {16, 17, 18, 0, 8, 7, 9, 6, 10, 5,
                                              11, 4,  12, 3, 13, 2, 14, 1, 15};
                const int hlit = br.bits(5) + 257;
                const int hdist = br.bits(5) + 1;
                const int hclen = br.bits(4) + 4;
                int cl[19] = {};
                for (int i = 0; i < hclen; ++i) cl[order[i]] = br.bits(3);
                const Huffman clh = build_huffman(cl, 19);
                int lengths[288 + 30] = {};
                int i = 0;
                while (i < hlit + hdist) {
                    const int sym = decode(br, clh);
                    if (sym < 16) {
                        lengths[i++] = sym;
                    } else if (sym == 16) {
                        if (i == 0) throw IoError("inflate: repeat with no previous length");
                        const int prev = lengths[i - 1];
                        for (int rep = 3 + br.bits(2); rep > 0 && i < hlit + hdist; --rep)
                            lengths[i++] = prev;
                    } else if (sym == 17) {
                        for (int rep = 3 + br.bits(3); rep > 0 && i < hlit + hdist; --rep)
                            lengths[i++] = 0;
                    } else {
                        for (int rep = 11 + br.bits(7); rep > 0 && i < hlit + hdist; --rep)
                            lengths[i++] = 0;
                    }
                }
                litlen = build_huffman(lengths, hlit);
                dist = build_huffman(lengths + hlit, hdist);
            }
            for (;;) {
                const int sym = decode(br, litlen);
                if (sym < 256) {
                    out.push_back(static_cast<unsigned char>(sym));
                } else if (sym == 256) {
                    break;
                } else {
                    if (sym > 285) throw IoError("inflate: invalid length symbol");
                    const int len = kLenBase[sym - 257] + br.bits(kLenExtra[sym - 257]);
                    const int dsym = decode(br, dist);
                    if (dsym > 29) throw IoError("inflate: invalid distance symbol");
                    const std::size_t d =
                        std::size_t(kDistBase[dsym]) + std::size_t(br.bits(kDistExtra[dsym]));
                    if (d > out.size()) throw IoError("inflate: distance beyond output");
                    for (int c = 0; c < len; ++c) out.push_back(out[out.size() - d]);
                }
            }
        } else {
            throw IoError("inflate: reserved block type");
        }
        if (bfinal) break;
    }
    return out;
}

Bytes zlib_decompress(const unsigned char* data, std::size_t size) {
    if (size < 6) throw IoError("zlib: stream too short");
    if ((data[0] & 0x0f) != 8) throw IoError("zlib: unsupported compression method");
    if (data[1] & 0x20) throw IoError("zlib: preset dictionaries unsupported");
    if (((unsigned(data[0]) << 8) | data[1]) % 31 != 0) throw IoError("zlib: bad header check");
    Bytes out = inflate(data + 2, size - 2 - 4);
    const std::uint32_t want = (std::uint32_t(data[size - 4]) << 24) |
                               (std::uint32_t(data[size - 3]) << 16) |
                               (std::uint32_t(data[size - 2]) << 8) | data[size - 1];
    if (adler32(out.data(), out.size()) != want) throw IoError("zlib: adler32 mismatch");
    return out;
}

Bytes zlib_compress_stored(const unsigned char* data, std::size_t size) {
    Bytes out;
    out.push_back(0x78);
    out.push_back(0x01);
    std::size_t off = 0;
    do {
        const std::size_t chunk = std::min<std::size_t>(size - off, 65535);
        const bool final = off + chunk == size;
        out.push_back(final ? 1 : 0);
        out.push_back(chunk & 0xff);
        out.push_back((chunk >> 8) & 0xff);
        out.push_back(~chunk & 0xff);
        out.push_back((~chunk >> 8) & 0xff);
        out.insert(out.end(), data + off, data + off + chunk);
        off += chunk;
    } while (off < size);
    const std::uint32_t ad = adler32(data, size);
    out.push_back((ad >> 24) & 0xff);
    out.push_back((ad >> 16) & 0xff);
    out.push_back((ad >> 8) & 0xff);
    out.push_back(ad & 0xff);
    return out;
}

std::uint32_t be32(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | p[3];
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

} // namespace

Image load_png(const std::string& path) {
    const Bytes file = read_file(path);
    static const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    if (file.size() < 8 || std::memcmp(file.data(), sig, 8) != 0)
        throw IoError(path + ": not a PNG file");

    std::size_t w = 0, h = 0;
    int bit_depth = 0, color_type = -1;
    Bytes idat;
    std::size_t pos = 8;
    bool done = false;
    while (!done) {
        if (pos + 12 > file.size())
            throw IoError(path + ": truncated chunk at byte offset " + std::to_string(pos));
        const std::uint32_t len = be32(&file[pos]);
        const char* type = reinterpret_cast<const char*>(&file[pos + 4]);
        if (pos + 12 + len > file.size())
            throw IoError(path + ": truncated chunk data at byte offset " + std::to_string(pos));
        const std::uint32_t want_crc = be32(&file[pos + 8 + len]);
        if (crc32(&file[pos + 4], len + 4) != want_crc)
            throw IoError(path + ": chunk CRC mismatch at byte offset " + std::to_string(pos));
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw IoError(path + ": bad IHDR length");
            w = be32(&file[pos + 8]);
            h = be32(&file[pos + 12]);
            bit_depth = file[pos + 16];
            color_type = file[pos + 17];
            if (file[pos + 18] != 0 || file[pos + 19] != 0)
                throw IoError(path + ": unsupported compression/filter method");
            if (file[pos + 20] != 0) throw IoError(path + ": interlaced PNG unsupported");
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), &file[pos + 8], &file[pos + 8 + len]);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            done = true;
        }
        pos += 12 + len;
    }
    if (w == 0 || h == 0) throw IoError(path + ": missing IHDR");
    if (bit_depth != 8) throw IoError(path + ": only 8-bit PNG supported");
    int in_ch;
    switch (color_type) {
        case 0: in_ch = 1; break;
        case 2: in_ch = 3; break;
        case 4: in_ch = 2; break;
        case 6: in_ch = 4; break;
        default: throw IoError(path + ": palette/unknown color type unsupported");
    }

    const Bytes raw = zlib_decompress(idat.data(), idat.size());
    const std::size_t stride = w * std::size_t(in_ch);
    if (raw.size() != (stride + 1) * h)
        throw IoError(path + ": decompressed size mismatch");

    Bytes recon(stride * h);
    for (std::size_t y = 0; y < h; ++y) {
        const unsigned char filter = raw[y * (stride + 1)];
        const unsigned char* src = &raw[y * (stride + 1) + 1];
        unsigned char* dst = &recon[y * stride];
        const unsigned char* prior = y > 0 ? &recon[(y - 1) * stride] : nullptr;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= std::size_t(in_ch) ? dst[i - in_ch] : 0;
            const int b = prior ? prior[i] : 0;
            const int c = (prior && i >= std::size_t(in_ch)) ? prior[i - in_ch] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw IoError(path + ": unknown scanline filter");
            }
            dst[i] = static_cast<unsigned char>(v & 0xff);
        }
    }

    const std::size_t out_ch = in_ch >= 3 ? 3 : 1;
    Image img(h, w, out_ch);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < out_ch; ++c)
                img.at(y, x, c) = recon[y * stride + x * in_ch + c] / 255.0f;
    return img;
}

Image load_ppm(const std::string& path) {
    const Bytes file = read_file(path);
    std::size_t pos = 0;
    auto token = [&]() -> std::string {
        while (pos < file.size()) {
            if (std::isspace(file[pos])) {
                ++pos;
            } else if (file[pos] == '#') {
                while (pos < file.size() && file[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        std::string t;
        while (pos < file.size() && !std::isspace(file[pos])) t += char(file[pos++]);
        if (t.empty()) throw IoError(path + ": truncated header");
        return t;
    };
    const std::string magic = token();
    if (magic != "P6" && magic != "P5") throw IoError(path + ": expected P6/P5, got " + magic);
    const std::size_t w = std::stoul(token());
    const std::size_t h = std::stoul(token());
    const unsigned long maxval = std::stoul(token());
    if (maxval == 0 || maxval > 255) throw IoError(path + ": maxval must be in [1,255]");
    ++pos;  // single whitespace after maxval
    const std::size_t ch = magic == "P6" ? 3 : 1;
    if (pos + w * h * ch > file.size())
        throw IoError(path + ": truncated pixel data at byte offset " + std::to_string(pos));
    Image img(h, w, ch);
    for (std::size_t i = 0; i < w * h * ch; ++i)
        img.pixels[i] = file[pos + i] / static_cast<float>(maxval);
    return img;
}

Image load_image(const std::string& path) {
    auto ends_with = [&](const char* suf) {
        const std::size_t n = std::strlen(suf);
        return path.size() >= n && path.compare(path.size() - n, n, suf) == 0;
    };
    if (ends_with(".png") || ends_with(".PNG")) return load_png(path);
    if (ends_with(".ppm") || ends_with(".pgm")) return load_ppm(path);
    throw IoError(path + ": unsupported image format (png/ppm/pgm only)");
}

void save_png(const std::string& path, const Image& img) {
    const std::size_t ch = img.channels;
    const std::size_t stride = img.width * ch;
    Bytes raw((stride + 1) * img.height);
    for (std::size_t y = 0; y < img.height; ++y) {
        raw[y * (stride + 1)] = 0;  // filter: none
        for (std::size_t x = 0; x < img.width; ++x)
            for (std::size_t c = 0; c < ch; ++c) {
                float v = img.at(y, x, c);
                v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
                raw[y * (stride + 1) + 1 + x * ch + c] =
                    static_cast<unsigned char>(v * 255.0f + 0.5f);
            }
    }
    const Bytes z = zlib_compress_stored(raw.data(), raw.size());

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("save_png: cannot open " + path);
    static const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    os.write(reinterpret_cast<const char*>(sig), 8);
    auto chunk = [&](const char* type, const Bytes& data) {
        unsigned char hdr[8] = {
            static_cast<unsigned char>(data.size() >> 24),
            static_cast<unsigned char>(data.size() >> 16),
            static_cast<unsigned char>(data.size() >> 8),
            static_cast<unsigned char>(data.size()),
            static_cast<unsigned char>(type[0]), static_cast<unsigned char>(type[1]),
            static_cast<unsigned char>(type[2]), static_cast<unsigned char>(type[3])};
        os.write(reinterpret_cast<const char*>(hdr), 8);
        os.write(reinterpret_cast<const char*>(data.data()),
                 static_cast<std::streamsize>(data.size()));
        std::uint32_t crc = crc32(hdr + 4, 4);
        crc = crc32(data.data(), data.size(), crc);
        unsigned char tail[4] = {static_cast<unsigned char>(crc >> 24),
                                 static_cast<unsigned char>(crc >> 16),
                                 static_cast<unsigned char>(crc >> 8),
                                 static_cast<unsigned char>(crc)};
        os.write(reinterpret_cast<const char*>(tail), 4);
    };
    Bytes ihdr(13);
    ihdr[0] = static_cast<unsigned char>(img.width >> 24);
    ihdr[1] = static_cast<unsigned char>(img.width >> 16);
    ihdr[2] = static_cast<unsigned char>(img.width >> 8);
    ihdr[3] = static_cast<unsigned char>(img.width);
    ihdr[4] = static_cast<unsigned char>(img.height >> 24);
    ihdr[5] = static_cast<unsigned char>(img.height >> 16);
    ihdr[6] = static_cast<unsigned char>(img.height >> 8);
    ihdr[7] = static_cast<unsigned char>(img.height);
    ihdr[8] = 8;
    ihdr[9] = ch == 3 ? 2 : 0;
    ihdr[10] = ihdr[11] = ihdr[12] = 0;
    chunk("IHDR", ihdr);
    chunk("IDAT", z);
    chunk("IEND", Bytes{});
    if (!os) throw IoError("save_png: write failed for " + path);
}

void save_ppm(const std::string& path, const Image& img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("save_ppm: cannot open " + path);
    os << (img.channels == 3 ? "P6" : "P5") << "\n"
       << img.width << " " << img.height << "\n255\n";
    for (float vf : img.pixels) {
        float v = vf < 0.0f ? 0.0f : (vf > 1.0f ? 1.0f : vf);
        os.put(static_cast<char>(static_cast<unsigned char>(v * 255.0f + 0.5f)));
    }
    if (!os) throw IoError("save_ppm: write failed for " + path);
}

} // namespace ddcl::imgio
