#include "adiff/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace adiff {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void fail(const fs::path& p, const std::string& msg) {
    throw std::runtime_error(fmt::format("{}: {}", p.string(), msg));
}

[[noreturn]] void fail_at(const fs::path& p, std::size_t offset, const std::string& msg) {
    throw std::runtime_error(fmt::format("{}: byte {}: {}", p.string(), offset, msg));
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(p, "cannot open file");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(p, "read error");
    return buf;
}

std::size_t element_size(ElementType t) {
    switch (t) {
        case ElementType::uint8: return 1;
        case ElementType::int16:
        case ElementType::uint16: return 2;
        case ElementType::float32: return 4;
        case ElementType::float64: return 8;
    }
    return 0;  // unreachable
}

const char* met_name(ElementType t) {
    switch (t) {
        case ElementType::uint8: return "MET_UCHAR";
        case ElementType::int16: return "MET_SHORT";
        case ElementType::uint16: return "MET_USHORT";
        case ElementType::float32: return "MET_FLOAT";
        case ElementType::float64: return "MET_DOUBLE";
    }
    return "";  // unreachable
}

// ---------------------------------------------------------------- PGM ----

struct Cursor {
    const std::string& buf;
    const fs::path& path;
    std::size_t pos = 0;
};

void skip_space_and_comments(Cursor& c) {
    while (c.pos < c.buf.size()) {
        const unsigned char ch = static_cast<unsigned char>(c.buf[c.pos]);
        if (std::isspace(ch)) {
            ++c.pos;
        } else if (ch == '#') {
            while (c.pos < c.buf.size() && c.buf[c.pos] != '\n') ++c.pos;
        } else {
            break;
        }
    }
}

long read_pgm_int(Cursor& c, const char* what, std::size_t* token_at = nullptr) {
    skip_space_and_comments(c);
    if (c.pos >= c.buf.size()) fail_at(c.path, c.pos, fmt::format("unexpected end of file, expected {}", what));
    if (!std::isdigit(static_cast<unsigned char>(c.buf[c.pos])))
        fail_at(c.path, c.pos, fmt::format("expected {}, found non-digit", what));
    if (token_at) *token_at = c.pos;
    long value = 0;
    while (c.pos < c.buf.size() && std::isdigit(static_cast<unsigned char>(c.buf[c.pos]))) {
        value = value * 10 + (c.buf[c.pos] - '0');
        if (value > 1000000000L) fail_at(c.path, c.pos, fmt::format("{} is implausibly large", what));
        ++c.pos;
    }
    return value;
}

Volume read_pgm(const std::string& buf, const fs::path& path, bool binary) {
    Cursor c{buf, path, 2};  // past the magic
    const long w = read_pgm_int(c, "width");
    const long h = read_pgm_int(c, "height");
    const long maxval = read_pgm_int(c, "maxval");
    if (w < 1 || h < 1) fail_at(path, c.pos, "image dimensions must be positive");
    if (maxval < 1 || maxval > 65535) fail_at(path, c.pos, "maxval must lie in [1, 65535]");
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);

    Volume v;
    if (binary) {
        if (c.pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[c.pos])))
            fail_at(path, c.pos, "expected single whitespace byte after maxval");
        ++c.pos;
        const std::size_t bytes = maxval > 255 ? 2 : 1;
        const std::size_t need = n * bytes;
        const std::size_t have = buf.size() - c.pos;
        if (have < need)
            fail_at(path, c.pos, fmt::format("truncated payload: expected {} bytes, found {}", need, have));
        v = Volume(static_cast<int>(w), static_cast<int>(h));
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t at = c.pos + i * bytes;
            long value;
            if (bytes == 1) {
                value = static_cast<unsigned char>(buf[at]);
            } else {  // 16-bit samples are big-endian in PGM
                value = static_cast<long>(static_cast<unsigned char>(buf[at])) << 8 |
                        static_cast<unsigned char>(buf[at + 1]);
            }
            if (value > maxval)
                fail_at(path, at, fmt::format("sample value {} exceeds maxval {}", value, maxval));
            v.data[i] = static_cast<double>(value);
        }
    } else {
        // Cheap pre-check so a lying header cannot force a huge allocation:
        // every ASCII sample takes at least one byte.
        if (n > buf.size() - std::min(c.pos, buf.size()))
            fail_at(path, c.pos,
                    fmt::format("truncated payload: {} samples cannot fit in {} remaining bytes", n,
                                buf.size() - c.pos));
        v = Volume(static_cast<int>(w), static_cast<int>(h));
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t at = 0;
            const long value = read_pgm_int(c, "sample", &at);
            if (value > maxval)
                fail_at(path, at, fmt::format("sample value {} exceeds maxval {}", value, maxval));
            v.data[i] = static_cast<double>(value);
        }
    }
    return v;
}

// ----------------------------------------------------------- MetaImage ----

struct MetaLine {
    std::string key;
    std::string value;
    std::size_t offset;
};

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t b = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > b) out.push_back(s.substr(b, i - b));
    }
    return out;
}

long parse_long(const std::string& tok, const fs::path& path, std::size_t offset, const char* what) {
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(tok, &used);
    } catch (const std::exception&) {
        fail_at(path, offset, fmt::format("cannot parse {} '{}'", what, tok));
    }
    if (used != tok.size()) fail_at(path, offset, fmt::format("cannot parse {} '{}'", what, tok));
    return v;
}

double parse_double(const std::string& tok, const fs::path& path, std::size_t offset, const char* what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception&) {
        fail_at(path, offset, fmt::format("cannot parse {} '{}'", what, tok));
    }
    if (used != tok.size()) fail_at(path, offset, fmt::format("cannot parse {} '{}'", what, tok));
    return v;
}

bool parse_bool(const MetaLine& l, const fs::path& path) {
    if (l.value == "True" || l.value == "true") return true;
    if (l.value == "False" || l.value == "false") return false;
    fail_at(path, l.offset, fmt::format("cannot parse boolean '{}' for {}", l.value, l.key));
}

double decode_sample(const unsigned char* b, ElementType t) {
    switch (t) {
        case ElementType::uint8: return static_cast<double>(b[0]);
        case ElementType::int16: {
            const std::uint16_t u = static_cast<std::uint16_t>(b[0] | b[1] << 8);
            return static_cast<double>(std::bit_cast<std::int16_t>(u));
        }
        case ElementType::uint16: return static_cast<double>(static_cast<std::uint16_t>(b[0] | b[1] << 8));
        case ElementType::float32: {
            std::uint32_t u = 0;
            for (int i = 3; i >= 0; --i) u = u << 8 | b[i];
            return static_cast<double>(std::bit_cast<float>(u));
        }
        case ElementType::float64: {
            std::uint64_t u = 0;
            for (int i = 7; i >= 0; --i) u = u << 8 | b[i];
            return std::bit_cast<double>(u);
        }
    }
    return 0.0;  // unreachable
}

Volume read_metaimage(const std::string& buf, const fs::path& path) {
    std::vector<MetaLine> lines;
    std::size_t pos = 0;
    std::size_t payload_offset = std::string::npos;
    std::string datafile;
    while (pos < buf.size()) {
        const std::size_t line_start = pos;
        std::size_t eol = buf.find('\n', pos);
        const std::size_t line_end = eol == std::string::npos ? buf.size() : eol;
        std::string line = buf.substr(line_start, line_end - line_start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = eol == std::string::npos ? buf.size() : eol + 1;

        if (trim(line).empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail_at(path, line_start, "malformed header line, expected 'Key = Value'");
        MetaLine l{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_start};
        if (l.key.empty()) fail_at(path, line_start, "empty key in header line");
        const bool is_datafile = l.key == "ElementDataFile";
        if (is_datafile) datafile = l.value;
        lines.push_back(std::move(l));
        if (is_datafile) {
            payload_offset = pos;
            break;
        }
    }
    if (payload_offset == std::string::npos) fail(path, "missing ElementDataFile key");

    int ndims = 0;
    std::vector<long> dims;
    std::vector<double> spacing;
    ElementType type = ElementType::uint8;
    bool have_type = false;
    std::size_t dims_offset = 0;

    for (const MetaLine& l : lines) {
        if (l.key == "NDims") {
            ndims = static_cast<int>(parse_long(l.value, path, l.offset, "NDims"));
            if (ndims != 2 && ndims != 3)
                fail_at(path, l.offset, fmt::format("unsupported NDims {}, only 2 and 3", ndims));
        } else if (l.key == "DimSize") {
            dims_offset = l.offset;
            for (const std::string& tok : split_ws(l.value))
                dims.push_back(parse_long(tok, path, l.offset, "DimSize entry"));
        } else if (l.key == "ElementType") {
            have_type = true;
            if (l.value == "MET_UCHAR") type = ElementType::uint8;
            else if (l.value == "MET_SHORT") type = ElementType::int16;
            else if (l.value == "MET_USHORT") type = ElementType::uint16;
            else if (l.value == "MET_FLOAT") type = ElementType::float32;
            else if (l.value == "MET_DOUBLE") type = ElementType::float64;
            else fail_at(path, l.offset, fmt::format("unsupported ElementType '{}'", l.value));
        } else if (l.key == "ElementSpacing") {
            for (const std::string& tok : split_ws(l.value)) {
                const double sp = parse_double(tok, path, l.offset, "ElementSpacing entry");
                if (!(sp > 0.0)) fail_at(path, l.offset, "ElementSpacing entries must be positive");
                spacing.push_back(sp);
            }
        } else if (l.key == "ElementByteOrderMSB" || l.key == "BinaryDataByteOrderMSB") {
            if (parse_bool(l, path))
                fail_at(path, l.offset, "big-endian payloads are not supported (little-endian only)");
        } else if (l.key == "CompressedData") {
            if (parse_bool(l, path)) fail_at(path, l.offset, "compressed payloads are not supported");
        } else if (l.key == "ElementNumberOfChannels") {
            if (parse_long(l.value, path, l.offset, "ElementNumberOfChannels") != 1)
                fail_at(path, l.offset, "multi-channel images are not supported");
        }
        // Unknown keys are ignored on purpose.
    }

    if (ndims == 0) fail(path, "missing required key NDims");
    if (dims.empty()) fail(path, "missing required key DimSize");
    if (!have_type) fail(path, "missing required key ElementType");
    if (static_cast<int>(dims.size()) != ndims)
        fail_at(path, dims_offset, fmt::format("DimSize has {} entries, NDims is {}", dims.size(), ndims));
    std::size_t n = 1;
    for (const long d : dims) {
        if (d < 1 || d > (1L << 30)) fail_at(path, dims_offset, "DimSize entries must lie in [1, 2^30]");
        if (n > std::numeric_limits<std::size_t>::max() / 16 / static_cast<std::size_t>(d))
            fail_at(path, dims_offset, "volume too large");
        n *= static_cast<std::size_t>(d);
    }
    if (!spacing.empty() && static_cast<int>(spacing.size()) != ndims)
        fail(path, fmt::format("ElementSpacing has {} entries, NDims is {}", spacing.size(), ndims));

    std::string external;
    const std::string* payload = nullptr;
    std::size_t base_offset = 0;
    fs::path payload_path = path;
    if (datafile == "LOCAL") {
        payload = &buf;
        base_offset = payload_offset;
    } else if (datafile == "LIST" || datafile.find('%') != std::string::npos) {
        fail(path, fmt::format("unsupported ElementDataFile '{}'", datafile));
    } else {
        payload_path = path.parent_path() / datafile;
        external = read_file(payload_path);
        payload = &external;
    }

    const std::size_t need = n * element_size(type);
    const std::size_t have = payload->size() - base_offset;
    if (need != have)
        fail_at(payload_path, base_offset,
                fmt::format("payload size mismatch: expected {} bytes, found {}", need, have));

    Volume v = ndims == 2 ? Volume(static_cast<int>(dims[0]), static_cast<int>(dims[1]))
                          : Volume(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                                   static_cast<int>(dims[2]));
    for (int a = 0; a < ndims && !spacing.empty(); ++a) v.spacing[a] = spacing[a];
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(payload->data()) + base_offset;
    const std::size_t es = element_size(type);
    for (std::size_t i = 0; i < n; ++i) v.data[i] = decode_sample(bytes + i * es, type);
    return v;
}

// -------------------------------------------------------------- writer ----

// Round-half-even, then clamp to [lo, hi]; bumps the clamp counter when the
// rounded value falls outside the range.
long quantize(double x, long lo, long hi, std::size_t& clamped) {
    if (std::isnan(x)) {
        ++clamped;
        return lo;
    }
    const double r = std::nearbyint(x);
    if (r < static_cast<double>(lo)) {
        ++clamped;
        return lo;
    }
    if (r > static_cast<double>(hi)) {
        ++clamped;
        return hi;
    }
    return static_cast<long>(r);
}

void append_le(std::string& out, std::uint64_t bits, std::size_t nbytes) {
    for (std::size_t i = 0; i < nbytes; ++i) out.push_back(static_cast<char>(bits >> (8 * i) & 0xff));
}

std::size_t encode_payload(const Volume& v, ElementType type, std::string& out) {
    std::size_t clamped = 0;
    out.reserve(v.size() * element_size(type));
    for (const double x : v.data) {
        switch (type) {
            case ElementType::uint8: append_le(out, static_cast<std::uint64_t>(quantize(x, 0, 255, clamped)), 1); break;
            case ElementType::int16: {
                const long q = quantize(x, -32768, 32767, clamped);
                append_le(out, std::bit_cast<std::uint16_t>(static_cast<std::int16_t>(q)), 2);
                break;
            }
            case ElementType::uint16: append_le(out, static_cast<std::uint64_t>(quantize(x, 0, 65535, clamped)), 2); break;
            case ElementType::float32: append_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)), 4); break;
            case ElementType::float64: append_le(out, std::bit_cast<std::uint64_t>(x), 8); break;
        }
    }
    return clamped;
}

void write_file(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) fail(p, "cannot open file for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(p, "write error");
}

std::size_t write_pgm(const Volume& v, const fs::path& path, bool binary, ElementType type) {
    if (v.naxes != 2) throw std::invalid_argument("write_volume: PGM is 2D-only");
    if (type != ElementType::uint8 && type != ElementType::uint16)
        throw std::invalid_argument("write_volume: PGM supports uint8 and uint16 only");
    const long maxval = type == ElementType::uint8 ? 255 : 65535;

    std::size_t clamped = 0;
    std::string out = fmt::format("{}\n{} {}\n{}\n", binary ? "P5" : "P2", v.dims[0], v.dims[1], maxval);
    if (binary) {
        for (const double x : v.data) {
            const long q = quantize(x, 0, maxval, clamped);
            if (maxval > 255) out.push_back(static_cast<char>(q >> 8 & 0xff));  // big-endian
            out.push_back(static_cast<char>(q & 0xff));
        }
    } else {
        int on_line = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            out += fmt::format("{}", quantize(v.data[i], 0, maxval, clamped));
            if (++on_line == 16 || i + 1 == v.size()) {
                out.push_back('\n');
                on_line = 0;
            } else {
                out.push_back(' ');
            }
        }
    }
    write_file(path, out);
    return clamped;
}

std::size_t write_metaimage(const Volume& v, const fs::path& path, ElementType type) {
    const bool detached = path.extension() == ".mhd";
    std::string dim_size = fmt::format("{} {}", v.dims[0], v.dims[1]);
    std::string spc = fmt::format("{} {}", v.spacing[0], v.spacing[1]);
    if (v.naxes == 3) {
        dim_size += fmt::format(" {}", v.dims[2]);
        spc += fmt::format(" {}", v.spacing[2]);
    }
    fs::path raw_path = path;
    raw_path.replace_extension(".raw");
    std::string header = fmt::format(
        "ObjectType = Image\n"
        "NDims = {}\n"
        "BinaryData = True\n"
        "BinaryDataByteOrderMSB = False\n"
        "CompressedData = False\n"
        "DimSize = {}\n"
        "ElementSpacing = {}\n"
        "ElementType = {}\n"
        "ElementDataFile = {}\n",
        v.naxes, dim_size, spc, met_name(type),
        detached ? raw_path.filename().string() : std::string("LOCAL"));

    std::string payload;
    const std::size_t clamped = encode_payload(v, type, payload);
    if (detached) {
        write_file(path, header);
        write_file(raw_path, payload);
    } else {
        write_file(path, header + payload);
    }
    return clamped;
}

}  // namespace

Volume read_volume(const std::filesystem::path& path) {
    const std::string buf = read_file(path);
    if (buf.size() >= 2 && buf[0] == 'P' && (buf[1] == '2' || buf[1] == '5'))
        return read_pgm(buf, path, buf[1] == '5');
    return read_metaimage(buf, path);
}

std::size_t write_volume(const Volume& v, const std::filesystem::path& path, FileFormat format,
                         ElementType type) {
    if (v.empty()) throw std::invalid_argument("write_volume: empty volume");
    switch (format) {
        case FileFormat::pgm_ascii: return write_pgm(v, path, false, type);
        case FileFormat::pgm_binary: return write_pgm(v, path, true, type);
        case FileFormat::metaimage: return write_metaimage(v, path, type);
    }
    throw std::invalid_argument("write_volume: unknown format");
}

FileFormat format_for_path(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".pgm") return FileFormat::pgm_binary;
    if (ext == ".mha" || ext == ".mhd") return FileFormat::metaimage;
    throw std::invalid_argument(
        fmt::format("{}: cannot infer file format from extension '{}'", path.string(), ext));
}

}  // namespace adiff
