#include "ifc/image.hpp"

#include <cctype>
#include <optional>

#include "ifc/util.hpp"

namespace ifc {

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::optional<std::string> next_token(const std::vector<uint8_t>& buf, size_t& pos) {
    while (pos < buf.size()) {
        if (buf[pos] == '#') {
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
        } else if (std::isspace(buf[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    if (pos >= buf.size()) return std::nullopt;
    size_t start = pos;
    while (pos < buf.size() && !std::isspace(buf[pos]) && buf[pos] != '#') ++pos;
    return std::string(buf.begin() + start, buf.begin() + pos);
}

int parse_dim(const std::optional<std::string>& tok, const char* what) {
    if (!tok) fail(std::string("malformed header: missing ") + what);
    for (char c : *tok)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            fail(std::string("malformed header: bad ") + what + " '" + *tok + "'");
    long v = std::stol(*tok);
    if (v < 1 || v > 0xffff) fail(std::string("malformed header: ") + what + " out of range");
    return int(v);
}

struct PnmHeader {
    int width, height;
    size_t payload_pos;
};

PnmHeader parse_pnm(const std::vector<uint8_t>& buf, const char* magic) {
    size_t pos = 0;
    auto m = next_token(buf, pos);
    if (!m) fail("malformed header: empty file");
    if (*m != magic) fail("unsupported magic '" + *m + "' (want " + magic + ")");
    int w = parse_dim(next_token(buf, pos), "width");
    int h = parse_dim(next_token(buf, pos), "height");
    auto maxval = next_token(buf, pos);
    if (!maxval) fail("malformed header: missing max value");
    if (*maxval != "255") fail("unsupported max value '" + *maxval + "' (want 255)");
    // Exactly one whitespace byte separates the header from the payload.
    if (pos >= buf.size() || !std::isspace(buf[pos])) fail("malformed header: missing separator");
    ++pos;
    return {w, h, pos};
}

}  // namespace

RgbImage read_ppm(const std::string& path) {
    auto buf = read_file(path);
    auto hdr = parse_pnm(buf, "P6");
    size_t need = size_t(hdr.width) * hdr.height * 3;
    if (buf.size() - hdr.payload_pos < need) fail("truncated payload");
    RgbImage img(hdr.width, hdr.height);
    std::copy_n(buf.begin() + hdr.payload_pos, need, img.data.begin());
    return img;
}

void write_ppm(const RgbImage& image, const std::string& path) {
    ByteWriter w;
    w.text("P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n");
    w.bytes(image.data);
    write_file(path, w.data());
}

PlaneImage read_pgm(const std::string& path) {
    auto buf = read_file(path);
    auto hdr = parse_pnm(buf, "P5");
    size_t need = size_t(hdr.width) * hdr.height;
    if (buf.size() - hdr.payload_pos < need) fail("truncated payload");
    PlaneImage img(hdr.width, hdr.height);
    std::copy_n(buf.begin() + hdr.payload_pos, need, img.data.begin());
    return img;
}

void write_pgm(const PlaneImage& plane, const std::string& path) {
    ByteWriter w;
    w.text("P5\n" + std::to_string(plane.width) + " " + std::to_string(plane.height) + "\n255\n");
    w.bytes(plane.data);
    write_file(path, w.data());
}

}  // namespace ifc
