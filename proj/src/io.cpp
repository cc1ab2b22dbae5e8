#include "drpg/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "drpg/error.hpp"

namespace drpg {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file_bytes(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw Error(ErrorKind::Io, "read failed for '" + path.string() + "'");
    return bytes;
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorKind::Io, "cannot open '" + tmp.string() + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out)
            throw Error(ErrorKind::Io, "write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorKind::Io, "cannot move '" + tmp.string() + "' to '" + path.string() + "'");
    }
}

void write_file_atomic(const fs::path& path, std::string_view text)
{
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

SequenceFormat detect_format(const fs::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".y4m")
        return SequenceFormat::Y4m;
    if (ext == ".yuv")
        return SequenceFormat::Yuv420;
    throw Error(ErrorKind::InvalidArgument, "cannot infer sequence format from '" + path.string() + "' (use .yuv or .y4m)");
}

void check_420_dims(int w, int h, const fs::path& path)
{
    if (w <= 0 || h <= 0)
        throw Error(ErrorKind::InvalidArgument, "'" + path.string() + "': frame dimensions must be positive");
    if (w % 2 != 0 || h % 2 != 0)
        throw Error(ErrorKind::Format, "'" + path.string() + "': 4:2:0 needs even dimensions, got " +
                                           std::to_string(w) + "x" + std::to_string(h));
}

FrameSequence read_raw_420(const fs::path& path, std::optional<int> width, std::optional<int> height)
{
    if (!width || !height)
        throw Error(ErrorKind::InvalidArgument, "'" + path.string() + "': raw YUV input needs width and height");
    check_420_dims(*width, *height, path);
    const auto bytes = read_file_bytes(path);
    const std::size_t luma = static_cast<std::size_t>(*width) * *height;
    const std::size_t frame = luma * 3 / 2;
    if (bytes.size() % frame != 0) {
        const std::size_t whole = bytes.size() / frame;
        throw Error(ErrorKind::Format, "'" + path.string() + "': partial frame at byte offset " +
                                           std::to_string(whole * frame) + " (file length " +
                                           std::to_string(bytes.size()) + " is not a multiple of " +
                                           std::to_string(frame) + ")");
    }
    if (bytes.empty())
        throw Error(ErrorKind::Format, "'" + path.string() + "': no frames");
    FrameSequence seq{*width, *height, {}};
    for (std::size_t off = 0; off < bytes.size(); off += frame)
        seq.frames.emplace_back(*width, *height,
                                std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(off),
                                                          bytes.begin() + static_cast<std::ptrdiff_t>(off + luma)));
    return seq;
}

FrameSequence read_y4m(const fs::path& path)
{
    const auto bytes = read_file_bytes(path);
    const auto line_end = [&](std::size_t from) {
        auto it = std::find(bytes.begin() + static_cast<std::ptrdiff_t>(from), bytes.end(), '\n');
        if (it == bytes.end())
            throw Error(ErrorKind::Format, "'" + path.string() + "': unterminated header at byte offset " +
                                               std::to_string(from));
        return static_cast<std::size_t>(it - bytes.begin());
    };

    const std::size_t header_end = line_end(0);
    std::istringstream header(std::string(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(header_end)));
    std::string token;
    header >> token;
    if (token != "YUV4MPEG2")
        throw Error(ErrorKind::Format, "'" + path.string() + "': bad magic, expected YUV4MPEG2");

    int w = 0, h = 0;
    std::string colorspace = "420";
    while (header >> token) {
        switch (token[0]) {
        case 'W': w = std::stoi(token.substr(1)); break;
        case 'H': h = std::stoi(token.substr(1)); break;
        case 'C': colorspace = token.substr(1); break;
        default: break;  // frame rate, interlacing, aspect, extensions
        }
    }
    std::size_t chroma = 0;
    const std::size_t luma = static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0);
    if (colorspace.rfind("420", 0) == 0) {
        check_420_dims(w, h, path);
        chroma = luma / 2;
    } else if (colorspace == "422") {
        chroma = luma;
    } else if (colorspace == "444") {
        chroma = luma * 2;
    } else if (colorspace == "mono") {
        chroma = 0;
    } else {
        throw Error(ErrorKind::Format, "'" + path.string() + "': unsupported colorspace C" + colorspace);
    }
    if (w <= 0 || h <= 0)
        throw Error(ErrorKind::Format, "'" + path.string() + "': header lacks positive W/H");

    FrameSequence seq{w, h, {}};
    std::size_t pos = header_end + 1;
    while (pos < bytes.size()) {
        const std::size_t fend = line_end(pos);
        if (fend - pos < 5 || std::string(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                          bytes.begin() + static_cast<std::ptrdiff_t>(pos + 5)) != "FRAME")
            throw Error(ErrorKind::Format, "'" + path.string() + "': expected FRAME marker at byte offset " +
                                               std::to_string(pos));
        pos = fend + 1;
        if (bytes.size() - pos < luma + chroma)
            throw Error(ErrorKind::Format, "'" + path.string() + "': truncated frame at byte offset " +
                                               std::to_string(pos));
        seq.frames.emplace_back(w, h,
                                std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                                          bytes.begin() + static_cast<std::ptrdiff_t>(pos + luma)));
        pos += luma + chroma;
    }
    if (seq.frames.empty())
        throw Error(ErrorKind::Format, "'" + path.string() + "': no frames");
    return seq;
}

}  // namespace

FrameSequence read_sequence(const fs::path& path, SequenceFormat format, std::optional<int> width,
                            std::optional<int> height)
{
    if (format == SequenceFormat::Auto)
        format = detect_format(path);
    return format == SequenceFormat::Y4m ? read_y4m(path) : read_raw_420(path, width, height);
}

namespace {

std::vector<std::uint8_t> pack_420(const FrameSequence& seq, const char* frame_marker)
{
    std::vector<std::uint8_t> out;
    const std::size_t chroma = static_cast<std::size_t>(seq.width / 2) * (seq.height / 2) * 2;
    for (const Plane& p : seq.frames) {
        if (p.width() != seq.width || p.height() != seq.height)
            throw Error(ErrorKind::ShapeMismatch, "sequence frame size differs from sequence geometry");
        if (frame_marker)
            out.insert(out.end(), frame_marker, frame_marker + std::char_traits<char>::length(frame_marker));
        out.insert(out.end(), p.samples().begin(), p.samples().end());
        out.insert(out.end(), chroma, std::uint8_t{128});
    }
    return out;
}

}  // namespace

void write_y4m(const FrameSequence& seq, const fs::path& path, int fps)
{
    check_420_dims(seq.width, seq.height, path);
    std::string header = "YUV4MPEG2 W" + std::to_string(seq.width) + " H" + std::to_string(seq.height) + " F" +
                         std::to_string(fps) + ":1 Ip A1:1 C420\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    auto body = pack_420(seq, "FRAME\n");
    bytes.insert(bytes.end(), body.begin(), body.end());
    write_file_atomic(path, bytes);
}

void write_yuv420(const FrameSequence& seq, const fs::path& path)
{
    check_420_dims(seq.width, seq.height, path);
    write_file_atomic(path, pack_420(seq, nullptr));
}

void write_plane_pgm(const Plane& plane, const fs::path& path)
{
    std::string header = "P5\n" + std::to_string(plane.width()) + " " + std::to_string(plane.height()) + "\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.insert(bytes.end(), plane.samples().begin(), plane.samples().end());
    write_file_atomic(path, bytes);
}

Plane read_plane_pgm(const fs::path& path)
{
    const auto bytes = read_file_bytes(path);
    std::size_t pos = 0;
    auto next_token = [&]() {
        for (;;) {
            while (pos < bytes.size() && std::isspace(bytes[pos]))
                ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
                continue;
            }
            break;
        }
        std::string tok;
        while (pos < bytes.size() && !std::isspace(bytes[pos]))
            tok.push_back(static_cast<char>(bytes[pos++]));
        if (tok.empty())
            throw Error(ErrorKind::Format, "'" + path.string() + "': truncated PGM header");
        return tok;
    };
    if (next_token() != "P5")
        throw Error(ErrorKind::Format, "'" + path.string() + "': not a binary PGM (P5)");
    const int w = std::stoi(next_token());
    const int h = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (maxval <= 0 || maxval > 255)
        throw Error(ErrorKind::Format, "'" + path.string() + "': unsupported maxval " + std::to_string(maxval));
    ++pos;  // single whitespace after maxval
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (bytes.size() < pos + n)
        throw Error(ErrorKind::Format, "'" + path.string() + "': truncated PGM raster");
    std::vector<std::uint8_t> samples(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    if (maxval != 255)
        for (auto& s : samples)
            s = static_cast<std::uint8_t>((s * 255 + maxval / 2) / maxval);
    return Plane(w, h, std::move(samples));
}

std::size_t CsvTable::column(std::string_view name) const
{
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw Error(ErrorKind::Format, "CSV has no column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
}

void write_csv(const CsvTable& table, const fs::path& path)
{
    std::string text;
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i)
                text += ',';
            text += cells[i];
        }
        text += '\n';
    };
    emit(table.header);
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size())
            throw Error(ErrorKind::ShapeMismatch, "CSV row width " + std::to_string(row.size()) +
                                                      " differs from header width " +
                                                      std::to_string(table.header.size()));
        emit(row);
    }
    write_file_atomic(path, text);
}

CsvTable read_csv(const fs::path& path)
{
    const auto bytes = read_file_bytes(path);
    std::string text(bytes.begin(), bytes.end());
    std::istringstream in(text);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            std::size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
        if (first) {
            table.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != table.header.size())
                throw Error(ErrorKind::Format, "'" + path.string() + "': row " + std::to_string(table.rows.size() + 1) +
                                                   " has " + std::to_string(cells.size()) + " cells, header has " +
                                                   std::to_string(table.header.size()));
            table.rows.push_back(std::move(cells));
        }
    }
    if (first)
        throw Error(ErrorKind::Format, "'" + path.string() + "': empty CSV");
    return table;
}

std::string format_number(double value, int precision)
{
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    if (std::isnan(value))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, value);
    return buf;
}

double parse_number(std::string_view text)
{
    std::string s(text);
    if (s == "inf")
        return INFINITY;
    if (s == "-inf")
        return -INFINITY;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty())
        throw Error(ErrorKind::Format, "not a number: '" + s + "'");
    return v;
}

}  // namespace drpg
