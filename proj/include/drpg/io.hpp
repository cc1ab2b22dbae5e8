#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drpg/plane.hpp"

namespace drpg {

struct FrameSequence {
    int width = 0;
    int height = 0;
    std::vector<Plane> frames;  // luma only, display order

    std::size_t size() const noexcept { return frames.size(); }
};

enum class SequenceFormat { Auto, Yuv420, Y4m };

/// Reads luma planes from raw planar 4:2:0 (.yuv, geometry required) or
/// YUV4MPEG2 (.y4m). Chroma is skipped.
FrameSequence read_sequence(const std::filesystem::path& path, SequenceFormat format = SequenceFormat::Auto,
                            std::optional<int> width = std::nullopt, std::optional<int> height = std::nullopt);

/// Writes 4:2:0 with neutral (128) chroma.
void write_y4m(const FrameSequence& seq, const std::filesystem::path& path, int fps = 25);
void write_yuv420(const FrameSequence& seq, const std::filesystem::path& path);

void write_plane_pgm(const Plane& plane, const std::filesystem::path& path);
Plane read_plane_pgm(const std::filesystem::path& path);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws when absent.
    std::size_t column(std::string_view name) const;
};

void write_csv(const CsvTable& table, const std::filesystem::path& path);
CsvTable read_csv(const std::filesystem::path& path);

/// Fixed-point formatting; infinities print as "inf"/"-inf".
std::string format_number(double value, int precision = 6);
double parse_number(std::string_view text);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace drpg
