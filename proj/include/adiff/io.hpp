#pragma once

#include <cstddef>
#include <filesystem>

#include "adiff/volume.hpp"

namespace adiff {

enum class FileFormat {
    pgm_ascii,   ///< PGM P2, 2D only, maxval 255 or 65535
    pgm_binary,  ///< PGM P5, 2D only, 16-bit samples big-endian per Netpbm
    metaimage,   ///< MetaImage subset, 2D/3D, little-endian payload
};

enum class ElementType { uint8, int16, uint16, float32, float64 };

/// Reads a PGM (P2/P5) or MetaImage file, sniffing the format from the
/// content. Supported MetaImage element types: MET_UCHAR, MET_SHORT,
/// MET_USHORT, MET_FLOAT, MET_DOUBLE; payloads must be little-endian and
/// either LOCAL or in a sibling raw file. Intensities are promoted to
/// double. Malformed input throws std::runtime_error with the byte offset
/// of the problem; the reader never crashes on arbitrary bytes.
Volume read_volume(const std::filesystem::path& path);

/// Writes the volume and returns how many samples had to be clamped to the
/// element type's range. Integer targets use round-half-even before
/// clamping; float64 round-trips bit-exactly. PGM formats require a 2D
/// volume and an unsigned integer element type. A ".mhd" MetaImage target
/// writes a detached header plus a sibling ".raw"; anything else embeds the
/// payload (ElementDataFile = LOCAL).
std::size_t write_volume(const Volume& v, const std::filesystem::path& path, FileFormat format,
                         ElementType type);

/// Default format for a path by extension: ".pgm" → pgm_binary,
/// ".mha"/".mhd" → metaimage. Anything else throws std::invalid_argument.
FileFormat format_for_path(const std::filesystem::path& path);

}  // namespace adiff
