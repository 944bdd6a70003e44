#ifndef THUNDERNNA_DATA_IO_HPP
#define THUNDERNNA_DATA_IO_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thundernna/network.hpp"
#include "thundernna/report.hpp"
#include "thundernna/tensor.hpp"

namespace thundernna {

/// Labelled images with pixels in [0,1]. `images` has shape
/// [n, sample_shape...].
struct Dataset {
  Tensor images;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  Shape sample_shape() const;
  std::size_t sample_size() const;
  std::span<const double> sample_data(std::size_t i) const;
  Tensor sample(std::size_t i) const;
  /// First `n` samples (or all when fewer).
  Dataset head(std::size_t n) const;

  /// Throws InvalidArgument when counts, labels or pixel ranges are off.
  void validate() const;
};

// IDX magic numbers, big-endian: 0x00 0x00 <type 0x08 = ubyte> <rank>.
inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Reads an IDX image/label pair (MNIST layout). Pixels are scaled by 1/255
/// and each sample gets shape [1, rows, cols]. num_classes defaults to
/// max label + 1.
///
/// Errors: BadMagicError, TruncatedError (header or payload shorter than
/// declared, or trailing bytes), CountMismatchError (image vs label count),
/// IoError when a file cannot be opened.
Dataset read_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path,
                 std::optional<std::size_t> num_classes = std::nullopt);

/// Writes pixels quantized to round(255 p). Samples of shape [1,H,W] or
/// [H,W] keep their rows/cols, anything else is written as a 1 x D image.
void write_idx(const Dataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

/// Gaussian clusters clipped to [0,1]. Class centers are a fixed function of
/// (sample_shape, num_classes), drawn uniformly from [0,1]; `seed` only
/// drives the per-sample noise, so two seeds give independent draws from the same
/// distribution. Labels cycle 0, 1, ..., num_classes - 1.
Dataset synth_blobs(std::uint64_t seed, std::size_t n, const Shape& sample_shape,
                    std::size_t num_classes, double spread);

// Model file layout, all integers little-endian u32:
//   "THNK" | version | input rank | input extents... | num_classes |
//   layer count | per layer: kind, then extents (dense: out in;
//   conv2d: out in kh kw; relu: none) | f64 LE parameters, layer order,
//   weight then bias.
inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Size in bytes of the header written for `net`.
std::size_t model_header_size(const Network& net);

void save_model(const Network& net, const std::filesystem::path& path);
/// Errors: BadMagicError, VersionMismatchError, PayloadLengthError,
/// TruncatedError for a cut header, ShapeError for an inconsistent
/// architecture.
Network load_model(const std::filesystem::path& path);

inline constexpr const char* kCsvHeader =
    "attack,budget,n_attacked,success_rate,mean_linf,mean_l2,seconds_per_50";

/// CSV text for `report`: header plus one row per (attack, budget), 6
/// fractional digits, LF newlines. With include_timing = false the
/// seconds_per_50 field is left empty so the bytes are reproducible.
std::string format_csv_report(const EvalReport& report, bool include_timing = true);
void write_csv_report(const EvalReport& report, const std::filesystem::path& path,
                      bool include_timing = true);

}  // namespace thundernna

#endif  // THUNDERNNA_DATA_IO_HPP
