#include "thundernna/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include "thundernna/errors.hpp"

namespace thundernna {
namespace {

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::uint32_t read_be32(std::span<const unsigned char> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

void put_le32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& out, double v) {
  unsigned char raw[8];
  std::memcpy(raw, &v, 8);
  out.insert(out.end(), raw, raw + 8);
}

std::uint32_t checked_u32(std::size_t v) {
  if (v > 0xffffffffu) throw InvalidArgument("extent too large for u32 header field");
  return static_cast<std::uint32_t>(v);
}

// Bounds-checked little-endian reader over a model file.
class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4, "header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

  void f64s(std::span<double> out) {
    std::memcpy(out.data(), bytes_.data() + pos_, out.size() * 8);
    pos_ += out.size() * 8;
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw TruncatedError(std::string("model file truncated in ") + what);
  }

  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Shape Dataset::sample_shape() const {
  if (images.rank() == 0) return {};
  return Shape(images.shape().begin() + 1, images.shape().end());
}

std::size_t Dataset::sample_size() const { return shape_size(sample_shape()); }

std::span<const double> Dataset::sample_data(std::size_t i) const {
  const std::size_t d = sample_size();
  return images.data().subspan(i * d, d);
}

Tensor Dataset::sample(std::size_t i) const {
  const auto s = sample_data(i);
  return Tensor(sample_shape(), std::vector<double>(s.begin(), s.end()));
}

Dataset Dataset::head(std::size_t n) const {
  n = std::min(n, size());
  Shape shape = images.shape();
  shape[0] = n;
  const auto d = sample_size();
  std::vector<double> data(images.data().begin(),
                           images.data().begin() + static_cast<std::ptrdiff_t>(n * d));
  return Dataset{Tensor(std::move(shape), std::move(data)),
                 std::vector<std::size_t>(labels.begin(), labels.begin() + n), num_classes};
}

void Dataset::validate() const {
  if (images.rank() < 2 || images.shape()[0] != labels.size()) {
    throw InvalidArgument("dataset image count does not match label count");
  }
  for (std::size_t label : labels) {
    if (label >= num_classes) throw InvalidArgument("dataset label out of range");
  }
  for (double v : images.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("dataset pixel outside [0,1]");
  }
}

Dataset read_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path,
                 std::optional<std::size_t> num_classes) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);

  if (img.size() < 4 || read_be32(img, 0) != kIdxImagesMagic) {
    throw BadMagicError(images_path.string() + ": not an IDX ubyte rank-3 image file");
  }
  if (lab.size() < 4 || read_be32(lab, 0) != kIdxLabelsMagic) {
    throw BadMagicError(labels_path.string() + ": not an IDX ubyte rank-1 label file");
  }
  if (img.size() < 16) throw TruncatedError(images_path.string() + ": header truncated");
  if (lab.size() < 8) throw TruncatedError(labels_path.string() + ": header truncated");

  const std::size_t n = read_be32(img, 4);
  const std::size_t rows = read_be32(img, 8);
  const std::size_t cols = read_be32(img, 12);
  const std::size_t n_labels = read_be32(lab, 4);
  if (img.size() != 16 + n * rows * cols) {
    throw TruncatedError(images_path.string() + ": payload length " +
                         std::to_string(img.size() - 16) + " does not match header");
  }
  if (lab.size() != 8 + n_labels) {
    throw TruncatedError(labels_path.string() + ": payload length " +
                         std::to_string(lab.size() - 8) + " does not match header");
  }
  if (n != n_labels) {
    throw CountMismatchError("image file holds " + std::to_string(n) +
                             " samples but label file holds " + std::to_string(n_labels));
  }
  if (n == 0 || rows == 0 || cols == 0) throw InvalidArgument("IDX dataset is empty");

  std::vector<double> pixels(n * rows * cols);
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = img[16 + i] / 255.0;
  std::vector<std::size_t> labels(lab.begin() + 8, lab.end());
  const std::size_t max_label = *std::max_element(labels.begin(), labels.end());

  Dataset data{Tensor({n, 1, rows, cols}, std::move(pixels)), std::move(labels),
               num_classes.value_or(max_label + 1)};
  data.validate();
  return data;
}

void write_idx(const Dataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  data.validate();
  const Shape s = data.sample_shape();
  std::size_t rows = 1, cols = data.sample_size();
  if (s.size() == 3 && s[0] == 1) {
    rows = s[1];
    cols = s[2];
  } else if (s.size() == 2) {
    rows = s[0];
    cols = s[1];
  }
  std::vector<unsigned char> img;
  img.reserve(16 + data.images.size());
  put_be32(img, kIdxImagesMagic);
  put_be32(img, checked_u32(data.size()));
  put_be32(img, checked_u32(rows));
  put_be32(img, checked_u32(cols));
  for (double v : data.images.data()) {
    img.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
  }
  std::vector<unsigned char> lab;
  put_be32(lab, kIdxLabelsMagic);
  put_be32(lab, checked_u32(data.size()));
  for (std::size_t label : data.labels) {
    if (label > 255) throw InvalidArgument("IDX labels must fit in one byte");
    lab.push_back(static_cast<unsigned char>(label));
  }
  write_file(images_path, img);
  write_file(labels_path, lab);
}

Dataset synth_blobs(std::uint64_t seed, std::size_t n, const Shape& sample_shape,
                    std::size_t num_classes, double spread) {
  const std::size_t d = shape_size(sample_shape);
  if (n == 0 || d == 0 || sample_shape.empty() || num_classes == 0) {
    throw InvalidArgument("synth_blobs needs n, dims and num_classes >= 1");
  }
  if (!(spread >= 0.0)) throw InvalidArgument("spread must be >= 0");

  std::mt19937_64 center_rng(0x5eedc0de ^ (d * 1315423911u) ^ num_classes);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> centers(num_classes * d);
  for (double& c : centers) c = unit(center_rng);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> pixels(n * d);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i % num_classes;
    const double* center = centers.data() + labels[i] * d;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = spread == 0.0 ? center[j] : center[j] + spread * noise(rng);
      pixels[i * d + j] = std::clamp(v, 0.0, 1.0);
    }
  }
  Shape shape{n};
  shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
  return Dataset{Tensor(std::move(shape), std::move(pixels)), std::move(labels), num_classes};
}

std::size_t model_header_size(const Network& net) {
  // magic, version, rank, extents, classes, layer count
  std::size_t size = 4 * (5 + net.input_shape().size());
  for (const auto& layer : net.layers()) {
    size += 4 * (1 + layer.weight.rank());
  }
  return size;
}

void save_model(const Network& net, const std::filesystem::path& path) {
  std::vector<unsigned char> out;
  out.reserve(model_header_size(net) + 8 * net.param_count());
  out.insert(out.end(), {'T', 'H', 'N', 'K'});
  put_le32(out, kModelFormatVersion);
  put_le32(out, checked_u32(net.input_shape().size()));
  for (std::size_t e : net.input_shape()) put_le32(out, checked_u32(e));
  put_le32(out, checked_u32(net.num_classes()));
  put_le32(out, checked_u32(net.layers().size()));
  for (const auto& layer : net.layers()) {
    put_le32(out, static_cast<std::uint32_t>(layer.kind));
    // dense: out, in; conv2d: out, in, kh, kw. Both match the weight shape.
    for (std::size_t e : layer.weight.shape()) put_le32(out, checked_u32(e));
  }
  for (const auto& layer : net.layers()) {
    for (double v : layer.weight.data()) put_f64(out, v);
    for (double v : layer.bias.data()) put_f64(out, v);
  }
  write_file(path, out);
}

Network load_model(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "THNK", 4) != 0) {
    throw BadMagicError(path.string() + ": not a THNK model file");
  }
  Reader in{std::span<const unsigned char>(bytes).subspan(4)};
  const std::uint32_t version = in.u32();
  if (version != kModelFormatVersion) {
    throw VersionMismatchError(path.string() + ": model format version " +
                               std::to_string(version) + ", expected " +
                               std::to_string(kModelFormatVersion));
  }
  const std::uint32_t rank = in.u32();
  if (rank == 0 || rank > 8) throw ShapeError("model input rank out of range");
  Shape input(rank);
  for (auto& e : input) e = in.u32();
  const std::size_t num_classes = in.u32();
  const std::uint32_t n_layers = in.u32();
  if (n_layers > 1024) throw ShapeError("implausible layer count");

  std::vector<Layer> layers;
  std::size_t params = 0;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const std::uint32_t kind = in.u32();
    switch (kind) {
      case static_cast<std::uint32_t>(LayerKind::kDense): {
        const std::size_t o = in.u32(), n_in = in.u32();
        layers.push_back(Layer::dense(n_in, o));
        break;
      }
      case static_cast<std::uint32_t>(LayerKind::kConv2d): {
        const std::size_t o = in.u32(), c = in.u32(), kh = in.u32(), kw = in.u32();
        layers.push_back(Layer::conv2d(c, o, kh, kw));
        break;
      }
      case static_cast<std::uint32_t>(LayerKind::kRelu):
        layers.push_back(Layer::relu());
        break;
      default:
        throw ShapeError("unknown layer kind " + std::to_string(kind) + " at layer " +
                         std::to_string(i));
    }
    params += layers.back().param_count();
  }
  if (in.remaining() != 8 * params) {
    throw PayloadLengthError(path.string() + ": parameter payload is " +
                             std::to_string(in.remaining()) + " bytes, architecture needs " +
                             std::to_string(8 * params));
  }
  for (auto& layer : layers) {
    in.f64s(layer.weight.data());
    in.f64s(layer.bias.data());
  }
  return Network(std::move(input), std::move(layers), num_classes);
}

std::string format_csv_report(const EvalReport& report, bool include_timing) {
  std::string out = kCsvHeader;
  out += '\n';
  char buf[256];
  for (const auto& row : report.rows) {
    const auto name = to_string(row.attack);
    std::snprintf(buf, sizeof buf, "%.*s,%.6f,%zu,%.6f,%.6f,%.6f,",
                  static_cast<int>(name.size()), name.data(), row.budget, row.n_attacked,
                  row.success_rate, row.mean_linf, row.mean_l2);
    out += buf;
    if (include_timing) {
      std::snprintf(buf, sizeof buf, "%.6f", row.seconds_per_50);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_csv_report(const EvalReport& report, const std::filesystem::path& path,
                      bool include_timing) {
  const std::string text = format_csv_report(report, include_timing);
  write_file(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

}  // namespace thundernna
