// SPDX-License-Identifier: Apache-2.0
#include "precorrect/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "precorrect/error.hpp"

namespace precorrect {

namespace {

constexpr char kMagic[4] = {'P', 'C', 'F', 'C'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeF64 = 1;

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw DataError("truncated container header: " + path.string());
  return v;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError(path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

nlohmann::ordered_json metadata_json(const KernelMetadata& meta) {
  nlohmann::ordered_json j;
  j["display_source"] = meta.display_source;
  if (meta.prescription) {
    const auto& rx = *meta.prescription;
    j["prescription"] = {{"sphere_d", rx.sphere_d},
                         {"cylinder_d", rx.cylinder_d},
                         {"axis_deg", rx.axis_deg},
                         {"pupil_diameter_mm", rx.pupil_diameter_mm}};
  } else {
    j["prescription"] = nullptr;
  }
  if (meta.geometry) {
    const auto& g = *meta.geometry;
    j["geometry"] = {{"viewing_distance_m", g.viewing_distance_m},
                     {"pixel_pitch_m", g.pixel_pitch_m},
                     {"kernel_size_px", g.kernel_size_px},
                     {"grid_size", g.grid_size}};
  } else {
    j["geometry"] = nullptr;
  }
  j["wavelength_stride_nm"] = meta.wavelength_stride_nm;
  return j;
}

KernelMetadata metadata_from_json(const nlohmann::json& j) {
  KernelMetadata meta;
  meta.display_source = j.value("display_source", std::string{});
  if (j.contains("prescription") && !j["prescription"].is_null()) {
    const auto& p = j["prescription"];
    meta.prescription = Prescription{p.at("sphere_d").get<double>(), p.at("cylinder_d").get<double>(),
                                     p.at("axis_deg").get<double>(),
                                     p.at("pupil_diameter_mm").get<double>()};
  }
  if (j.contains("geometry") && !j["geometry"].is_null()) {
    const auto& g = j["geometry"];
    PsfGeometry geo;
    geo.viewing_distance_m = g.at("viewing_distance_m").get<double>();
    geo.pixel_pitch_m = g.at("pixel_pitch_m").get<double>();
    geo.kernel_size_px = g.at("kernel_size_px").get<std::size_t>();
    geo.grid_size = g.at("grid_size").get<std::size_t>();
    meta.geometry = geo;
  }
  meta.wavelength_stride_nm = j.value("wavelength_stride_nm", 1);
  return meta;
}

}  // namespace

std::size_t FloatContainer::element_count() const noexcept {
  std::size_t n = 1;
  for (auto d : dims) n *= static_cast<std::size_t>(d);
  return dims.empty() ? 0 : n;
}

void write_container(const FloatContainer& c, const std::filesystem::path& path) {
  if (c.data.size() != c.element_count())
    throw ValidationError("container data size does not match its dims");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put(out, kVersion);
  put(out, kDtypeF64);
  put(out, static_cast<std::uint32_t>(c.dims.size()));
  put(out, c.normalization);
  for (auto d : c.dims) put(out, d);
  out.write(reinterpret_cast<const char*>(c.data.data()),
            static_cast<std::streamsize>(c.data.size() * sizeof(double)));
  if (!out) throw Error("write failed: " + path.string());
}

FloatContainer read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError(path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("not a float container: " + path.string());
  if (get<std::uint32_t>(in, path) != kVersion)
    throw DataError("unsupported container version: " + path.string());
  if (get<std::uint32_t>(in, path) != kDtypeF64)
    throw DataError("unsupported container dtype: " + path.string());
  const auto rank = get<std::uint32_t>(in, path);
  if (rank == 0 || rank > 8) throw DataError("bad container rank: " + path.string());
  FloatContainer c;
  c.normalization = get<double>(in, path);
  c.dims.resize(rank);
  for (auto& d : c.dims) d = get<std::uint64_t>(in, path);
  c.data.resize(c.element_count());
  if (!in.read(reinterpret_cast<char*>(c.data.data()),
               static_cast<std::streamsize>(c.data.size() * sizeof(double))))
    throw DataError("truncated container data: " + path.string());
  if (in.peek() != std::char_traits<char>::eof())
    throw DataError("trailing bytes in container: " + path.string());
  return c;
}

FloatContainer image_to_container(const ImagePlane& image) {
  FloatContainer c;
  c.dims = {image.height(), image.width(), image.channels()};
  c.data.reserve(image.element_count());
  for (std::size_t y = 0; y < image.height(); ++y)
    for (std::size_t x = 0; x < image.width(); ++x)
      for (std::size_t ch = 0; ch < image.channels(); ++ch) c.data.push_back(image.at(y, x, ch));
  return c;
}

ImagePlane image_from_container(const FloatContainer& c, ColorSpace space) {
  if (c.dims.size() != 3) throw DataError("image container must have rank 3");
  ImagePlane image(c.dims[0], c.dims[1], c.dims[2], space);
  std::size_t i = 0;
  for (std::size_t y = 0; y < image.height(); ++y)
    for (std::size_t x = 0; x < image.width(); ++x)
      for (std::size_t ch = 0; ch < image.channels(); ++ch) image.at(y, x, ch) = c.data[i++];
  return image;
}

std::filesystem::path sidecar_path(const std::filesystem::path& kernel_path) {
  return std::filesystem::path(kernel_path.string() + ".json");
}

void save_lms_kernel(const LmsPsfKernel& kernel, const KernelMetadata& meta,
                     const std::filesystem::path& path) {
  const std::size_t h = kernel.slices[0][0].rows(), w = kernel.slices[0][0].cols();
  FloatContainer c;
  c.dims = {3, h, w, 3};
  c.normalization = kernel.matrix.normalization;
  c.data.reserve(9 * h * w);
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t k = 0; k < 3; ++k) c.data.push_back(kernel.slices[p][k](y, x));
  write_container(c, path);

  nlohmann::ordered_json j;
  j["kind"] = "lms";
  j["dims"] = c.dims;
  j["conversion_matrix"] = {{"entries", kernel.matrix.entries},
                            {"normalization", kernel.matrix.normalization},
                            {"condition", kernel.matrix.condition},
                            {"note", kernel.matrix.normalization_note}};
  const auto provenance = metadata_json(meta);
  for (auto& [key, value] : provenance.items()) j[key] = value;
  write_text(j.dump(2) + "\n", sidecar_path(path));
}

void save_rgb_kernel(const RgbPsfKernel& kernel, const KernelMetadata& meta,
                     const std::filesystem::path& path) {
  const std::size_t h = kernel.kernels[0].rows(), w = kernel.kernels[0].cols();
  FloatContainer c;
  c.dims = {3, h, w};
  c.data.reserve(3 * h * w);
  for (std::size_t p = 0; p < 3; ++p)
    for (double v : kernel.kernels[p].values()) c.data.push_back(v);
  write_container(c, path);

  nlohmann::ordered_json j;
  j["kind"] = "rgb";
  j["dims"] = c.dims;
  const auto provenance = metadata_json(meta);
  for (auto& [key, value] : provenance.items()) j[key] = value;
  write_text(j.dump(2) + "\n", sidecar_path(path));
}

LoadedKernel load_kernel(const std::filesystem::path& path) {
  const FloatContainer c = read_container(path);
  LoadedKernel out;
  nlohmann::json side;
  const auto side_path = sidecar_path(path);
  if (std::filesystem::exists(side_path)) {
    try {
      side = nlohmann::json::parse(read_text(side_path));
      out.metadata = metadata_from_json(side);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed kernel sidecar " + side_path.string() + ": " + e.what());
    }
  }

  if (c.dims.size() == 4) {
    if (c.dims[0] != 3 || c.dims[3] != 3) throw DataError("LMS kernel dims must be [3,H,W,3]");
    const std::size_t h = c.dims[1], w = c.dims[2];
    LmsPsfKernel k;
    for (auto& row : k.slices)
      for (auto& s : row) s = Plane(h, w);
    std::size_t i = 0;
    for (std::size_t p = 0; p < 3; ++p)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
          for (std::size_t q = 0; q < 3; ++q) k.slices[p][q](y, x) = c.data[i++];
    Matrix3 entries{};
    if (side.contains("conversion_matrix")) {
      entries = side["conversion_matrix"].at("entries").get<Matrix3>();
    } else {
      for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t q = 0; q < 3; ++q) entries[q][p] = k.slices[p][q].sum();
    }
    k.matrix = make_conversion_matrix(entries, c.normalization);
    out.lms = std::move(k);
  } else if (c.dims.size() == 3) {
    if (c.dims[0] != 3) throw DataError("RGB kernel dims must be [3,H,W]");
    const std::size_t h = c.dims[1], w = c.dims[2];
    RgbPsfKernel k;
    std::size_t i = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      k.kernels[p] = Plane(h, w);
      for (double& v : k.kernels[p].values()) v = c.data[i++];
    }
    out.rgb = std::move(k);
  } else {
    throw DataError("kernel container must have rank 3 or 4: " + path.string());
  }
  return out;
}

}  // namespace precorrect
