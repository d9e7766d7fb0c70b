#include "cann/io/png.hpp"

#include <png.h>

#include <cstring>

#include "cann/errors.hpp"

namespace cann::io {

regions::RgbImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw InputError("cannot read PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  regions::RgbImage out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw InputError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const regions::RgbImage& img) {
  if (img.empty()) throw InputError("cannot write an empty image to " + path.string());
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels.data(), 0, nullptr))
    throw InputError("cannot write PNG " + path.string() + ": " + image.message);
}

}  // namespace cann::io
