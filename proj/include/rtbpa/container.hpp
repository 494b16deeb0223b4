// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtbpa/fields.hpp"
#include "rtbpa/imaging.hpp"

#include <filesystem>
#include <string>

namespace rtbpa {

// Binary tensor files, little-endian:
//   "RTBPA1", u8 kind (1 measurement, 2 image), u8 mode (0 radiation,
//   1 scattering; 0 for images)
//   measurement: u64 n_tx n_rx n_k, f64 copol[3], f64 f_start f_stop step,
//                f64 tx[n_tx][3], rx[n_rx][3], k[n_k],
//                complex64 samples[n_tx][n_rx][n_k]
//   image:       u64 dims[3], f64 origin[3] axes[3][3] spacing[3],
//                complex64 values (x fastest)
// Samples are narrowed to float on write.
inline constexpr char kContainerMagic[6] = {'R', 'T', 'B', 'P', 'A', '1'};

std::string encode_measurement(const MeasurementSet &data);
MeasurementSet decode_measurement(const std::string &bytes);
std::string encode_image(const ImageGrid &image);
ImageGrid decode_image(const std::string &bytes);

void write_measurement(const MeasurementSet &data, const std::filesystem::path &path);
MeasurementSet read_measurement(const std::filesystem::path &path);
void write_image(const ImageGrid &image, const std::filesystem::path &path);
ImageGrid read_image(const std::filesystem::path &path);

std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, const std::string &text);

} // namespace rtbpa
