#pragma once

#include "cm2l/types.hpp"

#include <filesystem>

namespace cm2l::io {

/// Dense CSV, row-major, 17 significant digits, no header.
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace cm2l::io
