#pragma once

#include <filesystem>
#include <string>

#include <carbkin/carbkin.hpp>

namespace testing_support {

inline std::filesystem::path data_path(const std::string& name)
{
    return std::filesystem::path(CARBKIN_DATA_DIR) / name;
}

inline carbkin::KineticsDatabase default_db()
{
    return carbkin::parse_db(data_path("calcite.default"));
}

inline carbkin::BatchConfig run7_like()
{
    return carbkin::load_batch_config(data_path("run7-like.json"), default_db());
}

/// Fresh scratch directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("carbkin-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline double rel_diff(double a, double b)
{
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

} // namespace testing_support
