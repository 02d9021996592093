#pragma once

#include <filesystem>
#include <iosfwd>

#include "hsepsr/simbench.hpp"
#include "hsepsr/windows.hpp"

namespace hsepsr {

/// Header `t,a_0,...,a_{da-1},o_0,...,o_{do-1}`; values printed with 17
/// significant digits so they read back bit-identically.
void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out);
void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path);

Trajectory read_trajectory_csv(std::istream& in, bool symbolic = false);
Trajectory read_trajectory_csv(const std::filesystem::path& path, bool symbolic = false);

/// Header `model,horizon,mse,n_extents,seed`, one row per model and horizon.
void write_mse_csv(const MseTable& table, std::ostream& out);
void write_mse_csv(const MseTable& table, const std::filesystem::path& path);

}  // namespace hsepsr
