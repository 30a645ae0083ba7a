#pragma once

#include <string>
#include <vector>

#include "hvfwi/core.hpp"
#include "hvfwi/fwi.hpp"
#include "hvfwi/hv_calculus.hpp"
#include "hvfwi/wave.hpp"

namespace hvfwi {

// "FWIM": magic, u32 nx, u32 nz, f32 dx, f32 dz, then nx*nz f32 speeds,
// z fastest (little endian throughout).
void write_model(const std::string& path, const VelocityModel& model);
VelocityModel read_model(const std::string& path);

// "FWIR": magic, u32 n_receivers, u32 nt, f32 dt, then receiver-major f32 traces.
void write_shot_record(const std::string& path, const ShotRecord& rec);
ShotRecord read_shot_record(const std::string& path);

// two-column CSV (x,value) with a one-line header
void write_signal_csv(const std::string& path, const Signal& s);
Signal read_signal_csv(const std::string& path);

void write_curve_csv(const std::string& path, const LandscapeCurve& curve);

void write_field_csv(const std::string& path, const Field& f);

void write_report_csv(const std::string& path, const InversionReport& report,
                      const std::vector<double>& seconds);

// 8-bit binary PGM, min-max scaled, z downward
void write_model_pgm(const std::string& path, const VelocityModel& model);

/// Writes via a temp file in the same directory, then renames.
void atomic_write_file(const std::string& path, const std::string& contents);

struct SynthesisConfig {
  std::string model_file;
  Acquisition acquisition;
};

FwiConfig read_fwi_config(const std::string& path);
SynthesisConfig read_synthesis_config(const std::string& path);

}  // namespace hvfwi
