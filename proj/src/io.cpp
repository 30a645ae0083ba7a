#include "hvfwi/io.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hvfwi {

namespace {

using nlohmann::json;

void append_u32(std::string& out, uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void append_f32(std::string& out, float v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

struct Reader {
  std::string data;
  size_t pos = 0;
  std::string path;

  explicit Reader(const std::string& p) : path(p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p);
    std::ostringstream ss;
    ss << in.rdbuf();
    data = ss.str();
  }
  void expect_magic(const char* magic) {
    if (data.size() < pos + 4 || std::memcmp(data.data() + pos, magic, 4) != 0)
      throw std::runtime_error(path + ": bad magic, expected " + magic);
    pos += 4;
  }
  uint32_t u32() {
    if (data.size() < pos + 4) throw std::runtime_error(path + ": truncated file");
    uint32_t v;
    std::memcpy(&v, data.data() + pos, 4);
    pos += 4;
    return v;
  }
  float f32() {
    if (data.size() < pos + 4) throw std::runtime_error(path + ": truncated file");
    float v;
    std::memcpy(&v, data.data() + pos, 4);
    pos += 4;
    return v;
  }
};

}  // namespace

void atomic_write_file(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

void write_model(const std::string& path, const VelocityModel& model) {
  model.validate();
  std::string out = "FWIM";
  append_u32(out, static_cast<uint32_t>(model.nx));
  append_u32(out, static_cast<uint32_t>(model.nz));
  append_f32(out, static_cast<float>(model.dx));
  append_f32(out, static_cast<float>(model.dz));
  for (double v : model.c) append_f32(out, static_cast<float>(v));
  atomic_write_file(path, out);
}

VelocityModel read_model(const std::string& path) {
  Reader r(path);
  r.expect_magic("FWIM");
  VelocityModel m;
  m.nx = static_cast<int>(r.u32());
  m.nz = static_cast<int>(r.u32());
  m.dx = r.f32();
  m.dz = r.f32();
  m.c.resize(static_cast<size_t>(m.nx) * m.nz);
  for (auto& v : m.c) v = r.f32();
  m.validate();
  return m;
}

void write_shot_record(const std::string& path, const ShotRecord& rec) {
  std::string out = "FWIR";
  append_u32(out, static_cast<uint32_t>(rec.n_receivers));
  append_u32(out, static_cast<uint32_t>(rec.nt));
  append_f32(out, static_cast<float>(rec.dt));
  for (double v : rec.traces) append_f32(out, static_cast<float>(v));
  atomic_write_file(path, out);
}

ShotRecord read_shot_record(const std::string& path) {
  Reader r(path);
  r.expect_magic("FWIR");
  int nr = static_cast<int>(r.u32());
  int nt = static_cast<int>(r.u32());
  double dt = r.f32();
  ShotRecord rec(nr, nt, dt);
  for (auto& v : rec.traces) v = r.f32();
  return rec;
}

void write_signal_csv(const std::string& path, const Signal& s) {
  std::ostringstream out;
  out << "x,value\n";
  out.precision(17);
  for (int i = 0; i < s.n(); ++i) out << s.grid.x(i) << "," << s[i] << "\n";
  atomic_write_file(path, out.str());
}

Signal read_signal_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> xs, vs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double x, v;
    if (std::sscanf(line.c_str(), "%lf,%lf", &x, &v) != 2) continue;  // header
    xs.push_back(x);
    vs.push_back(v);
  }
  if (xs.size() < 3) throw std::runtime_error(path + ": need at least 3 samples");
  Grid1D g(static_cast<int>(xs.size()), xs.front(), xs.back());
  // tolerate mild rounding of the abscissas but require a uniform grid
  for (size_t i = 0; i < xs.size(); ++i)
    if (std::abs(xs[i] - g.x(static_cast<int>(i))) > 1e-6 * (g.b - g.a))
      throw std::runtime_error(path + ": non-uniform sample spacing");
  return Signal(g, std::move(vs));
}

void write_curve_csv(const std::string& path, const LandscapeCurve& curve) {
  std::ostringstream out;
  out << "s,J\n";
  out.precision(17);
  for (size_t i = 0; i < curve.shifts.size(); ++i)
    out << curve.shifts[i] << "," << curve.values[i] << "\n";
  atomic_write_file(path, out.str());
}

void write_field_csv(const std::string& path, const Field& f) {
  std::ostringstream out;
  out << "x,t,value\n";
  out.precision(17);
  for (int k = 0; k < f.nt(); ++k)
    for (int i = 0; i < f.nx(); ++i)
      out << f.grid.space.x(i) << "," << f.grid.time.x(k) << "," << f.at(i, k) << "\n";
  atomic_write_file(path, out.str());
}

void write_report_csv(const std::string& path, const InversionReport& report,
                      const std::vector<double>& seconds) {
  std::ostringstream out;
  out << "iter,J,grad_norm,rmse,seconds\n";
  out.precision(17);
  for (size_t i = 0; i < report.objective_history.size(); ++i) {
    out << i << "," << report.objective_history[i] << "," << report.gradient_norm_history[i]
        << ",";
    if (i < report.model_rmse_history.size()) out << report.model_rmse_history[i];
    out << ",";
    if (i < seconds.size()) out << seconds[i];
    out << "\n";
  }
  atomic_write_file(path, out.str());
}

void write_model_pgm(const std::string& path, const VelocityModel& model) {
  double lo = model.c[0], hi = model.c[0];
  for (double v : model.c) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double span = hi > lo ? hi - lo : 1.0;
  std::ostringstream out;
  out << "P5\n" << model.nx << " " << model.nz << "\n255\n";
  for (int iz = 0; iz < model.nz; ++iz)
    for (int ix = 0; ix < model.nx; ++ix) {
      int px = static_cast<int>(std::lround((model.at(ix, iz) - lo) / span * 255.0));
      out.put(static_cast<char>(px));
    }
  atomic_write_file(path, out.str());
}

namespace {

Acquisition acquisition_from_json(const json& j) {
  Acquisition acq;
  for (auto& s : j.at("sources")) acq.sources.emplace_back(s.at(0), s.at(1));
  for (auto& r : j.at("receivers")) acq.receivers.emplace_back(r.at(0), r.at(1));
  acq.dt = j.at("dt");
  acq.nt = j.at("nt");
  acq.sponge_width = j.value("sponge_width", 30);
  acq.sponge_strength = j.value("sponge_strength", 0.004);
  acq.free_surface_top = j.value("free_surface_top", false);
  if (j.contains("wavelet")) {
    const json& w = j.at("wavelet");
    std::string type = w.value("type", "ricker");
    if (type == "ricker") {
      double f = w.at("peak_freq_hz");
      double t0 = w.value("t0", 1.5 / f);
      acq.wavelet = ricker(f, t0, acq.dt, acq.nt);
      double amp = w.value("amplitude", 1.0);
      for (auto& v : acq.wavelet) v *= amp;
    } else if (type == "zero") {
      acq.wavelet.assign(acq.nt, 0.0);
    } else {
      throw std::runtime_error("unknown wavelet type: " + type);
    }
  }
  return acq;
}

MisfitKind misfit_from_json(const json& j) {
  std::string kind = j.value("kind", "l2");
  if (kind == "l2") return MisfitKind::l2();
  if (kind == "w2") {
    std::string norm = j.value("normalization", "square");
    return MisfitKind::w2(norm == "shift" ? W2Normalization::ShiftNormalize
                                          : W2Normalization::SquareNormalize,
                          j.value("shift_constant", 0.0));
  }
  if (kind == "hv") {
    HVParams p;
    p.kappa = j.value("kappa", 1e-4);
    p.lambda = j.value("lambda", 1e-4);
    p.epsilon = j.value("epsilon", 1e-12);
    p.n_time = j.value("slices", 16);
    p.max_outer_iters = j.value("max_iters", 15);
    p.tol = j.value("tol", 1e-8);
    int peaks = j.value("max_peaks", 0);
    p.init = peaks > 0 ? InitStrategy::peak_match(peaks) : InitStrategy::zero();
    MisfitKind k = MisfitKind::hv_kind(p);
    k.time_rescale = j.value("time_rescale", true);
    k.amp_rescale = j.value("amp_rescale", 1.0);
    return k;
  }
  throw std::runtime_error("unknown misfit kind: " + kind);
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace

FwiConfig read_fwi_config(const std::string& path) {
  json j = load_json(path);
  FwiConfig cfg;
  cfg.model_file = j.at("model_file");
  for (auto& f : j.at("obs_data_files")) cfg.obs_data_files.push_back(f);
  if (j.contains("initial_model_source")) {
    const json& src = j.at("initial_model_source");
    if (src.contains("file")) cfg.initial_model_file = src.at("file");
    if (src.contains("gaussian_smooth"))
      cfg.initial_smooth_sigma_cells = src.at("gaussian_smooth").value("sigma_cells", 5.477);
  }
  cfg.acquisition = acquisition_from_json(j.at("acquisition"));
  if (j.contains("misfit")) cfg.misfit = misfit_from_json(j.at("misfit"));
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    cfg.optimizer.memory = o.value("memory", 10);
    cfg.optimizer.max_iters = o.value("max_iters", 30);
    if (o.contains("bounds_velocity")) {
      double vmin = o.at("bounds_velocity").at(0), vmax = o.at("bounds_velocity").at(1);
      cfg.optimizer.m_min = 1.0 / (vmax * vmax);
      cfg.optimizer.m_max = 1.0 / (vmin * vmin);
    }
    if (o.contains("bounds_m")) {
      cfg.optimizer.m_min = o.at("bounds_m").at(0);
      cfg.optimizer.m_max = o.at("bounds_m").at(1);
    }
    if (o.contains("wolfe")) {
      cfg.optimizer.wolfe_c1 = o.at("wolfe").at(0);
      cfg.optimizer.wolfe_c2 = o.at("wolfe").at(1);
    }
  }
  cfg.output_dir = j.value("output_dir", ".");
  cfg.snapshot_every = j.value("snapshot_every", 0);
  return cfg;
}

SynthesisConfig read_synthesis_config(const std::string& path) {
  json j = load_json(path);
  SynthesisConfig cfg;
  cfg.model_file = j.at("model_file");
  cfg.acquisition = acquisition_from_json(j.at("acquisition"));
  return cfg;
}

}  // namespace hvfwi
