// ginue-lab: command-line front end for the deformed Ginibre toolkit.

#include <png.h>

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ginue/compare.hpp"
#include "ginue/ensemble.hpp"
#include "ginue/limit_kernel.hpp"
#include "ginue/oracles.hpp"
#include "ginue/spectral_geometry.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace ginue;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned threads = 0;
  std::string out = ".";
  bool png = false;
};

// ---- config helpers ----

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json load_config(const Globals& g, bool required) {
  if (g.config.empty()) {
    if (required) throw UsageError("--config is required for this command");
    return json::object();
  }
  std::ifstream in(g.config);
  if (!in) throw UsageError("cannot open config " + g.config);
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
}

std::uint64_t resolve_seed(const Globals& g, const json& cfg) {
  if (g.seed_given) return g.seed;
  if (cfg.contains("seed")) {
    if (!cfg["seed"].is_number_unsigned()) throw UsageError("\"seed\" must be a non-negative integer");
    return cfg["seed"].get<std::uint64_t>();
  }
  return 0;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("field \"") + key + "\" has the wrong type");
  }
}

cplx parse_complex(const json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  throw UsageError(what + " must be a number or [re, im]");
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

SpectralMeasure parse_measure(const json& j) {
  if (!j.is_array() || j.empty()) throw UsageError("\"measure\" must be a non-empty array of {\"a\", \"c\"}");
  std::vector<Atom> atoms;
  for (const json& e : j) {
    if (!e.is_object() || !e.contains("a") || !e.contains("c") || !e["c"].is_number()) {
      throw UsageError("measure entries need \"a\": [re, im] and \"c\": weight");
    }
    atoms.push_back({parse_complex(e["a"], "atom location"), e["c"].get<double>()});
  }
  return SpectralMeasure(std::move(atoms));
}

GridSpec parse_grid(const json& cfg) {
  GridSpec g;
  if (!cfg.contains("grid")) return g;
  const json& j = cfg["grid"];
  if (!j.is_object()) throw UsageError("\"grid\" must be an object {\"L\", \"w\"}");
  g.half_width = get_or(j, "L", g.half_width);
  g.bin_width = get_or(j, "w", g.bin_width);
  (void)g.bins();
  return g;
}

KernelParams parse_kernel(const json& cfg) {
  KernelParams p;
  if (!cfg.contains("kernel")) return p;
  const json& j = cfg["kernel"];
  if (!j.is_object()) throw UsageError("\"kernel\" must be an object");
  if (j.contains("chi")) p.chi = parse_complex(j["chi"], "kernel.chi");
  p.tau_hat = get_or(j, "tau_hat", p.tau_hat);
  p.r0 = get_or<std::size_t>(j, "r0", p.r0);
  p.n = get_or<std::size_t>(j, "n", p.n);
  p.validate();
  return p;
}

McConfig parse_mc(const json& cfg, std::uint64_t seed, unsigned threads) {
  McConfig mc;
  mc.seed = seed;
  mc.threads = threads;
  if (!cfg.contains("mc")) return mc;
  const json& j = cfg["mc"];
  mc.samples = get_or<std::size_t>(j, "samples", mc.samples);
  mc.sigma = get_or(j, "sigma", mc.sigma);
  mc.batches = get_or<std::size_t>(j, "batches", mc.batches);
  return mc;
}

DeformationSpec parse_spec(const json& cfg) {
  if (!cfg.contains("spec") || !cfg["spec"].is_object()) throw UsageError("\"spec\" object is required");
  const json& j = cfg["spec"];
  DeformationSpec s;
  s.n = get_or<std::size_t>(j, "N", 0);
  if (s.n == 0) throw UsageError("spec.N must be a positive integer");
  s.r0 = get_or<std::size_t>(j, "r0", 0);
  if (j.contains("z0")) s.z0 = parse_complex(j["z0"], "spec.z0");
  if (j.contains("extra_block")) {
    for (const json& e : j["extra_block"]) s.extra_block.push_back(parse_complex(e, "extra_block entry"));
  }
  if (j.contains("macro_blocks")) {
    for (const json& b : j["macro_blocks"]) {
      if (!b.contains("a") || !b.contains("r")) throw UsageError("macro blocks need \"a\" and \"r\"");
      s.macro_blocks.push_back({parse_complex(b["a"], "macro block location"), get_or<std::size_t>(b, "r", 0)});
    }
  } else if (j.contains("atoms")) {
    // Weights become block sizes round(c N'), N' = N - r0 - |extra|; the last
    // block takes the remainder.
    const SpectralMeasure m = parse_measure(j["atoms"]);
    const std::size_t avail = s.n - std::min(s.n, s.r0 + s.extra_block.size());
    std::size_t used = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::size_t r = i + 1 == m.size()
                                ? avail - used
                                : static_cast<std::size_t>(std::llround(m.atoms()[i].weight * static_cast<double>(avail)));
      used += r;
      s.macro_blocks.push_back({m.atoms()[i].location, r});
    }
  }
  s.validate();
  return s;
}

// ---- output helpers ----

fs::path out_dir(const Globals& g) {
  fs::path p(g.out);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (!fs::is_directory(p)) throw UsageError("cannot create output directory " + g.out);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path.string());
  f << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string provenance_line(std::uint64_t hash, std::uint64_t seed, std::size_t replicas) {
  std::string s = "# config_hash=" + hex64(hash) + " seed=" + std::to_string(seed);
  if (replicas > 0) s += " replicas=" + std::to_string(replicas);
  return s + "\n";
}

void write_density_csv(const fs::path& path, const DensityTable& t, std::uint64_t hash, std::uint64_t seed) {
  std::string s = provenance_line(hash, seed, t.replicas);
  s += "zhat_re,zhat_im,value\n";
  for (std::size_t i = 0; i < t.size(); ++i) s += num(t.re[i]) + "," + num(t.im[i]) + "," + num(t.value[i]) + "\n";
  write_text(path, s);
}

DensityTable read_density_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  DensityTable t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("replicas=");
      if (pos != std::string::npos) t.replicas = std::stoull(line.substr(pos + 9));
      continue;
    }
    if (!header) {
      if (line != "zhat_re,zhat_im,value") throw UsageError(path + ": unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',')) {
      throw UsageError(path + ": malformed row '" + line + "'");
    }
    try {
      t.re.push_back(std::stod(a));
      t.im.push_back(std::stod(b));
      t.value.push_back(std::stod(c));
    } catch (const std::exception&) {
      throw UsageError(path + ": malformed row '" + line + "'");
    }
  }
  if (!header || t.size() == 0) throw UsageError(path + ": no density rows");
  return t;
}

// Linear interpolation through a few viridis stops.
void colour(double t, png_byte* px) {
  static const double stops[5][3] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(t));
  const double f = t - i;
  for (int c = 0; c < 3; ++c) px[c] = static_cast<png_byte>(std::lround(stops[i][c] * (1.0 - f) + stops[i + 1][c] * f));
}

void write_png_heatmap(const fs::path& path, const DensityTable& t) {
  const std::size_t nb = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(t.size()))));
  if (nb * nb != t.size()) throw UsageError("heatmap needs a square grid");
  const std::size_t scale = std::max<std::size_t>(1, 512 / nb);
  const std::size_t side = nb * scale;
  double vmax = 0.0;
  for (double v : t.value) vmax = std::max(vmax, v);
  if (vmax <= 0.0) vmax = 1.0;
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw UsageError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw UsageError("libpng failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(side), static_cast<png_uint_32>(side), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(3 * side);
  for (std::size_t py = 0; py < side; ++py) {
    const std::size_t iy = nb - 1 - py / scale;  // imaginary axis points up
    for (std::size_t px = 0; px < side; ++px) colour(t.value[(px / scale) * nb + iy] / vmax, &row[3 * px]);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

// ---- commands ----

int cmd_classify(const Globals& g) {
  const json cfg = load_config(g, true);
  if (!cfg.contains("measure")) throw UsageError("classify needs \"measure\"");
  if (!cfg.contains("probes") || !cfg["probes"].is_array()) throw UsageError("classify needs a \"probes\" array");
  const SpectralMeasure m = parse_measure(cfg["measure"]);
  const double tol = get_or(cfg, "tol", kDefaultClassifyTol);
  json rows = json::array();
  std::printf("%-28s %-13s %-12s %-12s %-12s %s\n", "probe", "class", "P00", "|P0|", "P1", "chi");
  for (const json& pj : cfg["probes"]) {
    const cplx z = parse_complex(pj, "probe");
    const EdgeParams p = compute_params(m, z);
    const PointClass c = classify(p, tol);
    std::printf("%-28s %-13s %-12.6g %-12.6g %-12.6g %.6g%+.6gi\n", ("(" + num(z.real()) + ", " + num(z.imag()) + ")").c_str(),
                to_string(c), p.p00, std::abs(p.p0), p.p1, p.chi.real(), p.chi.imag());
    rows.push_back({{"probe", complex_json(z)},
                    {"class", to_string(c)},
                    {"P00", p.p00},
                    {"P0", complex_json(p.p0)},
                    {"P1", p.p1},
                    {"P2", complex_json(p.p2)},
                    {"chi", complex_json(p.chi)}});
  }
  const json doc = {{"config_hash", hex64(fnv1a(cfg.dump()))}, {"seed", resolve_seed(g, cfg)}, {"probes", rows}};
  std::printf("%s\n", doc.dump().c_str());
  write_json(out_dir(g) / "classify.json", doc);
  return 0;
}

int cmd_critical_scan(const Globals& g) {
  const json cfg = load_config(g, true);
  const std::string family = get_or<std::string>(cfg, "family", "symmetric_pair");
  if (!cfg.contains("values") || !cfg["values"].is_array()) throw UsageError("critical-scan needs a \"values\" array");
  const double step = get_or(cfg, "step", 0.0);
  json scan = json::array();
  for (const json& v : cfg["values"]) {
    const cplx a = parse_complex(v, "family parameter");
    SpectralMeasure m = family == "symmetric_pair" ? SpectralMeasure::symmetric_pair(a)
                        : family == "single"       ? SpectralMeasure({{a, 1.0}})
                                                   : throw UsageError("unknown family '" + family + "' (symmetric_pair, single)");
    json crit = json::array();
    for (const CriticalPoint& c : find_critical_points(m, step)) {
      crit.push_back({{"z0", complex_json(c.z)},
                      {"P00", c.params.p00},
                      {"abs_P0", std::abs(c.params.p0)},
                      {"P1", c.params.p1},
                      {"chi", complex_json(c.params.chi)}});
    }
    std::printf("a = %-10g criticals: %zu\n", a.real(), crit.size());
    scan.push_back({{"parameter", complex_json(a)}, {"criticals", crit}});
  }
  const json doc = {{"config_hash", hex64(fnv1a(cfg.dump()))}, {"seed", resolve_seed(g, cfg)}, {"family", family}, {"scan", scan}};
  write_json(out_dir(g) / "criticals.json", doc);
  return 0;
}

int cmd_limit_density(const Globals& g) {
  const json cfg = load_config(g, true);
  const std::uint64_t seed = resolve_seed(g, cfg);
  const KernelParams p = parse_kernel(cfg);
  if (p.n > 1 && p.r0 != 0 && p.r0 < p.n) {
    throw UsageError("n-point densities support r0 = 0 or r0 >= n only (got n = " + std::to_string(p.n) +
                     ", r0 = " + std::to_string(p.r0) + ")");
  }
  const McConfig mc = parse_mc(cfg, seed, g.threads);
  std::vector<cplx> fixed;
  if (cfg.contains("fixed_points"))
    for (const json& f : cfg["fixed_points"]) fixed.push_back(parse_complex(f, "fixed point"));
  if (fixed.size() + 1 != p.n) {
    throw UsageError("\"fixed_points\" must hold n - 1 = " + std::to_string(p.n - 1) + " points");
  }
  DensityTable t;
  if (cfg.contains("points")) {
    for (const json& pt : cfg["points"]) {
      const cplx z = parse_complex(pt, "point");
      t.re.push_back(z.real());
      t.im.push_back(z.imag());
    }
  } else {
    const GridSpec grid = parse_grid(cfg);
    if (p.n == 1 && get_or(cfg, "bin_average", false)) {
      GridSpec gs = grid;
      t = limit_table(gs, p, true);
    } else {
      for (std::size_t ix = 0; ix < grid.bins(); ++ix)
        for (std::size_t iy = 0; iy < grid.bins(); ++iy) {
          t.re.push_back(grid.center(ix));
          t.im.push_back(grid.center(iy));
        }
    }
  }
  if (t.value.empty()) {
    std::vector<std::vector<cplx>> pts;
    for (std::size_t i = 0; i < t.re.size(); ++i) {
      std::vector<cplx> tuple{cplx(t.re[i], t.im[i])};
      tuple.insert(tuple.end(), fixed.begin(), fixed.end());
      pts.push_back(std::move(tuple));
    }
    t.value = density_limit(pts, p, mc);
  }
  const std::uint64_t hash = fnv1a(cfg.dump());
  const fs::path dir = out_dir(g);
  write_density_csv(dir / "density.csv", t, hash, seed);
  if (g.png) write_png_heatmap(dir / "density.png", t);
  std::printf("wrote %zu points to %s\n", t.size(), (dir / "density.csv").string().c_str());
  return 0;
}

int cmd_simulate(const Globals& g) {
  const json cfg = load_config(g, true);
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig ec;
  ec.spec = parse_spec(cfg);
  ec.tau = get_or(cfg, "tau", 1.0);
  if (cfg.contains("tau_hat")) ec.tau_hat = get_or(cfg, "tau_hat", 0.0);
  if (cfg.contains("p1")) ec.p1 = get_or(cfg, "p1", 1.0);
  ec.replicas = get_or<std::size_t>(cfg, "replicas", 1);
  ec.seed = resolve_seed(g, cfg);
  ec.grid = parse_grid(cfg);
  ec.validate();
  const bool keep_eigs = get_or(cfg, "write_eigenvalues", true);
  std::vector<std::vector<cplx>> eigs;
  const DensityGrid d = empirical_density(ec, g.threads, keep_eigs ? &eigs : nullptr);
  const std::uint64_t hash = fnv1a(cfg.dump());
  const fs::path dir = out_dir(g);
  if (keep_eigs) {
    std::string s = provenance_line(hash, ec.seed, 0) + "replica,re,im\n";
    for (std::size_t r = 0; r < eigs.size(); ++r)
      for (const cplx& l : eigs[r]) s += std::to_string(r) + "," + num(l.real()) + "," + num(l.imag()) + "\n";
    write_text(dir / "eigenvalues.csv", s);
  }
  const DensityTable t = table_from_grid(d);
  write_density_csv(dir / "density.csv", t, hash, ec.seed);
  if (g.png) write_png_heatmap(dir / "density.png", t);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const json summary = {{"config_hash", hex64(hash)},
                        {"seed", ec.seed},
                        {"N", ec.spec.n},
                        {"replicas", ec.replicas},
                        {"replicas_ok", d.replicas},
                        {"replicas_failed", d.failed},
                        {"tau", ec.resolved_tau()},
                        {"p1", ec.resolved_p1()},
                        {"grid", {{"L", ec.grid.half_width}, {"w", ec.grid.bin_width}}},
                        {"eigenvalues_in_window", d.in_window()},
                        {"wall_time", wall}};
  write_json(dir / "summary.json", summary);
  std::printf("N=%zu M=%zu failed=%zu tau=%s wall=%.2fs\n", ec.spec.n, d.replicas, d.failed, num(ec.resolved_tau()).c_str(), wall);
  return 0;
}

int cmd_compare(const Globals& g) {
  const json cfg = load_config(g, true);
  if (!cfg.contains("empirical") || !cfg["empirical"].is_array() || cfg["empirical"].empty()) {
    throw UsageError("compare needs a non-empty \"empirical\" array of density.csv paths");
  }
  if (!cfg.contains("limit") || !cfg["limit"].is_string()) throw UsageError("compare needs a \"limit\" density.csv path");
  const DensityTable lim = read_density_csv(cfg["limit"].get<std::string>());
  std::vector<double> labels;
  if (cfg.contains("labels")) labels = cfg["labels"].get<std::vector<double>>();
  json inputs = json::array();
  std::vector<double> l1s;
  for (std::size_t i = 0; i < cfg["empirical"].size(); ++i) {
    const std::string path = cfg["empirical"][i].get<std::string>();
    const DensityTable emp = read_density_csv(path);
    Comparison c;
    try {
      c = compare_tables(emp, lim);
    } catch (const Error& e) {
      throw UsageError(path + ": " + e.what());
    }
    l1s.push_back(c.l1);
    json entry = {{"path", path},
                  {"l1", c.l1},
                  {"l1_noise", c.l1_noise},
                  {"empirical_at_zero", c.empirical_at_zero},
                  {"limit_at_zero", c.limit_at_zero},
                  {"bin_diff", c.diff}};
    if (i < labels.size()) entry["label"] = labels[i];
    std::printf("%-40s L1=%s (noise %s) at0: %s vs %s\n", path.c_str(), num(c.l1).c_str(), num(c.l1_noise).c_str(),
                num(c.empirical_at_zero).c_str(), num(c.limit_at_zero).c_str());
    inputs.push_back(std::move(entry));
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < l1s.size(); ++i) decreasing = decreasing && l1s[i] < l1s[i - 1];
  const json doc = {{"config_hash", hex64(fnv1a(cfg.dump()))},
                    {"seed", resolve_seed(g, cfg)},
                    {"limit", cfg["limit"]},
                    {"inputs", inputs},
                    {"l1_strictly_decreasing", decreasing}};
  write_json(out_dir(g) / "compare.json", doc);
  return 0;
}

int cmd_verify(const Globals& g, const std::vector<std::string>& checks, bool all) {
  const json cfg = load_config(g, false);
  const std::uint64_t seed = resolve_seed(g, cfg);
  std::vector<std::string> names = all ? check_names() : checks;
  if (names.empty()) throw UsageError("verify needs --check NAME or --all");
  for (const std::string& n : names) {
    if (std::find(check_names().begin(), check_names().end(), n) == check_names().end()) {
      std::string known;
      for (const auto& k : check_names()) known += " " + k;
      throw UsageError("unknown check '" + n + "'; known:" + known);
    }
  }
  json reports = json::array();
  bool ok = true;
  for (const std::string& n : names) {
    for (const CheckReport& r : run_check(n, seed, g.threads)) {
      json values = json::object();
      for (const auto& [k, v] : r.values) values[k] = v;
      reports.push_back({{"name", r.name}, {"passed", r.passed}, {"values", values}, {"message", r.message}});
      std::printf("%-4s %s%s%s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.message.empty() ? "" : ": ",
                  r.message.c_str());
      ok = ok && r.passed;
    }
  }
  const json doc = {{"config_hash", hex64(fnv1a(cfg.dump()))}, {"seed", seed}, {"passed", ok}, {"checks", reports}};
  write_json(out_dir(g) / "verify-report.json", doc);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ginue-lab: deformed Ginibre edge statistics toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  if (const char* env = std::getenv("GINUE_LAB_THREADS")) g.threads = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
  app.add_option("--config", g.config, "JSON config file");
  auto* seed_opt = app.add_option("--seed", g.seed, "64-bit seed (overrides the config's \"seed\")");
  app.add_option("--threads", g.threads, "worker cap (default: GINUE_LAB_THREADS or all cores)");
  app.add_option("--out", g.out, "output directory");
  app.add_flag("--png", g.png, "also write a PNG heatmap");

  auto* classify_cmd = app.add_subcommand("classify", "edge parameters and class of probe points");
  auto* scan_cmd = app.add_subcommand("critical-scan", "critical edge points across a measure family");
  auto* limit_cmd = app.add_subcommand("limit-density", "limiting critical-edge density on a grid");
  auto* sim_cmd = app.add_subcommand("simulate", "empirical rescaled density from sampled matrices");
  auto* cmp_cmd = app.add_subcommand("compare", "compare empirical and limit density tables");
  auto* verify_cmd = app.add_subcommand("verify", "run verification checks");
  std::vector<std::string> checks;
  bool all = false;
  verify_cmd->add_option("--check", checks, "check name (repeatable)");
  verify_cmd->add_flag("--all", all, "run every check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    if (*classify_cmd) return cmd_classify(g);
    if (*scan_cmd) return cmd_critical_scan(g);
    if (*limit_cmd) return cmd_limit_density(g);
    if (*sim_cmd) return cmd_simulate(g);
    if (*cmp_cmd) return cmd_compare(g);
    if (*verify_cmd) return cmd_verify(g, checks, all);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (e.kind()) {
      case ErrorKind::InvalidArgument:
      case ErrorKind::Precondition:
      case ErrorKind::DimensionMismatch:
      case ErrorKind::NotSquare:
        return 2;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
