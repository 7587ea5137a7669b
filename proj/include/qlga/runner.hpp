#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>

#include <json.hpp>

#include "builders.hpp"
#include "measure.hpp"
#include "oracle.hpp"
#include "qsim.hpp"

namespace qlga {

using json = nlohmann::json;

enum class Reinit { None, Sample, Collapse };
enum class Backend { Auto, Dense, Sparse };
enum class CollisionChoice { Superposed, OneToOne, None };

struct MeasureRequest {
  std::string name;
  std::string kind;  // mass | density | pressure | force
  std::vector<Vec> region;
  std::optional<AxisSegment> wall;
  int dimension = 0;
  bool every_step = true;
};

struct RunConfig {
  std::vector<int> dims;
  std::string stencil;
  int steps_total = 1;
  int steps_per_circuit = 1;
  CollisionChoice collision = CollisionChoice::Superposed;
  Reinit reinit = Reinit::None;
  BoundaryMode boundary = BoundaryMode::Pointwise;
  std::vector<Cuboid> cuboids;
  std::vector<Circle> circles;
  InitialCondition init;
  std::vector<MeasureRequest> measurements;
  std::size_t shots = 0;
  u64 seed = 0;
  std::string output = "qlga_out";
  bool vtk = false;
  std::optional<double> cs;
  int max_qubits = 26;
  Backend backend = Backend::Auto;
  int fuse = 6;

  int segments() const { return (steps_total + steps_per_circuit - 1) / steps_per_circuit; }
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& path, const std::string& msg) {
  throw ConfigError((path.empty() ? std::string("/") : path) + ": " + msg);
}

inline const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) config_fail(path + "/" + key, "missing required field");
  return j.at(key);
}

inline int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) config_fail(path, "expected an integer");
  return j.get<int>();
}

inline double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) config_fail(path, "expected a number");
  return j.get<double>();
}

inline std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) config_fail(path, "expected a string");
  return j.get<std::string>();
}

inline bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) config_fail(path, "expected true or false");
  return j.get<bool>();
}

inline Vec as_vec(const json& j, int d, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != d)
    config_fail(path, "expected an array of " + std::to_string(d) + " integers");
  Vec v{0, 0, 0};
  for (int k = 0; k < d; ++k) v[k] = as_int(j[k], path + "/" + std::to_string(k));
  return v;
}

// "1000" (character i = channel i) or an integer bitmask
inline std::uint32_t as_profile(const json& j, int q, const std::string& path) {
  if (j.is_number_integer()) {
    auto v = j.get<long long>();
    if (v < 0 || v >= (1LL << q)) config_fail(path, "profile does not fit in " + std::to_string(q) + " channels");
    return static_cast<std::uint32_t>(v);
  }
  auto s = as_string(j, path);
  if (static_cast<int>(s.size()) != q) config_fail(path, "profile needs " + std::to_string(q) + " characters");
  try {
    return bits_to_mask(s);
  } catch (const Error& e) {
    config_fail(path, e.what());
  }
}

inline void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& path) {
  if (!j.is_object()) config_fail(path, "expected an object");
  for (auto& [k, v] : j.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) config_fail(path + "/" + k, "unknown field");
}

template <class E>
E as_enum(const json& j, const std::vector<std::pair<std::string, E>>& opts, const std::string& path) {
  auto s = as_string(j, path);
  for (auto& [name, v] : opts)
    if (name == s) return v;
  std::string all;
  for (auto& [name, v] : opts) all += (all.empty() ? "" : ", ") + name;
  config_fail(path, "'" + s + "' is not one of " + all);
}

inline std::vector<Vec> box_sites(const Vec& lo, const Vec& hi, int d) {
  std::vector<Vec> out;
  for (int z = lo[2]; z <= (d > 2 ? hi[2] : lo[2]); ++z)
    for (int y = lo[1]; y <= (d > 1 ? hi[1] : lo[1]); ++y)
      for (int x = lo[0]; x <= hi[0]; ++x) out.push_back({x, y, z});
  return out;
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  using namespace detail;
  check_keys(j, {"grid", "stencil", "steps_total", "steps_per_circuit", "collision", "reinit", "boundary",
                 "geometry", "init", "measurements", "shots", "seed", "output", "vtk", "cs", "max_qubits",
                 "backend", "fuse"},
             "");
  RunConfig c;
  c.stencil = as_string(field(j, "stencil", ""), "/stencil");
  Discretization D;
  try {
    D = build_discretization(c.stencil);
  } catch (const Error& e) {
    config_fail("/stencil", e.what());
  }
  const auto& g = field(j, "grid", "");
  if (!g.is_array() || static_cast<int>(g.size()) != D.d)
    config_fail("/grid", "expected " + std::to_string(D.d) + " extents for " + D.name);
  for (std::size_t k = 0; k < g.size(); ++k) {
    int n = as_int(g[k], "/grid/" + std::to_string(k));
    if (n < 1) config_fail("/grid/" + std::to_string(k), "extent must be positive");
    c.dims.push_back(n);
  }
  c.steps_total = as_int(field(j, "steps_total", ""), "/steps_total");
  if (c.steps_total < 1) config_fail("/steps_total", "must be at least 1");
  if (j.contains("steps_per_circuit")) c.steps_per_circuit = as_int(j["steps_per_circuit"], "/steps_per_circuit");
  if (c.steps_per_circuit < 1) config_fail("/steps_per_circuit", "must be at least 1");
  if (j.contains("collision"))
    c.collision = as_enum<CollisionChoice>(j["collision"],
                                           {{"superposed", CollisionChoice::Superposed},
                                            {"one_to_one", CollisionChoice::OneToOne},
                                            {"none", CollisionChoice::None}},
                                           "/collision");
  if (j.contains("reinit"))
    c.reinit = as_enum<Reinit>(j["reinit"],
                               {{"none", Reinit::None}, {"sample", Reinit::Sample}, {"collapse", Reinit::Collapse}},
                               "/reinit");
  if (j.contains("boundary"))
    c.boundary = as_enum<BoundaryMode>(
        j["boundary"], {{"pointwise", BoundaryMode::Pointwise}, {"volumetric", BoundaryMode::Volumetric}},
        "/boundary");
  if (c.reinit == Reinit::None && c.steps_total > c.steps_per_circuit)
    config_fail("/steps_total", "exceeds steps_per_circuit while reinit is none");
  for (int k = 0; k < D.d; ++k)
    if (2 * c.steps_per_circuit + 1 > c.dims[k])
      config_fail("/steps_per_circuit", "stencil of " + std::to_string(2 * c.steps_per_circuit + 1) +
                                            " sites exceeds grid extent " + std::to_string(c.dims[k]));

  Geometry G(c.dims, D);
  if (j.contains("geometry")) {
    const auto& geo = j["geometry"];
    if (!geo.is_array()) config_fail("/geometry", "expected an array");
    for (std::size_t i = 0; i < geo.size(); ++i) {
      std::string p = "/geometry/" + std::to_string(i);
      auto type = as_string(field(geo[i], "type", p), p + "/type");
      try {
        if (type == "cuboid") {
          check_keys(geo[i], {"type", "lo", "hi"}, p);
          Cuboid b{as_vec(field(geo[i], "lo", p), D.d, p + "/lo"), as_vec(field(geo[i], "hi", p), D.d, p + "/hi")};
          G.add_cuboid(b);
          c.cuboids.push_back(b);
        } else if (type == "circle") {
          check_keys(geo[i], {"type", "center", "radius"}, p);
          Circle s{as_vec(field(geo[i], "center", p), D.d, p + "/center"),
                   as_number(field(geo[i], "radius", p), p + "/radius")};
          G.add_circle(s);
          c.circles.push_back(s);
        } else {
          config_fail(p + "/type", "'" + type + "' is not cuboid or circle");
        }
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        config_fail(p, e.what());
      }
    }
  }

  if (j.contains("init")) {
    const auto& in = j["init"];
    check_keys(in, {"points", "volumes"}, "/init");
    if (in.contains("points")) {
      if (!in["points"].is_array()) config_fail("/init/points", "expected an array");
      for (std::size_t i = 0; i < in["points"].size(); ++i) {
        std::string p = "/init/points/" + std::to_string(i);
        const auto& e = in["points"][i];
        check_keys(e, {"site", "profile"}, p);
        c.init.points.push_back(
            {as_vec(field(e, "site", p), D.d, p + "/site"), as_profile(field(e, "profile", p), D.q, p + "/profile")});
      }
    }
    if (in.contains("volumes")) {
      if (!in["volumes"].is_array()) config_fail("/init/volumes", "expected an array");
      for (std::size_t i = 0; i < in["volumes"].size(); ++i) {
        std::string p = "/init/volumes/" + std::to_string(i);
        const auto& e = in["volumes"][i];
        check_keys(e, {"lo", "hi", "profile"}, p);
        c.init.volumes.push_back({{as_vec(field(e, "lo", p), D.d, p + "/lo"), as_vec(field(e, "hi", p), D.d, p + "/hi")},
                                  as_profile(field(e, "profile", p), D.q, p + "/profile")});
      }
    }
    try {
      LatticeSpec probe(c.dims, D, 0);
      validate_initial_condition(probe, G, c.init);
    } catch (const Error& e) {
      config_fail("/init", e.what());
    }
  }

  if (j.contains("measurements")) {
    const auto& ms = j["measurements"];
    if (!ms.is_array()) config_fail("/measurements", "expected an array");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      std::string p = "/measurements/" + std::to_string(i);
      const auto& e = ms[i];
      check_keys(e, {"name", "kind", "region", "wall", "dimension", "schedule"}, p);
      MeasureRequest m;
      m.kind = as_string(field(e, "kind", p), p + "/kind");
      m.name = e.contains("name") ? as_string(e["name"], p + "/name") : m.kind + std::to_string(i);
      if (e.contains("schedule"))
        m.every_step = as_enum<bool>(e["schedule"], {{"every_step", true}, {"final", false}}, p + "/schedule");
      if (m.kind == "mass" || m.kind == "density" || m.kind == "pressure") {
        const auto& r = field(e, "region", p);
        check_keys(r, {"lo", "hi"}, p + "/region");
        Vec lo = as_vec(field(r, "lo", p + "/region"), D.d, p + "/region/lo");
        Vec hi = as_vec(field(r, "hi", p + "/region"), D.d, p + "/region/hi");
        for (int k = 0; k < D.d; ++k)
          if (lo[k] < 0 || hi[k] >= c.dims[k] || lo[k] > hi[k]) config_fail(p + "/region", "region outside grid");
        m.region = box_sites(lo, hi, D.d);
      } else if (m.kind == "force") {
        const auto& w = field(e, "wall", p);
        check_keys(w, {"channel", "start", "along", "length"}, p + "/wall");
        AxisSegment seg;
        seg.channel = as_int(field(w, "channel", p + "/wall"), p + "/wall/channel");
        if (seg.channel < 0 || seg.channel >= D.q || D.is_rest(seg.channel))
          config_fail(p + "/wall/channel", "not a moving channel of " + D.name);
        seg.start = as_vec(field(w, "start", p + "/wall"), D.d, p + "/wall/start");
        seg.along = w.contains("along") ? as_int(w["along"], p + "/wall/along") : -1;
        seg.length = w.contains("length") ? as_int(w["length"], p + "/wall/length") : 1;
        if (seg.along >= D.d || seg.length < 1 || (seg.along < 0 && seg.length != 1))
          config_fail(p + "/wall", "inconsistent along/length");
        for (auto& s : seg.sites())
          for (int k = 0; k < D.d; ++k)
            if (s[k] < 0 || s[k] >= c.dims[k]) config_fail(p + "/wall", "wall leaves the grid");
        m.wall = seg;
        m.dimension = e.contains("dimension") ? as_int(e["dimension"], p + "/dimension") : 0;
        if (m.dimension < 0 || m.dimension >= D.d) config_fail(p + "/dimension", "out of range");
      } else {
        config_fail(p + "/kind", "'" + m.kind + "' is not mass, density, pressure or force");
      }
      c.measurements.push_back(std::move(m));
    }
  }

  if (j.contains("shots")) {
    int s = as_int(j["shots"], "/shots");
    if (s < 0) config_fail("/shots", "must be non-negative");
    c.shots = static_cast<std::size_t>(s);
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) config_fail("/seed", "expected an integer");
    c.seed = j["seed"].get<u64>();
  }
  if (j.contains("output")) c.output = as_string(j["output"], "/output");
  if (j.contains("vtk")) c.vtk = as_bool(j["vtk"], "/vtk");
  if (j.contains("cs")) {
    c.cs = as_number(j["cs"], "/cs");
    if (*c.cs <= 0) config_fail("/cs", "must be positive");
  }
  if (j.contains("max_qubits")) c.max_qubits = as_int(j["max_qubits"], "/max_qubits");
  if (c.max_qubits < 1 || c.max_qubits > 30) config_fail("/max_qubits", "must lie in 1..30");
  if (j.contains("backend"))
    c.backend = as_enum<Backend>(
        j["backend"], {{"auto", Backend::Auto}, {"dense", Backend::Dense}, {"sparse", Backend::Sparse}}, "/backend");
  if (j.contains("fuse")) c.fuse = as_int(j["fuse"], "/fuse");
  if (c.fuse < 0 || c.fuse > 8) config_fail("/fuse", "must lie in 0..8");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

// Everything derived from a config: lattice, geometry, classes, backend.
class RunContext {
 public:
  explicit RunContext(RunConfig cfg)
      : cfg_(std::move(cfg)),
        disc_(make_disc(cfg_)),
        geom_(make_geometry(cfg_, disc_)),
        lattice_(cfg_.dims, disc_, cfg_.steps_per_circuit, needs(cfg_, geom_)),
        classes_(nontrivial_classes(disc_)) {
    backend_ = choose_backend();
    opt_.boundary = cfg_.boundary;
    opt_.collide = cfg_.collision != CollisionChoice::None;
    opt_.collision = cfg_.collision == CollisionChoice::OneToOne ? CollisionMode::OneToOne : CollisionMode::Superposed;
  }

  const RunConfig& cfg() const { return cfg_; }
  const Discretization& disc() const { return disc_; }
  const Geometry& geometry() const { return geom_; }
  const LatticeSpec& lattice() const { return lattice_; }
  const std::vector<EquivalenceClass>& classes() const { return classes_; }
  const StepOptions& options() const { return opt_; }
  Backend backend() const { return backend_; }
  int register_qubits() const { return lattice_.n_grid() + lattice_.n_velocity(); }

  static AncillaNeeds needs(const RunConfig& c, const Geometry& G) {
    AncillaNeeds n;
    bool vol = c.boundary == BoundaryMode::Volumetric && !G.empty();
    n.diagonal = vol && !G.diagonal_segments().empty();
    n.comparators = !c.init.volumes.empty() || vol;
    return n;
  }

 private:
  static Discretization make_disc(const RunConfig& c) {
    Discretization D = build_discretization(c.stencil);
    if (c.cs) D.cs = *c.cs;
    return D;
  }
  static Geometry make_geometry(const RunConfig& c, const Discretization& D) {
    Geometry G(c.dims, D);
    for (auto& b : c.cuboids) G.add_cuboid(b);
    for (auto& s : c.circles) G.add_circle(s);
    return G;
  }
  Backend choose_backend() const {
    const int n = lattice_.n_total();
    const auto lim = static_cast<std::size_t>(cfg_.max_qubits);
    if (n <= cfg_.max_qubits) {
      if (cfg_.backend != Backend::Auto) return cfg_.backend;
      return n <= 22 ? Backend::Dense : Backend::Sparse;
    }
    if (cfg_.reinit == Reinit::None)
      throw BudgetExceeded(n, lim, "register exceeds the dense budget and reinit is none");
    if (cfg_.backend == Backend::Dense) throw BudgetExceeded(n, lim, "dense backend requested beyond the budget");
    if (n > 63) throw BudgetExceeded(n, 63, "register exceeds the sparse index width");
    return Backend::Sparse;
  }

  RunConfig cfg_;
  Discretization disc_;
  Geometry geom_;
  LatticeSpec lattice_;
  std::vector<EquivalenceClass> classes_;
  StepOptions opt_;
  Backend backend_ = Backend::Dense;
};

struct MeasurementRecord {
  int step;
  std::string name;
  std::string kind;
  double raw;         // <P O>
  double scaled;      // uniform-superposition scaling
  double normalized;  // exact normalization by the represented grid weight
};

struct RunResult {
  std::vector<std::vector<double>> mass;  // per step, per site id
  std::vector<MeasurementRecord> measurements;
  std::map<std::string, std::size_t> gate_counts;
  GateEstimate estimate;
  int segments = 0;
  std::size_t peak_support = 0;
  int qubits = 0;
  std::string backend;
};

// Value of a mask read as a ket |n_0 n_1 ... n_{q-1}>, channel 0 most significant
inline std::uint32_t ket_value(std::uint32_t mask, int q) {
  std::uint32_t v = 0;
  for (int j = 0; j < q; ++j) v |= (mask >> j & 1u) << (q - 1 - j);
  return v;
}

// Deterministic per-site field: majority class, then its lowest member in ket order
inline std::vector<std::uint32_t> collapse_field(const std::vector<SiteDistribution>& sites, const Discretization& D) {
  static thread_local std::map<std::string, std::vector<EquivalenceClass>> cache;
  auto& all = cache[D.name];
  if (all.empty()) all = enumerate_classes(D);
  std::vector<int> class_of(std::size_t{1} << D.q, -1);
  for (std::size_t c = 0; c < all.size(); ++c)
    for (auto m : all[c].members) class_of[m] = static_cast<int>(c);
  std::vector<std::uint32_t> out;
  for (auto& s : sites) {
    std::map<int, double> w;
    for (auto& [pat, p] : s.patterns) w[class_of[pat]] += p;
    int best = -1;
    double bp = -1;
    for (auto& [c, p] : w)
      if (p > bp + 1e-12) {
        best = c;
        bp = p;
      }
    if (best < 0) {
      out.push_back(0u);
      continue;
    }
    const auto& mem = all[best].members;
    out.push_back(*std::min_element(mem.begin(), mem.end(), [&](std::uint32_t a, std::uint32_t b) {
      return ket_value(a, D.q) < ket_value(b, D.q);
    }));
  }
  return out;
}

inline std::vector<std::uint32_t> sample_field(const std::vector<SiteDistribution>& sites, u64 seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<std::uint32_t> out;
  for (auto& s : sites) {
    double u = U(rng), acc = 0;
    std::uint32_t pick = 0;
    for (auto& [pat, p] : s.patterns) {
      acc += p;
      pick = pat;
      if (u < acc) break;
    }
    out.push_back(pick);
  }
  return out;
}

inline u64 segment_seed(u64 seed, int segment) { return seed ^ (0x9E3779B97F4A7C15ull * static_cast<u64>(segment + 1)); }

inline std::vector<std::uint32_t> reinit_field(const std::vector<SiteDistribution>& sites, const RunContext& ctx,
                                               int segment) {
  if (ctx.cfg().reinit == Reinit::Sample) return sample_field(sites, segment_seed(ctx.cfg().seed, segment));
  return collapse_field(sites, ctx.disc());
}

inline InitialCondition points_from_field(const std::vector<std::uint32_t>& f, const LatticeSpec& L, const Geometry& G) {
  InitialCondition ic;
  for (long long id = 0; id < static_cast<long long>(f.size()); ++id) {
    Vec s = L.site_of(id);
    if (f[id] == 0 || (!G.empty() && G.solid(s))) continue;
    ic.points.push_back({s, f[id]});
  }
  return ic;
}

namespace detail {

inline Circuit prepare(const Circuit& c, const RunContext& ctx) {
  if (ctx.backend() == Backend::Dense && ctx.cfg().fuse > 1) return fuse(c, ctx.cfg().fuse);
  return c;
}

template <class State>
double grid_weight(const State& s, const Observable& o) {
  return expectation(s, [](u64) { return 1.0; }, [&](u64 i) { return o.projects(i); });
}

// mass per site estimated from shots at the stencil origin
template <class State>
std::vector<double> shot_mass_field(const State& s, const LatticeSpec& L, std::size_t shots, u64 seed) {
  std::vector<double> m(static_cast<std::size_t>(L.n_sites()), 0.0), hits(m.size(), 0.0);
  for (auto& [b, n] : sample(s, shots, seed)) {
    auto v = L.grid_site(b);
    if (!v) continue;
    auto id = L.site_id(*v);
    m[id] += double(n) * popcount(L.site_pattern(b, 0));
    hits[id] += double(n);
  }
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = hits[i] > 0 ? m[i] / hits[i] : 0.0;
  return m;
}

template <class State>
void measure_into(RunResult& res, const State& s, const RunContext& ctx, int step, bool final_step, bool force_phase) {
  const auto& L = ctx.lattice();
  for (auto& m : ctx.cfg().measurements) {
    if (!m.every_step && !final_step) continue;
    if ((m.kind == "force") != force_phase) continue;
    Observable o;
    if (m.kind == "force") {
      // the solid wall sites on the origin copy carry the impinging particles before bounce-back
      o.qubits = L.site_qubits(0);
      o.weights.assign(std::size_t{1} << L.q(), 0.0);
      for (std::size_t p = 0; p < o.weights.size(); ++p)
        if (p >> m.wall->channel & 1u) o.weights[p] = 2.0 * L.disc().channels[m.wall->channel][m.dimension];
      o.grid_qubits = L.all_grid_qubits();
      std::set<u64> g;
      for (auto& w : m.wall->sites()) g.insert(L.grid_value(L.wrap(w)));
      o.projector.assign(g.begin(), g.end());
      o.scale = std::ldexp(1.0, L.n_grid());
    } else {
      Quantity k = m.kind == "mass" ? Quantity::Mass : m.kind == "density" ? Quantity::Density : Quantity::Pressure;
      o = region_observable(L, m.region, {0, 0, 0}, k);
    }
    double raw = expectation_diagonal(s, o);
    double gw = grid_weight(s, o);
    double norm = 0;
    if (gw > 0) {
      double per_state = raw / gw;
      const double size = double(o.projector.size());
      norm = m.kind == "force" ? per_state * size : per_state * o.scale * size * std::ldexp(1.0, -L.n_grid());
    }
    res.measurements.push_back({step, m.name, m.kind, raw, raw * o.scale, norm});
  }
}

template <class State>
void record_mass(RunResult& res, const State& s, const RunContext& ctx, int step) {
  if (ctx.cfg().shots > 0)
    res.mass.push_back(shot_mass_field(s, ctx.lattice(), ctx.cfg().shots, segment_seed(ctx.cfg().seed, 1000 + step)));
  else
    res.mass.push_back(mass_field(s, ctx.lattice(), 0));
}

template <class State>
std::size_t support_of(const State& s) {
  std::size_t n = 0;
  s.for_each([&](u64, const cplx&) { ++n; });
  return n;
}

inline void count_gates(RunResult& res, const Circuit& c) {
  for (auto& [t, n] : c.count_by_tag()) res.gate_counts[t] += n;
  auto e = estimate(c);
  res.estimate.cx += e.cx;
  res.estimate.single += e.single;
}

template <class State>
RunResult simulate(const RunContext& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& L = ctx.lattice();
  const auto& G = ctx.geometry();
  RunResult res;
  res.qubits = L.n_total();
  res.segments = cfg.segments();
  InitialCondition ic = cfg.init;
  int step = 0;
  for (int seg = 0; seg < cfg.segments(); ++seg) {
    const int here = std::min(L.n_t(), cfg.steps_total - step);
    Circuit init = seg == 0 ? initial_conditions(L, G, ic) : pointwise_init(L, G, ic);
    count_gates(res, init);
    State s(L.n_total());
    run(s, prepare(init, ctx));
    if (seg == 0) {
      record_mass(res, s, ctx, 0);
      measure_into(res, s, ctx, 0, false, false);
    }
    for (int tau = 1; tau <= here; ++tau) {
      ++step;
      const bool last = step == cfg.steps_total;
      Circuit stream = streaming_step(L, tau);
      Circuit rest = boundary_step(L, G, tau, ctx.options().boundary);
      if (ctx.options().collide) rest.append(full_collision(L, tau, ctx.options().collision, &ctx.classes()));
      count_gates(res, stream);
      count_gates(res, rest);
      run(s, prepare(stream, ctx));
      measure_into(res, s, ctx, step, last, true);
      run(s, prepare(rest, ctx));
      res.peak_support = std::max(res.peak_support, support_of(s));
      record_mass(res, s, ctx, step);
      measure_into(res, s, ctx, step, last, false);
    }
    if (seg + 1 < cfg.segments()) ic = points_from_field(reinit_field(site_distributions(s, L, 0), ctx, seg), L, G);
  }
  return res;
}

inline std::string fmt12(double v) {
  if (std::abs(v) < 1e-12) v = 0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace detail

inline RunResult run_quantum(const RunContext& ctx) {
  RunResult r = ctx.backend() == Backend::Dense ? detail::simulate<DenseState>(ctx) : detail::simulate<SparseState>(ctx);
  r.backend = ctx.backend() == Backend::Dense ? "dense" : "sparse";
  return r;
}

inline std::vector<SiteDistribution> marginals(const FieldDistribution& fd) {
  std::vector<SiteDistribution> out;
  for (auto& [k, fp] : fd.support) {
    if (out.empty()) out.resize(fp.first.occ.size());
    for (std::size_t i = 0; i < fp.first.occ.size(); ++i) {
      out[i].weight += fp.second;
      out[i].patterns[fp.first.occ[i]] += fp.second;
    }
  }
  return out;
}

// classical reference run with the same segmenting and reinitialization
inline RunResult run_oracle(const RunContext& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& D = ctx.disc();
  const auto& G = ctx.geometry();
  ClassIndex C(D);
  RunResult res;
  res.segments = cfg.segments();
  res.backend = "oracle";
  LatticeField f0 = field_from_initial(cfg.dims, cfg.init);
  FieldDistribution fd;
  fd.support[f0.key()] = {f0, 1.0};
  res.mass.push_back(f0.mass());
  const bool stochastic = cfg.collision == CollisionChoice::Superposed;
  const ClassIndex* det = cfg.collision == CollisionChoice::OneToOne ? &C : nullptr;
  int step = 0;
  for (int seg = 0; seg < cfg.segments(); ++seg) {
    const int here = std::min(cfg.steps_per_circuit, cfg.steps_total - step);
    for (int tau = 1; tau <= here; ++tau) {
      ++step;
      if (stochastic) {
        fd = classical_step(fd, G, D, C);
      } else {
        FieldDistribution next;
        for (auto& [k, fp] : fd.support) {
          auto g = classical_step(fp.first, G, D, det);
          auto& slot = next.support[g.key()];
          slot.first = g;
          slot.second += fp.second;
        }
        fd = std::move(next);
      }
      res.mass.push_back(fd.expected_mass());
      res.peak_support = std::max(res.peak_support, fd.support.size());
    }
    if (seg + 1 < cfg.segments()) {
      auto sites = marginals(fd);
      auto field = reinit_field(sites, ctx, seg);
      LatticeField f(cfg.dims);
      for (std::size_t i = 0; i < field.size(); ++i)
        if (G.empty() || !G.solid(f.site(static_cast<long long>(i)))) f.occ[i] = field[i];
      fd.support.clear();
      fd.support[f.key()] = {f, 1.0};
    }
  }
  return res;
}

inline void write_mass_csv(const std::string& path, const std::vector<int>& dims,
                           const std::vector<std::vector<double>>& mass) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  const char* axes[] = {"x", "y", "z"};
  out << "step";
  for (std::size_t k = 0; k < dims.size(); ++k) out << ',' << axes[k];
  out << ",mass\n";
  for (std::size_t step = 0; step < mass.size(); ++step)
    for (std::size_t id = 0; id < mass[step].size(); ++id) {
      out << step;
      long long r = static_cast<long long>(id);
      for (int n : dims) {
        out << ',' << r % n;
        r /= n;
      }
      out << ',' << detail::fmt12(mass[step][id]) << '\n';
    }
}

inline std::vector<std::vector<double>> read_mass_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("step,", 0) != 0) throw Error(path + ": missing mass header");
  std::vector<std::vector<double>> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto first = line.find(',');
    auto last = line.rfind(',');
    std::size_t step = std::stoul(line.substr(0, first));
    if (out.size() <= step) out.resize(step + 1);
    out[step].push_back(std::stod(line.substr(last + 1)));
  }
  return out;
}

inline void write_vtk(const std::string& path, const std::vector<int>& dims, const std::vector<double>& field,
                      const Geometry& G) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  int nx = dims[0], ny = dims.size() > 1 ? dims[1] : 1, nz = dims.size() > 2 ? dims[2] : 1;
  out << "# vtk DataFile Version 3.0\nqlga mass field\nASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << nx << ' ' << ny << ' ' << nz << "\nORIGIN 0 0 0\nSPACING 1 1 1\n";
  out << "POINT_DATA " << field.size() << "\nSCALARS mass double 1\nLOOKUP_TABLE default\n";
  for (double v : field) out << detail::fmt12(v) << '\n';
  out << "SCALARS solid int 1\nLOOKUP_TABLE default\n";
  for (std::size_t i = 0; i < field.size(); ++i) {
    long long r = static_cast<long long>(i);
    Vec s{0, 0, 0};
    for (std::size_t k = 0; k < dims.size(); ++k) {
      s[k] = static_cast<int>(r % dims[k]);
      r /= dims[k];
    }
    out << (!G.empty() && G.solid(s) ? 1 : 0) << '\n';
  }
}

inline void write_outputs(const RunContext& ctx, const RunResult& r, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_mass_csv((fs::path(dir) / "mass.csv").string(), ctx.cfg().dims, r.mass);
  if (!r.measurements.empty() || !ctx.cfg().measurements.empty()) {
    std::ofstream m(fs::path(dir) / "measurements.csv");
    m << "step,name,kind,raw,scaled,normalized\n";
    for (auto& x : r.measurements)
      m << x.step << ',' << x.name << ',' << x.kind << ',' << detail::fmt12(x.raw) << ',' << detail::fmt12(x.scaled)
        << ',' << detail::fmt12(x.normalized) << '\n';
  }
  if (ctx.cfg().vtk) {
    fs::create_directories(fs::path(dir) / "vtk");
    for (std::size_t s = 0; s < r.mass.size(); ++s) {
      char name[32];
      std::snprintf(name, sizeof name, "mass_%04zu.vtk", s);
      write_vtk((fs::path(dir) / "vtk" / name).string(), ctx.cfg().dims, r.mass[s], ctx.geometry());
    }
  }
  if (!r.gate_counts.empty()) {
    json g;
    for (auto& [t, n] : r.gate_counts) g["native"][t.empty() ? "untagged" : t] = n;
    g["cx_estimate"] = r.estimate.cx;
    g["single_qubit_estimate"] = r.estimate.single;
    std::ofstream(fs::path(dir) / "gates.json") << g.dump(2) << '\n';
  }
  json s;
  s["backend"] = r.backend;
  s["qubits"] = r.qubits;
  s["register_qubits"] = ctx.register_qubits();
  s["segments"] = r.segments;
  s["steps"] = static_cast<int>(r.mass.size()) - 1;
  s["peak_support"] = r.peak_support;
  std::vector<double> totals;
  for (auto& f : r.mass) {
    double t = 0;
    for (double v : f) t += v;
    totals.push_back(t);
  }
  s["total_mass"] = totals;
  std::ofstream(fs::path(dir) / "summary.json") << s.dump(2) << '\n';
}

struct CompareResult {
  double linf = 0;
  std::vector<double> per_step;
  bool same_shape = true;
  bool match(double tol = 1e-9) const { return same_shape && linf <= tol; }
};

inline CompareResult compare_runs(const std::string& dir_a, const std::string& dir_b) {
  namespace fs = std::filesystem;
  auto a = read_mass_csv((fs::path(dir_a) / "mass.csv").string());
  auto b = read_mass_csv((fs::path(dir_b) / "mass.csv").string());
  CompareResult r;
  r.same_shape = a.size() == b.size();
  for (std::size_t s = 0; s < std::min(a.size(), b.size()); ++s) {
    if (a[s].size() != b[s].size()) {
      r.same_shape = false;
      break;
    }
    double d = compare_fields(a[s], b[s]).linf;
    r.per_step.push_back(d);
    r.linf = std::max(r.linf, d);
  }
  return r;
}

// Per-builder counts for one circuit segment plus scaling columns over n_t = 1, 2, 3
inline json gate_report(const RunContext& ctx) {
  const auto& L = ctx.lattice();
  const auto& G = ctx.geometry();
  json rep;
  auto add = [&](const std::string& name, const Circuit& c) {
    auto e = estimate(c);
    rep["builders"][name] = {{"native", c.size()}, {"cx_estimate", e.cx}, {"single_qubit_estimate", e.single}};
  };
  add("initial_conditions", initial_conditions(L, G, ctx.cfg().init));
  Circuit stream, bounce, coll;
  for (int tau = 1; tau <= L.n_t(); ++tau) {
    stream.append(streaming_step(L, tau));
    bounce.append(boundary_step(L, G, tau, ctx.options().boundary));
    if (ctx.options().collide) coll.append(full_collision(L, tau, ctx.options().collision, &ctx.classes()));
  }
  add("streaming", stream);
  add("boundary", bounce);
  add("collision", coll);
  rep["qubits"] = {{"grid", L.n_grid()}, {"velocity", L.n_velocity()}, {"ancilla", L.n_ancilla()}, {"total", L.n_total()}};
  for (int nt = 1; nt <= 3; ++nt) {
    std::vector<int> dims = ctx.cfg().dims;
    for (auto& n : dims) n = std::max(n, 2 * nt + 1);
    LatticeSpec S(dims, ctx.disc(), nt);
    std::size_t swaps = 0;
    for (int tau = 1; tau <= nt; ++tau) swaps += streaming_step(S, tau).size();
    const int j = ctx.disc().channel_pairs().front()[0];
    rep["scaling"].push_back({{"n_t", nt},
                              {"stencil_sites", S.stencil().site_count()},
                              {"streaming_swaps", swaps},
                              {"bounceback_pairs", bounceback_pair_count(S, j)},
                              {"bounceback_closed_form", bounceback_closed_form(nt)}});
  }
  return rep;
}

inline json validate_config(const std::string& path) {
  RunConfig c = load_config(path);
  const Discretization D = build_discretization(c.stencil);
  json d;
  d["ok"] = true;
  d["grid_qubits"] = grid_qubit_count(c.dims);
  d["velocity_qubits"] = velocity_qubit_count(D, c.steps_per_circuit);
  d["forecast_qubits"] = grid_qubit_count(c.dims) + velocity_qubit_count(D, c.steps_per_circuit);
  RunContext ctx(c);
  d["ancilla_qubits"] = ctx.lattice().n_ancilla();
  d["total_qubits"] = ctx.lattice().n_total();
  d["backend"] = ctx.backend() == Backend::Dense ? "dense" : "sparse";
  d["segments"] = c.segments();
  return d;
}

}  // namespace qlga
