#include "ogsf/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "ogsf/binary_io.hpp"
#include "ogsf/error.hpp"

namespace ogsf {

namespace {

constexpr char kMagic[] = "OGSF";
constexpr std::uint32_t kHasFlow = 1u << 0;
constexpr std::uint32_t kHasOcc = 1u << 1;

bool all_finite(const std::vector<float>& v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

std::vector<float> to_float(std::span<const Real> v) { return {v.begin(), v.end()}; }
std::vector<Real> to_real(const std::vector<float>& v) { return {v.begin(), v.end()}; }

PointCloud make_cloud(const std::vector<float>& pos, const std::vector<float>& rgb) {
  PointCloud c;
  c.positions = to_real(pos);
  c.features = to_real(rgb);
  c.feature_dim = 3;
  return c;
}

void put_floats(io::Writer& w, const std::vector<float>& v) {
  for (float x : v) w.put(x);
}

std::vector<float> get_floats(io::Reader& r, std::size_t count) {
  r.require(count * sizeof(float));
  std::vector<float> v(count);
  for (auto& x : v) x = r.get<float>();
  return v;
}

std::vector<float> pick_rows(const std::vector<float>& v, std::size_t width,
                             std::span<const std::size_t> rows) {
  std::vector<float> out;
  out.reserve(rows.size() * width);
  for (auto r : rows) out.insert(out.end(), v.begin() + r * width, v.begin() + (r + 1) * width);
  return out;
}

// First n entries of a seeded partial Fisher-Yates shuffle of 0..total-1.
std::vector<std::size_t> draw_without_replacement(std::size_t total, std::size_t n,
                                                  std::mt19937_64& rng) {
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, total - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(n);
  return idx;
}

using Mat3 = std::array<std::array<Real, 3>, 3>;

Mat3 axis_angle(std::array<Real, 3> axis, Real angle) {
  const Real norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  for (auto& a : axis) a /= norm;
  const Real c = std::cos(angle), s = std::sin(angle), t = 1 - c;
  const auto [x, y, z] = axis;
  return {{{t * x * x + c, t * x * y - s * z, t * x * z + s * y},
           {t * x * y + s * z, t * y * y + c, t * y * z - s * x},
           {t * x * z - s * y, t * y * z + s * x, t * z * z + c}}};
}

}  // namespace

void ScenePair::validate() const {
  if (source_positions.size() % 3 != 0 || target_positions.size() % 3 != 0)
    throw DataError("scene pair: position arrays are not n x 3");
  if (n1() == 0 || n2() == 0) throw DataError("scene pair: empty cloud");
  if (source_rgb.size() != source_positions.size() || target_rgb.size() != target_positions.size())
    throw DataError("scene pair: rgb arrays do not match point counts");
  if (gt_flow && gt_flow->size() != 3 * n1())
    throw DataError("scene pair: gt_flow has " + std::to_string(gt_flow->size()) +
                    " values for " + std::to_string(n1()) + " source points");
  if (gt_occ && gt_occ->size() != n1())
    throw DataError("scene pair: gt_occ has " + std::to_string(gt_occ->size()) +
                    " values for " + std::to_string(n1()) + " source points");
  if (!all_finite(source_positions) || !all_finite(source_rgb) || !all_finite(target_positions) ||
      !all_finite(target_rgb) || (gt_flow && !all_finite(*gt_flow)))
    throw DataError("scene pair: non-finite value");
  if (gt_occ && !std::all_of(gt_occ->begin(), gt_occ->end(),
                             [](float x) { return x >= 0.0f && x <= 1.0f; }))
    throw DataError("scene pair: gt_occ values must lie in [0, 1]");
}

bool ScenePair::has_binary_occlusion() const {
  return gt_occ && std::all_of(gt_occ->begin(), gt_occ->end(),
                               [](float x) { return x == 0.0f || x == 1.0f; });
}

PointCloud ScenePair::source_cloud() const { return make_cloud(source_positions, source_rgb); }
PointCloud ScenePair::target_cloud() const { return make_cloud(target_positions, target_rgb); }
std::vector<Real> ScenePair::flow() const { return gt_flow ? to_real(*gt_flow) : std::vector<Real>{}; }
std::vector<Real> ScenePair::occlusion() const {
  return gt_occ ? to_real(*gt_occ) : std::vector<Real>{};
}

ScenePair make_scene_pair(std::span<const Real> source_positions, std::span<const Real> source_rgb,
                          std::span<const Real> target_positions, std::span<const Real> target_rgb,
                          std::span<const Real> gt_flow, std::span<const Real> gt_occ) {
  ScenePair p;
  p.source_positions = to_float(source_positions);
  p.source_rgb = to_float(source_rgb);
  p.target_positions = to_float(target_positions);
  p.target_rgb = to_float(target_rgb);
  if (!gt_flow.empty()) p.gt_flow = to_float(gt_flow);
  if (!gt_occ.empty()) p.gt_occ = to_float(gt_occ);
  p.validate();
  return p;
}

std::vector<std::uint8_t> encode_sample(const ScenePair& pair) {
  pair.validate();
  io::Writer w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put(kSampleVersion);
  w.put(static_cast<std::uint32_t>((pair.gt_flow ? kHasFlow : 0) | (pair.gt_occ ? kHasOcc : 0)));
  w.put(static_cast<std::uint32_t>(pair.n1()));
  w.put(static_cast<std::uint32_t>(pair.n2()));
  put_floats(w, pair.source_positions);
  put_floats(w, pair.source_rgb);
  put_floats(w, pair.target_positions);
  put_floats(w, pair.target_rgb);
  if (pair.gt_flow) put_floats(w, *pair.gt_flow);
  if (pair.gt_occ) put_floats(w, *pair.gt_occ);
  return std::move(w.bytes());
}

ScenePair decode_sample(const std::vector<std::uint8_t>& bytes) {
  io::Reader r(bytes, "sample");
  if (r.remaining() < 4 || r.get_string(4) != std::string_view(kMagic, 4))
    throw FormatError("sample: bad magic, expected \"OGSF\"");
  const auto version = r.get<std::uint32_t>();
  if (version != kSampleVersion)
    throw FormatError("sample: unsupported version " + std::to_string(version));
  const auto flags = r.get<std::uint32_t>();
  if (flags & ~(kHasFlow | kHasOcc))
    throw FormatError("sample: unknown flag bits " + std::to_string(flags));
  const std::size_t n1 = r.get<std::uint32_t>();
  const std::size_t n2 = r.get<std::uint32_t>();
  const std::size_t floats = 6 * n1 + 6 * n2 + ((flags & kHasFlow) ? 3 * n1 : 0) +
                             ((flags & kHasOcc) ? n1 : 0);
  r.require(floats * sizeof(float));
  ScenePair p;
  p.source_positions = get_floats(r, 3 * n1);
  p.source_rgb = get_floats(r, 3 * n1);
  p.target_positions = get_floats(r, 3 * n2);
  p.target_rgb = get_floats(r, 3 * n2);
  if (flags & kHasFlow) p.gt_flow = get_floats(r, 3 * n1);
  if (flags & kHasOcc) p.gt_occ = get_floats(r, n1);
  if (r.remaining() != 0)
    throw FormatError("sample: " + std::to_string(r.remaining()) + " trailing bytes");
  try {
    p.validate();
  } catch (const DataError& e) {
    throw FormatError(e.what());
  }
  return p;
}

void save_sample(const ScenePair& pair, const std::filesystem::path& path) {
  io::write_file(path, encode_sample(pair));
}

ScenePair load_sample(const std::filesystem::path& path) {
  return decode_sample(io::read_file(path));
}

void SynthConfig::validate() const {
  if (bodies == 0 || points_per_body == 0)
    throw ContractError("synth: bodies and points_per_body must be positive");
  if (!(carve_fraction >= 0 && carve_fraction < 1))
    throw ContractError("synth: carve fraction must lie in [0, 1)");
  if (!(noise_sigma >= 0) || !(max_rotation_deg >= 0) || !(max_translation >= 0))
    throw ContractError("synth: noise, rotation and translation ranges must be non-negative");
  if (!(box_spacing >= 1)) throw ContractError("synth: box spacing below 1 overlaps the boxes");
}

ScenePair synthesize_scene(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<Real> unit(-0.5, 0.5);
  std::uniform_real_distribution<Real> colour(0.0, 1.0);
  std::normal_distribution<Real> gauss(0.0, 1.0);

  const std::size_t ppb = config.points_per_body;
  const auto carve = static_cast<std::size_t>(std::lround(config.carve_fraction * ppb));
  constexpr Real kPi = 3.14159265358979323846;

  std::vector<Real> src, src_rgb, flow, occ;
  std::vector<Real> tgt, tgt_rgb;
  for (std::size_t b = 0; b < config.bodies; ++b) {
    const std::array<Real, 3> centre{config.box_spacing * static_cast<Real>(b), 0, 0};
    const std::array<Real, 3> rgb{colour(rng), colour(rng), colour(rng)};
    const std::array<Real, 3> axis{gauss(rng), gauss(rng), gauss(rng)};
    const Real angle = 2 * unit(rng) * config.max_rotation_deg * kPi / 180;
    const Mat3 rot = axis_angle(axis, angle);
    const std::array<Real, 3> shift{2 * unit(rng) * config.max_translation,
                                    2 * unit(rng) * config.max_translation,
                                    2 * unit(rng) * config.max_translation};
    const std::array<Real, 3> anchor{centre[0] + unit(rng), centre[1] + unit(rng),
                                     centre[2] + unit(rng)};

    std::vector<Real> pts(3 * ppb);
    for (std::size_t i = 0; i < ppb; ++i)
      for (std::size_t c = 0; c < 3; ++c) pts[3 * i + c] = centre[c] + unit(rng);

    // The carve is the `carve` points closest to the anchor (ties by index).
    std::vector<Real> anchor_dist(ppb);
    for (std::size_t i = 0; i < ppb; ++i) {
      Real d2 = 0;
      for (std::size_t c = 0; c < 3; ++c) d2 += (pts[3 * i + c] - anchor[c]) * (pts[3 * i + c] - anchor[c]);
      anchor_dist[i] = d2;
    }
    std::vector<std::size_t> order(ppb);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b2) { return anchor_dist[a] < anchor_dist[b2]; });
    std::vector<bool> carved(ppb, false);
    for (std::size_t i = 0; i < carve; ++i) carved[order[i]] = true;

    for (std::size_t i = 0; i < ppb; ++i) {
      std::array<Real, 3> rel{}, moved{};
      for (std::size_t c = 0; c < 3; ++c) rel[c] = pts[3 * i + c] - centre[c];
      for (std::size_t r = 0; r < 3; ++r)
        moved[r] = centre[r] + shift[r] + rot[r][0] * rel[0] + rot[r][1] * rel[1] + rot[r][2] * rel[2];
      for (std::size_t c = 0; c < 3; ++c) {
        src.push_back(pts[3 * i + c]);
        src_rgb.push_back(rgb[c]);
        flow.push_back(moved[c] - pts[3 * i + c]);
      }
      occ.push_back(carved[i] ? 0.0 : 1.0);
      if (carved[i]) continue;
      for (std::size_t c = 0; c < 3; ++c) {
        tgt.push_back(moved[c] + (config.noise_sigma > 0 ? config.noise_sigma * gauss(rng) : 0.0));
        tgt_rgb.push_back(rgb[c]);
      }
    }
  }

  // Shuffle target order so point index carries no correspondence.
  const std::size_t n2 = tgt.size() / 3;
  const auto perm = draw_without_replacement(n2, n2, rng);
  std::vector<Real> tgt_shuffled, rgb_shuffled;
  tgt_shuffled.reserve(tgt.size());
  rgb_shuffled.reserve(tgt.size());
  for (auto i : perm)
    for (std::size_t c = 0; c < 3; ++c) {
      tgt_shuffled.push_back(tgt[3 * i + c]);
      rgb_shuffled.push_back(tgt_rgb[3 * i + c]);
    }
  return make_scene_pair(src, src_rgb, tgt_shuffled, rgb_shuffled, flow, occ);
}

ScenePair resample_fixed(const ScenePair& pair, std::size_t n, std::uint64_t seed) {
  pair.validate();
  if (n == 0 || n > pair.n1() || n > pair.n2())
    throw ContractError("resample: n = " + std::to_string(n) + " exceeds cloud sizes " +
                        std::to_string(pair.n1()) + " / " + std::to_string(pair.n2()));
  std::mt19937_64 rng(seed);
  const auto src = draw_without_replacement(pair.n1(), n, rng);
  const auto tgt = draw_without_replacement(pair.n2(), n, rng);
  ScenePair out;
  out.source_positions = pick_rows(pair.source_positions, 3, src);
  out.source_rgb = pick_rows(pair.source_rgb, 3, src);
  out.target_positions = pick_rows(pair.target_positions, 3, tgt);
  out.target_rgb = pick_rows(pair.target_rgb, 3, tgt);
  if (pair.gt_flow) out.gt_flow = pick_rows(*pair.gt_flow, 3, src);
  if (pair.gt_occ) out.gt_occ = pick_rows(*pair.gt_occ, 1, src);
  return out;
}

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot read manifest '" + manifest.string() + "'");
  std::vector<std::filesystem::path> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::filesystem::path p(line.substr(first, last - first + 1));
    out.push_back(p.is_absolute() ? p : manifest.parent_path() / p);
  }
  if (out.empty()) throw DataError("manifest '" + manifest.string() + "' lists no samples");
  return out;
}

void write_manifest(const std::filesystem::path& manifest,
                    std::span<const std::filesystem::path> entries) {
  std::ofstream out(manifest);
  for (const auto& e : entries) out << e.generic_string() << '\n';
  if (!out) throw IoError("cannot write manifest '" + manifest.string() + "'");
}

}  // namespace ogsf
