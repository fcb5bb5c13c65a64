#include "mpiflow/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace mpiflow {

namespace {

constexpr char kWeightMagic[4] = {'M', 'P', 'F', 'W'};
constexpr uint32_t kWeightVersion = 1;
constexpr float kLeakySlope = 0.1f;
constexpr int kInputChannels = 5;  // rgb, normalized depth, alpha
constexpr int kFeatureChannels[6] = {16, 32, 64, 96, 128, 192};
constexpr int kDecodedLevels = 5;  // pyramid levels 6 down to 2

void leaky_relu(Feature& f) {
  for (float& v : f.data)
    if (v < 0.f) v *= kLeakySlope;
}

void relu(Feature& f) {
  for (float& v : f.data)
    if (v < 0.f) v = 0.f;
}

Feature upsample2_xy(const Feature& in, int target_h, int target_w) {
  Feature out(in.c, in.z, target_h, target_w);
  for (int c = 0; c < in.c; ++c)
    for (int z = 0; z < in.z; ++z)
      for (int y = 0; y < target_h; ++y)
        for (int x = 0; x < target_w; ++x)
          out.at(c, z, y, x) = in.at(c, z, std::min(y / 2, in.h - 1), std::min(x / 2, in.w - 1));
  return out;
}

Feature concat_channels(const Feature& a, const Feature& b) {
  if (a.z != b.z || a.h != b.h || a.w != b.w)
    throw std::invalid_argument("concat: spatial shape mismatch");
  Feature out(a.c + b.c, a.z, a.h, a.w);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
  return out;
}

std::pair<Feature, Volume> mpi_input_features(const MultiPlaneImage& m) {
  const int Z = m.planes(), H = m.height(), W = m.width();
  const float depth_norm = static_cast<float>(m.plane_depths.back());
  Feature f(kInputChannels, Z, H, W);
  Volume mask(Z, H, W);
  for (int z = 0; z < Z; ++z)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        for (int c = 0; c < 3; ++c) f.at(c, z, y, x) = m.color.at(z, y, x, c);
        f.at(3, z, y, x) = m.depth.at(z, y, x) / depth_norm;
        f.at(4, z, y, x) = m.alpha.at(z, y, x);
        mask.at(z, y, x) = m.alpha.at(z, y, x) >= 0.5f ? 1.f : 0.f;
      }
  return {std::move(f), std::move(mask)};
}

struct PyramidLevel {
  Feature feat;
  Volume mask;
};

std::vector<PyramidLevel> feature_pyramid(const Feature& input, const Volume& mask,
                                          const FlowNetworkWeights& w) {
  std::vector<PyramidLevel> levels;
  Feature cur = input;
  Volume cur_mask = mask;
  for (size_t i = 0; i < w.feature_layers.size(); ++i) {
    auto [f, m] = partial_conv3(cur, cur_mask, w.feature_layers[i].weights,
                                w.feature_layers[i].stride, w.feature_layers[i].pad);
    leaky_relu(f);
    cur = std::move(f);
    cur_mask = std::move(m);
    if (i % 2 == 1) levels.push_back({cur, cur_mask});
  }
  return levels;  // levels[0] = 1/2 res ... levels[5] = 1/64 res
}

std::pair<Feature, Volume> warp_feature_level(const Feature& src, const Volume& mask,
                                              const Flow3D& flow) {
  Feature out(src.c, src.z, src.h, src.w);
  Volume out_mask(src.z, src.h, src.w);
  for (int z = 0; z < src.z; ++z)
    for (int y = 0; y < src.h; ++y)
      for (int x = 0; x < src.w; ++x) {
        const int nx = static_cast<int>(std::lround(x + flow.xy.at(z, y, x, 0)));
        const int ny = static_cast<int>(std::lround(y + flow.xy.at(z, y, x, 1)));
        const int shift = static_cast<int>(std::lround(expected_shift(flow, z, y, x)));
        const int nz = std::clamp(z + shift, 0, src.z - 1);
        if (nx < 0 || nx >= src.w || ny < 0 || ny >= src.h) continue;
        if (mask.at(nz, ny, nx) <= 0.f) continue;
        out_mask.at(z, y, x) = 1.f;
        for (int c = 0; c < src.c; ++c) out.at(c, z, y, x) = src.at(c, nz, ny, nx);
      }
  return {std::move(out), std::move(out_mask)};
}

ConvLayerSpec make_layer(int oc, int ic, int k, Stride3 s, Pad3 p) {
  ConvLayerSpec l;
  l.weights = ConvWeights(oc, ic, k, k, k);
  l.stride = s;
  l.pad = p;
  return l;
}

void fill_random(ConvLayerSpec& l, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> dist(-0.1f, 0.1f);
  for (float& v : l.weights.weights) v = dist(rng);
  for (float& v : l.weights.bias) v = dist(rng);
}

void write_u32(std::ofstream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::ifstream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void put_layer(WeightFile& f, const std::string& name, const ConvLayerSpec& l) {
  WeightTensor wt;
  wt.dims = {static_cast<uint32_t>(l.weights.out_c), static_cast<uint32_t>(l.weights.in_c),
             static_cast<uint32_t>(l.weights.kz), static_cast<uint32_t>(l.weights.ky),
             static_cast<uint32_t>(l.weights.kx)};
  wt.data = l.weights.weights;
  f.tensors[name + ".weight"] = std::move(wt);
  WeightTensor bt;
  bt.dims = {static_cast<uint32_t>(l.weights.out_c)};
  bt.data = l.weights.bias;
  f.tensors[name + ".bias"] = std::move(bt);
}

void get_layer(const WeightFile& f, const std::string& name, ConvLayerSpec& l) {
  const auto wit = f.tensors.find(name + ".weight");
  const auto bit = f.tensors.find(name + ".bias");
  if (wit == f.tensors.end() || bit == f.tensors.end())
    throw std::invalid_argument("weight file: missing tensor " + name);
  const WeightTensor& wt = wit->second;
  if (wt.dims.size() != 5) throw std::invalid_argument("weight file: bad dims for " + name);
  ConvWeights cw(wt.dims[0], wt.dims[1], wt.dims[2], wt.dims[3], wt.dims[4]);
  if (cw.weights.size() != wt.data.size() || bit->second.data.size() != wt.dims[0])
    throw std::invalid_argument("weight file: size mismatch for " + name);
  cw.weights = wt.data;
  cw.bias = bit->second.data;
  l.weights = std::move(cw);
}

int scalar_meta(const WeightFile& f, const std::string& name) {
  const auto it = f.tensors.find(name);
  if (it == f.tensors.end() || it->second.data.size() != 1)
    throw std::invalid_argument("weight file: missing " + name);
  return static_cast<int>(it->second.data[0]);
}

}  // namespace

void WeightFile::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write weight file: " + path);
  out.write(kWeightMagic, 4);
  write_u32(out, kWeightVersion);
  write_u32(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<uint32_t>(t.dims.size()));
    for (uint32_t d : t.dims) write_u32(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("short write on weight file: " + path);
}

WeightFile WeightFile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weight file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kWeightMagic, 4) != 0)
    throw std::runtime_error("not a weight file: " + path);
  if (read_u32(in) != kWeightVersion)
    throw std::runtime_error("unsupported weight file version: " + path);
  const uint32_t count = read_u32(in);
  WeightFile f;
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    WeightTensor t;
    const uint32_t nd = read_u32(in);
    size_t total = 1;
    for (uint32_t d = 0; d < nd; ++d) {
      t.dims.push_back(read_u32(in));
      total *= t.dims.back();
    }
    t.data.resize(total);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(total * sizeof(float)));
    if (!in) throw std::runtime_error("truncated weight file: " + path);
    f.tensors[name] = std::move(t);
  }
  return f;
}

static const char* kFeatureLayerNames[12] = {"1a", "1b", "2a", "2b", "3a", "3b",
                                             "4a", "4b", "5a", "5b", "6a", "6b"};

FlowNetworkWeights FlowNetworkWeights::zeros(int s_z, int radius_xy) {
  FlowNetworkWeights w;
  w.s_z = s_z;
  w.radius_xy = radius_xy;
  int in_c = kInputChannels;
  for (int lvl = 0; lvl < 6; ++lvl) {
    const int oc = kFeatureChannels[lvl];
    w.feature_layers.push_back(make_layer(oc, in_c, 3, {2, 2, 1}, {1, 1, 1}));
    w.feature_layers.push_back(make_layer(oc, oc, 3, {1, 1, 1}, {1, 1, 1}));
    in_c = oc;
  }
  for (int i = 0; i < kDecodedLevels; ++i) {
    const int level = 6 - i;  // levels 6..2
    w.reducers.push_back(make_layer(32, kFeatureChannels[level - 1], 1, {1, 1, 1}, {0, 0, 0}));
  }
  const int bins = 2 * s_z + 1;
  const int side = 2 * radius_xy + 1;
  const int d0 = side * side * bins + 32 + 2 + bins;
  const int outs[6] = {128, 128, 96, 64, 32, 2 + bins};
  int prev = d0;
  for (int i = 0; i < 6; ++i) {
    int ic = prev;
    if (i >= 2) ic += outs[i - 2];  // dense skip from two layers back
    w.decoder.push_back(make_layer(outs[i], ic, 3, {1, 1, 1}, {1, 1, 1}));
    prev = outs[i];
  }
  return w;
}

FlowNetworkWeights FlowNetworkWeights::random_init(uint64_t seed, int s_z, int radius_xy) {
  FlowNetworkWeights w = zeros(s_z, radius_xy);
  std::mt19937_64 rng(seed);
  for (auto& l : w.feature_layers) fill_random(l, rng);
  for (auto& l : w.reducers) fill_random(l, rng);
  for (auto& l : w.decoder) fill_random(l, rng);
  return w;
}

void FlowNetworkWeights::validate() const {
  const FlowNetworkWeights ref = zeros(s_z, radius_xy);
  auto check = [](const std::vector<ConvLayerSpec>& got, const std::vector<ConvLayerSpec>& want,
                  const char* what) {
    if (got.size() != want.size())
      throw std::invalid_argument(std::string("flow weights: wrong layer count in ") + what);
    for (size_t i = 0; i < got.size(); ++i) {
      const ConvWeights& g = got[i].weights;
      const ConvWeights& e = want[i].weights;
      if (g.out_c != e.out_c || g.in_c != e.in_c || g.kz != e.kz || g.ky != e.ky || g.kx != e.kx)
        throw std::invalid_argument(std::string("flow weights: shape mismatch in ") + what);
    }
  };
  check(feature_layers, ref.feature_layers, "feature pyramid");
  check(reducers, ref.reducers, "reducers");
  check(decoder, ref.decoder, "decoder");
}

WeightFile FlowNetworkWeights::to_file() const {
  WeightFile f;
  f.tensors["meta.s_z"] = {{1}, {static_cast<float>(s_z)}};
  f.tensors["meta.radius_xy"] = {{1}, {static_cast<float>(radius_xy)}};
  for (int i = 0; i < 12; ++i)
    put_layer(f, std::string("feat.") + kFeatureLayerNames[i], feature_layers[i]);
  for (int i = 0; i < kDecodedLevels; ++i)
    put_layer(f, "reduce.l" + std::to_string(6 - i), reducers[i]);
  for (int i = 0; i < 6; ++i) put_layer(f, "decode." + std::to_string(i + 1), decoder[i]);
  return f;
}

FlowNetworkWeights FlowNetworkWeights::from_file(const WeightFile& f) {
  FlowNetworkWeights w = zeros(scalar_meta(f, "meta.s_z"), scalar_meta(f, "meta.radius_xy"));
  for (int i = 0; i < 12; ++i)
    get_layer(f, std::string("feat.") + kFeatureLayerNames[i], w.feature_layers[i]);
  for (int i = 0; i < kDecodedLevels; ++i)
    get_layer(f, "reduce.l" + std::to_string(6 - i), w.reducers[i]);
  for (int i = 0; i < 6; ++i) get_layer(f, "decode." + std::to_string(i + 1), w.decoder[i]);
  w.validate();
  return w;
}

Flow3D estimate_flow_network(const MultiPlaneImage& ref, const MultiPlaneImage& src,
                             const FlowNetworkWeights& weights) {
  weights.validate();
  if (ref.plane_depths.size() != src.plane_depths.size())
    throw std::invalid_argument("estimate_flow_network: plane table mismatch");

  auto [ref_in, ref_mask] = mpi_input_features(ref);
  auto [src_in, src_mask] = mpi_input_features(src);
  const std::vector<PyramidLevel> ref_pyr = feature_pyramid(ref_in, ref_mask, weights);
  const std::vector<PyramidLevel> src_pyr = feature_pyramid(src_in, src_mask, weights);

  const int sz = weights.s_z;
  const int bins = 2 * sz + 1;
  const int Z = ref.planes();

  Flow3D flow = Flow3D::zero(Z, ref_pyr[5].mask.h, ref_pyr[5].mask.w, sz);

  for (int i = 0; i < kDecodedLevels; ++i) {
    const int level_idx = 5 - i;  // pyramid index: 5 (1/64) down to 1 (1/4)
    const PyramidLevel& rl = ref_pyr[level_idx];
    const PyramidLevel& sl = src_pyr[level_idx];
    const int H = rl.mask.h, W = rl.mask.w;
    if (flow.xy.h != H || flow.xy.w != W) flow = upsample_flow2(flow, H, W);

    auto [warped, warped_mask] = warp_feature_level(sl.feat, sl.mask, flow);

    // Coarse levels can be smaller than the search window; correlate with a
    // clamped radius and scatter the scores into the fixed channel layout the
    // decoder was sized for (missing displacements stay zero).
    const int r_full = weights.radius_xy;
    const int side_full = 2 * r_full + 1;
    const int r_lvl = std::min(r_full, std::min(H, W) - 1);
    const int sz_lvl = std::min(sz, Z - 1);
    const CostVolume cv_lvl =
        masked_correlation(rl.feat, rl.mask, warped, warped_mask, r_lvl, sz_lvl);
    Volume4 cv_scores(Z, H, W, side_full * side_full * bins);
    const int side_lvl = 2 * r_lvl + 1;
    for (int z = 0; z < Z; ++z)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
          for (int dz = -sz_lvl; dz <= sz_lvl; ++dz)
            for (int dy = -r_lvl; dy <= r_lvl; ++dy)
              for (int dx = -r_lvl; dx <= r_lvl; ++dx) {
                const int ld = ((dz + sz_lvl) * side_lvl + (dy + r_lvl)) * side_lvl + (dx + r_lvl);
                const int fd = ((dz + sz) * side_full + (dy + r_full)) * side_full + (dx + r_full);
                cv_scores.at(z, y, x, fd) = cv_lvl.scores.at(z, y, x, ld);
              }

    auto [reduced, reduced_mask] =
        partial_conv3(rl.feat, rl.mask, weights.reducers[i].weights, weights.reducers[i].stride,
                      weights.reducers[i].pad);
    leaky_relu(reduced);

    // Concatenate {cost volume, reduced features, current flow} per voxel.
    Feature dec_in(cv_scores.c + 32 + 2 + bins, Z, H, W);
    for (int z = 0; z < Z; ++z)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          int ch = 0;
          for (int d = 0; d < cv_scores.c; ++d) dec_in.at(ch++, z, y, x) = cv_scores.at(z, y, x, d);
          for (int c = 0; c < 32; ++c) dec_in.at(ch++, z, y, x) = reduced.at(c, z, y, x);
          dec_in.at(ch++, z, y, x) = flow.xy.at(z, y, x, 0);
          dec_in.at(ch++, z, y, x) = flow.xy.at(z, y, x, 1);
          for (int b = 0; b < bins; ++b) dec_in.at(ch++, z, y, x) = flow.depth_dist.at(z, y, x, b);
        }

    // Shared decoder with dense skips (layer i concatenates the output of
    // layer i-2 to its input).
    std::vector<Feature> outs;
    Feature cur = std::move(dec_in);
    for (int li = 0; li < 6; ++li) {
      Feature in = (li >= 2) ? concat_channels(cur, outs[li - 2]) : std::move(cur);
      auto [o, m] = partial_conv3(in, rl.mask, weights.decoder[li].weights,
                                  weights.decoder[li].stride, weights.decoder[li].pad);
      if (li < 5) leaky_relu(o);
      outs.push_back(o);
      cur = std::move(o);
    }
    const Feature& head = outs.back();

    Flow3D residual;
    residual.s_z = sz;
    residual.xy = Volume4(Z, H, W, 2);
    residual.depth_dist = Volume4(Z, H, W, bins);
    for (int z = 0; z < Z; ++z)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          residual.xy.at(z, y, x, 0) = head.at(0, z, y, x);
          residual.xy.at(z, y, x, 1) = head.at(1, z, y, x);
          float mx = head.at(2, z, y, x);
          for (int b = 1; b < bins; ++b) mx = std::max(mx, head.at(2 + b, z, y, x));
          double sum = 0.0;
          for (int b = 0; b < bins; ++b) sum += std::exp(head.at(2 + b, z, y, x) - mx);
          for (int b = 0; b < bins; ++b)
            residual.depth_dist.at(z, y, x, b) =
                static_cast<float>(std::exp(head.at(2 + b, z, y, x) - mx) / sum);
        }

    flow = compose_residual_flow(flow, residual);
  }

  // Final flow is estimated at quarter resolution; upsample by four.
  const int h2 = ref_pyr[0].mask.h, w2 = ref_pyr[0].mask.w;
  flow = upsample_flow2(flow, h2, w2);
  flow = upsample_flow2(flow, ref.height(), ref.width());
  return flow;
}

InfillNetworkWeights InfillNetworkWeights::zeros() {
  InfillNetworkWeights w;
  auto add = [&](int oc, int ic, int k, Stride3 s, Pad3 p) {
    w.layers.push_back(make_layer(oc, ic, k, s, p));
  };
  add(32, kInputChannels, 7, {1, 1, 1}, {3, 3, 3});
  add(64, 32, 5, {2, 2, 1}, {2, 2, 2});
  add(128, 64, 3, {2, 2, 1}, {1, 1, 1});
  add(128, 128, 3, {2, 2, 1}, {1, 1, 1});
  add(128, 128, 3, {2, 2, 1}, {1, 1, 1});
  add(128, 128 + 128, 3, {1, 1, 1}, {1, 1, 1});  // up x2, skip from layer 4
  add(64, 128 + 128, 3, {1, 1, 1}, {1, 1, 1});   // up x2, skip from layer 3
  add(32, 64 + 64, 3, {1, 1, 1}, {1, 1, 1});     // up x2, skip from layer 2
  add(2, 32 + 32, 3, {1, 1, 1}, {1, 1, 1});      // up x2, skip from layer 1, linear
  return w;
}

InfillNetworkWeights InfillNetworkWeights::random_init(uint64_t seed) {
  InfillNetworkWeights w = zeros();
  std::mt19937_64 rng(seed);
  for (auto& l : w.layers) fill_random(l, rng);
  return w;
}

void InfillNetworkWeights::validate() const {
  const InfillNetworkWeights ref = zeros();
  if (layers.size() != ref.layers.size())
    throw std::invalid_argument("infill weights: wrong layer count");
  for (size_t i = 0; i < layers.size(); ++i) {
    const ConvWeights& g = layers[i].weights;
    const ConvWeights& e = ref.layers[i].weights;
    if (g.out_c != e.out_c || g.in_c != e.in_c || g.kz != e.kz || g.ky != e.ky || g.kx != e.kx)
      throw std::invalid_argument("infill weights: shape mismatch");
  }
}

WeightFile InfillNetworkWeights::to_file() const {
  WeightFile f;
  for (size_t i = 0; i < layers.size(); ++i)
    put_layer(f, "infill." + std::to_string(i + 1), layers[i]);
  return f;
}

InfillNetworkWeights InfillNetworkWeights::from_file(const WeightFile& f) {
  InfillNetworkWeights w = zeros();
  for (size_t i = 0; i < w.layers.size(); ++i)
    get_layer(f, "infill." + std::to_string(i + 1), w.layers[i]);
  w.validate();
  return w;
}

Volume4 infill_network_forward(const MultiPlaneImage& mpi, const InfillNetworkWeights& weights) {
  weights.validate();
  auto [input, mask] = mpi_input_features(mpi);

  std::vector<Feature> encoder_outs;
  Feature cur = std::move(input);
  for (int i = 0; i < 5; ++i) {
    cur = conv3(cur, weights.layers[i].weights, weights.layers[i].stride, weights.layers[i].pad);
    relu(cur);
    encoder_outs.push_back(cur);
  }
  for (int i = 5; i < 9; ++i) {
    const Feature& skip = encoder_outs[8 - i];  // layer 4, 3, 2, 1 outputs
    cur = upsample2_xy(cur, skip.h, skip.w);
    cur = concat_channels(cur, skip);
    cur = conv3(cur, weights.layers[i].weights, weights.layers[i].stride, weights.layers[i].pad);
    if (i < 8) relu(cur);
  }

  Volume4 vectors(mpi.planes(), mpi.height(), mpi.width(), 2);
  for (int z = 0; z < vectors.z; ++z)
    for (int y = 0; y < vectors.h; ++y)
      for (int x = 0; x < vectors.w; ++x) {
        vectors.at(z, y, x, 0) = cur.at(0, z, y, x);
        vectors.at(z, y, x, 1) = cur.at(1, z, y, x);
      }
  return vectors;
}

}  // namespace mpiflow
