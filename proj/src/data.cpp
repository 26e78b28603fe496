#include "kinterp/data.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "kinterp/image_io.hpp"
#include "kinterp/rng.hpp"

namespace fs = std::filesystem;

namespace kinterp {
namespace {

// Frames a sample consumes, in septuplet numbering: references then target.
constexpr int kUsedFrames[5] = {2, 3, 5, 6, 4};

std::string frame_path(const std::string& root, const std::string& id, int frame) {
  return (fs::path(root) / id / ("im" + std::to_string(frame) + ".png")).string();
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

SeptupletIndex SeptupletIndex::open(const std::string& root, const std::string& split_file) {
  std::ifstream in(split_file);
  if (!in) throw std::runtime_error("cannot open split list: " + split_file);
  SeptupletIndex index;
  index.root_ = root;
  std::string line;
  while (std::getline(in, line)) {
    std::string id = trim(line);
    if (id.empty()) continue;
    for (int frame = 1; frame <= 7; ++frame) {
      std::string path = frame_path(root, id, frame);
      if (!fs::exists(path))
        throw std::runtime_error("sequence " + id + ": missing im" + std::to_string(frame) +
                                 ".png (" + path + ")");
    }
    index.ids_.push_back(std::move(id));
  }
  if (index.ids_.empty())
    throw std::runtime_error("split list names no sequences: " + split_file);
  index.cache_.resize(index.ids_.size());
  return index;
}

const std::string& SeptupletIndex::sequence_id(int i) const {
  if (i < 0 || i >= size()) throw std::invalid_argument("sequence index out of range");
  return ids_[static_cast<size_t>(i)];
}

Sample SeptupletIndex::load(int i) const {
  const std::string& id = sequence_id(i);
  CacheEntry& entry = cache_[static_cast<size_t>(i)];
  if (entry.bytes.empty()) {
    CacheEntry fresh;
    for (int slot = 0; slot < 5; ++slot) {
      Tensor img;
      try {
        img = read_image(frame_path(root_, id, kUsedFrames[slot]));
      } catch (const std::exception& e) {
        throw std::runtime_error("sequence " + id + ": " + e.what());
      }
      if (slot == 0) {
        fresh.height = img.dim(1);
        fresh.width = img.dim(2);
        fresh.bytes.reserve(static_cast<size_t>(5) * img.numel());
      } else if (img.dim(1) != fresh.height || img.dim(2) != fresh.width) {
        throw std::runtime_error("sequence " + id + ": frame im" +
                                 std::to_string(kUsedFrames[slot]) + ".png is " +
                                 img.shape_str() + " but im2.png is {3," +
                                 std::to_string(fresh.height) + "," +
                                 std::to_string(fresh.width) + "}");
      }
      for (int64_t k = 0; k < img.numel(); ++k)
        fresh.bytes.push_back(static_cast<uint8_t>(std::lround(img[k] * 255.0f)));
    }
    entry = std::move(fresh);
  }

  const int64_t frame_elems = static_cast<int64_t>(3) * entry.height * entry.width;
  auto decode = [&](int slot) {
    Tensor t({3, entry.height, entry.width});
    const uint8_t* src = entry.bytes.data() + slot * frame_elems;
    for (int64_t k = 0; k < frame_elems; ++k)
      t[k] = static_cast<float>(src[k]) / 255.0f;
    return t;
  };
  Sample s;
  for (int r = 0; r < 4; ++r) s.inputs[static_cast<size_t>(r)] = decode(r);
  s.target = decode(4);
  return s;
}

Tensor flip_horizontal(const Tensor& t) {
  if (t.rank() != 3) throw std::invalid_argument("flip_horizontal expects {C,H,W}");
  const int C = t.dim(0), H = t.dim(1), W = t.dim(2);
  Tensor out({C, H, W});
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j) out.at(c, i, j) = t.at(c, i, W - 1 - j);
  return out;
}

Tensor flip_vertical(const Tensor& t) {
  if (t.rank() != 3) throw std::invalid_argument("flip_vertical expects {C,H,W}");
  const int C = t.dim(0), H = t.dim(1), W = t.dim(2);
  Tensor out({C, H, W});
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j) out.at(c, i, j) = t.at(c, H - 1 - i, j);
  return out;
}

Sample augment(const Sample& in, const AugmentationPolicy& policy, uint64_t rng_seed) {
  Rng rng(rng_seed);
  const bool do_h = (rng.next_u64() & 1) && policy.horizontal_flip;
  const bool do_v = (rng.next_u64() & 1) && policy.vertical_flip;
  const bool do_t = (rng.next_u64() & 1) && policy.temporal_reversal;

  Sample out = in;
  if (do_t) {
    std::swap(out.inputs[0], out.inputs[3]);
    std::swap(out.inputs[1], out.inputs[2]);
  }
  auto apply = [&](const Tensor& t) {
    Tensor r = t;
    if (do_h) r = flip_horizontal(r);
    if (do_v) r = flip_vertical(r);
    return r;
  };
  if (do_h || do_v) {
    for (auto& frame : out.inputs) frame = apply(frame);
    out.target = apply(out.target);
  }
  return out;
}

std::vector<int> epoch_order(int n, uint64_t seed, int epoch) {
  if (n < 0) throw std::invalid_argument("epoch_order: negative count");
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, static_cast<uint64_t>(epoch) + 1);
  for (int i = n - 1; i > 0; --i) {
    int j = rng.uniform_int(0, i);
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  return order;
}

void write_septuplet(const std::string& root, const std::string& seq_id,
                     const KinematicScene& scene) {
  fs::create_directories(fs::path(root) / seq_id);
  for (int frame = 1; frame <= 7; ++frame) {
    double t = static_cast<double>(frame - 4);
    write_image(frame_path(root, seq_id, frame), render_frame(scene, t));
  }
}

double scene_motion_magnitude(const KinematicScene& scene) {
  static const double kTimes[4] = {-2.0, -1.0, 1.0, 2.0};
  if (scene.sprites.empty()) return 0.0;
  double total = 0.0;
  for (const Sprite& sprite : scene.sprites) {
    for (double t : kTimes) {
      double dr = sprite.row_motion.displacement(t);
      double dc = sprite.col_motion.displacement(t);
      total += std::sqrt(dr * dr + dc * dc);
    }
  }
  return total / (4.0 * static_cast<double>(scene.sprites.size()));
}

void generate_dataset(const std::string& root, const GenerateOptions& opts) {
  if (opts.train_count < 0 || opts.test_count < 0)
    throw std::invalid_argument("generate_dataset: negative scene count");
  if (opts.train_count + opts.test_count == 0)
    throw std::invalid_argument("generate_dataset: empty dataset requested");
  fs::create_directories(root);

  std::ofstream train_list((fs::path(root) / "train.txt").string());
  std::ofstream test_list((fs::path(root) / "test.txt").string());
  std::ofstream manifest((fs::path(root) / "manifest.jsonl").string());
  if (!train_list || !test_list || !manifest)
    throw std::runtime_error("cannot create dataset lists under " + root);

  static const TrajectoryFamily kCycle[3] = {TrajectoryFamily::linear,
                                             TrajectoryFamily::quadratic,
                                             TrajectoryFamily::piecewise_quadratic};
  const int total = opts.train_count + opts.test_count;
  Rng rng(opts.seed);
  for (int i = 0; i < total; ++i) {
    Rng scene_rng = rng.fork(static_cast<uint64_t>(i) + 1);
    KinematicScene scene =
        random_scene(kCycle[i % 3], opts.height, opts.width, scene_rng);

    char id[32];
    std::snprintf(id, sizeof(id), "seq_%05d", i);
    write_septuplet(root, id, scene);
    (i < opts.train_count ? train_list : test_list) << id << "\n";
    manifest << id << "\t" << scene_to_json(scene) << "\n";
  }
  if (!train_list.flush() || !test_list.flush() || !manifest.flush())
    throw std::runtime_error("failed writing dataset lists under " + root);
}

std::vector<std::pair<std::string, KinematicScene>> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<std::pair<std::string, KinematicScene>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("manifest line " + std::to_string(line_no) +
                               " lacks an id field: " + path);
    entries.emplace_back(trim(line.substr(0, tab)), scene_from_json(line.substr(tab + 1)));
  }
  return entries;
}

}  // namespace kinterp
