#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "kinterp/scenegen.hpp"
#include "kinterp/tensor.hpp"

namespace kinterp {

// One interpolation sample: four references at t = {-2,-1,+1,+2} and the
// target frame at t = 0, all {3,H,W} in [0,1].
struct Sample {
  std::array<Tensor, 4> inputs;
  Tensor target;
};

struct AugmentationPolicy {
  bool horizontal_flip = true;  // each enabled op fires with probability 1/2
  bool vertical_flip = true;
  bool temporal_reversal = true;
};

// Immutable index over a septuplet dataset on disk:
//   <root>/<seq_id>/im1.png ... im7.png
// plus a split list file of sequence ids, one per line. The interpolation
// target is im4; the references are (im2, im3, im5, im6).
class SeptupletIndex {
 public:
  // Verifies every listed sequence has all seven frames before returning.
  static SeptupletIndex open(const std::string& root, const std::string& split_file);

  int size() const { return static_cast<int>(ids_.size()); }
  const std::string& sequence_id(int i) const;
  const std::string& root() const { return root_; }

  // Decodes (and caches, 8-bit in RAM) the five frames the sample uses.
  Sample load(int i) const;

 private:
  std::string root_;
  std::vector<std::string> ids_;
  struct CacheEntry {
    int height = 0, width = 0;
    std::vector<uint8_t> bytes;  // 5 frames x 3 channels x H x W
  };
  mutable std::vector<CacheEntry> cache_;
};

// Whole-frame flips (involutions).
Tensor flip_horizontal(const Tensor& t);
Tensor flip_vertical(const Tensor& t);

// Spatial flips apply identically to all five frames; temporal reversal maps
// the input order (-2,-1,+1,+2) -> (+2,+1,-1,-2) and leaves the target alone.
// A pure function of the seed: applying it twice with the same seed is the
// identity, which is how augmented samples are un-augmented.
Sample augment(const Sample& in, const AugmentationPolicy& policy, uint64_t rng_seed);

// Deterministic shuffle of [0,n): a pure function of (seed, epoch).
std::vector<int> epoch_order(int n, uint64_t seed, int epoch);

// Renders the scene at t = -3..3 into <root>/<seq_id>/im1..im7.png.
void write_septuplet(const std::string& root, const std::string& seq_id,
                     const KinematicScene& scene);

struct GenerateOptions {
  int train_count = 2000;
  int test_count = 200;
  int height = 64;
  int width = 64;
  uint64_t seed = 1;
};

// Synthesizes a full dataset under `root`: septuplet directories, split lists
// train.txt / test.txt, and manifest.jsonl holding one scene record per line
// ("<seq_id>\t<scene json>"). Trajectory families cycle linear / quadratic /
// piecewise_quadratic in equal proportion.
void generate_dataset(const std::string& root, const GenerateOptions& opts);

// Mean sprite displacement magnitude over the four reference times; used to
// stratify evaluation into slow/medium/fast terciles.
double scene_motion_magnitude(const KinematicScene& scene);

// Reads manifest.jsonl back into (seq_id, scene) pairs.
std::vector<std::pair<std::string, KinematicScene>> read_manifest(const std::string& path);

}  // namespace kinterp
