#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "selfpaced/mlp.hpp"

namespace selfpaced {

// Checkpoint container (JSON, version 1):
//
//   {
//     "format": "selfpaced-mlp",
//     "version": 1,
//     "role": "embedding" | "student" | ...,
//     "layer_sizes": [in, h1, ..., out],
//     "layers": [ { "weight": [in*out values, row-major in x out],
//                   "bias":   [out values] }, ... ]
//   }
//
// Doubles are written in shortest round-trip form, so save/load is lossless.

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  std::string role;
  Mlp model;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace selfpaced
